#include "specmix/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace specmix {
namespace {

constexpr char kMagic[4] = {'H', 'S', 'I', 'F'};
constexpr std::size_t kHeaderBytes = 16;
constexpr std::uint64_t kMaxValues = std::uint64_t{1} << 34;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xffffffffULL) throw IoError(std::string("HSIF: ") + what + " does not fit in u32");
  return static_cast<std::uint32_t>(v);
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

void format_csv(std::ostream& os, const Eigen::MatrixXd& m) {
  char buf[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, m(i, j));
      os.write(buf, end - buf);
    }
    os << '\n';
  }
}

}  // namespace

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::vector<std::uint8_t> encode_hsif(const HsImage& image) {
  image.validate();
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u32(out, checked_u32(image.height, "height"));
  put_u32(out, checked_u32(image.width, "width"));
  put_u32(out, checked_u32(image.bands(), "bands"));
  out.reserve(kHeaderBytes + image.pixels.size() * 4);
  for (Eigen::Index k = 0; k < image.pixels.cols(); ++k) {
    for (Eigen::Index l = 0; l < image.pixels.rows(); ++l) {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(image.pixels(l, k))));
    }
  }
  return out;
}

HsImage decode_hsif(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw IoError("HSIF: bad magic");
  if (bytes.size() < kHeaderBytes) throw IoError("HSIF: truncated header");
  const std::uint64_t height = get_u32(bytes.data() + 4);
  const std::uint64_t width = get_u32(bytes.data() + 8);
  const std::uint64_t bands = get_u32(bytes.data() + 12);
  const std::uint64_t pixels = height * width;
  if (pixels != 0 && bands > kMaxValues / pixels) throw IoError("HSIF: dimension overflow");
  const std::uint64_t expected = pixels * bands * 4;
  const std::uint64_t payload = bytes.size() - kHeaderBytes;
  if (payload < expected) {
    throw IoError("HSIF: truncated payload (" + std::to_string(payload) + " of " + std::to_string(expected) +
                  " bytes)");
  }
  if (payload != expected) {
    throw IoError("HSIF: dimension mismatch (header implies " + std::to_string(expected) + " payload bytes, file has " +
                  std::to_string(payload) + ")");
  }
  HsImage image;
  image.height = height;
  image.width = width;
  image.pixels.resize(static_cast<Eigen::Index>(bands), static_cast<Eigen::Index>(pixels));
  const std::uint8_t* p = bytes.data() + kHeaderBytes;
  for (Eigen::Index k = 0; k < image.pixels.cols(); ++k) {
    for (Eigen::Index l = 0; l < image.pixels.rows(); ++l, p += 4) {
      image.pixels(l, k) = static_cast<double>(std::bit_cast<float>(get_u32(p)));
    }
  }
  if (!image.pixels.allFinite()) throw IoError("HSIF: non-finite sample in payload");
  return image;
}

void save_image(const HsImage& image, const std::filesystem::path& path) { write_file(path, encode_hsif(image)); }

HsImage load_image(const std::filesystem::path& path) { return decode_hsif(read_file(path)); }

Eigen::MatrixXd parse_matrix_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = t.find(',', start);
      const std::string cell = trim(std::string_view(t).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw IoError("CSV line " + std::to_string(line_no) + ": invalid number '" + cell + "'");
      }
      row.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError("CSV line " + std::to_string(line_no) + ": expected " + std::to_string(rows.front().size()) +
                    " values, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("CSV: no data");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

Eigen::MatrixXd load_matrix_csv(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse_matrix_csv(std::string(bytes.begin(), bytes.end()));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void save_matrix_csv(const Eigen::MatrixXd& matrix, const std::filesystem::path& path) {
  std::ostringstream os;
  format_csv(os, matrix);
  write_text(path, os.str());
}

Eigen::MatrixXd load_signatures_csv(const std::filesystem::path& path) { return load_matrix_csv(path); }

void save_signatures_csv(const Eigen::MatrixXd& signatures, const std::filesystem::path& path) {
  save_matrix_csv(signatures, path);
}

void save_abundances(const Eigen::MatrixXd& abundances, const std::filesystem::path& path) {
  save_matrix_csv(abundances.transpose(), path);
}

Eigen::MatrixXd load_abundances(const std::filesystem::path& path) { return load_matrix_csv(path).transpose(); }

std::vector<std::uint8_t> abundance_to_gray(const Eigen::RowVectorXd& map) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(map.size()));
  for (Eigen::Index i = 0; i < map.size(); ++i) {
    out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(std::lround(std::clamp(map(i), 0.0, 1.0) * 255.0));
  }
  return out;
}

std::vector<std::uint8_t> encode_ppm(const std::vector<std::uint8_t>& gray, std::size_t height, std::size_t width) {
  if (gray.size() != height * width) throw IoError("PPM: pixel count does not match dimensions");
  const std::string header = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + gray.size() * 3);
  for (auto g : gray) out.insert(out.end(), {g, g, g});
  return out;
}

std::vector<std::filesystem::path> render_abundance_maps(const Eigen::MatrixXd& abundances, std::size_t height,
                                                         std::size_t width, const std::filesystem::path& out_dir) {
  if (static_cast<std::size_t>(abundances.cols()) != height * width) {
    throw IoError("render: abundances have " + std::to_string(abundances.cols()) + " pixels, expected " +
                  std::to_string(height * width));
  }
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  for (Eigen::Index m = 0; m < abundances.rows(); ++m) {
    auto path = out_dir / ("abundance_" + std::to_string(m) + ".ppm");
    write_file(path, encode_ppm(abundance_to_gray(abundances.row(m)), height, width));
    written.push_back(std::move(path));
  }
  return written;
}

}  // namespace specmix
