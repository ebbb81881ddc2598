#include "specmix/neighborhood.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace specmix {
namespace {

std::vector<Offset> ring(int r, bool doughnut) {
  std::vector<Offset> out;
  const int outer = r * r;
  const int inner = doughnut ? (r - 1) * (r - 1) : 0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const int d2 = dy * dy + dx * dx;
      if (d2 > inner && d2 <= outer) out.push_back({dy, dx});
    }
  }
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

std::vector<Offset> neighbor_offsets(const NeighborhoodSpec& spec) {
  if (spec.level < 1) throw std::invalid_argument("neighborhood level must be >= 1");
  switch (spec.shape) {
    case NeighborhoodShape::Circle:
      return ring(spec.level, false);
    case NeighborhoodShape::Doughnut:
      return ring(spec.level, true);
    case NeighborhoodShape::RandomNormal:
      break;
  }
  const std::size_t count = ring(spec.level, false).size();
  std::mt19937_64 rng(spec.seed);
  double sigma = spec.level / 2.0;
  std::vector<Offset> out;
  std::set<Offset> taken;
  int draws = 0;
  while (out.size() < count) {
    if (draws++ == 10000) {
      sigma *= 1.5;
      draws = 0;
    }
    std::normal_distribution<double> normal(0.0, sigma);
    const Offset o{static_cast<int>(std::lround(normal(rng))), static_cast<int>(std::lround(normal(rng)))};
    if (o == Offset{} || !taken.insert(o).second) continue;
    out.push_back(o);
  }
  return out;
}

Eigen::MatrixXd gather_neighbors(const HsImage& image, std::size_t k, const std::vector<Offset>& offsets) {
  if (k >= image.size()) throw std::out_of_range("gather_neighbors: pixel index out of range");
  const auto h = static_cast<long>(image.height);
  const auto w = static_cast<long>(image.width);
  const long row = static_cast<long>(k / image.width);
  const long col = static_cast<long>(k % image.width);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(offsets.size()), static_cast<Eigen::Index>(image.bands()));
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const long r = std::clamp(row + offsets[i].dy, 0L, h - 1);
    const long c = std::clamp(col + offsets[i].dx, 0L, w - 1);
    out.row(static_cast<Eigen::Index>(i)) = image.pixels.col(r * w + c).transpose();
  }
  return out;
}

NeighborhoodSpec parse_neighborhood(const std::string& text) {
  NeighborhoodSpec spec;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("neighborhood: expected key=value, got '" + item + "'");
    const std::string key = lower(item.substr(0, eq));
    const std::string value = lower(item.substr(eq + 1));
    if (key == "shape") {
      if (value == "circle") {
        spec.shape = NeighborhoodShape::Circle;
      } else if (value == "doughnut") {
        spec.shape = NeighborhoodShape::Doughnut;
      } else if (value == "normal" || value == "randomnormal" || value == "random_normal") {
        spec.shape = NeighborhoodShape::RandomNormal;
      } else {
        throw std::invalid_argument("neighborhood: unknown shape '" + value + "'");
      }
    } else if (key == "level") {
      spec.level = std::stoi(value);
      if (spec.level < 1) throw std::invalid_argument("neighborhood: level must be >= 1");
    } else if (key == "seed") {
      spec.seed = std::stoull(value);
    } else {
      throw std::invalid_argument("neighborhood: unknown key '" + key + "'");
    }
  }
  return spec;
}

std::string to_string(const NeighborhoodSpec& spec) {
  const char* shape = spec.shape == NeighborhoodShape::Circle     ? "circle"
                      : spec.shape == NeighborhoodShape::Doughnut ? "doughnut"
                                                                  : "normal";
  std::string out = std::string("shape=") + shape + ",level=" + std::to_string(spec.level);
  if (spec.shape == NeighborhoodShape::RandomNormal) out += ",seed=" + std::to_string(spec.seed);
  return out;
}

}  // namespace specmix
