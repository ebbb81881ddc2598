#pragma once

// File formats.
//
// HSIF cube: "HSIF", then little-endian u32 height, width, bands, then
// height*width*bands float32 values, band-interleaved by pixel with pixels in
// row-major order.
//
// CSV matrices: one row per line, comma separated, one column per endmember.
// Abundance files hold N rows (pixels) of M columns.
//
// Abundance maps render as binary PPM (P6) with equal RGB channels.

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "specmix/scene.hpp"

namespace specmix {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void save_image(const HsImage& image, const std::filesystem::path& path);
HsImage load_image(const std::filesystem::path& path);

// In-memory halves of the HSIF codec.
std::vector<std::uint8_t> encode_hsif(const HsImage& image);
HsImage decode_hsif(const std::vector<std::uint8_t>& bytes);

void save_matrix_csv(const Eigen::MatrixXd& matrix, const std::filesystem::path& path);
Eigen::MatrixXd load_matrix_csv(const std::filesystem::path& path);
Eigen::MatrixXd parse_matrix_csv(const std::string& text);

// L x M, one column per endmember.
Eigen::MatrixXd load_signatures_csv(const std::filesystem::path& path);
void save_signatures_csv(const Eigen::MatrixXd& signatures, const std::filesystem::path& path);

// A is M x N in memory, N x M on disk.
void save_abundances(const Eigen::MatrixXd& abundances, const std::filesystem::path& path);
Eigen::MatrixXd load_abundances(const std::filesystem::path& path);

// One 8-bit value per pixel: round(clamp(v, 0, 1) * 255).
std::vector<std::uint8_t> abundance_to_gray(const Eigen::RowVectorXd& map);
std::vector<std::uint8_t> encode_ppm(const std::vector<std::uint8_t>& gray, std::size_t height, std::size_t width);

// Writes abundance_<i>.ppm for each endmember row of A; returns the paths.
std::vector<std::filesystem::path> render_abundance_maps(const Eigen::MatrixXd& abundances, std::size_t height,
                                                         std::size_t width, const std::filesystem::path& out_dir);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace specmix
