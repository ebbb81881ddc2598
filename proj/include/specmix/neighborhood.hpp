#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "specmix/scene.hpp"

namespace specmix {

enum class NeighborhoodShape { Doughnut, Circle, RandomNormal };

struct NeighborhoodSpec {
  NeighborhoodShape shape = NeighborhoodShape::Circle;
  int level = 4;          // radius in pixels
  std::uint64_t seed = 0; // RandomNormal only
};

struct Offset {
  int dy = 0;
  int dx = 0;
  friend bool operator==(const Offset&, const Offset&) = default;
  friend auto operator<=>(const Offset&, const Offset&) = default;
};

/// Circle(r): 0 < dy^2+dx^2 <= r^2. Doughnut(r): (r-1)^2 < dy^2+dx^2 <= r^2.
/// RandomNormal(r): as many distinct nonzero offsets as Circle(r), drawn from
/// a rounded isotropic normal with sigma = r/2. Fixed shapes are sorted
/// lexicographically by (dy, dx).
std::vector<Offset> neighbor_offsets(const NeighborhoodSpec& spec);

/// Rows of the result (offsets.size() x L) are the neighbours of pixel k in
/// offset order; coordinates outside the image are clamped to the border.
Eigen::MatrixXd gather_neighbors(const HsImage& image, std::size_t k, const std::vector<Offset>& offsets);

/// Parses "shape=circle,level=4,seed=7" (keys optional, any order).
NeighborhoodSpec parse_neighborhood(const std::string& text);
std::string to_string(const NeighborhoodSpec& spec);

}  // namespace specmix
