#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kolmolab/numerics.hpp"

namespace kolmolab {

/// Uniform cell-centred tensor grid over box x (t0, t1).
///
/// Axis order is the N spatial axes followed by time; values are stored
/// row-major in that order (time varies fastest). Node (i_0..i_{N-1}, j) sits
/// at the centre of its cell, lower + (i + 1/2) h. Between the outermost
/// centres and the box faces the field is extended by its edge value; outside
/// the closed box and time slab it is zero.
struct GridSpec {
  Vec lower;
  Vec upper;
  double t0 = 0.0;
  double t1 = 1.0;
  /// N spatial extents followed by the time extent.
  std::vector<int> shape;

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.lower == b.lower && a.upper == b.upper && a.t0 == b.t0 && a.t1 == b.t1 &&
           a.shape == b.shape;
  }
};

class GridField {
 public:
  GridField() = default;
  explicit GridField(GridSpec spec);
  GridField(GridSpec spec, std::vector<double> values);

  const GridSpec& spec() const noexcept { return spec_; }
  int dim() const noexcept { return static_cast<int>(spec_.lower.size()); }
  std::size_t size() const noexcept { return values_.size(); }
  int extent(int axis) const noexcept { return spec_.shape[axis]; }
  int time_extent() const noexcept { return spec_.shape.back(); }

  /// Cell width along axis (axis == dim() is time).
  double spacing(int axis) const noexcept;
  double cell_volume() const noexcept;
  /// Spatial cell volume (excluding dt).
  double spatial_cell_volume() const noexcept;
  /// Centre coordinate of index along axis (axis == dim() is time).
  double coord(int axis, int index) const noexcept;

  std::size_t flat_index(std::span<const int> index) const noexcept;
  void unflatten(std::size_t flat, std::span<int> index) const noexcept;
  std::size_t spatial_stride() const noexcept { return static_cast<std::size_t>(time_extent()); }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  /// Multilinear interpolation in space at fixed time cell `time_index`;
  /// zero outside the closed spatial box.
  double sample_space(const Vec& x, int time_index) const noexcept;
  /// Multilinear interpolation in space and time; zero outside box x [t0, t1].
  double sample(const Vec& x, double t) const noexcept;

  /// Spatial centre of the node with the given flat index.
  Vec node_position(std::size_t flat) const;
  double node_time(std::size_t flat) const noexcept;

  friend bool operator==(const GridField&, const GridField&) = default;

 private:
  GridSpec spec_;
  std::vector<double> values_;
};

void validate_grid_spec(const GridSpec& spec);

/// (sum |u|^p * cell volume)^{1/p}.
double lp_norm(const GridField& u, double p);

/// Nonnegative sum of `bumps` random Gaussian bumps in space-time with centres
/// inside the box, widths between 1/12 and 1/4 of the extents and amplitudes
/// in (0, 1]; deterministic in `seed`.
GridField random_bump_field(const GridSpec& spec, int bumps, std::uint64_t seed);

}  // namespace kolmolab
