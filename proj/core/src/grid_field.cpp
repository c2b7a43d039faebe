#include "kolmolab/grid_field.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>

#include "kolmolab/error.hpp"

namespace kolmolab {

namespace {

// Cell-centred 1D interpolation stencil: returns (lo, hi, weight of hi) for the
// coordinate x inside [lower, upper]; caller has already excluded outside.
struct Stencil {
  int lo;
  int hi;
  double w;
};

Stencil locate(double x, double lower, double h, int n) {
  const double s = (x - lower) / h - 0.5;
  if (s <= 0.0) return {0, 0, 0.0};
  if (s >= n - 1) return {n - 1, n - 1, 0.0};
  const int lo = static_cast<int>(std::floor(s));
  return {lo, lo + 1, s - lo};
}

}  // namespace

void validate_grid_spec(const GridSpec& spec) {
  const auto n = static_cast<std::size_t>(spec.lower.size());
  if (static_cast<std::size_t>(spec.upper.size()) != n || spec.shape.size() != n + 1 || n == 0 ||
      n > static_cast<std::size_t>(kMaxDim)) {
    throw Error(ErrorCode::ShapeMismatch, "grid spec axes are inconsistent");
  }
  for (Eigen::Index a = 0; a < spec.lower.size(); ++a) {
    if (!(spec.upper(a) > spec.lower(a))) throw Error(ErrorCode::ShapeMismatch, "empty grid box");
  }
  if (!(spec.t1 > spec.t0)) throw Error(ErrorCode::ShapeMismatch, "empty time range");
  for (int e : spec.shape) {
    if (e < 1) throw Error(ErrorCode::ShapeMismatch, "grid extents must be positive");
  }
}

GridField::GridField(GridSpec spec) : spec_(std::move(spec)) {
  validate_grid_spec(spec_);
  std::size_t total = 1;
  for (int e : spec_.shape) total *= static_cast<std::size_t>(e);
  values_.assign(total, 0.0);
}

GridField::GridField(GridSpec spec, std::vector<double> values) : GridField(std::move(spec)) {
  if (values.size() != values_.size()) {
    throw Error(ErrorCode::ShapeMismatch, "value count does not match grid shape");
  }
  values_ = std::move(values);
}

double GridField::spacing(int axis) const noexcept {
  if (axis == dim()) return (spec_.t1 - spec_.t0) / spec_.shape.back();
  return (spec_.upper(axis) - spec_.lower(axis)) / spec_.shape[axis];
}

double GridField::spatial_cell_volume() const noexcept {
  double v = 1.0;
  for (int a = 0; a < dim(); ++a) v *= spacing(a);
  return v;
}

double GridField::cell_volume() const noexcept { return spatial_cell_volume() * spacing(dim()); }

double GridField::coord(int axis, int index) const noexcept {
  const double lo = axis == dim() ? spec_.t0 : spec_.lower(axis);
  return lo + (index + 0.5) * spacing(axis);
}

std::size_t GridField::flat_index(std::span<const int> index) const noexcept {
  std::size_t flat = 0;
  for (std::size_t a = 0; a < spec_.shape.size(); ++a) {
    flat = flat * static_cast<std::size_t>(spec_.shape[a]) + static_cast<std::size_t>(index[a]);
  }
  return flat;
}

void GridField::unflatten(std::size_t flat, std::span<int> index) const noexcept {
  for (std::size_t a = spec_.shape.size(); a-- > 0;) {
    const auto e = static_cast<std::size_t>(spec_.shape[a]);
    index[a] = static_cast<int>(flat % e);
    flat /= e;
  }
}

double GridField::sample_space(const Vec& x, int time_index) const noexcept {
  const int n = dim();
  Stencil st[kMaxDim];
  for (int a = 0; a < n; ++a) {
    if (!(x(a) >= spec_.lower(a) && x(a) <= spec_.upper(a))) return 0.0;
    st[a] = locate(x(a), spec_.lower(a), spacing(a), spec_.shape[a]);
  }
  const std::size_t nt = static_cast<std::size_t>(time_extent());
  double acc = 0.0;
  const int corners = 1 << n;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    std::size_t flat = 0;
    for (int a = 0; a < n; ++a) {
      const bool up = (c >> a) & 1;
      w *= up ? st[a].w : 1.0 - st[a].w;
      flat = flat * static_cast<std::size_t>(spec_.shape[a]) + static_cast<std::size_t>(up ? st[a].hi : st[a].lo);
    }
    if (w == 0.0) continue;
    acc += w * values_[flat * nt + static_cast<std::size_t>(time_index)];
  }
  return acc;
}

double GridField::sample(const Vec& x, double t) const noexcept {
  if (!(t >= spec_.t0 && t <= spec_.t1)) return 0.0;
  const auto ts = locate(t, spec_.t0, spacing(dim()), time_extent());
  const double lo = sample_space(x, ts.lo);
  if (ts.w == 0.0) return lo;
  return (1.0 - ts.w) * lo + ts.w * sample_space(x, ts.hi);
}

Vec GridField::node_position(std::size_t flat) const {
  int idx[kMaxDim + 1];
  unflatten(flat, std::span<int>(idx, spec_.shape.size()));
  Vec x(dim());
  for (int a = 0; a < dim(); ++a) x(a) = coord(a, idx[a]);
  return x;
}

double GridField::node_time(std::size_t flat) const noexcept {
  return coord(dim(), static_cast<int>(flat % static_cast<std::size_t>(time_extent())));
}

double lp_norm(const GridField& u, double p) {
  if (!(p >= 1.0)) throw Error(ErrorCode::ExponentOutOfRange, "L^p norm requires p >= 1");
  std::vector<double> terms(u.size());
  const auto vals = u.values();
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const double a = std::abs(vals[i]);
    terms[i] = p == 1.0 ? a : std::pow(a, p);
  }
  return std::pow(pairwise_sum(terms) * u.cell_volume(), 1.0 / p);
}

GridField random_bump_field(const GridSpec& spec, int bumps, std::uint64_t seed) {
  validate_grid_spec(spec);
  if (bumps < 1) throw Error(ErrorCode::BadParameters, "need at least one bump");
  const int n = static_cast<int>(spec.lower.size());
  std::mt19937_64 rng(substream_seed(seed, 0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  struct Bump {
    Vec centre, width;
    double tc, tw, amp;
  };
  std::vector<Bump> list;
  for (int b = 0; b < bumps; ++b) {
    Bump bp{Vec(n), Vec(n), 0.0, 0.0, 0.0};
    for (int a = 0; a < n; ++a) {
      const double ext = spec.upper(a) - spec.lower(a);
      bp.centre(a) = spec.lower(a) + ext * (0.2 + 0.6 * unit(rng));
      bp.width(a) = ext * (1.0 / 12.0 + unit(rng) / 6.0);
    }
    const double ext = spec.t1 - spec.t0;
    bp.tc = spec.t0 + ext * (0.2 + 0.6 * unit(rng));
    bp.tw = ext * (1.0 / 12.0 + unit(rng) / 6.0);
    bp.amp = 1.0 - unit(rng);
    list.push_back(std::move(bp));
  }
  GridField u(spec);
  for (std::size_t k = 0; k < u.size(); ++k) {
    const Vec x = u.node_position(k);
    const double t = u.node_time(k);
    double v = 0.0;
    for (const auto& bp : list) {
      const double dt = (t - bp.tc) / bp.tw;
      v += bp.amp * std::exp(-0.5 * ((x - bp.centre).cwiseQuotient(bp.width).squaredNorm() + dt * dt));
    }
    u[k] = v;
  }
  return u;
}

}  // namespace kolmolab
