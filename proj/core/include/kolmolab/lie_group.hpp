#pragma once

#include <vector>

#include <Eigen/Dense>

#include "kolmolab/numerics.hpp"

namespace kolmolab {

/// Sub-diagonal blocks B_1..B_kappa of the structure matrix; B_j is m_j x m_{j-1}.
struct BlockSpec {
  int m0 = 0;
  std::vector<Eigen::MatrixXd> blocks;

  friend bool operator==(const BlockSpec&, const BlockSpec&) = default;
};

/// Validated block-nilpotent drift matrix B together with its block
/// dimensions and homogeneous dimension Q = sum_j (2j+1) m_j.
///
/// Only constructible through validate_structure, so every instance
/// satisfies the rank and monotonicity conditions.
class StructureMatrix {
 public:
  const Mat& B() const noexcept { return b_; }
  const std::vector<int>& dims() const noexcept { return dims_; }
  const BlockSpec& spec() const noexcept { return spec_; }
  int N() const noexcept { return static_cast<int>(b_.rows()); }
  int Q() const noexcept { return q_; }
  int kappa() const noexcept { return static_cast<int>(dims_.size()) - 1; }
  int m0() const noexcept { return dims_.front(); }

  /// Dilation exponent 2j+1 of coordinate i (j = block containing i).
  int weight(int coordinate) const noexcept { return weights_[coordinate]; }
  const std::vector<int>& weights() const noexcept { return weights_; }

  /// B^j for j = 0..kappa.
  const Mat& power(int j) const noexcept { return powers_[j]; }

 private:
  friend StructureMatrix validate_structure(const BlockSpec& spec);

  BlockSpec spec_;
  Mat b_;
  std::vector<int> dims_;
  std::vector<int> weights_;
  std::vector<Mat> powers_;
  int q_ = 0;
};

/// Relative singular-value floor used for the full-row-rank test of B_j.
inline constexpr double kRankTolerance = 1e-10;

StructureMatrix validate_structure(const BlockSpec& spec);

/// E(t) = exp(-tB), summed exactly as a finite series.
Mat exp_neg_tB(const StructureMatrix& s, double t);

/// C(t) = int_0^t E(s) A_0 E(s)^T ds by termwise polynomial integration.
Mat covariance(const StructureMatrix& s, double t);

/// delta_N(r) = diag(r^{2j+1} on block j).
Mat dilation(const StructureMatrix& s, double r);

/// Diagonal of delta_N(r) as a vector.
Vec dilation_diagonal(const StructureMatrix& s, double r);

struct GroupElement {
  Vec x;
  double t = 0.0;
};

/// (x,t) o (y,s) = (y + E(s) x, t + s).
GroupElement group_op(const GroupElement& a, const GroupElement& b, const StructureMatrix& s);

/// (x,t)^{-1} = (-E(-t) x, -t).
GroupElement group_inverse(const GroupElement& a, const StructureMatrix& s);

GroupElement group_identity(const StructureMatrix& s);

}  // namespace kolmolab
