#include "kolmolab/lie_group.hpp"

#include <cmath>
#include <sstream>

#include "kolmolab/error.hpp"

namespace kolmolab {

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

StructureMatrix validate_structure(const BlockSpec& spec) {
  if (spec.m0 < 1) throw Error(ErrorCode::ShapeMismatch, "m0 must be a positive integer");

  std::vector<int> dims{spec.m0};
  for (std::size_t j = 0; j < spec.blocks.size(); ++j) {
    const auto& block = spec.blocks[j];
    const int cols_expected = dims.back();
    if (block.rows() < 1 || block.cols() != cols_expected) {
      std::ostringstream msg;
      msg << "block B_" << j + 1 << " has shape " << block.rows() << "x" << block.cols()
          << ", expected m_" << j + 1 << "x" << cols_expected;
      throw Error(ErrorCode::ShapeMismatch, msg.str());
    }
    if (!block.allFinite()) {
      throw Error(ErrorCode::NonFinite, "block B_" + std::to_string(j + 1) + " has non-finite entries");
    }
    if (block.rows() > cols_expected) {
      std::ostringstream msg;
      msg << "m_" << j + 1 << " = " << block.rows() << " exceeds m_" << j << " = " << cols_expected;
      throw Error(ErrorCode::MonotonicityViolation, msg.str());
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(block);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() ? sv.maxCoeff() : 0.0;
    const double smin = sv.size() ? sv.minCoeff() : 0.0;
    if (!(smax > 0.0) || smin < kRankTolerance * smax) {
      std::ostringstream msg;
      msg << "block B_" << j + 1 << " is not of full row rank (sigma_min = " << smin
          << ", sigma_max = " << smax << ")";
      throw Error(ErrorCode::RankDeficient, msg.str());
    }
    dims.push_back(static_cast<int>(block.rows()));
  }

  int n = 0;
  int q = 0;
  for (std::size_t j = 0; j < dims.size(); ++j) {
    n += dims[j];
    q += static_cast<int>(2 * j + 1) * dims[j];
  }
  if (n > kMaxDim) {
    throw Error(ErrorCode::ShapeMismatch,
                "N = " + std::to_string(n) + " exceeds the supported maximum " + std::to_string(kMaxDim));
  }

  StructureMatrix s;
  s.spec_ = spec;
  s.dims_ = dims;
  s.q_ = q;
  s.b_ = Mat::Zero(n, n);
  int row = dims[0];
  int col = 0;
  for (std::size_t j = 0; j < spec.blocks.size(); ++j) {
    const auto& block = spec.blocks[j];
    s.b_.block(row, col, block.rows(), block.cols()) = block;
    col += static_cast<int>(block.cols());
    row += static_cast<int>(block.rows());
  }
  for (std::size_t j = 0; j < dims.size(); ++j) {
    for (int i = 0; i < dims[j]; ++i) s.weights_.push_back(static_cast<int>(2 * j + 1));
  }
  s.powers_.push_back(Mat::Identity(n, n));
  for (std::size_t j = 1; j < dims.size(); ++j) s.powers_.push_back(s.powers_.back() * s.b_);
  return s;
}

Mat exp_neg_tB(const StructureMatrix& s, double t) {
  const int n = s.N();
  Mat e = Mat::Zero(n, n);
  double coef = 1.0;
  for (int j = 0; j <= s.kappa(); ++j) {
    e += coef * s.power(j);
    coef *= -t / (j + 1);
  }
  return e;
}

Mat covariance(const StructureMatrix& s, double t) {
  if (!(t > 0.0)) throw Error(ErrorCode::NonPositiveTime, "covariance requires t > 0");
  const int n = s.N();
  const int m0 = s.m0();
  // E(s) A0 E(s)^T = sum_{j,k} (-s)^{j+k} / (j! k!) B^j A0 (B^k)^T; integrate s^{j+k}.
  Mat c = Mat::Zero(n, n);
  for (int j = 0; j <= s.kappa(); ++j) {
    const auto left = s.power(j).leftCols(m0);
    for (int k = 0; k <= s.kappa(); ++k) {
      const int deg = j + k;
      const double sign = (deg % 2 == 0) ? 1.0 : -1.0;
      const double coef = sign * std::pow(t, deg + 1) / ((deg + 1) * factorial(j) * factorial(k));
      c.noalias() += coef * left * s.power(k).leftCols(m0).transpose();
    }
  }
  return 0.5 * (c + c.transpose());
}

Vec dilation_diagonal(const StructureMatrix& s, double r) {
  if (!(r > 0.0)) throw Error(ErrorCode::NonPositiveScale, "dilation requires r > 0");
  Vec d(s.N());
  for (int i = 0; i < s.N(); ++i) d(i) = std::pow(r, s.weight(i));
  return d;
}

Mat dilation(const StructureMatrix& s, double r) {
  return dilation_diagonal(s, r).asDiagonal();
}

GroupElement group_op(const GroupElement& a, const GroupElement& b, const StructureMatrix& s) {
  return {b.x + exp_neg_tB(s, b.t) * a.x, a.t + b.t};
}

GroupElement group_inverse(const GroupElement& a, const StructureMatrix& s) {
  return {-(exp_neg_tB(s, -a.t) * a.x), -a.t};
}

GroupElement group_identity(const StructureMatrix& s) {
  return {Vec::Zero(s.N()), 0.0};
}

}  // namespace kolmolab
