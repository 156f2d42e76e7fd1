#ifndef LLMC_OPERATORS_HPP
#define LLMC_OPERATORS_HPP

#include <stdexcept>
#include <vector>

#include "llmc/dataset.hpp"
#include "llmc/numerics.hpp"

namespace llmc {

/// L = D2^T D2 for the (T-2) x T second-difference matrix D2 with rows
/// (..., 1, -2, 1, ...). Constant and linear sequences lie in its null space.
template <typename Scalar>
struct SecondDiffGram {
  Eigen::Index steps = 0;
  Mat<Scalar> gram;
};

template <typename Scalar = double>
Mat<Scalar> second_difference_matrix(Eigen::Index steps) {
  if (steps < 3) throw std::invalid_argument("second difference needs at least 3 time steps");
  Mat<Scalar> d = Mat<Scalar>::Zero(steps - 2, steps);
  for (Eigen::Index k = 0; k + 2 < steps; ++k) {
    d(k, k) = Scalar(1);
    d(k, k + 1) = Scalar(-2);
    d(k, k + 2) = Scalar(1);
  }
  return d;
}

template <typename Scalar = double>
SecondDiffGram<Scalar> second_difference_gram(Eigen::Index steps) {
  const Mat<Scalar> d = second_difference_matrix<Scalar>(steps);
  return {steps, d.transpose() * d};
}

/// Gram matrix used by the solver: L for T >= 3, zero otherwise (the
/// penalty sums are empty when there are fewer than three slices).
template <typename Scalar = double>
Mat<Scalar> temporal_gram(Eigen::Index steps) {
  if (steps < 3) return Mat<Scalar>::Zero(steps, steps);
  return second_difference_gram<Scalar>(steps).gram;
}

/// sum_{t=1}^{T-2} ||(X_{t+1} - X_t) - (X_t - X_{t-1})||_F^2, zero for T <= 2.
template <typename Scalar>
Scalar curvature_penalty(const std::vector<Mat<Scalar>>& factors) {
  for (const auto& x : factors)
    if (x.rows() != factors.front().rows() || x.cols() != factors.front().cols())
      throw std::invalid_argument("curvature_penalty: factor shapes differ");
  Scalar total(0);
  for (std::size_t t = 1; t + 1 < factors.size(); ++t)
    total += (factors[t + 1] - Scalar(2) * factors[t] + factors[t - 1]).squaredNorm();
  return total;
}

/// Vertical stack (X_1; X_2; ...; X_T).
template <typename Scalar>
Mat<Scalar> stack(const std::vector<Mat<Scalar>>& blocks) {
  if (blocks.empty()) return {};
  const Eigen::Index r = blocks.front().rows();
  Mat<Scalar> out(r * static_cast<Eigen::Index>(blocks.size()), blocks.front().cols());
  for (std::size_t t = 0; t < blocks.size(); ++t) out.middleRows(static_cast<Eigen::Index>(t) * r, r) = blocks[t];
  return out;
}

/// Dense (T*m) x (T*n) block matrices. Every row-block of `values` is
/// [F_1, ..., F_T] with unobserved entries zero; `mask` is block-diagonal
/// with blocks W_t. Intended as a reference for the per-slice code paths.
struct BlockAssembly {
  MatrixXd values;
  MatrixXd mask;
};

BlockAssembly assemble_blocks(const TemporalDataset& dataset, const HoldoutSplit& split);

}  // namespace llmc

#endif  // LLMC_OPERATORS_HPP
