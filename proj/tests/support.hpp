// Test-only generators and brute-force oracles. Nothing here calls into the
// per-slice solver paths it is used to check.
#ifndef LLMC_TESTS_SUPPORT_HPP
#define LLMC_TESTS_SUPPORT_HPP

#include <cmath>
#include <random>

#include "llmc/dataset.hpp"
#include "llmc/numerics.hpp"
#include "llmc/operators.hpp"
#include "llmc/solver.hpp"

namespace llmc::testing {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  bool coin(double p) { return uniform(0.0, 1.0) < p; }

  MatrixXd matrix(Eigen::Index r, Eigen::Index c) {
    MatrixXd x(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) x(i, j) = normal();
    return x;
  }
  MatrixXd spd(Eigen::Index k, double shift = 0.5) {
    const MatrixXd g = matrix(k, k);
    return g * g.transpose() + shift * MatrixXd::Identity(k, k);
  }
  MatrixXd psd(Eigen::Index k) {
    const MatrixXd g = matrix(k, std::max<Eigen::Index>(1, k / 2));
    return g * g.transpose();
  }
  Mask mask(Eigen::Index r, Eigen::Index c, double p) {
    Mask w(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) w(i, j) = coin(p);
    return w;
  }
  SliceList slices(Eigen::Index steps, Eigen::Index r, Eigen::Index c) {
    SliceList out;
    for (Eigen::Index t = 0; t < steps; ++t) out.push_back(matrix(r, c));
    return out;
  }
  MaskList masks(Eigen::Index steps, Eigen::Index r, Eigen::Index c, double p) {
    MaskList out;
    for (Eigen::Index t = 0; t < steps; ++t) out.push_back(mask(r, c, p));
    return out;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline double rel_diff(const MatrixXd& a, const MatrixXd& b) {
  const double scale = std::max(b.norm(), 1e-300);
  return (a - b).norm() / scale;
}

inline double max_abs_diff(const SliceList& a, const SliceList& b) {
  double worst = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) worst = std::max(worst, (a[t] - b[t]).cwiseAbs().maxCoeff());
  return worst;
}

// Block-diagonal-masked quantities in the dense (T m) x (T n) layout.
inline MatrixXd dense_mask(const MaskList& masks) {
  const Eigen::Index steps = static_cast<Eigen::Index>(masks.size());
  const Eigen::Index m = masks.front().rows(), n = masks.front().cols();
  MatrixXd w = MatrixXd::Zero(steps * m, steps * n);
  for (Eigen::Index t = 0; t < steps; ++t) w.block(t * m, t * n, m, n) = masks[t].cast<double>().matrix();
  return w;
}

// Dense surrogate: diagonal blocks W .* F + (1 - W) .* O_t P_t^T, off-diagonal
// blocks O_s P_t^T.
inline MatrixXd dense_surrogate(const SliceList& values, const MaskList& masks, const SliceList& o, const SliceList& p) {
  const MatrixXd k = stack(o) * stack(p).transpose();
  MatrixXd out = k;
  const Eigen::Index m = values.front().rows(), n = values.front().cols();
  for (std::size_t t = 0; t < values.size(); ++t) {
    const auto ti = static_cast<Eigen::Index>(t);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < m; ++i)
        if (masks[t](i, j)) out(ti * m + i, ti * n + j) = values[t](i, j);
  }
  return out;
}

// Q = D2 kron I_d written out block by block from its row pattern.
inline MatrixXd dense_second_difference(Eigen::Index steps, Eigen::Index d) {
  if (steps < 3) return MatrixXd::Zero(0, steps * d);
  MatrixXd q = MatrixXd::Zero((steps - 2) * d, steps * d);
  const MatrixXd id = MatrixXd::Identity(d, d);
  for (Eigen::Index k = 0; k + 2 < steps; ++k) {
    q.block(k * d, k * d, d, d) = id;
    q.block(k * d, (k + 1) * d, d, d) = -2.0 * id;
    q.block(k * d, (k + 2) * d, d, d) = id;
  }
  return q;
}

// Objective evaluated on the dense block matrices.
inline double dense_objective(const SliceList& values, const MaskList& masks, const SliceList& o, const SliceList& p,
                              const SolverConfig& cfg) {
  const Eigen::Index steps = static_cast<Eigen::Index>(values.size());
  const Eigen::Index m = values.front().rows(), n = values.front().cols();
  TemporalDataset ds;
  ds.slices = values;
  ds.masks = masks;
  HoldoutSplit split;
  split.observed_mask = masks;
  const BlockAssembly blocks = assemble_blocks(ds, split);
  const MatrixXd os = stack(o), ps = stack(p);
  const MatrixXd qo = dense_second_difference(steps, m), qp = dense_second_difference(steps, n);
  double value = 0.5 * blocks.mask.cwiseProduct(blocks.values - os * ps.transpose()).squaredNorm() +
                 0.5 * cfg.lambda * (os.squaredNorm() + ps.squaredNorm());
  if (steps >= 3) value += 0.5 * cfg.alpha * (qo * os).squaredNorm() + 0.5 * cfg.beta * (qp * ps).squaredNorm();
  return value;
}

// P-subproblem objective with the surrogate held fixed (O fixed).
inline double dense_col_subproblem(const MatrixXd& surrogate, const SliceList& o, const SliceList& p,
                                   const SolverConfig& cfg) {
  const MatrixXd os = stack(o), ps = stack(p);
  const Eigen::Index steps = static_cast<Eigen::Index>(p.size());
  double value = 0.5 * (surrogate - os * ps.transpose()).squaredNorm() + 0.5 * cfg.lambda * ps.squaredNorm();
  if (steps >= 3) value += 0.5 * cfg.beta * (dense_second_difference(steps, p.front().rows()) * ps).squaredNorm();
  return value;
}

inline SliceList unstack(const MatrixXd& x, Eigen::Index steps) {
  const Eigen::Index d = x.rows() / steps;
  SliceList out;
  for (Eigen::Index t = 0; t < steps; ++t) out.push_back(x.middleRows(t * d, d));
  return out;
}

// P update through the dense Kronecker system.
inline SliceList dense_col_update(const SliceList& values, const MaskList& masks, const SliceList& o,
                                  const SliceList& p_ref, const SliceList& p_fill, const SolverConfig& cfg) {
  // p_fill supplies the diagonal surrogate estimate, p_ref the off-diagonal blocks.
  const Eigen::Index steps = static_cast<Eigen::Index>(o.size());
  const Eigen::Index n = values.front().cols();
  MatrixXd surrogate = dense_surrogate(values, masks, o, p_ref);
  const Eigen::Index m = values.front().rows();
  for (Eigen::Index t = 0; t < steps; ++t) {
    const MatrixXd est = o[t] * p_fill[t].transpose();
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < m; ++i)
        if (!masks[t](i, j)) surrogate(t * m + i, t * n + j) = est(i, j);
  }
  const MatrixXd os = stack(o);
  const Eigen::Index r = os.cols();
  const MatrixXd a = cfg.lambda * MatrixXd::Identity(r, r) + os.transpose() * os;
  MatrixXd b = MatrixXd::Zero(steps * n, steps * n);
  if (steps >= 3) {
    const MatrixXd q = dense_second_difference(steps, n);
    b = cfg.beta * q.transpose() * q;
  }
  const MatrixXd pt = solve_sylvester_kron(a, b, MatrixXd(os.transpose() * surrogate));
  return unstack(pt.transpose(), steps);
}

inline SliceList transpose_all(const SliceList& xs) {
  SliceList out;
  for (const auto& x : xs) out.push_back(x.transpose());
  return out;
}

inline MaskList transpose_all(const MaskList& ws) {
  MaskList out;
  for (const auto& w : ws) out.push_back(w.transpose());
  return out;
}

}  // namespace llmc::testing

#endif  // LLMC_TESTS_SUPPORT_HPP
