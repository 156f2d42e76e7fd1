#ifndef LLMC_SOLVER_HPP
#define LLMC_SOLVER_HPP

// Temporal matrix completion with locally linear latent factors.
//
// Each slice is modelled as F_t ~ O_t P_t^T with O_t (m x r) and P_t (n x r).
// The objective is
//
//   0.5 sum_t ||W_t .* (F_t - O_t P_t^T)||^2 + 0.5 lambda (||O||^2 + ||P||^2)
//     + 0.5 alpha curvature(O) + 0.5 beta curvature(P)
//
// where curvature() sums squared second differences across time. It is
// minimized by alternating exact block updates on a surrogate that fills the
// unobserved entries with the current estimate. Each block update is the
// Sylvester equation (lambda I + sum_s X_s^T X_s) Y + c Y (L kron I) = C,
// solved slice-wise after diagonalizing the T x T second-difference Gram L.

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "llmc/dataset.hpp"

namespace llmc {

enum class FinalThreshold {
  per_slice,  // SVD of each O_t P_t^T
  block,      // SVD of the stacked (T m) x (T n) product, diagonal blocks kept
};

struct SolverConfig {
  double lambda = 4.0;
  double alpha = 1e-3;  // curvature weight on the row factors O_t
  double beta = 1e-3;   // curvature weight on the column factors P_t
  Eigen::Index rank = 0;  // 0 selects min(m, n, 15)
  int max_iter = 500;
  double tol = 1e-5;
  std::uint64_t init_seed = 0;
  FinalThreshold final_threshold = FinalThreshold::per_slice;

  Eigen::Index resolved_rank(Eigen::Index m, Eigen::Index n) const;
  // Throws std::invalid_argument.
  void validate(Eigen::Index m, Eigen::Index n) const;
};

struct FactorState {
  SliceList row_factors;  // O_t, m x r
  SliceList col_factors;  // P_t, n x r
  int iteration = 0;
  double last_rate = std::numeric_limits<double>::infinity();
  std::vector<double> objective_trace;
  std::vector<double> rate_trace;
};

struct ThresholdedReconstruction {
  SliceList slices;
  Eigen::Index effective_rank = 0;
  std::vector<Eigen::Index> slice_ranks;  // per_slice mode only
};

struct CompletionResult {
  SliceList imputed;
  Eigen::Index effective_rank = 0;
  std::vector<Eigen::Index> slice_ranks;
  int iterations_used = 0;
  bool converged = false;
  std::vector<double> objective_trace;
  std::vector<double> rate_trace;
  FactorState state;
};

struct StationarityResiduals {
  double col = 0.0;  // P-side normal equations
  double row = 0.0;  // O-side normal equations
};

/// T blocks of i.i.d. N(0, 1/r) entries for O_t then P_t, per slice, drawn
/// from one mt19937_64 stream seeded with `seed`.
std::pair<SliceList, SliceList> random_factors(std::uint64_t seed, Eigen::Index steps, Eigen::Index m,
                                               Eigen::Index n, Eigen::Index rank);

FactorState init_factors(const SolverConfig& config, Eigen::Index steps, Eigen::Index m, Eigen::Index n);

/// W .* F + (1 - W) .* (O_t P_t^T) per slice. Unobserved values of F are
/// never read.
SliceList fill_surrogate(const SliceList& values, const MaskList& masks, const SliceList& row_factors,
                         const SliceList& col_factors);

/// Observed entries of F, zero elsewhere.
SliceList zero_fill(const SliceList& values, const MaskList& masks);

/// Exact minimizer over P of the surrogate problem with O fixed. `surrogate`
/// holds the diagonal blocks; the off-diagonal blocks carry O_s P_t^T for the
/// current P and enter in closed form.
SliceList update_col_factors(const SliceList& row_factors, const SliceList& col_factors,
                             const SliceList& surrogate, const SolverConfig& config);

/// Mirror image of update_col_factors: exact minimizer over O with P fixed.
SliceList update_row_factors(const SliceList& row_factors, const SliceList& col_factors,
                             const SliceList& surrogate, const SolverConfig& config);

/// Relative residual ||A X + beta X (L kron I_n) - C|| / ||C|| of the P-side
/// normal equations, with X built from `col_factors` and C from `reference`
/// (the P the surrogate's off-diagonal blocks were taken from).
double col_update_residual(const SliceList& row_factors, const SliceList& reference,
                           const SliceList& col_factors, const SliceList& surrogate,
                           const SolverConfig& config);
double row_update_residual(const SliceList& reference, const SliceList& row_factors,
                           const SliceList& col_factors, const SliceList& surrogate,
                           const SolverConfig& config);

/// Normal-equation residuals of both blocks at (O, P) with the surrogate
/// rebuilt from that same iterate. Zero exactly at a fixed point.
StationarityResiduals stationarity_residuals(const SliceList& values, const MaskList& masks,
                                             const SliceList& row_factors, const SliceList& col_factors,
                                             const SolverConfig& config);

/// sum_t ||W_t .* (K_t^new - K_t^old)||^2 / sum_t ||W_t .* K_t^old||^2 with
/// K_t = O_t P_t^T. Returns +inf when the denominator vanishes.
double convergence_rate(const SliceList& row_new, const SliceList& col_new, const SliceList& row_old,
                        const SliceList& col_old, const MaskList& masks);

double objective(const SliceList& row_factors, const SliceList& col_factors, const SliceList& values,
                 const MaskList& masks, const SolverConfig& config);

/// U S_lambda(D) V^T of the product with S_lambda(d) = max(d - lambda, 0).
ThresholdedReconstruction soft_threshold_svd(const SliceList& row_factors, const SliceList& col_factors,
                                             double lambda, FinalThreshold mode = FinalThreshold::per_slice);

/// Runs the alternating updates from `initial` (or init_factors) until the
/// convergence rate drops below config.tol or max_iter is reached.
CompletionResult complete(const SliceList& values, const MaskList& masks, const SolverConfig& config,
                          std::optional<FactorState> initial = std::nullopt);

/// complete() on the entries visible under the split.
CompletionResult run(const TemporalDataset& dataset, const HoldoutSplit& split, const SolverConfig& config);

}  // namespace llmc

#endif  // LLMC_SOLVER_HPP
