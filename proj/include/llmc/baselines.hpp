#ifndef LLMC_BASELINES_HPP
#define LLMC_BASELINES_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "llmc/types.hpp"

namespace llmc {

enum class MeanPooling { across_slices, per_slice };

/// Replaces each hidden entry with its attribute's mean over visible entries.
SliceList mean_impute(const SliceList& values, const MaskList& masks,
                      MeanPooling pooling = MeanPooling::across_slices);

struct AlsOptions {
  double lambda = 4.0;
  Eigen::Index rank = 0;  // 0 selects min(m, n, 15)
  double tol = 1e-5;
  int max_iter = 500;
  std::uint64_t seed = 0;
};

struct AlsResult {
  MatrixXd imputed;  // U S_lambda(D) V^T of the final A B^T
  MatrixXd fit;      // A B^T
  MatrixXd row_factor;
  MatrixXd col_factor;
  Eigen::Index effective_rank = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;
};

/// min 0.5 ||W .* (F - A B^T)||^2 + 0.5 lambda (||A||^2 + ||B||^2) by
/// alternating ridge regressions on the filled matrix, B first. The first
/// fill uses zeros for unobserved entries.
AlsResult softimpute_als_slice(const MatrixXd& values, const Mask& mask, const AlsOptions& options,
                               std::optional<std::pair<MatrixXd, MatrixXd>> initial = std::nullopt);

struct SvdImputeOptions {
  double lambda = 4.0;
  double tol = 1e-5;
  int max_iter = 500;
};

struct SvdImputeResult {
  MatrixXd imputed;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;
};

/// Z <- SVT_lambda(W .* F + (1 - W) .* Z) from Z = 0 until the relative
/// change ||Z_new - Z_old||^2 / ||Z_old||^2 falls below tol.
SvdImputeResult softimpute_svd_slice(const MatrixXd& values, const Mask& mask, const SvdImputeOptions& options);

/// 0.5 ||W .* (F - Z)||^2 + lambda ||Z||_*
double nuclear_objective(const MatrixXd& values, const Mask& mask, const MatrixXd& z, double lambda);

}  // namespace llmc

#endif  // LLMC_BASELINES_HPP
