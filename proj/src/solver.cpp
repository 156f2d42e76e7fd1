#include "llmc/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "llmc/numerics.hpp"
#include "llmc/operators.hpp"

namespace llmc {

namespace {

void check_shapes(const SliceList& values, const MaskList& masks) {
  if (values.empty()) throw std::invalid_argument("no slices");
  if (masks.size() != values.size()) throw std::invalid_argument("mask count differs from slice count");
  for (std::size_t t = 0; t < values.size(); ++t) {
    if (values[t].rows() != values.front().rows() || values[t].cols() != values.front().cols())
      throw std::invalid_argument("slice shapes differ");
    if (masks[t].rows() != values[t].rows() || masks[t].cols() != values[t].cols())
      throw std::invalid_argument("mask shape differs from slice shape");
  }
}

void check_factors(const SliceList& row_factors, const SliceList& col_factors) {
  if (row_factors.empty() || row_factors.size() != col_factors.size())
    throw std::invalid_argument("factor lists must be non-empty and equally long");
  const Eigen::Index r = row_factors.front().cols();
  for (std::size_t t = 0; t < row_factors.size(); ++t)
    if (row_factors[t].cols() != r || col_factors[t].cols() != r ||
        row_factors[t].rows() != row_factors.front().rows() || col_factors[t].rows() != col_factors.front().rows())
      throw std::invalid_argument("factor shapes differ across slices");
}

// Normal equations lhs * X + c * X * (L kron I_d) = rhs for one factor side.
// X = [Y_1^T, ..., Y_T^T] where Y_t is the factor being solved for.
struct NormalEquations {
  MatrixXd lhs;
  MatrixXd rhs;
  Eigen::Index block = 0;
};

// `fixed` is the other side's factors; `reference` is the current value of the
// side being solved for, which the off-diagonal surrogate blocks carry. With
// `transposed` the surrogate slices are read as S_t^T.
NormalEquations assemble_normal_equations(const SliceList& fixed, const SliceList& reference,
                                          const SliceList& surrogate, bool transposed, double lambda) {
  const Eigen::Index steps = static_cast<Eigen::Index>(fixed.size());
  const Eigen::Index r = fixed.front().cols();
  const Eigen::Index d = reference.front().rows();

  MatrixXd gram = MatrixXd::Zero(r, r);
  SliceList slice_grams;
  slice_grams.reserve(fixed.size());
  for (const auto& x : fixed) {
    slice_grams.push_back(x.transpose() * x);
    gram += slice_grams.back();
  }

  NormalEquations eq;
  eq.block = d;
  eq.lhs = gram;
  eq.lhs.diagonal().array() += lambda;
  eq.rhs.resize(r, steps * d);
  for (Eigen::Index t = 0; t < steps; ++t) {
    auto block = eq.rhs.middleCols(t * d, d);
    if (transposed)
      block.noalias() = fixed[t].transpose() * surrogate[t].transpose();
    else
      block.noalias() = fixed[t].transpose() * surrogate[t];
    block.noalias() += (gram - slice_grams[t]) * reference[t].transpose();
  }
  return eq;
}

MatrixXd pack_transposed(const SliceList& factors) {
  const Eigen::Index d = factors.front().rows();
  MatrixXd x(factors.front().cols(), d * static_cast<Eigen::Index>(factors.size()));
  for (std::size_t t = 0; t < factors.size(); ++t) x.middleCols(static_cast<Eigen::Index>(t) * d, d) = factors[t].transpose();
  return x;
}

SliceList unpack_transposed(const MatrixXd& x, Eigen::Index steps) {
  const Eigen::Index d = x.cols() / steps;
  SliceList out;
  out.reserve(steps);
  for (Eigen::Index t = 0; t < steps; ++t) out.push_back(x.middleCols(t * d, d).transpose());
  return out;
}

SliceList solve_side(const SliceList& fixed, const SliceList& current, const SliceList& surrogate, bool transposed,
                     double lambda, double coupling) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  const Eigen::Index steps = static_cast<Eigen::Index>(fixed.size());
  const NormalEquations eq = assemble_normal_equations(fixed, current, surrogate, transposed, lambda);
  const TemporalSylvester<double> sylvester(temporal_gram<double>(steps));
  SliceList out = unpack_transposed(sylvester.solve(eq.lhs, coupling, eq.block, eq.rhs), steps);
  for (const auto& x : out)
    if (!x.allFinite()) throw NumericalError("factor update produced non-finite values");
  return out;
}

double side_residual(const SliceList& fixed, const SliceList& reference, const SliceList& current,
                     const SliceList& surrogate, bool transposed, double lambda, double coupling) {
  const Eigen::Index steps = static_cast<Eigen::Index>(fixed.size());
  const NormalEquations eq = assemble_normal_equations(fixed, reference, surrogate, transposed, lambda);
  const MatrixXd x = pack_transposed(current);
  MatrixXd residual = eq.lhs * x - eq.rhs;
  if (coupling != 0.0 && steps >= 3) {
    const MatrixXd gram = temporal_gram<double>(steps);
    const Eigen::Index d = eq.block;
    for (Eigen::Index t = 0; t < steps; ++t)
      for (Eigen::Index s = 0; s < steps; ++s)
        if (gram(s, t) != 0.0) residual.middleCols(t * d, d) += coupling * gram(s, t) * x.middleCols(s * d, d);
  }
  const double scale = eq.rhs.norm();
  return scale > 0.0 ? residual.norm() / scale : residual.norm();
}

}  // namespace

Eigen::Index SolverConfig::resolved_rank(Eigen::Index m, Eigen::Index n) const {
  return rank > 0 ? rank : std::min<Eigen::Index>({m, n, 15});
}

void SolverConfig::validate(Eigen::Index m, Eigen::Index n) const {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw std::invalid_argument("alpha and beta must be nonnegative");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
  if (rank < 0) throw std::invalid_argument("rank must be nonnegative");
  const Eigen::Index r = resolved_rank(m, n);
  if (r < 1 || r > std::min(m, n)) throw std::invalid_argument("rank must lie in [1, min(m, n)]");
}

std::pair<SliceList, SliceList> random_factors(std::uint64_t seed, Eigen::Index steps, Eigen::Index m,
                                               Eigen::Index n, Eigen::Index rank) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(rank)));
  auto draw = [&](Eigen::Index rows) {
    MatrixXd x(rows, rank);
    for (Eigen::Index j = 0; j < rank; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) x(i, j) = normal(rng);
    return x;
  };
  SliceList row, col;
  for (Eigen::Index t = 0; t < steps; ++t) {
    row.push_back(draw(m));
    col.push_back(draw(n));
  }
  return {std::move(row), std::move(col)};
}

FactorState init_factors(const SolverConfig& config, Eigen::Index steps, Eigen::Index m, Eigen::Index n) {
  config.validate(m, n);
  if (steps < 1) throw std::invalid_argument("init_factors: need at least one slice");
  auto [row, col] = random_factors(config.init_seed, steps, m, n, config.resolved_rank(m, n));
  FactorState state;
  state.row_factors = std::move(row);
  state.col_factors = std::move(col);
  return state;
}

SliceList fill_surrogate(const SliceList& values, const MaskList& masks, const SliceList& row_factors,
                         const SliceList& col_factors) {
  check_shapes(values, masks);
  check_factors(row_factors, col_factors);
  if (row_factors.size() != values.size()) throw std::invalid_argument("factor count differs from slice count");
  SliceList out;
  out.reserve(values.size());
  for (std::size_t t = 0; t < values.size(); ++t) {
    const MatrixXd estimate = row_factors[t] * col_factors[t].transpose();
    if (estimate.rows() != values[t].rows() || estimate.cols() != values[t].cols())
      throw std::invalid_argument("factor product shape differs from slice shape");
    out.push_back(masks[t].select(values[t], estimate));
  }
  return out;
}

SliceList zero_fill(const SliceList& values, const MaskList& masks) {
  check_shapes(values, masks);
  SliceList out;
  out.reserve(values.size());
  for (std::size_t t = 0; t < values.size(); ++t) out.push_back(masks[t].select(values[t], 0.0));
  return out;
}

SliceList update_col_factors(const SliceList& row_factors, const SliceList& col_factors,
                             const SliceList& surrogate, const SolverConfig& config) {
  check_factors(row_factors, col_factors);
  return solve_side(row_factors, col_factors, surrogate, false, config.lambda, config.beta);
}

SliceList update_row_factors(const SliceList& row_factors, const SliceList& col_factors,
                             const SliceList& surrogate, const SolverConfig& config) {
  check_factors(row_factors, col_factors);
  return solve_side(col_factors, row_factors, surrogate, true, config.lambda, config.alpha);
}

double col_update_residual(const SliceList& row_factors, const SliceList& reference, const SliceList& col_factors,
                           const SliceList& surrogate, const SolverConfig& config) {
  check_factors(row_factors, col_factors);
  return side_residual(row_factors, reference, col_factors, surrogate, false, config.lambda, config.beta);
}

double row_update_residual(const SliceList& reference, const SliceList& row_factors, const SliceList& col_factors,
                           const SliceList& surrogate, const SolverConfig& config) {
  check_factors(row_factors, col_factors);
  return side_residual(col_factors, reference, row_factors, surrogate, true, config.lambda, config.alpha);
}

StationarityResiduals stationarity_residuals(const SliceList& values, const MaskList& masks,
                                             const SliceList& row_factors, const SliceList& col_factors,
                                             const SolverConfig& config) {
  const SliceList surrogate = fill_surrogate(values, masks, row_factors, col_factors);
  return {col_update_residual(row_factors, col_factors, col_factors, surrogate, config),
          row_update_residual(row_factors, row_factors, col_factors, surrogate, config)};
}

double convergence_rate(const SliceList& row_new, const SliceList& col_new, const SliceList& row_old,
                        const SliceList& col_old, const MaskList& masks) {
  check_factors(row_new, col_new);
  check_factors(row_old, col_old);
  if (row_new.size() != row_old.size() || masks.size() != row_new.size())
    throw std::invalid_argument("convergence_rate: slice counts differ");
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < masks.size(); ++t) {
    const MatrixXd k_new = row_new[t] * col_new[t].transpose();
    const MatrixXd k_old = row_old[t] * col_old[t].transpose();
    num += masks[t].select(k_new - k_old, 0.0).squaredNorm();
    den += masks[t].select(k_old, 0.0).squaredNorm();
  }
  if (den <= 0.0) return std::numeric_limits<double>::infinity();
  return num / den;
}

double objective(const SliceList& row_factors, const SliceList& col_factors, const SliceList& values,
                 const MaskList& masks, const SolverConfig& config) {
  check_shapes(values, masks);
  check_factors(row_factors, col_factors);
  double fit = 0.0, norms = 0.0;
  for (std::size_t t = 0; t < values.size(); ++t) {
    const MatrixXd k = row_factors[t] * col_factors[t].transpose();
    fit += masks[t].select(values[t] - k, 0.0).squaredNorm();
    norms += row_factors[t].squaredNorm() + col_factors[t].squaredNorm();
  }
  return 0.5 * fit + 0.5 * config.lambda * norms + 0.5 * config.alpha * curvature_penalty(row_factors) +
         0.5 * config.beta * curvature_penalty(col_factors);
}

ThresholdedReconstruction soft_threshold_svd(const SliceList& row_factors, const SliceList& col_factors,
                                             double lambda, FinalThreshold mode) {
  check_factors(row_factors, col_factors);
  if (lambda < 0.0) throw std::invalid_argument("soft_threshold_svd: lambda must be nonnegative");
  ThresholdedReconstruction out;

  if (mode == FinalThreshold::per_slice) {
    for (std::size_t t = 0; t < row_factors.size(); ++t) {
      const auto dec = svd(row_factors[t] * col_factors[t].transpose());
      const VectorXd kept = shrink(dec.D, lambda);
      const auto rank = static_cast<Eigen::Index>((kept.array() > 0.0).count());
      out.slices.push_back(dec.U * kept.asDiagonal() * dec.V.transpose());
      out.slice_ranks.push_back(rank);
      out.effective_rank = std::max(out.effective_rank, rank);
    }
    return out;
  }

  // Block product O P^T = Q_o (R_o R_p^T) Q_p^T; only the r x r core needs an SVD.
  const MatrixXd o = stack(row_factors), p = stack(col_factors);
  const Eigen::Index r = o.cols();
  Eigen::HouseholderQR<MatrixXd> qr_o(o), qr_p(p);
  const MatrixXd q_o = qr_o.householderQ() * MatrixXd::Identity(o.rows(), r);
  const MatrixXd q_p = qr_p.householderQ() * MatrixXd::Identity(p.rows(), r);
  const MatrixXd r_o = qr_o.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  const MatrixXd r_p = qr_p.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  const auto core = svd(MatrixXd(r_o * r_p.transpose()));
  const VectorXd kept = shrink(core.D, lambda);
  out.effective_rank = static_cast<Eigen::Index>((kept.array() > 0.0).count());
  const MatrixXd left = q_o * core.U * kept.asDiagonal();
  const MatrixXd right = q_p * core.V;
  const Eigen::Index m = row_factors.front().rows(), n = col_factors.front().rows();
  for (std::size_t t = 0; t < row_factors.size(); ++t) {
    const auto ti = static_cast<Eigen::Index>(t);
    out.slices.push_back(left.middleRows(ti * m, m) * right.middleRows(ti * n, n).transpose());
  }
  return out;
}

CompletionResult complete(const SliceList& values, const MaskList& masks, const SolverConfig& config,
                          std::optional<FactorState> initial) {
  check_shapes(values, masks);
  const Eigen::Index steps = static_cast<Eigen::Index>(values.size());
  const Eigen::Index m = values.front().rows(), n = values.front().cols();
  config.validate(m, n);

  FactorState state = initial ? std::move(*initial) : init_factors(config, steps, m, n);
  check_factors(state.row_factors, state.col_factors);
  if (static_cast<Eigen::Index>(state.row_factors.size()) != steps || state.row_factors.front().rows() != m ||
      state.col_factors.front().rows() != n)
    throw std::invalid_argument("initial factors do not match the data");

  CompletionResult result;
  SliceList surrogate = zero_fill(values, masks);
  for (int it = 0; it < config.max_iter; ++it) {
    const SliceList& row_old = state.row_factors;
    const SliceList& col_old = state.col_factors;

    SliceList col_new = update_col_factors(row_old, col_old, surrogate, config);
    surrogate = fill_surrogate(values, masks, row_old, col_new);
    SliceList row_new = update_row_factors(row_old, col_new, surrogate, config);
    surrogate = fill_surrogate(values, masks, row_new, col_new);

    const double rate = convergence_rate(row_new, col_new, row_old, col_old, masks);
    state.row_factors = std::move(row_new);
    state.col_factors = std::move(col_new);
    state.iteration = it + 1;
    state.last_rate = rate;
    state.rate_trace.push_back(rate);
    state.objective_trace.push_back(objective(state.row_factors, state.col_factors, values, masks, config));
    if (rate < config.tol) {
      result.converged = true;
      break;
    }
  }

  auto final = soft_threshold_svd(state.row_factors, state.col_factors, config.lambda, config.final_threshold);
  result.imputed = std::move(final.slices);
  result.effective_rank = final.effective_rank;
  result.slice_ranks = std::move(final.slice_ranks);
  result.iterations_used = state.iteration;
  result.objective_trace = state.objective_trace;
  result.rate_trace = state.rate_trace;
  result.state = std::move(state);
  return result;
}

CompletionResult run(const TemporalDataset& dataset, const HoldoutSplit& split, const SolverConfig& config) {
  dataset.validate();
  if (split.observed_mask.size() != dataset.slices.size())
    throw std::invalid_argument("split does not match dataset");
  if (count_true(split.observed_mask) == 0) throw std::invalid_argument("split leaves no visible entries");
  return complete(dataset.slices, split.observed_mask, config);
}

}  // namespace llmc
