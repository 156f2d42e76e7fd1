#include "llmc/baselines.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

#include "llmc/numerics.hpp"
#include "llmc/solver.hpp"

namespace llmc {

SliceList mean_impute(const SliceList& values, const MaskList& masks, MeanPooling pooling) {
  if (values.empty() || masks.size() != values.size()) throw std::invalid_argument("mean_impute: bad input");
  const Eigen::Index n = values.front().cols();

  auto column_means = [&](std::size_t first, std::size_t last) {
    VectorXd sum = VectorXd::Zero(n), count = VectorXd::Zero(n);
    for (std::size_t t = first; t < last; ++t) {
      sum += masks[t].select(values[t], 0.0).colwise().sum().transpose();
      count += masks[t].cast<double>().colwise().sum().matrix().transpose();
    }
    for (Eigen::Index j = 0; j < n; ++j)
      if (count(j) == 0.0) throw std::invalid_argument("mean_impute: attribute " + std::to_string(j) + " has no visible entries");
    return VectorXd(sum.cwiseQuotient(count));
  };

  SliceList out;
  out.reserve(values.size());
  const VectorXd pooled = pooling == MeanPooling::across_slices ? column_means(0, values.size()) : VectorXd();
  for (std::size_t t = 0; t < values.size(); ++t) {
    const VectorXd means = pooling == MeanPooling::across_slices ? pooled : column_means(t, t + 1);
    const MatrixXd fill = means.transpose().replicate(values[t].rows(), 1);
    out.push_back(masks[t].select(values[t], fill));
  }
  return out;
}

AlsResult softimpute_als_slice(const MatrixXd& values, const Mask& mask, const AlsOptions& options,
                               std::optional<std::pair<MatrixXd, MatrixXd>> initial) {
  const Eigen::Index m = values.rows(), n = values.cols();
  if (mask.rows() != m || mask.cols() != n) throw std::invalid_argument("softimpute_als: mask shape mismatch");
  if (!(options.lambda > 0.0)) throw std::invalid_argument("softimpute_als: lambda must be positive");
  if (!(options.tol > 0.0) || options.max_iter < 1) throw std::invalid_argument("softimpute_als: bad stopping rule");
  const Eigen::Index r = options.rank > 0 ? options.rank : std::min<Eigen::Index>({m, n, 15});
  if (r > std::min(m, n)) throw std::invalid_argument("softimpute_als: rank exceeds min(m, n)");

  MatrixXd a, b;
  if (initial) {
    a = initial->first;
    b = initial->second;
    if (a.rows() != m || b.rows() != n || a.cols() != b.cols())
      throw std::invalid_argument("softimpute_als: initial factor shapes mismatch");
  } else {
    auto [row, col] = random_factors(options.seed, 1, m, n, r);
    a = std::move(row.front());
    b = std::move(col.front());
  }
  const Eigen::Index k = a.cols();
  const MatrixXd ridge = options.lambda * MatrixXd::Identity(k, k);

  auto objective = [&](const MatrixXd& aa, const MatrixXd& bb) {
    return 0.5 * mask.select(values - aa * bb.transpose(), 0.0).squaredNorm() +
           0.5 * options.lambda * (aa.squaredNorm() + bb.squaredNorm());
  };

  AlsResult result;
  MatrixXd filled = mask.select(values, 0.0);
  for (int it = 0; it < options.max_iter; ++it) {
    const MatrixXd k_old = a * b.transpose();

    MatrixXd gram = a.transpose() * a + ridge;
    MatrixXd b_new = Eigen::LLT<MatrixXd>(gram).solve(MatrixXd(a.transpose() * filled)).transpose();
    filled = mask.select(values, a * b_new.transpose());

    gram = b_new.transpose() * b_new + ridge;
    MatrixXd a_new = Eigen::LLT<MatrixXd>(gram).solve(MatrixXd(b_new.transpose() * filled.transpose())).transpose();
    const MatrixXd k_new = a_new * b_new.transpose();
    filled = mask.select(values, k_new);
    if (!k_new.allFinite()) throw NumericalError("softimpute_als: non-finite iterate");

    const double den = mask.select(k_old, 0.0).squaredNorm();
    const double rate = den > 0.0 ? mask.select(k_new - k_old, 0.0).squaredNorm() / den
                                  : std::numeric_limits<double>::infinity();
    a = std::move(a_new);
    b = std::move(b_new);
    result.iterations = it + 1;
    result.objective_trace.push_back(objective(a, b));
    if (rate < options.tol) {
      result.converged = true;
      break;
    }
  }

  result.fit = a * b.transpose();
  const auto dec = svd(result.fit);
  const VectorXd kept = shrink(dec.D, options.lambda);
  result.effective_rank = static_cast<Eigen::Index>((kept.array() > 0.0).count());
  result.imputed = dec.U * kept.asDiagonal() * dec.V.transpose();
  result.row_factor = std::move(a);
  result.col_factor = std::move(b);
  return result;
}

double nuclear_objective(const MatrixXd& values, const Mask& mask, const MatrixXd& z, double lambda) {
  return 0.5 * mask.select(values - z, 0.0).squaredNorm() + lambda * svd(z).D.sum();
}

SvdImputeResult softimpute_svd_slice(const MatrixXd& values, const Mask& mask, const SvdImputeOptions& options) {
  if (mask.rows() != values.rows() || mask.cols() != values.cols())
    throw std::invalid_argument("softimpute_svd: mask shape mismatch");
  if (options.lambda < 0.0) throw std::invalid_argument("softimpute_svd: lambda must be nonnegative");
  if (!(options.tol > 0.0) || options.max_iter < 1) throw std::invalid_argument("softimpute_svd: bad stopping rule");

  SvdImputeResult result;
  MatrixXd z = MatrixXd::Zero(values.rows(), values.cols());
  for (int it = 0; it < options.max_iter; ++it) {
    const auto dec = svd(MatrixXd(mask.select(values, z)));
    MatrixXd z_new = dec.U * shrink(dec.D, options.lambda).asDiagonal() * dec.V.transpose();
    const double old_norm = z.squaredNorm();
    const double change = (z_new - z).squaredNorm();
    z = std::move(z_new);
    result.iterations = it + 1;
    result.objective_trace.push_back(nuclear_objective(values, mask, z, options.lambda));
    if (old_norm > 0.0 ? change / old_norm < options.tol : change == 0.0) {
      result.converged = true;
      break;
    }
  }
  result.imputed = std::move(z);
  return result;
}

}  // namespace llmc
