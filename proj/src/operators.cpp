#include "llmc/operators.hpp"

namespace llmc {

BlockAssembly assemble_blocks(const TemporalDataset& dataset, const HoldoutSplit& split) {
  dataset.validate();
  if (split.observed_mask.size() != dataset.slices.size())
    throw std::invalid_argument("assemble_blocks: split does not match dataset");
  const Eigen::Index steps = dataset.steps(), m = dataset.rows(), n = dataset.cols();

  BlockAssembly out{MatrixXd::Zero(steps * m, steps * n), MatrixXd::Zero(steps * m, steps * n)};
  for (Eigen::Index t = 0; t < steps; ++t) {
    const Mask& w = split.observed_mask[t];
    const MatrixXd filled = w.select(dataset.slices[t], 0.0);
    for (Eigen::Index s = 0; s < steps; ++s) out.values.block(s * m, t * n, m, n) = filled;
    out.mask.block(t * m, t * n, m, n) = w.cast<double>().matrix();
  }
  return out;
}

}  // namespace llmc
