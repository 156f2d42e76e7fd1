#ifndef LLMC_DATASET_HPP
#define LLMC_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "llmc/types.hpp"

namespace llmc {

/// T slices of an m x n matrix with per-entry observation masks.
/// Entries whose mask is false hold NaN and must not be read.
struct TemporalDataset {
  SliceList slices;
  MaskList masks;
  std::vector<std::string> attribute_names;
  std::vector<std::string> time_labels;

  Eigen::Index steps() const { return static_cast<Eigen::Index>(slices.size()); }
  Eigen::Index rows() const { return slices.empty() ? 0 : slices.front().rows(); }
  Eigen::Index cols() const { return slices.empty() ? 0 : slices.front().cols(); }

  // Throws std::invalid_argument when shapes or labels disagree.
  void validate() const;
};

/// Partition of the originally observed entries into a visible part and a
/// hidden part used only for scoring.
struct HoldoutSplit {
  MaskList observed_mask;
  MaskList eval_mask;
  double fraction = 1.0;
  std::uint64_t seed = 0;
};

struct NormalizationStats {
  VectorXd means;
  VectorXd scales;
};

struct SynthesisParams {
  Eigen::Index steps = 3;
  Eigen::Index rows = 10;
  Eigen::Index cols = 5;
  Eigen::Index rank = 2;
  double curvature = 0.0;
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
};

/// Latent trajectories behind a synthetic dataset.
struct SyntheticFactors {
  SliceList row_factors;  // O_t, m x r
  SliceList col_factors;  // P_t, n x r
};

// Manifest + CSV slice files.
TemporalDataset load_dataset(const std::filesystem::path& manifest_path);
std::filesystem::path save_dataset(const TemporalDataset& dataset, const std::filesystem::path& dir,
                                   std::optional<int> decimals = std::nullopt);

// Single-slice CSV helpers. Missing cells are "NA" or empty.
std::pair<MatrixXd, Mask> read_slice_csv(const std::filesystem::path& path);
// Without `decimals` values are written in shortest round-trip form.
void write_slice_csv(const std::filesystem::path& path, const MatrixXd& values, const Mask& mask,
                     std::optional<int> decimals = std::nullopt);
std::string format_value(double v);

/// Uniform sampling without replacement over every originally observed
/// entry of every slice; round(fraction * N) entries stay visible.
HoldoutSplit generate_holdout(const TemporalDataset& dataset, double fraction, std::uint64_t seed);

/// Split that keeps everything visible and hides nothing.
HoldoutSplit full_split(const TemporalDataset& dataset);

/// Per-attribute mean and population sd over entries visible under the
/// split, pooled across slices. Constant attributes keep scale 1.
std::pair<TemporalDataset, NormalizationStats> normalize(const TemporalDataset& dataset,
                                                         const HoldoutSplit& split);
MatrixXd denormalize(const MatrixXd& values, const NormalizationStats& stats);

/// Copy of the dataset restricted to the visible entries of the split:
/// masks become observed_mask and hidden values are overwritten with NaN.
TemporalDataset visible_part(const TemporalDataset& dataset, const HoldoutSplit& split);

SyntheticFactors synthesize_factors(const SynthesisParams& params);
TemporalDataset synthesize(const SynthesisParams& params);

}  // namespace llmc

#endif  // LLMC_DATASET_HPP
