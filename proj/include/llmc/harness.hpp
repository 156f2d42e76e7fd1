#ifndef LLMC_HARNESS_HPP
#define LLMC_HARNESS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "llmc/baselines.hpp"
#include "llmc/dataset.hpp"
#include "llmc/solver.hpp"

namespace llmc {

enum class Method { llmc, mean, softimpute_als, softimpute_svd };

std::string method_name(Method method);
Method parse_method(const std::string& name);

/// One imputer with its hyperparameters. Fields a method does not use are
/// ignored.
struct MethodConfig {
  std::string id;
  Method method = Method::llmc;
  double lambda = 4.0;
  double alpha = 1e-3;
  double beta = 1e-3;
  Eigen::Index rank = 0;
  double tol = 1e-5;
  int max_iter = 500;
  std::uint64_t seed = 0;
  MeanPooling pooling = MeanPooling::across_slices;
  FinalThreshold final_threshold = FinalThreshold::per_slice;
  std::string group;  // rows sharing a group compete in best-of reduction

  SolverConfig solver_config() const;
};

/// Imputes every entry not visible in `visible.masks`.
SliceList impute(const TemporalDataset& visible, const MethodConfig& config);

/// (sum over eval entries of (imputed - truth)^2 / N)^0.5
double rmse(const SliceList& imputed, const SliceList& truth, const MaskList& eval_mask);

enum class ScoreSpace { normalized, raw };

struct ExperimentPlan {
  std::vector<double> fractions{0.9, 0.8, 0.7, 0.6, 0.5, 0.4};
  int trials_per_fraction = 5;
  std::vector<MethodConfig> methods;
  std::uint64_t base_seed = 0;
  ScoreSpace score_space = ScoreSpace::normalized;
  std::vector<std::string> best_of;  // groups to reduce

  void validate() const;
};

/// Holdout seed for one (fraction, trial) cell.
std::uint64_t derive_seed(std::uint64_t base_seed, std::size_t fraction_index, std::size_t trial_index);

struct ResultCell {
  double mean = 0.0;
  std::vector<double> trials;
  bool failed = false;
  std::string error;
};

struct ResultRow {
  std::string id;
  std::string group;
  std::vector<ResultCell> cells;  // one per fraction
};

struct ResultTable {
  std::string dataset_id;
  std::vector<double> fractions;
  std::vector<ResultRow> rows;
  std::vector<std::vector<std::uint64_t>> seeds;  // [fraction][trial]
  int trials_per_fraction = 0;

  const ResultRow& row(const std::string& id) const;
};

ResultTable run_experiment(const TemporalDataset& dataset, const ExperimentPlan& plan,
                           const std::string& dataset_id = "");

/// Appends one "<group> (best)" row per group: the member row with the
/// lowest average over its finite cells.
void add_best_of_rows(ResultTable& table, const std::vector<std::string>& groups);

enum class TableFormat { csv, markdown };

std::string emit_table(const ResultTable& table, TableFormat format);
ResultTable parse_table_csv(const std::string& text);

/// Per-trial values and seeds as JSON text.
std::string table_details_json(const ResultTable& table);

/// Reads a method list: either an array of method objects or an object with
/// "methods" (and optional "best_of"). Any numeric field given as an array
/// expands into one row per value, grouped under the entry's id.
std::vector<MethodConfig> parse_method_specs(const std::string& json_text, std::vector<std::string>* best_of = nullptr);

}  // namespace llmc

#endif  // LLMC_HARNESS_HPP
