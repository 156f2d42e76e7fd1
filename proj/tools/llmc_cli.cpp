// Command-line front end: synth, impute, benchmark, table.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "llmc/baselines.hpp"
#include "llmc/dataset.hpp"
#include "llmc/harness.hpp"
#include "llmc/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw llmc::IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw llmc::IoError("cannot write " + path.string());
  out << text;
  if (!out) throw llmc::IoError("write failed: " + path.string());
}

std::vector<double> parse_fractions(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad fraction '" + item + "'");
    out.push_back(v);
  }
  return out;
}

struct SynthArgs {
  llmc::SynthesisParams params;
  std::string out;
};

struct ImputeArgs {
  std::string data, out, method = "llmc", final_threshold = "per-slice";
  llmc::MethodConfig config;
  bool no_normalize = false;
  bool reconstruction = false;
};

struct BenchmarkArgs {
  std::string data, methods = "llmc,softimpute-als,softimpute-svd,mean", out, fractions = "0.9,0.8,0.7,0.6,0.5,0.4";
  int trials = 5;
  std::uint64_t base_seed = 0;
  bool raw = false;
};

struct TableArgs {
  std::string in, format = "markdown";
};

int do_synth(const SynthArgs& a) {
  const auto ds = llmc::synthesize(a.params);
  const auto manifest = llmc::save_dataset(ds, a.out);
  std::printf("wrote %s (T=%lld m=%lld n=%lld)\n", manifest.string().c_str(), static_cast<long long>(ds.steps()),
              static_cast<long long>(ds.rows()), static_cast<long long>(ds.cols()));
  return 0;
}

int do_impute(ImputeArgs a) {
  const auto ds = llmc::load_dataset(a.data);
  a.config.method = llmc::parse_method(a.method);
  a.config.id = a.method;
  if (a.final_threshold == "block")
    a.config.final_threshold = llmc::FinalThreshold::block;
  else if (a.final_threshold != "per-slice")
    throw std::invalid_argument("--final-threshold must be per-slice or block");

  const llmc::HoldoutSplit all = llmc::full_split(ds);
  llmc::TemporalDataset work = ds;
  llmc::NormalizationStats stats;
  if (!a.no_normalize) std::tie(work, stats) = llmc::normalize(ds, all);

  json diag;
  diag["method"] = a.method;
  llmc::SliceList imputed;
  if (a.config.method == llmc::Method::llmc) {
    const auto cfg = a.config.solver_config();
    const auto result = llmc::complete(work.slices, work.masks, cfg);
    imputed = result.imputed;
    diag["iterations"] = result.iterations_used;
    diag["converged"] = result.converged;
    diag["convergence_rates"] = result.rate_trace;
    diag["objective_trace"] = result.objective_trace;
    diag["effective_rank"] = result.effective_rank;
    diag["slice_ranks"] = result.slice_ranks;
    diag["rank"] = cfg.resolved_rank(ds.rows(), ds.cols());
    diag["lambda"] = cfg.lambda;
    diag["alpha"] = cfg.alpha;
    diag["beta"] = cfg.beta;
    diag["tol"] = cfg.tol;
  } else {
    imputed = llmc::impute(work, a.config);
  }

  llmc::TemporalDataset out = ds;
  for (std::size_t t = 0; t < out.slices.size(); ++t) {
    llmc::MatrixXd values = a.no_normalize ? imputed[t] : llmc::denormalize(imputed[t], stats);
    out.slices[t] = a.reconstruction ? values : ds.masks[t].select(ds.slices[t], values);
    out.masks[t] = llmc::Mask::Constant(ds.rows(), ds.cols(), true);
  }
  const auto manifest = llmc::save_dataset(out, a.out, 6);
  diag["normalized"] = !a.no_normalize;
  diag["missing_entries"] = ds.rows() * ds.cols() * ds.steps() - llmc::count_true(ds.masks);
  write_file(fs::path(a.out) / "diagnostics.json", diag.dump(2) + "\n");
  std::printf("wrote %s\n", manifest.string().c_str());
  if (diag.contains("iterations"))
    std::printf("iterations %d converged %s final_rate %.6f effective_rank %d\n", diag["iterations"].get<int>(),
                diag["converged"].get<bool>() ? "true" : "false",
                diag["convergence_rates"].empty() ? 0.0 : diag["convergence_rates"].back().get<double>(),
                diag["effective_rank"].get<int>());
  return 0;
}

int do_benchmark(const BenchmarkArgs& a) {
  const auto ds = llmc::load_dataset(a.data);
  llmc::ExperimentPlan plan;
  plan.fractions = parse_fractions(a.fractions);
  plan.trials_per_fraction = a.trials;
  plan.base_seed = a.base_seed;
  plan.score_space = a.raw ? llmc::ScoreSpace::raw : llmc::ScoreSpace::normalized;
  if (fs::is_regular_file(a.methods)) {
    plan.methods = llmc::parse_method_specs(read_file(a.methods), &plan.best_of);
  } else {
    std::stringstream ss(a.methods);
    std::string name;
    while (std::getline(ss, name, ',')) {
      llmc::MethodConfig c;
      c.method = llmc::parse_method(name);
      c.id = c.group = llmc::method_name(c.method);
      plan.methods.push_back(c);
    }
  }

  const auto table = llmc::run_experiment(ds, plan, a.data);
  const std::string csv = llmc::emit_table(table, llmc::TableFormat::csv);
  if (a.out.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    write_file(a.out, csv);
    write_file(a.out + ".trials.json", llmc::table_details_json(table) + "\n");
    std::printf("wrote %s\n", a.out.c_str());
  }
  for (const auto& row : table.rows)
    for (std::size_t j = 0; j < row.cells.size(); ++j)
      if (row.cells[j].failed)
        std::fprintf(stderr, "warning: %s at fraction %g failed: %s\n", row.id.c_str(), table.fractions[j],
                     row.cells[j].error.c_str());
  return 0;
}

int do_table(const TableArgs& a) {
  const auto table = llmc::parse_table_csv(read_file(a.in));
  llmc::TableFormat format;
  if (a.format == "markdown")
    format = llmc::TableFormat::markdown;
  else if (a.format == "csv")
    format = llmc::TableFormat::csv;
  else
    throw std::invalid_argument("--format must be markdown or csv");
  std::fputs(llmc::emit_table(table, format).c_str(), stdout);
  return 0;
}

void report_error(const std::string& kind, const std::string& message) {
  std::fprintf(stderr, "%s\n", json{{"error", kind}, {"message", message}}.dump().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal matrix completion with locally linear latent factors"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic temporal dataset");
  synth_cmd->add_option("--T", synth.params.steps, "Number of time slices")->required();
  synth_cmd->add_option("--m", synth.params.rows, "Rows per slice")->required();
  synth_cmd->add_option("--n", synth.params.cols, "Columns per slice")->required();
  synth_cmd->add_option("--rank", synth.params.rank, "Latent rank")->required();
  synth_cmd->add_option("--curvature", synth.params.curvature, "Second-difference scale of the latent trajectories");
  synth_cmd->add_option("--noise", synth.params.noise_sd, "Gaussian noise sd");
  synth_cmd->add_option("--seed", synth.params.seed, "Random seed");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();

  ImputeArgs imp;
  auto* impute_cmd = app.add_subcommand("impute", "Fill the missing entries of a dataset");
  impute_cmd->add_option("--data", imp.data, "Manifest path")->required();
  impute_cmd->add_option("--method", imp.method, "llmc | mean | softimpute-als | softimpute-svd");
  impute_cmd->add_option("--lambda", imp.config.lambda, "Nuclear-norm weight");
  impute_cmd->add_option("--alpha", imp.config.alpha, "Curvature weight on row factors");
  impute_cmd->add_option("--beta", imp.config.beta, "Curvature weight on column factors");
  impute_cmd->add_option("--rank", imp.config.rank, "Latent rank (0 = min(m, n, 15))");
  impute_cmd->add_option("--tol", imp.config.tol, "Convergence threshold");
  impute_cmd->add_option("--max-iter", imp.config.max_iter, "Iteration limit");
  impute_cmd->add_option("--seed", imp.config.seed, "Initialization seed");
  impute_cmd->add_option("--final-threshold", imp.final_threshold, "per-slice | block");
  impute_cmd->add_flag("--no-normalize", imp.no_normalize, "Impute in raw units");
  impute_cmd->add_flag("--reconstruction", imp.reconstruction, "Write the model output for every entry");
  impute_cmd->add_option("--out", imp.out, "Output directory")->required();

  BenchmarkArgs bench;
  auto* bench_cmd = app.add_subcommand("benchmark", "Holdout RMSE sweep over observed fractions");
  bench_cmd->add_option("--data", bench.data, "Manifest path")->required();
  bench_cmd->add_option("--fractions", bench.fractions, "Comma-separated observed fractions");
  bench_cmd->add_option("--trials", bench.trials, "Holdouts per fraction");
  bench_cmd->add_option("--methods", bench.methods, "Method spec JSON file or comma-separated method names");
  bench_cmd->add_option("--base-seed", bench.base_seed, "Seed from which holdout seeds are derived");
  bench_cmd->add_flag("--raw", bench.raw, "Score in raw units instead of normalized units");
  bench_cmd->add_option("--out", bench.out, "Output CSV (stdout if omitted)");

  TableArgs tab;
  auto* table_cmd = app.add_subcommand("table", "Render a result CSV");
  table_cmd->add_option("--in", tab.in, "Result CSV")->required();
  table_cmd->add_option("--format", tab.format, "markdown | csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return 2;
  }

  try {
    if (*synth_cmd) return do_synth(synth);
    if (*impute_cmd) return do_impute(imp);
    if (*bench_cmd) return do_benchmark(bench);
    if (*table_cmd) return do_table(tab);
  } catch (const llmc::IoError& e) {
    report_error("io", e.what());
    return 1;
  } catch (const llmc::NumericalError& e) {
    report_error("numerical", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    report_error("invalid_argument", e.what());
    return 1;
  } catch (const std::exception& e) {
    report_error("runtime", e.what());
    return 1;
  }
  return 1;
}
