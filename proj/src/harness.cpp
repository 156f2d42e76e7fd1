#include "llmc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace llmc {

using nlohmann::json;

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string short_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double row_average(const ResultRow& row) {
  double sum = 0.0;
  int count = 0;
  for (const auto& c : row.cells)
    if (!c.failed && std::isfinite(c.mean)) {
      sum += c.mean;
      ++count;
    }
  return count > 0 ? sum / count : std::numeric_limits<double>::infinity();
}

}  // namespace

std::string method_name(Method method) {
  switch (method) {
    case Method::llmc: return "llmc";
    case Method::mean: return "mean";
    case Method::softimpute_als: return "softimpute-als";
    case Method::softimpute_svd: return "softimpute-svd";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "llmc") return Method::llmc;
  if (name == "mean") return Method::mean;
  if (name == "softimpute-als" || name == "softimpute_als") return Method::softimpute_als;
  if (name == "softimpute-svd" || name == "softimpute_svd") return Method::softimpute_svd;
  throw std::invalid_argument("unknown method '" + name + "'");
}

SolverConfig MethodConfig::solver_config() const {
  SolverConfig c;
  c.lambda = lambda;
  c.alpha = alpha;
  c.beta = beta;
  c.rank = rank;
  c.max_iter = max_iter;
  c.tol = tol;
  c.init_seed = seed;
  c.final_threshold = final_threshold;
  return c;
}

SliceList impute(const TemporalDataset& visible, const MethodConfig& config) {
  visible.validate();
  switch (config.method) {
    case Method::llmc:
      return complete(visible.slices, visible.masks, config.solver_config()).imputed;
    case Method::mean:
      return mean_impute(visible.slices, visible.masks, config.pooling);
    case Method::softimpute_als: {
      AlsOptions opt{config.lambda, config.rank, config.tol, config.max_iter, config.seed};
      SliceList out;
      for (std::size_t t = 0; t < visible.slices.size(); ++t)
        out.push_back(softimpute_als_slice(visible.slices[t], visible.masks[t], opt).imputed);
      return out;
    }
    case Method::softimpute_svd: {
      SvdImputeOptions opt{config.lambda, config.tol, config.max_iter};
      SliceList out;
      for (std::size_t t = 0; t < visible.slices.size(); ++t)
        out.push_back(softimpute_svd_slice(visible.slices[t], visible.masks[t], opt).imputed);
      return out;
    }
  }
  throw std::invalid_argument("unknown method");
}

double rmse(const SliceList& imputed, const SliceList& truth, const MaskList& eval_mask) {
  if (imputed.size() != truth.size() || eval_mask.size() != truth.size())
    throw std::invalid_argument("rmse: slice counts differ");
  double sum = 0.0;
  Eigen::Index count = 0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (imputed[t].rows() != truth[t].rows() || imputed[t].cols() != truth[t].cols() ||
        eval_mask[t].rows() != truth[t].rows() || eval_mask[t].cols() != truth[t].cols())
      throw std::invalid_argument("rmse: slice shapes differ");
    sum += eval_mask[t].select(imputed[t] - truth[t], 0.0).squaredNorm();
    count += eval_mask[t].count();
  }
  if (count == 0) throw std::invalid_argument("rmse: empty evaluation mask");
  return std::sqrt(sum / static_cast<double>(count));
}

void ExperimentPlan::validate() const {
  if (fractions.empty()) throw std::invalid_argument("plan has no fractions");
  for (double f : fractions)
    if (!(f > 0.0 && f <= 1.0)) throw std::invalid_argument("plan fraction outside (0, 1]");
  if (trials_per_fraction < 1) throw std::invalid_argument("plan needs at least one trial");
  if (methods.empty()) throw std::invalid_argument("plan has no methods");
  for (const auto& m : methods)
    if (m.id.empty() || m.id.find_first_of(",\n") != std::string::npos)
      throw std::invalid_argument("method id must be non-empty and free of commas");
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::size_t fraction_index, std::size_t trial_index) {
  std::uint64_t h = splitmix64(base_seed);
  h = splitmix64(h ^ (0x100000001b3ULL * (fraction_index + 1)));
  return splitmix64(h ^ (0xc2b2ae3d27d4eb4fULL * (trial_index + 1)));
}

const ResultRow& ResultTable::row(const std::string& id) const {
  for (const auto& r : rows)
    if (r.id == id) return r;
  throw std::out_of_range("no result row '" + id + "'");
}

ResultTable run_experiment(const TemporalDataset& dataset, const ExperimentPlan& plan, const std::string& dataset_id) {
  dataset.validate();
  plan.validate();

  ResultTable table;
  table.dataset_id = dataset_id;
  table.fractions = plan.fractions;
  table.trials_per_fraction = plan.trials_per_fraction;
  for (const auto& m : plan.methods) {
    ResultRow row{m.id, m.group, {}};
    row.cells.resize(plan.fractions.size());
    table.rows.push_back(std::move(row));
  }

  for (std::size_t fi = 0; fi < plan.fractions.size(); ++fi) {
    table.seeds.emplace_back();
    for (int trial = 0; trial < plan.trials_per_fraction; ++trial) {
      const std::uint64_t seed = derive_seed(plan.base_seed, fi, static_cast<std::size_t>(trial));
      table.seeds.back().push_back(seed);
      const HoldoutSplit split = generate_holdout(dataset, plan.fractions[fi], seed);
      const auto [normalized, stats] = normalize(dataset, split);
      const TemporalDataset visible = visible_part(normalized, split);

      for (std::size_t mi = 0; mi < plan.methods.size(); ++mi) {
        ResultCell& cell = table.rows[mi].cells[fi];
        if (cell.failed) continue;
        try {
          SliceList imputed = impute(visible, plan.methods[mi]);
          for (std::size_t t = 0; t < imputed.size(); ++t)
            if (!split.eval_mask[t].select(imputed[t], 0.0).allFinite())
              throw NumericalError("non-finite prediction on a held-out entry");
          SliceList truth = normalized.slices;
          if (plan.score_space == ScoreSpace::raw) {
            for (auto& x : imputed) x = denormalize(x, stats);
            truth = dataset.slices;
          }
          cell.trials.push_back(rmse(imputed, truth, split.eval_mask));
        } catch (const std::exception& e) {
          cell.failed = true;
          cell.error = e.what();
        }
      }
    }
  }

  for (auto& row : table.rows)
    for (auto& cell : row.cells) {
      if (cell.failed) {
        cell.mean = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      double sum = 0.0;
      for (double v : cell.trials) sum += v;
      cell.mean = sum / static_cast<double>(cell.trials.size());
    }

  if (!plan.best_of.empty()) add_best_of_rows(table, plan.best_of);
  return table;
}

void add_best_of_rows(ResultTable& table, const std::vector<std::string>& groups) {
  for (const auto& group : groups) {
    const ResultRow* best = nullptr;
    double best_avg = std::numeric_limits<double>::infinity();
    for (const auto& row : table.rows) {
      if (row.group != group) continue;
      const double avg = row_average(row);
      if (!best || avg < best_avg) {
        best = &row;
        best_avg = avg;
      }
    }
    if (!best) throw std::invalid_argument("best-of group '" + group + "' has no rows");
    ResultRow reduced = *best;
    reduced.id = group + " (best: " + best->id + ")";
    reduced.group.clear();
    table.rows.push_back(std::move(reduced));
  }
}

std::string emit_table(const ResultTable& table, TableFormat format) {
  std::vector<std::string> header{"method"};
  for (double f : table.fractions) header.push_back(short_number(f));

  std::vector<std::vector<std::string>> body;
  for (const auto& row : table.rows) {
    std::vector<std::string> line{row.id};
    for (const auto& cell : row.cells) line.push_back(cell.failed || !std::isfinite(cell.mean) ? "NA" : fixed6(cell.mean));
    body.push_back(std::move(line));
  }

  std::ostringstream out;
  if (format == TableFormat::csv) {
    auto write = [&](const std::vector<std::string>& cells) {
      for (std::size_t j = 0; j < cells.size(); ++j) out << (j ? "," : "") << cells[j];
      out << '\n';
    };
    write(header);
    for (const auto& line : body) write(line);
    return out.str();
  }

  // Markdown: bold the lowest value in each column (first one on ties).
  for (std::size_t j = 1; j < header.size(); ++j) {
    std::size_t best = body.size();
    double best_value = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      const auto& cell = table.rows[i].cells[j - 1];
      if (!cell.failed && std::isfinite(cell.mean) && cell.mean < best_value) {
        best_value = cell.mean;
        best = i;
      }
    }
    if (best < body.size()) body[best][j] = "**" + body[best][j] + "**";
  }
  std::vector<std::size_t> width(header.size(), 3);
  for (std::size_t j = 0; j < header.size(); ++j) {
    width[j] = std::max(width[j], header[j].size());
    for (const auto& line : body) width[j] = std::max(width[j], line[j].size());
  }
  auto write = [&](const std::vector<std::string>& cells) {
    out << '|';
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const std::string pad(width[j] - cells[j].size(), ' ');
      out << ' ' << (j == 0 ? cells[j] + pad : pad + cells[j]) << " |";
    }
    out << '\n';
  };
  write(header);
  out << '|';
  for (std::size_t j = 0; j < header.size(); ++j)
    out << (j == 0 ? ' ' + std::string(width[j], '-') + " |" : ' ' + std::string(width[j] - 1, '-') + ": |");
  out << '\n';
  for (const auto& line : body) write(line);
  return out.str();
}

ResultTable parse_table_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("table csv is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line, ',');
  if (header.empty() || header.front() != "method") throw std::invalid_argument("table csv header must start with 'method'");

  ResultTable table;
  for (std::size_t j = 1; j < header.size(); ++j) table.fractions.push_back(std::stod(header[j]));
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) throw std::invalid_argument("table csv row has wrong number of cells");
    ResultRow row{cells.front(), "", {}};
    for (std::size_t j = 1; j < cells.size(); ++j) {
      ResultCell cell;
      if (cells[j] == "NA") {
        cell.failed = true;
        cell.mean = std::numeric_limits<double>::quiet_NaN();
      } else {
        cell.mean = std::stod(cells[j]);
      }
      row.cells.push_back(std::move(cell));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string table_details_json(const ResultTable& table) {
  json doc;
  doc["dataset"] = table.dataset_id;
  doc["fractions"] = table.fractions;
  doc["trials_per_fraction"] = table.trials_per_fraction;
  doc["seeds"] = table.seeds;
  doc["rows"] = json::array();
  for (const auto& row : table.rows) {
    json r{{"id", row.id}, {"cells", json::array()}};
    for (const auto& cell : row.cells) {
      json c{{"trials", cell.trials}, {"failed", cell.failed}};
      if (cell.failed)
        c["error"] = cell.error;
      else
        c["mean"] = cell.mean;
      r["cells"].push_back(std::move(c));
    }
    doc["rows"].push_back(std::move(r));
  }
  return doc.dump(2);
}

std::vector<MethodConfig> parse_method_specs(const std::string& json_text, std::vector<std::string>* best_of) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("method spec is not valid JSON: ") + e.what());
  }
  json entries = doc;
  if (doc.is_object()) {
    entries = doc.at("methods");
    if (best_of && doc.contains("best_of")) *best_of = doc.at("best_of").get<std::vector<std::string>>();
  }
  if (!entries.is_array()) throw std::invalid_argument("method spec must be an array of methods");

  static const char* kSweepable[] = {"lambda", "alpha", "beta", "rank"};
  std::vector<MethodConfig> out;
  for (const auto& entry : entries) {
    MethodConfig base;
    try {
      base.method = parse_method(entry.at("method").get<std::string>());
      base.id = entry.value("id", method_name(base.method));
      base.tol = entry.value("tol", base.tol);
      base.max_iter = entry.value("max_iter", base.max_iter);
      base.seed = entry.value("seed", base.seed);
      if (entry.value("pooling", std::string("pooled")) == "per-slice") base.pooling = MeanPooling::per_slice;
      if (entry.value("final_threshold", std::string("per-slice")) == "block")
        base.final_threshold = FinalThreshold::block;
    } catch (const json::exception& e) {
      throw std::invalid_argument(std::string("malformed method entry: ") + e.what());
    }

    // Cartesian product over any field given as a list.
    std::vector<std::pair<MethodConfig, std::string>> configs{{base, ""}};
    bool swept = false;
    for (const char* key : kSweepable) {
      if (!entry.contains(key)) continue;
      const json& field = entry.at(key);
      const std::vector<double> values =
          field.is_array() ? field.get<std::vector<double>>() : std::vector<double>{field.get<double>()};
      if (values.empty()) throw std::invalid_argument(std::string("empty list for ") + key);
      swept = swept || field.is_array();
      std::vector<std::pair<MethodConfig, std::string>> next;
      for (const auto& [cfg, suffix] : configs)
        for (double v : values) {
          MethodConfig c = cfg;
          const std::string k = key;
          if (k == "lambda") c.lambda = v;
          if (k == "alpha") c.alpha = v;
          if (k == "beta") c.beta = v;
          if (k == "rank") c.rank = static_cast<Eigen::Index>(v);
          std::string s = suffix;
          if (field.is_array()) s += (s.empty() ? "" : ";") + k + "=" + short_number(v);
          next.emplace_back(std::move(c), std::move(s));
        }
      configs = std::move(next);
    }
    for (auto& [cfg, suffix] : configs) {
      cfg.group = base.id;
      if (swept) cfg.id = base.id + "[" + suffix + "]";
      out.push_back(std::move(cfg));
    }
  }
  return out;
}

}  // namespace llmc
