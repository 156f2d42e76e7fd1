#include "llmc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

namespace llmc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kScaleFloor = 1e-12;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string default_label(char prefix, Eigen::Index i) { return std::string(1, prefix) + std::to_string(i); }

}  // namespace

void TemporalDataset::validate() const {
  if (slices.empty()) throw std::invalid_argument("dataset has no slices");
  if (masks.size() != slices.size()) throw std::invalid_argument("dataset mask count differs from slice count");
  const Eigen::Index m = rows(), n = cols();
  for (std::size_t t = 0; t < slices.size(); ++t) {
    if (slices[t].rows() != m || slices[t].cols() != n)
      throw std::invalid_argument("slice " + std::to_string(t) + " has inconsistent shape");
    if (masks[t].rows() != m || masks[t].cols() != n)
      throw std::invalid_argument("mask " + std::to_string(t) + " has inconsistent shape");
  }
  if (!attribute_names.empty() && static_cast<Eigen::Index>(attribute_names.size()) != n)
    throw std::invalid_argument("attribute label count differs from column count");
  if (!time_labels.empty() && time_labels.size() != slices.size())
    throw std::invalid_argument("time label count differs from slice count");
}

std::string format_value(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw IoError("cannot format value");
  std::string s(buf, end);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::pair<MatrixXd, Mask> read_slice_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open slice file: " + path.string());

  std::vector<std::vector<double>> values;
  std::vector<std::vector<bool>> present;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split_row(line);
    if (!values.empty() && cells.size() != values.front().size())
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": ragged row");
    std::vector<double> row(cells.size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<bool> seen(cells.size(), false);
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const std::string& c = cells[j];
      if (c.empty() || c == "NA") continue;
      const char* first = c.data();
      if (*first == '+') ++first;
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(first, c.data() + c.size(), v);
      if (ec != std::errc() || ptr != c.data() + c.size() || !std::isfinite(v))
        throw IoError(path.string() + ":" + std::to_string(line_no) + ": non-numeric cell '" + c + "'");
      row[j] = v;
      seen[j] = true;
    }
    values.push_back(std::move(row));
    present.push_back(std::move(seen));
  }
  if (values.empty()) throw IoError("empty slice file: " + path.string());

  const auto m = static_cast<Eigen::Index>(values.size());
  const auto n = static_cast<Eigen::Index>(values.front().size());
  MatrixXd f(m, n);
  Mask w(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      f(i, j) = values[i][j];
      w(i, j) = present[i][j];
    }
  return {f, w};
}

void write_slice_csv(const fs::path& path, const MatrixXd& values, const Mask& mask, std::optional<int> decimals) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write slice file: " + path.string());
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j > 0) out << ',';
      if (mask(i, j)) {
        if (!std::isfinite(values(i, j))) throw IoError("non-finite observed value in " + path.string());
        if (decimals) {
          char buf[64];
          std::snprintf(buf, sizeof(buf), "%.*f", *decimals, values(i, j));
          out << buf;
        } else {
          out << format_value(values(i, j));
        }
      } else {
        out << "NA";
      }
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

TemporalDataset load_dataset(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest: " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("invalid manifest " + manifest_path.string() + ": " + e.what());
  }

  TemporalDataset ds;
  std::vector<std::string> files;
  long long steps = 0, m = 0, n = 0;
  try {
    steps = manifest.at("T").get<long long>();
    m = manifest.at("m").get<long long>();
    n = manifest.at("n").get<long long>();
    files = manifest.at("slices").get<std::vector<std::string>>();
    ds.attribute_names = manifest.value("attributes", std::vector<std::string>{});
    ds.time_labels = manifest.value("times", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw IoError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  if (steps < 1) throw IoError("manifest declares T < 1");
  if (static_cast<long long>(files.size()) != steps) throw IoError("manifest slice count differs from T");

  const fs::path base = manifest_path.parent_path();
  for (const auto& rel : files) {
    auto [f, w] = read_slice_csv(base / rel);
    if (f.rows() != m || f.cols() != n)
      throw IoError("slice " + rel + " is " + std::to_string(f.rows()) + "x" + std::to_string(f.cols()) +
                    ", manifest declares " + std::to_string(m) + "x" + std::to_string(n));
    ds.slices.push_back(std::move(f));
    ds.masks.push_back(std::move(w));
  }
  if (ds.attribute_names.empty())
    for (Eigen::Index j = 0; j < n; ++j) ds.attribute_names.push_back(default_label('a', j));
  if (ds.time_labels.empty())
    for (Eigen::Index t = 0; t < steps; ++t) ds.time_labels.push_back(default_label('t', t));
  try {
    ds.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("inconsistent manifest: ") + e.what());
  }
  return ds;
}

fs::path save_dataset(const TemporalDataset& dataset, const fs::path& dir, std::optional<int> decimals) {
  dataset.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());

  std::vector<std::string> files;
  for (Eigen::Index t = 0; t < dataset.steps(); ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "slice_%03d.csv", static_cast<int>(t));
    write_slice_csv(dir / name, dataset.slices[t], dataset.masks[t], decimals);
    files.emplace_back(name);
  }

  auto attributes = dataset.attribute_names;
  if (attributes.empty())
    for (Eigen::Index j = 0; j < dataset.cols(); ++j) attributes.push_back(default_label('a', j));
  auto times = dataset.time_labels;
  if (times.empty())
    for (Eigen::Index t = 0; t < dataset.steps(); ++t) times.push_back(default_label('t', t));

  json manifest = {{"T", dataset.steps()},   {"m", dataset.rows()},     {"n", dataset.cols()},
                   {"slices", files},        {"attributes", attributes}, {"times", times}};
  const fs::path path = dir / "manifest.json";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
  return path;
}

HoldoutSplit generate_holdout(const TemporalDataset& dataset, double fraction, std::uint64_t seed) {
  dataset.validate();
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("holdout fraction must lie in (0, 1]");

  struct Entry {
    Eigen::Index t, i, j;
  };
  std::vector<Entry> entries;
  for (Eigen::Index t = 0; t < dataset.steps(); ++t)
    for (Eigen::Index j = 0; j < dataset.cols(); ++j)
      for (Eigen::Index i = 0; i < dataset.rows(); ++i)
        if (dataset.masks[t](i, j)) entries.push_back({t, i, j});
  if (entries.empty()) throw std::invalid_argument("dataset has no observed entries");

  std::mt19937_64 rng(seed);
  std::shuffle(entries.begin(), entries.end(), rng);
  const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(entries.size())));

  HoldoutSplit split;
  split.fraction = fraction;
  split.seed = seed;
  for (Eigen::Index t = 0; t < dataset.steps(); ++t) {
    split.observed_mask.push_back(Mask::Constant(dataset.rows(), dataset.cols(), false));
    split.eval_mask.push_back(Mask::Constant(dataset.rows(), dataset.cols(), false));
  }
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = entries[k];
    (k < keep ? split.observed_mask : split.eval_mask)[e.t](e.i, e.j) = true;
  }
  return split;
}

HoldoutSplit full_split(const TemporalDataset& dataset) {
  HoldoutSplit split;
  split.observed_mask = dataset.masks;
  for (const auto& w : dataset.masks) split.eval_mask.push_back(Mask::Constant(w.rows(), w.cols(), false));
  return split;
}

std::pair<TemporalDataset, NormalizationStats> normalize(const TemporalDataset& dataset,
                                                         const HoldoutSplit& split) {
  dataset.validate();
  if (split.observed_mask.size() != dataset.slices.size())
    throw std::invalid_argument("split does not match dataset");
  const Eigen::Index n = dataset.cols();

  VectorXd sum = VectorXd::Zero(n);
  Eigen::VectorXi count = Eigen::VectorXi::Zero(n);
  for (Eigen::Index t = 0; t < dataset.steps(); ++t)
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < dataset.rows(); ++i)
        if (split.observed_mask[t](i, j)) {
          sum(j) += dataset.slices[t](i, j);
          ++count(j);
        }
  for (Eigen::Index j = 0; j < n; ++j)
    if (count(j) == 0)
      throw std::invalid_argument("attribute " + std::to_string(j) + " has no visible entries");

  NormalizationStats stats;
  stats.means = sum.cwiseQuotient(count.cast<double>());
  VectorXd sq = VectorXd::Zero(n);
  for (Eigen::Index t = 0; t < dataset.steps(); ++t)
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < dataset.rows(); ++i)
        if (split.observed_mask[t](i, j)) {
          const double d = dataset.slices[t](i, j) - stats.means(j);
          sq(j) += d * d;
        }
  stats.scales = sq.cwiseQuotient(count.cast<double>()).cwiseSqrt();
  for (Eigen::Index j = 0; j < n; ++j)
    if (stats.scales(j) < kScaleFloor) stats.scales(j) = 1.0;

  TemporalDataset out = dataset;
  for (auto& f : out.slices)
    f = (f.rowwise() - stats.means.transpose()).array().rowwise() / stats.scales.transpose().array();
  return {std::move(out), std::move(stats)};
}

MatrixXd denormalize(const MatrixXd& values, const NormalizationStats& stats) {
  if (values.cols() != stats.means.size() || values.cols() != stats.scales.size())
    throw std::invalid_argument("denormalize: column count differs from stats");
  MatrixXd out = values.array().rowwise() * stats.scales.transpose().array();
  out.rowwise() += stats.means.transpose();
  return out;
}

TemporalDataset visible_part(const TemporalDataset& dataset, const HoldoutSplit& split) {
  if (split.observed_mask.size() != dataset.slices.size())
    throw std::invalid_argument("split does not match dataset");
  TemporalDataset out = dataset;
  const double poison = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t t = 0; t < out.slices.size(); ++t) {
    out.masks[t] = split.observed_mask[t];
    out.slices[t] = out.masks[t].select(out.slices[t], poison);
  }
  return out;
}

SyntheticFactors synthesize_factors(const SynthesisParams& p) {
  if (p.steps < 1 || p.rows < 1 || p.cols < 1) throw std::invalid_argument("synthesize: empty dimensions");
  if (p.rank < 1 || p.rank > std::min(p.rows, p.cols))
    throw std::invalid_argument("synthesize: rank must lie in [1, min(m, n)]");
  if (p.curvature < 0.0 || p.noise_sd < 0.0)
    throw std::invalid_argument("synthesize: curvature and noise must be nonnegative");

  constexpr double kDriftSd = 0.3;
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](Eigen::Index r, Eigen::Index c, double sd) {
    MatrixXd x(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) x(i, j) = sd * normal(rng);
    return x;
  };

  const MatrixXd o_base = draw(p.rows, p.rank, 1.0);
  const MatrixXd p_base = draw(p.cols, p.rank, 1.0);
  const MatrixXd o_drift = draw(p.rows, p.rank, kDriftSd);
  const MatrixXd p_drift = draw(p.cols, p.rank, kDriftSd);

  // Bend B(t): B(0) = B(1) = 0 and second differences are Gaussian draws.
  auto bend = [&](Eigen::Index r) {
    SliceList b(p.steps, MatrixXd::Zero(r, p.rank));
    for (Eigen::Index t = 2; t < p.steps; ++t) b[t] = 2.0 * b[t - 1] - b[t - 2] + draw(r, p.rank, 1.0);
    return b;
  };
  const SliceList o_bend = bend(p.rows);
  const SliceList p_bend = bend(p.cols);

  SyntheticFactors out;
  for (Eigen::Index t = 0; t < p.steps; ++t) {
    const double tt = static_cast<double>(t);
    out.row_factors.push_back(o_base + tt * o_drift + p.curvature * o_bend[t]);
    out.col_factors.push_back(p_base + tt * p_drift + p.curvature * p_bend[t]);
  }
  return out;
}

TemporalDataset synthesize(const SynthesisParams& p) {
  const SyntheticFactors factors = synthesize_factors(p);
  // Separate stream so noise does not shift the factor draws.
  std::mt19937_64 rng(p.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);

  TemporalDataset ds;
  for (Eigen::Index t = 0; t < p.steps; ++t) {
    MatrixXd f = factors.row_factors[t] * factors.col_factors[t].transpose();
    if (p.noise_sd > 0.0)
      for (Eigen::Index j = 0; j < f.cols(); ++j)
        for (Eigen::Index i = 0; i < f.rows(); ++i) f(i, j) += p.noise_sd * normal(rng);
    ds.slices.push_back(std::move(f));
    ds.masks.push_back(Mask::Constant(p.rows, p.cols, true));
    ds.time_labels.push_back(default_label('t', t));
  }
  for (Eigen::Index j = 0; j < p.cols; ++j) ds.attribute_names.push_back(default_label('a', j));
  return ds;
}

}  // namespace llmc
