// tools/faultmap.cpp
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Command-line surface: ingest vibration traces and turbofan records, fit
// t-SNE / KPCA embeddings, persist and score models, compute the
// Davies-Bouldin index, and render SVG scatter plots.
//
// Exit codes: 0 success, 2 usage/config error, 3 data-format error,
// 4 numerical failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "faultmap/faultmap.hpp"

namespace {

using namespace faultmap;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CliError {
  int code;
  std::string category;
  std::string message;
};

[[noreturn]] void fail(int code, const std::string& category, const std::string& message) {
  throw CliError{code, category, message};
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(csv);
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

/// key = value lines, # comments. Returned in file order.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(kExitConfig, "config", "cannot open config file '" + path + "'");
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(kExitConfig, "config",
           "config file '" + path + "' line " + std::to_string(line_no) +
               ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && ((value.front() == '"' && value.back() == '"') ||
                              (value.front() == '\'' && value.back() == '\'')))
      value = value.substr(1, value.size() - 2);
    if (key.empty())
      fail(kExitConfig, "config",
           "config file '" + path + "' line " + std::to_string(line_no) + ": empty key");
    entries.emplace_back(std::move(key), std::move(value));
  }
  return entries;
}

/// Pulls --config out of the raw arguments and appends the file's settings
/// as flags for any option the user did not pass explicitly, so command-line
/// flags override file values.
std::vector<std::string> merge_config_args(std::vector<std::string> args) {
  std::string config_path;
  for (auto it = args.begin(); it != args.end();) {
    if (*it == "--config") {
      if (std::next(it) == args.end())
        fail(kExitConfig, "config", "--config needs a file path");
      config_path = *std::next(it);
      it = args.erase(it, std::next(it, 2));
    } else if (it->rfind("--config=", 0) == 0) {
      config_path = it->substr(9);
      it = args.erase(it);
    } else {
      ++it;
    }
  }
  if (config_path.empty()) return args;

  auto user_has = [&args](const std::string& key) {
    const std::string flag = "--" + key;
    for (const auto& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
  };
  for (const auto& [key, value] : read_config_file(config_path)) {
    if (user_has(key)) continue;
    if (value == "true") {
      args.push_back("--" + key);
    } else if (value == "false") {
      continue;
    } else {
      args.push_back("--" + key);
      args.push_back(value);
    }
  }
  return args;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(kExitData, "data", "cannot open '" + path + "' for writing");
  return out;
}

SignalTrace load_trace(const std::string& path, double rate) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".f32")
    return read_signal_f32(path, rate);
  return read_signal_csv(path, rate);
}

void save_scheme(const SegmentationScheme& scheme, const std::string& path) {
  nlohmann::json j{{"schema", "segmentation/v1"}, {"breakpoints", scheme.breakpoints}};
  std::ofstream out = open_output(path);
  out << j.dump(2) << "\n";
}

SegmentationScheme load_scheme(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open scheme file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw io_error("scheme file '" + path + "': " + e.what());
  }
  if (j.value("schema", "") != "segmentation/v1")
    throw io_error("scheme file: unsupported schema '" + j.value("schema", "<missing>") + "'");
  SegmentationScheme scheme;
  scheme.breakpoints = j.at("breakpoints").get<std::vector<std::size_t>>();
  return scheme;
}

/// Feature columns = all columns except the pass-through labels.
std::vector<std::string> feature_columns(const CsvTable& table,
                                         const std::vector<std::string>& label_cols) {
  std::set<std::string> skip(label_cols.begin(), label_cols.end());
  for (const auto& name : label_cols)
    table.require_column(name);
  std::vector<std::string> features;
  for (const auto& name : table.columns)
    if (!skip.count(name)) features.push_back(name);
  if (features.empty()) fail(kExitConfig, "config", "no feature columns remain after --label-cols");
  return features;
}

void write_embedding_csv(const std::string& path, const Matrix& coords,
                         const CsvTable& table, const std::vector<std::string>& label_cols) {
  std::ofstream out = open_output(path);
  out << "dim1,dim2";
  for (std::size_t c = 2; c < coords.cols(); ++c) out << ",dim" << (c + 1);
  for (const auto& name : label_cols) out << ',' << name;
  out << '\n';
  std::vector<std::size_t> label_idx;
  for (const auto& name : label_cols) label_idx.push_back(table.require_column(name));
  for (std::size_t i = 0; i < coords.rows(); ++i) {
    for (std::size_t c = 0; c < coords.cols(); ++c) {
      if (c) out << ',';
      out << format_double(coords(i, c));
    }
    for (std::size_t idx : label_idx) out << ',' << table.rows[i][idx];
    out << '\n';
  }
}

// ---------------------------------------------------------------- featurize

struct FeaturizeOptions {
  std::string input;
  std::string output;
  std::string scheme_path;
  bool fit_scheme = false;
  double rate = 12800.0;
  std::size_t window = kDefaultWindow;
  std::size_t hop = kDefaultHop;
  double span_seconds = 20.0;
  std::size_t bands = kDefaultBandCount;
};

int run_featurize(const FeaturizeOptions& opt) {
  if (!detail::is_power_of_two(opt.window))
    fail(kExitConfig, "config", "--window must be a power of two");
  if (opt.hop == 0 || opt.hop > opt.window)
    fail(kExitConfig, "config", "--hop must satisfy 0 < hop <= window");
  if (!(opt.rate > 0.0)) fail(kExitConfig, "config", "--rate must be positive");
  if (!(opt.span_seconds > 0.0)) fail(kExitConfig, "config", "--span-seconds must be positive");
  if (!opt.fit_scheme && opt.scheme_path.empty())
    fail(kExitConfig, "config", "provide --scheme FILE or --fit-scheme");

  const SignalTrace trace = load_trace(opt.input, opt.rate);
  const std::size_t span = moving_average_span(opt.span_seconds, opt.rate, opt.hop);

  SegmentationScheme scheme;
  if (opt.fit_scheme) {
    scheme = fit_segmentation(trace, opt.window, opt.hop, span, opt.bands);
    const std::string scheme_out =
        opt.scheme_path.empty() ? opt.output + ".scheme.json" : opt.scheme_path;
    save_scheme(scheme, scheme_out);
    std::cout << "scheme written to " << scheme_out << "\n";
  } else {
    scheme = load_scheme(opt.scheme_path);
  }

  const FeatureMatrix features = featurize_trace(trace, scheme, opt.window, opt.hop, span);
  std::ofstream out = open_output(opt.output);
  for (std::size_t j = 0; j < features.d(); ++j) out << features.column_names[j] << ',';
  out << "frame_index\n";
  for (std::size_t i = 0; i < features.n(); ++i) {
    for (std::size_t j = 0; j < features.d(); ++j) out << format_double(features.values(i, j)) << ',';
    out << i << '\n';
  }
  std::cout << "featurized " << features.n() << " frames x " << features.d() << " bands -> "
            << opt.output << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------- fit

struct FitOptions {
  std::string features_path;
  std::string method;
  std::string output;
  std::string model_out;
  std::string label_cols_csv;
  double perplexity = 30.0;
  double learning_rate = 100.0;
  std::size_t max_iter = 1000;
  std::size_t components = 2;
  std::size_t landmarks = 100;
  std::string kernel = "rbf";
  double gamma = 0.0;
  std::uint64_t seed = 0;
};

int run_fit(const FitOptions& opt) {
  if (opt.method != "tsne" && opt.method != "kpca-exact" && opt.method != "kpca-nystrom")
    fail(kExitConfig, "config", "--method must be tsne, kpca-exact or kpca-nystrom");
  KernelSpec spec;
  if (opt.kernel == "rbf")
    spec.kind = KernelKind::rbf;
  else if (opt.kernel == "linear")
    spec.kind = KernelKind::linear;
  else
    fail(kExitConfig, "config", "--kernel must be rbf or linear");
  spec.gamma = opt.gamma;

  const std::vector<std::string> label_cols = split_list(opt.label_cols_csv);
  const CsvTable table = read_csv(opt.features_path);
  const FeatureMatrix x = table_to_features(table, feature_columns(table, label_cols));

  if (opt.method == "tsne") {
    if (!(opt.perplexity > 1.0) || !(opt.perplexity < static_cast<double>(x.n())))
      fail(kExitConfig, "config",
           "--perplexity must lie in (1, n); n=" + std::to_string(x.n()));
    TsneConfig cfg;
    cfg.perplexity = opt.perplexity;
    cfg.learning_rate = opt.learning_rate;
    cfg.max_iter = opt.max_iter;
    cfg.seed = opt.seed;
    const Embedding embedding = tsne_fit(x, cfg);
    write_embedding_csv(opt.output, embedding.coords, table, label_cols);
    std::cout << "tsne: " << x.n() << " rows embedded, final KL "
              << format_double(embedding.final_kl) << " -> " << opt.output << "\n";
    return kExitOk;
  }

  KpcaFit fit;
  if (opt.method == "kpca-exact") {
    fit = kpca_fit_exact(x, opt.components, spec);
  } else {
    fit = kpca_fit_nystrom(x, opt.landmarks, opt.components, spec, opt.seed);
  }
  write_embedding_csv(opt.output, fit.training_scores, table, label_cols);
  const std::string model_path =
      opt.model_out.empty() ? opt.output + ".model.json" : opt.model_out;
  save_kpca_model(fit.model, model_path);
  std::cout << opt.method << ": " << x.n() << " rows, " << fit.model.component_count()
            << " components";
  if (fit.model.dropped_components > 0)
    std::cout << " (dropped " << fit.model.dropped_components << " non-positive)";
  std::cout << " -> " << opt.output << ", model " << model_path << "\n";
  return kExitOk;
}

// -------------------------------------------------------------------- score

struct ScoreOptions {
  std::string model_path;
  std::string features_path;
  std::string output;
  std::string baseline_path;
  std::string label_cols_csv;
};

/// Streams the feature CSV row by row: constant memory in the row count.
int run_score(const ScoreOptions& opt) {
  const KpcaModel model = load_kpca_model(opt.model_path);
  std::optional<BaselineModel> baseline;
  if (!opt.baseline_path.empty()) baseline = load_baseline(opt.baseline_path);

  std::ifstream in(opt.features_path);
  if (!in) fail(kExitData, "data", "cannot open '" + opt.features_path + "'");
  std::string line;
  if (!std::getline(in, line))
    fail(kExitData, "data", "'" + opt.features_path + "': empty file (header required)");
  CsvTable header_only;
  header_only.columns = detail::split_csv_line(line);

  const std::vector<std::string> label_cols = split_list(opt.label_cols_csv);
  std::vector<std::size_t> feature_idx;
  std::vector<std::size_t> label_idx;
  {
    std::set<std::string> skip(label_cols.begin(), label_cols.end());
    for (const auto& name : label_cols) label_idx.push_back(header_only.require_column(name));
    for (std::size_t c = 0; c < header_only.columns.size(); ++c)
      if (!skip.count(header_only.columns[c])) feature_idx.push_back(c);
  }
  if (feature_idx.size() != model.feature_count())
    fail(kExitConfig, "config",
         "feature count " + std::to_string(feature_idx.size()) +
             " does not match the model's " + std::to_string(model.feature_count()));

  std::ofstream out = open_output(opt.output);
  if (baseline) {
    out << "index,score,nearest_cluster,alarm";
  } else {
    out << "dim1";
    for (std::size_t c = 1; c < model.component_count(); ++c) out << ",dim" << (c + 1);
  }
  for (const auto& name : label_cols) out << ',' << name;
  out << '\n';

  std::size_t row_no = 0;
  std::size_t line_no = 1;
  Matrix row(1, model.feature_count());
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header_only.columns.size())
      fail(kExitData, "data",
           "'" + opt.features_path + "' line " + std::to_string(line_no) + ": expected " +
               std::to_string(header_only.columns.size()) + " fields");
    for (std::size_t c = 0; c < feature_idx.size(); ++c)
      row(0, c) = detail::parse_double(cells[feature_idx[c]],
                                       "line " + std::to_string(line_no));
    const Matrix scores = kpca_project(model, FeatureMatrix(row));
    if (baseline) {
      const DriftReport report = drift_score(*baseline, scores);
      out << row_no << ',' << format_double(report.scores[0]) << ','
          << report.nearest_cluster[0] << ',' << (report.alarms[0] ? 1 : 0);
    } else {
      for (std::size_t c = 0; c < scores.cols(); ++c) {
        if (c) out << ',';
        out << format_double(scores(0, c));
      }
    }
    for (std::size_t idx : label_idx) out << ',' << cells[idx];
    out << '\n';
    ++row_no;
  }
  std::cout << "scored " << row_no << " rows -> " << opt.output << "\n";
  return kExitOk;
}

// ----------------------------------------------------------------- baseline

struct BaselineOptions {
  std::string embedding_path;
  std::string output;
  std::string label_col;
  std::size_t clusters = 0;
  double threshold = 1.0;
  std::uint64_t seed = 0;
};

int run_baseline(const BaselineOptions& opt) {
  if (opt.label_col.empty() && opt.clusters == 0)
    fail(kExitConfig, "config", "provide --label-col NAME or --clusters K");
  const CsvTable table = read_csv(opt.embedding_path);
  std::vector<std::string> dims;
  for (const auto& name : table.columns)
    if (name.rfind("dim", 0) == 0) dims.push_back(name);
  if (dims.empty()) fail(kExitData, "data", "no dim* columns in '" + opt.embedding_path + "'");
  const FeatureMatrix coords = table_to_features(table, dims);

  BaselineModel model;
  if (!opt.label_col.empty()) {
    const std::size_t idx = table.require_column(opt.label_col);
    std::map<std::string, std::size_t> ids;
    std::vector<std::size_t> labels;
    for (const auto& row : table.rows)
      labels.push_back(ids.emplace(row[idx], ids.size()).first->second);
    model = fit_baseline(coords.values, labels, opt.threshold);
  } else {
    model = fit_baseline(coords.values, opt.clusters, opt.seed, opt.threshold);
  }
  save_baseline(model, opt.output);
  std::cout << "baseline with " << model.cluster_count() << " clusters -> " << opt.output
            << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------ dbindex

int run_dbindex(const std::string& embedding_path, const std::string& label_col) {
  const CsvTable table = read_csv(embedding_path);
  std::vector<std::string> dims;
  for (const auto& name : table.columns)
    if (name.rfind("dim", 0) == 0) dims.push_back(name);
  if (dims.empty()) fail(kExitData, "data", "no dim* columns in '" + embedding_path + "'");
  const FeatureMatrix coords = table_to_features(table, dims);
  const std::size_t idx = table.require_column(label_col);
  LabeledEmbedding labeled;
  labeled.coords = coords.values;
  for (const auto& row : table.rows) labeled.labels.push_back(row[idx]);
  std::cout << "davies-bouldin " << format_double(davies_bouldin(labeled)) << "\n";
  return kExitOk;
}

// --------------------------------------------------------------------- plot

struct PlotCmdOptions {
  std::string embedding_path;
  std::string output;
  std::string color_by;
  std::string x_col = "dim1";
  std::string y_col = "dim2";
  std::string title;
};

int run_plot(const PlotCmdOptions& opt) {
  const CsvTable table = read_csv(opt.embedding_path);
  std::vector<std::string> dims;
  for (const auto& name : table.columns)
    if (name.rfind("dim", 0) == 0) dims.push_back(name);
  if (dims.size() > 2 && opt.x_col == "dim1" && opt.y_col == "dim2" &&
      std::find(dims.begin(), dims.end(), "dim3") != dims.end())
    fail(kExitConfig, "config",
         "embedding has more than 2 dimensions; choose axes with --x/--y");
  const std::size_t xi = table.require_column(opt.x_col);
  const std::size_t yi = table.require_column(opt.y_col);
  const std::size_t ci = table.require_column(opt.color_by);

  std::vector<double> xs, ys;
  std::vector<std::string> colors;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    xs.push_back(detail::parse_double(table.rows[r][xi], "row " + std::to_string(r + 2)));
    ys.push_back(detail::parse_double(table.rows[r][yi], "row " + std::to_string(r + 2)));
    colors.push_back(table.rows[r][ci]);
  }
  PlotOptions options;
  options.title = opt.title;
  options.x_label = opt.x_col;
  options.y_label = opt.y_col;
  std::ofstream out = open_output(opt.output);
  write_scatter_svg(out, xs, ys, colors, options);
  std::cout << "plotted " << xs.size() << " points -> " << opt.output << "\n";
  return kExitOk;
}

// ------------------------------------------------------------ ingest-turbofan

struct IngestOptions {
  std::string input;
  std::string output;
  int max_cycle = 0;  // 0 = keep everything
};

int run_ingest_turbofan(const IngestOptions& opt) {
  const TurbofanData data = ingest_turbofan(opt.input);
  for (const auto& w : data.warnings) std::cerr << "faultmap: warning: " << w << "\n";

  const auto spans = data.engine_lifespans();
  int shortest = spans.front().second;
  int longest = spans.front().second;
  for (const auto& [engine, life] : spans) {
    std::cout << "engine " << engine << ": " << life << " cycles\n";
    shortest = std::min(shortest, life);
    longest = std::max(longest, life);
  }
  std::cout << "engines " << data.engine_count() << ", records " << data.records.size()
            << ", shortest life " << shortest << " cycles, longest " << longest << "\n";

  if (!opt.output.empty()) {
    std::ofstream out = open_output(opt.output);
    out << "engine_id,cycle";
    for (int s = 1; s <= 3; ++s) out << ",setting_" << s;
    for (int s = 1; s <= 21; ++s) out << ",sensor_" << (s < 10 ? "0" : "") << s;
    out << ",condition\n";
    std::size_t written = 0;
    for (const auto& r : data.records) {
      if (opt.max_cycle > 0 && r.cycle > opt.max_cycle) continue;
      out << r.engine_id << ',' << r.cycle;
      for (double v : r.op_settings) out << ',' << format_double(v);
      for (double v : r.sensors) out << ',' << format_double(v);
      out << ',' << condition_label(r.op_settings) << '\n';
      ++written;
    }
    std::cout << "wrote " << written << " rows -> " << opt.output << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"faultmap: low-dimensional embeddings and drift scoring for sensor data"};
  app.require_subcommand(1);

  // --config is stripped from the arguments and merged by merge_config_args;
  // the option here only documents it in --help.
  std::string config_doc;
  auto add_config = [&config_doc](CLI::App* cmd) {
    cmd->add_option("--config", config_doc,
                    "Read defaults from a key = value file (flags override)");
  };

  FeaturizeOptions feat;
  auto* featurize = app.add_subcommand("featurize", "Vibration trace to band features");
  featurize->add_option("--input", feat.input, "Trace: single-column CSV or .f32 stream")
      ->required();
  featurize->add_option("--out", feat.output, "Feature CSV to write")->required();
  featurize->add_option("--rate", feat.rate, "Sample rate in Hz");
  featurize->add_option("--window", feat.window, "STFT window (power of two)");
  featurize->add_option("--hop", feat.hop, "STFT hop");
  featurize->add_option("--span-seconds", feat.span_seconds, "Moving-average span in seconds");
  featurize->add_option("--bands", feat.bands, "Band count for a fresh scheme");
  featurize->add_option("--scheme", feat.scheme_path, "Segmentation scheme JSON to reuse");
  featurize->add_flag("--fit-scheme", feat.fit_scheme,
                      "Fit the segmentation on this trace and save it");
  add_config(featurize);

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a 2-d embedding of a feature table");
  fit_cmd->add_option("--features", fit.features_path, "Feature CSV")->required();
  fit_cmd->add_option("--method", fit.method, "tsne | kpca-exact | kpca-nystrom")->required();
  fit_cmd->add_option("--out", fit.output, "Embedding CSV to write")->required();
  fit_cmd->add_option("--model-out", fit.model_out, "Model JSON path (kpca methods)");
  fit_cmd->add_option("--label-cols", fit.label_cols_csv,
                      "Comma-separated pass-through columns");
  fit_cmd->add_option("--perplexity", fit.perplexity, "t-SNE perplexity");
  fit_cmd->add_option("--learning-rate", fit.learning_rate, "t-SNE learning rate");
  fit_cmd->add_option("--max-iter", fit.max_iter, "t-SNE iterations");
  fit_cmd->add_option("--components", fit.components, "KPCA component count");
  fit_cmd->add_option("--landmarks", fit.landmarks, "Nystrom landmark count");
  fit_cmd->add_option("--kernel", fit.kernel, "rbf | linear");
  fit_cmd->add_option("--gamma", fit.gamma, "RBF gamma (<= 0 = median heuristic)");
  fit_cmd->add_option("--seed", fit.seed, "Random seed");
  add_config(fit_cmd);

  ScoreOptions score;
  auto* score_cmd = app.add_subcommand("score", "Project features through a saved model");
  score_cmd->add_option("--model", score.model_path, "kpca-model/v1 JSON")->required();
  score_cmd->add_option("--features", score.features_path, "Feature CSV")->required();
  score_cmd->add_option("--out", score.output, "Output CSV")->required();
  score_cmd->add_option("--baseline", score.baseline_path,
                        "baseline/v1 JSON; switches output to a drift report");
  score_cmd->add_option("--label-cols", score.label_cols_csv,
                        "Comma-separated pass-through columns");
  add_config(score_cmd);

  BaselineOptions base;
  auto* base_cmd = app.add_subcommand("baseline", "Learn a normal-operation baseline");
  base_cmd->add_option("--embedding", base.embedding_path, "Embedding CSV")->required();
  base_cmd->add_option("--out", base.output, "Baseline JSON to write")->required();
  base_cmd->add_option("--label-col", base.label_col, "Cluster label column");
  base_cmd->add_option("--clusters", base.clusters, "Discover clusters with k-means");
  base_cmd->add_option("--threshold", base.threshold, "Alarm threshold");
  base_cmd->add_option("--seed", base.seed, "Random seed");
  add_config(base_cmd);

  std::string db_embedding, db_label;
  auto* db_cmd = app.add_subcommand("dbindex", "Davies-Bouldin index of a labeled embedding");
  db_cmd->add_option("--embedding", db_embedding, "Embedding CSV")->required();
  db_cmd->add_option("--label-col", db_label, "Label column")->required();
  add_config(db_cmd);

  PlotCmdOptions plot;
  auto* plot_cmd = app.add_subcommand("plot", "Render an embedding to SVG");
  plot_cmd->add_option("--embedding", plot.embedding_path, "Embedding CSV")->required();
  plot_cmd->add_option("--out", plot.output, "SVG path")->required();
  plot_cmd->add_option("--color-by", plot.color_by, "Column for point colors")->required();
  plot_cmd->add_option("--x", plot.x_col, "X column");
  plot_cmd->add_option("--y", plot.y_col, "Y column");
  plot_cmd->add_option("--title", plot.title, "Plot title");
  add_config(plot_cmd);

  IngestOptions ingest;
  auto* ingest_cmd =
      app.add_subcommand("ingest-turbofan", "Parse engine degradation records");
  ingest_cmd->add_option("--input", ingest.input, "Whitespace-separated 26-column file")
      ->required();
  ingest_cmd->add_option("--out", ingest.output, "Feature CSV to write");
  ingest_cmd->add_option("--max-cycle", ingest.max_cycle,
                         "Keep only cycles <= N (0 keeps everything)");
  add_config(ingest_cmd);

  try {
    std::vector<std::string> args =
        merge_config_args(std::vector<std::string>(argv + 1, argv + argc));
    std::vector<const char*> argv2;
    argv2.push_back(argv[0]);
    for (const auto& a : args) argv2.push_back(a.c_str());
    app.parse(static_cast<int>(argv2.size()), argv2.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "faultmap: config: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CliError& e) {
    std::cerr << "faultmap: " << e.category << ": " << e.message << "\n";
    return e.code;
  }

  try {
    if (featurize->parsed()) return run_featurize(feat);
    if (fit_cmd->parsed()) return run_fit(fit);
    if (score_cmd->parsed()) return run_score(score);
    if (base_cmd->parsed()) return run_baseline(base);
    if (db_cmd->parsed()) return run_dbindex(db_embedding, db_label);
    if (plot_cmd->parsed()) return run_plot(plot);
    if (ingest_cmd->parsed()) return run_ingest_turbofan(ingest);
  } catch (const CliError& e) {
    std::cerr << "faultmap: " << e.category << ": " << e.message << "\n";
    return e.code;
  } catch (const invalid_argument& e) {
    std::cerr << "faultmap: config: " << e.what() << "\n";
    return kExitConfig;
  } catch (const io_error& e) {
    std::cerr << "faultmap: data: " << e.what() << "\n";
    return kExitData;
  } catch (const numeric_error& e) {
    std::cerr << "faultmap: numeric: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "faultmap: numeric: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}
