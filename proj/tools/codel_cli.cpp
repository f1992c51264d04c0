// codel: HRV feature extraction, CODEL-boosted MLP training and evaluation.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "codel/config.hpp"
#include "codel/error.hpp"
#include "codel/hrv.hpp"
#include "codel/io.hpp"
#include "codel/pipeline.hpp"
#include "codel/signal.hpp"

namespace fs = std::filesystem;
using namespace codel;

namespace {

enum ExitCode : int {
  kOk = 0,
  kFormat = 2,
  kParameter = 3,
  kInsufficientData = 4,
  kShape = 5,
  kContract = 6,
  kInternal = 70,
};

struct CommonFlags {
  std::optional<std::string> config_path;
  std::size_t threads = 0;
  std::map<std::string, std::string> values;
};

void add_common(CLI::App& cmd, CommonFlags& flags) {
  cmd.add_option("--config", flags.config_path, "key = value configuration file");
  cmd.add_option("--threads", flags.threads, "worker threads (0 = all cores); does not change results");
  for (const auto& key : config_key_names()) {
    std::string flag = "--" + key;
    for (auto& ch : flag)
      if (ch == '_') ch = '-';
    cmd.add_option(flag, flags.values[key], "overrides config key '" + key + "'");
  }
}

RunConfig resolve(const CLI::App& cmd, const CommonFlags& flags) {
  std::optional<std::string> text;
  std::string origin = "flags";
  if (flags.config_path) {
    text = io::read_file(*flags.config_path);
    origin = *flags.config_path;
  }
  std::vector<std::pair<std::string, std::string>> overrides;
  for (const auto& key : config_key_names()) {
    std::string flag = "--" + key;
    for (auto& ch : flag)
      if (ch == '_') ch = '-';
    if (cmd.count(flag) > 0) overrides.emplace_back(key, flags.values.at(key));
  }
  return parse_config(text, overrides, origin);
}

fs::path prepare_out_dir(const RunConfig& cfg) {
  fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw FormatError("cannot create output directory '" + cfg.out_dir + "': " + ec.message());
  return dir;
}

void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& cfg,
                    const std::vector<std::pair<std::string, std::string>>& results) {
  std::string text = "# codel " + command + " run manifest; reusable as --config\n";
  text += config_text(cfg);
  for (const auto& [k, v] : results) text += "# " + k + " = " + v + "\n";
  io::write_file((dir / "manifest.cfg").string(), text);
}

CodelConfig codel_config(const RunConfig& cfg) {
  CodelConfig c = cfg.codel;
  c.seed = *cfg.seed;
  return c;
}

// extract ------------------------------------------------------------------

RrSeries load_record(const std::string& path, const RunConfig& cfg) {
  const auto table = io::read_csv(path);
  if (table.column("rr_ms") != table.header.size()) return RrSeries(io::read_column(table, "rr_ms", path));
  if (table.column("sample") != table.header.size()) {
    Signal sig(io::read_column(table, "sample", path), cfg.fs);
    PreprocessOptions opts;
    opts.cutoff_hz = cfg.cutoff_hz;
    opts.butterworth_order = cfg.butterworth_order;
    opts.hampel_sigmas = cfg.hampel_sigmas;
    return signal_to_rr(sig, opts);
  }
  throw FormatError("'" + path + "' needs a 'sample' (raw signal) or 'rr_ms' (RR intervals) column");
}

int run_extract(const RunConfig& cfg) {
  const auto inputs = io::split(cfg.input);
  if (cfg.input.empty() || inputs.empty()) throw ParameterError("extract needs --input <file>[,<file>...]");
  std::string out = io::feature_header();
  for (const auto& path : inputs) {
    try {
      out += io::feature_row(extract_features(load_record(path, cfg)), cfg.label);
    } catch (const InsufficientDataError& e) {
      throw InsufficientDataError("record '" + path + "': " + e.what());
    }
  }
  const auto dir = prepare_out_dir(cfg);
  io::write_file((dir / "features.csv").string(), out);
  write_manifest(dir, "extract", cfg, {{"records", std::to_string(inputs.size())}});
  return kOk;
}

// train --------------------------------------------------------------------

Dataset load_features(const RunConfig& cfg) {
  if (cfg.features.empty()) throw ParameterError("missing --features <csv>");
  auto data = io::read_feature_matrix(cfg.features);
  if (cfg.inputs != 0 && cfg.inputs != data.features())
    throw ShapeError("'" + cfg.features + "' has " + std::to_string(data.features()) +
                     " feature columns but the topology declares " + std::to_string(cfg.inputs) + " inputs");
  return data;
}

int run_train(const RunConfig& cfg) {
  const auto data = load_features(cfg);
  const auto model = train_model(data, cfg.hidden, codel_config(cfg), cfg.local);
  const auto dir = prepare_out_dir(cfg);
  io::write_file((dir / "weights.txt").string(),
                 io::weights_text(model.topology, model.params,
                                  {{"method", std::string(method_name(cfg.local.method))},
                                   {"input_mean", io::join(model.scaler.mean)},
                                   {"input_scale", io::join(model.scaler.scale)}}));
  std::string codel_hist = "iteration,nfe,best_fitness\n";
  for (const auto& h : model.codel.history)
    codel_hist += std::to_string(h.iteration) + "," + std::to_string(h.nfe) + "," + io::format_double(h.best_fitness) + "\n";
  io::write_file((dir / "codel_history.csv").string(), codel_hist);
  std::string local_hist = "epoch,mse,classification_error\n";
  for (std::size_t e = 0; e < model.refined.loss_history.size(); ++e)
    local_hist += std::to_string(e + 1) + "," + io::format_double(model.refined.loss_history[e]) + "," +
                  io::format_double(model.refined.error_history[e]) + "\n";
  io::write_file((dir / "local_history.csv").string(), local_hist);
  write_manifest(dir, "train", cfg,
                 {{"topology", model.topology.describe()},
                  {"nfe_used", std::to_string(model.codel.nfe)},
                  {"codel_train_error", io::format_double(model.codel.best.f())},
                  {"final_train_error", io::format_double(model.refined.final_train_error)},
                  {"final_mse", io::format_double(model.refined.final_mse)}});
  std::cout << "final train error " << io::format_double(model.refined.final_train_error) << "%\n";
  return kOk;
}

// evaluate / compare-tables ------------------------------------------------

void write_reports(const fs::path& dir, const ReportTables& r) {
  for (std::size_t m = 0; m < kMetricCount; ++m)
    io::write_file((dir / (std::string(kMetricNames[m]) + ".csv")).string(), r.metric_csv[m]);
  io::write_file((dir / "ee.csv").string(), r.ee_csv);
  io::write_file((dir / "mean_rank.csv").string(), r.mean_rank_csv);
}

int run_evaluate(const RunConfig& cfg, std::size_t threads) {
  const auto data = load_features(cfg);
  if (cfg.k < 2 || cfg.k > data.size())
    throw ParameterError("k = " + std::to_string(cfg.k) + " must lie in [2, " + std::to_string(data.size()) + "]");
  EvaluationOptions opt;
  opt.hidden = cfg.hidden;
  opt.codel = codel_config(cfg);
  opt.local = cfg.local;
  opt.k = cfg.k;
  opt.seed = *cfg.seed;
  opt.base_init_scale = cfg.base_init_scale;
  opt.threads = threads;
  const auto results = evaluate_methods(data, opt);

  std::vector<AlgorithmSummary> summaries;
  std::string folds = "algorithm,fold";
  for (auto n : kMetricNames) folds += "," + std::string(n);
  folds += ",tp,tn,fp,fn\n";
  for (const auto& r : results) {
    summaries.push_back(as_percent(r));
    for (std::size_t f = 0; f < r.folds.size(); ++f) {
      folds += r.name + "," + std::to_string(f);
      for (std::size_t m = 0; m < kMetricCount; ++m) folds += "," + io::format_double(r.folds[f].value[m]);
      const auto& c = r.confusion[f];
      folds += "," + std::to_string(c.tp) + "," + std::to_string(c.tn) + "," + std::to_string(c.fp) + "," +
               std::to_string(c.fn) + "\n";
    }
  }
  const auto dir = prepare_out_dir(cfg);
  write_reports(dir, build_reports(summaries));
  io::write_file((dir / "folds.csv").string(), folds);
  write_manifest(dir, "evaluate", cfg, {{"rows", std::to_string(data.size())}});
  return kOk;
}

int run_compare(const RunConfig& cfg) {
  if (cfg.means.empty()) throw ParameterError("compare-tables needs --means <csv>");
  const auto reports = build_reports(read_means_table(cfg.means));
  const auto dir = prepare_out_dir(cfg);
  write_reports(dir, reports);
  write_manifest(dir, "compare-tables", cfg, {});
  return kOk;
}

int report(const char* kind, const std::exception& e, int code) {
  std::cerr << "codel: " << kind << ": " << e.what() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CODEL-boosted MLP training on heart rate variability features"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* app;
    CommonFlags flags;
  };
  std::map<std::string, Sub> subs;
  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"extract", "signal or RR CSV files -> feature matrix"},
           {"train", "feature matrix -> refined MLP weights"},
           {"evaluate", "k-fold comparison of base and CODEL-boosted refiners"},
           {"compare-tables", "EE, W/T/L and rank tables from a means table"}}) {
    auto& s = subs[name];
    s.app = app.add_subcommand(name, help);
    add_common(*s.app, s.flags);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    for (auto& [name, s] : subs) {
      if (!s.app->parsed()) continue;
      const RunConfig cfg = resolve(*s.app, s.flags);
      if (name == "extract") return run_extract(cfg);
      if (name == "train") return run_train(cfg);
      if (name == "evaluate") return run_evaluate(cfg, s.flags.threads);
      return run_compare(cfg);
    }
  } catch (const FormatError& e) {
    return report("input error", e, kFormat);
  } catch (const ParameterError& e) {
    return report("parameter error", e, kParameter);
  } catch (const InsufficientDataError& e) {
    return report("insufficient data", e, kInsufficientData);
  } catch (const ShapeError& e) {
    return report("shape mismatch", e, kShape);
  } catch (const ContractError& e) {
    return report("contract violation", e, kContract);
  } catch (const std::exception& e) {
    return report("internal error", e, kInternal);
  }
  return kInternal;
}
