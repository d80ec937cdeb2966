// Command-line front end: corpus statistics, training, evaluation,
// prediction and the hashtag-segmentation ablation.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "tweetsent/checkpoint.hpp"
#include "tweetsent/dataset.hpp"
#include "tweetsent/runconfig.hpp"
#include "tweetsent/train.hpp"

namespace fs = std::filesystem;
using namespace tweetsent;

namespace {

constexpr const char* kManifestFile = "manifest.txt";
constexpr const char* kCheckpointFile = "checkpoint.bin";
constexpr const char* kVocabFile = "vocab.txt";
constexpr const char* kHistoryFile = "history.csv";
constexpr const char* kFeatureStatsFile = "feature_stats.tsv";

const char* kFeatureNames[FeatureVector::kDim] = {
    "es_pos",  "es_neg",       "es_neu",  "en_pos",   "en_neg",
    "en_neu",  "subjectivity", "q_marks", "exclaims", "full_stops"};

std::vector<TweetRecord> load_training_records(const RunConfig& cfg) {
  if (cfg.train_file.empty()) {
    throw ConfigError("config is missing train_file");
  }
  auto ds = load_dataset(cfg.train_file);
  if (!cfg.dev_file.empty()) {
    const auto dev = load_dataset(cfg.dev_file);
    ds.records.insert(ds.records.end(), dev.records.begin(), dev.records.end());
  }
  return std::move(ds.records);
}

void write_feature_stats(const std::string& path, const ModelState& state) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "feature\tmean\tstd\n";
  for (int j = 0; j < state.config.n_feat; ++j) {
    out << kFeatureNames[j] << '\t' << std::setprecision(17)
        << state.feat_mean(j) << '\t' << state.feat_std(j) << '\n';
  }
}

TrainResult run_training(const RunConfig& cfg, bool quiet = false) {
  const auto records = load_training_records(cfg);
  const FeatureResources res = cfg.load_resources();

  TrainOptions opts = cfg.train_options();
  if (!quiet) {
    opts.on_epoch = [](const TrainHistoryRow& row) {
      std::cout << "epoch " << std::setw(3) << row.epoch << "  train_loss "
                << std::fixed << std::setprecision(4) << row.train_loss
                << "  val_loss " << row.val_loss << "  val_acc "
                << row.val_acc << "  (" << std::setprecision(2) << row.seconds
                << "s)\n"
                << std::defaultfloat;
    };
  }
  return train(cfg.model_config(), opts, records, res);
}

void write_training_artifacts(const RunConfig& cfg, const TrainResult& result) {
  fs::create_directories(cfg.out_dir);
  const fs::path out(cfg.out_dir);
  cfg.save_file((out / kManifestFile).string());
  save_checkpoint((out / kCheckpointFile).string(), result.model.state);
  result.model.vocab.save_file((out / kVocabFile).string(), cfg.seq_len);
  {
    std::ofstream hist(out / kHistoryFile);
    write_history_csv(hist, result.history, cfg.record_timing);
  }
  write_feature_stats((out / kFeatureStatsFile).string(), result.model.state);
}

struct LoadedModel {
  RunConfig cfg;
  TrainedModel model;
  FeatureResources res;
};

LoadedModel load_model(const std::string& model_dir) {
  const fs::path dir(model_dir);
  LoadedModel lm;
  lm.cfg = RunConfig::from_file((dir / kManifestFile).string());
  lm.model.state = load_checkpoint((dir / kCheckpointFile).string());
  auto [vocab, seq_len] = Vocabulary::load_file((dir / kVocabFile).string());
  if (seq_len != lm.model.state.config.seq_len) {
    throw std::runtime_error("vocabulary L does not match the checkpoint");
  }
  lm.model.vocab = std::move(vocab);
  lm.model.segment_hashtags = lm.cfg.segment_hashtags;
  lm.res = lm.cfg.load_resources();
  return lm;
}

// Per-dialect macro rows in the shape of the shared-task result tables.
std::string format_eval_text(
    const std::map<std::string, MetricsReport>& by_dialect,
    const MetricsReport& overall) {
  std::ostringstream out;
  out << std::left << std::setw(9) << "Dialect" << std::right << std::setw(8)
      << "F1" << std::setw(11) << "Precision" << std::setw(8) << "Recall"
      << "\n";
  auto row = [&out](const std::string& name, const MetricsReport& rep) {
    out << std::left << std::setw(9) << name << std::right << std::fixed
        << std::setprecision(3) << std::setw(8) << rep.macro_f1 << std::setw(11)
        << rep.macro_precision << std::setw(8) << rep.macro_recall << "\n"
        << std::defaultfloat;
  };
  for (const auto& [dialect, rep] : by_dialect) row(dialect, rep);
  row("ALL", overall);
  return out.str();
}

std::string format_eval_csv(
    const std::map<std::string, MetricsReport>& by_dialect,
    const MetricsReport& overall, int n_classes) {
  std::ostringstream out;
  out << "dialect,class,precision,recall,f1,support\n";
  auto rows = [&out, n_classes](const std::string& name,
                                const MetricsReport& rep) {
    for (int k = 0; k < n_classes; ++k) {
      const auto& m = rep.per_class[k];
      out << name << ',' << label_name(static_cast<Label>(k)) << ','
          << std::setprecision(12) << m.precision << ',' << m.recall << ','
          << m.f1 << ',' << m.support << '\n';
    }
    out << name << ",MACRO," << std::setprecision(12) << rep.macro_precision
        << ',' << rep.macro_recall << ',' << rep.macro_f1 << ',' << rep.total
        << '\n';
  };
  for (const auto& [dialect, rep] : by_dialect) rows(dialect, rep);
  rows("ALL", overall);
  return out.str();
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
}

// ---------------------------------------------------------------------------
// Subcommands.

int cmd_stats(const std::vector<std::string>& data_files,
              const std::string& csv_out) {
  DatasetFile merged;
  for (const auto& f : data_files) {
    auto ds = load_dataset(f);
    merged.records.insert(merged.records.end(), ds.records.begin(),
                          ds.records.end());
  }
  const auto dist = stats(merged);
  std::cout << format_stats_text(dist);
  if (!csv_out.empty()) {
    write_text(csv_out, format_stats_csv(dist));
    std::cout << "wrote " << csv_out << "\n";
  }
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  const TrainResult result = run_training(cfg);
  write_training_artifacts(cfg, result);
  std::cout << "trained " << result.history.size() << " epoch(s); artifacts in "
            << cfg.out_dir << "\n";
  if (!result.history.empty()) {
    const auto& last = result.history.back();
    std::cout << "final val_loss " << last.val_loss << "  val_acc "
              << last.val_acc << "\n";
  }
  return 0;
}

int cmd_eval(const std::string& model_dir, const std::string& data_file,
             bool group, std::string out_dir) {
  const LoadedModel lm = load_model(model_dir);
  const auto ds = load_dataset(data_file);

  const MetricsReport overall = evaluate(lm.model, lm.res, ds.records);
  std::map<std::string, MetricsReport> by_dialect;
  if (group) by_dialect = evaluate_by_dialect(lm.model, lm.res, ds.records);

  const std::string text = format_eval_text(by_dialect, overall);
  const std::string csv =
      format_eval_csv(by_dialect, overall, lm.model.state.config.n_classes);
  std::cout << text;

  if (out_dir.empty()) out_dir = model_dir;
  fs::create_directories(out_dir);
  write_text(fs::path(out_dir) / "report.txt", text);
  write_text(fs::path(out_dir) / "metrics.csv", csv);
  std::cout << "wrote " << (fs::path(out_dir) / "metrics.csv").string() << "\n";
  return 0;
}

int cmd_predict(const std::string& model_dir, const std::string& text,
                const std::string& in_file, bool have_text) {
  const LoadedModel lm = load_model(model_dir);

  std::vector<std::string> inputs;
  if (have_text) {
    inputs.push_back(text);
  } else {
    std::ifstream in(in_file);
    if (!in) throw std::runtime_error("cannot open '" + in_file + "'");
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      inputs.push_back(line);
    }
  }

  std::cout << "label";
  for (int k = 0; k < lm.model.state.config.n_classes; ++k) {
    std::cout << "\tp_" << label_name(static_cast<Label>(k));
  }
  std::cout << "\n";
  for (const auto& raw : inputs) {
    const Prediction pred = predict(lm.model, lm.res, raw);
    std::cout << label_name(static_cast<Label>(pred.label));
    for (int k = 0; k < pred.probs.size(); ++k) {
      std::cout << '\t' << std::fixed << std::setprecision(6) << pred.probs(k);
    }
    std::cout << "\n" << std::defaultfloat;
  }
  return 0;
}

int cmd_ablate(RunConfig cfg) {
  const auto run_one = [&cfg](bool segment) {
    RunConfig variant = cfg;
    variant.segment_hashtags = segment;
    const TrainResult result = run_training(variant, /*quiet=*/true);
    const FeatureResources res = variant.load_resources();
    const double train_acc =
        evaluate(result.model, res, result.train_split).accuracy;
    const double val_acc = evaluate(result.model, res, result.val_split).accuracy;
    return std::pair<double, double>(train_acc, val_acc);
  };

  const auto [train_off, val_off] = run_one(false);
  const auto [train_on, val_on] = run_one(true);

  std::ostringstream text;
  text << std::left << std::setw(9) << "System" << std::right << std::setw(10)
       << "Train (%)" << std::setw(16) << "Validation (%)" << "\n"
       << std::fixed << std::setprecision(2);
  text << std::left << std::setw(9) << "Without" << std::right << std::setw(10)
       << 100.0 * train_off << std::setw(16) << 100.0 * val_off << "\n";
  text << std::left << std::setw(9) << "With" << std::right << std::setw(10)
       << 100.0 * train_on << std::setw(16) << 100.0 * val_on << "\n";

  std::ostringstream csv;
  csv << "system,train_acc,val_acc\n"
      << std::setprecision(12) << "Without," << train_off << ',' << val_off
      << "\nWith," << train_on << ',' << val_on << "\n";

  std::cout << text.str();
  fs::create_directories(cfg.out_dir);
  cfg.save_file((fs::path(cfg.out_dir) / kManifestFile).string());
  write_text(fs::path(cfg.out_dir) / "ablation.txt", text.str());
  write_text(fs::path(cfg.out_dir) / "ablation.csv", csv.str());
  std::cout << "wrote " << (fs::path(cfg.out_dir) / "ablation.csv").string()
            << "\n";
  return 0;
}

RunConfig load_cli_config(const std::string& config_path,
                          const std::optional<std::uint64_t>& seed,
                          const std::string& out_dir) {
  RunConfig cfg = RunConfig::from_file(config_path);
  if (seed) cfg.seed = *seed;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BiLSTM sentiment classifier for Spanish tweets"};
  app.require_subcommand(1);

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Label distribution of datasets");
  std::vector<std::string> stats_files;
  std::string stats_csv;
  stats_cmd->add_option("--data", stats_files, "Dataset TSV file(s)")
      ->required()
      ->expected(-1);
  stats_cmd->add_option("--csv", stats_csv, "Also write counts as CSV");

  // common train/ablate options
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed_override;

  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--config", config_path, "Run configuration file")
      ->required();
  train_cmd->add_option("--seed", seed_override, "Override the config seed");
  train_cmd->add_option("--out", out_dir, "Override the output directory");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a trained model");
  std::string model_dir, data_file, eval_out;
  bool group = false;
  eval_cmd->add_option("--model", model_dir, "Training output directory")
      ->required();
  eval_cmd->add_option("--data", data_file, "Labeled dataset TSV")->required();
  eval_cmd->add_flag("--group", group, "Group the report by dialect");
  eval_cmd->add_option("--out", eval_out, "Report directory (default: model dir)");

  auto* predict_cmd = app.add_subcommand("predict", "Predict labels for text");
  std::string predict_text, predict_in;
  predict_cmd->add_option("--model", model_dir, "Training output directory")
      ->required();
  auto* text_opt = predict_cmd->add_option("--text", predict_text, "One tweet");
  predict_cmd->add_option("--in", predict_in, "File with one tweet per line")
      ->excludes(text_opt);

  auto* ablate_cmd = app.add_subcommand(
      "ablate", "Train with and without hashtag segmentation");
  ablate_cmd->add_option("--config", config_path, "Run configuration file")
      ->required();
  ablate_cmd->add_option("--seed", seed_override, "Override the config seed");
  ablate_cmd->add_option("--out", out_dir, "Override the output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (stats_cmd->parsed()) return cmd_stats(stats_files, stats_csv);
    if (train_cmd->parsed()) {
      return cmd_train(load_cli_config(config_path, seed_override, out_dir));
    }
    if (eval_cmd->parsed()) return cmd_eval(model_dir, data_file, group, eval_out);
    if (predict_cmd->parsed()) {
      if (text_opt->count() == 0 && predict_in.empty()) {
        std::cerr << "predict: provide --text or --in\n";
        return 2;
      }
      return cmd_predict(model_dir, predict_text, predict_in,
                         text_opt->count() > 0);
    }
    if (ablate_cmd->parsed()) {
      return cmd_ablate(load_cli_config(config_path, seed_override, out_dir));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
