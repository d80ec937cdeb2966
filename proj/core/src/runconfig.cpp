#include "tweetsent/runconfig.hpp"

#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

namespace tweetsent {

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

std::string double_str(double d) {
  std::ostringstream out;
  out << std::setprecision(17) << d;
  return out.str();
}

}  // namespace

RunConfig RunConfig::from_stream(std::istream& in) {
  RunConfig cfg;

  std::map<std::string, std::function<void(const std::string&)>> setters;
  auto str_key = [&](const char* key, std::string& field) {
    setters[key] = [&field](const std::string& v) { field = v; };
  };
  auto int_key = [&](const char* key, int& field) {
    setters[key] = [&field, key](const std::string& v) {
      try {
        field = std::stoi(v);
      } catch (const std::exception&) {
        throw ConfigError(std::string("key '") + key + "': bad integer '" + v + "'");
      }
    };
  };
  auto double_key = [&](const char* key, double& field) {
    setters[key] = [&field, key](const std::string& v) {
      try {
        field = std::stod(v);
      } catch (const std::exception&) {
        throw ConfigError(std::string("key '") + key + "': bad number '" + v + "'");
      }
    };
  };
  auto bool_key = [&](const char* key, bool& field) {
    setters[key] = [&field, key](const std::string& v) {
      field = parse_bool(v, key);
    };
  };

  str_key("train_file", cfg.train_file);
  str_key("dev_file", cfg.dev_file);
  str_key("lexicon_es", cfg.lexicon_es);
  str_key("lexicon_en", cfg.lexicon_en);
  str_key("bilingual", cfg.bilingual);
  str_key("out_dir", cfg.out_dir);
  int_key("seq_len", cfg.seq_len);
  int_key("embed_dim", cfg.embed_dim);
  int_key("hidden1", cfg.hidden1);
  int_key("hidden2", cfg.hidden2);
  int_key("n_classes", cfg.n_classes);
  double_key("dropout", cfg.dropout);
  double_key("recurrent_dropout", cfg.recurrent_dropout);
  double_key("l2_attn_w", cfg.l2_attn_w);
  double_key("l2_attn_b", cfg.l2_attn_b);
  double_key("ratio", cfg.ratio);
  double_key("lr", cfg.lr);
  int_key("batch_size", cfg.batch_size);
  int_key("max_epochs", cfg.max_epochs);
  int_key("min_freq", cfg.min_freq);
  int_key("max_vocab", cfg.max_vocab);
  bool_key("segment_hashtags", cfg.segment_hashtags);
  bool_key("use_class_weights", cfg.use_class_weights);
  bool_key("record_timing", cfg.record_timing);
  setters["seed"] = [&cfg](const std::string& v) {
    try {
      cfg.seed = std::stoull(v);
    } catch (const std::exception&) {
      throw ConfigError("key 'seed': bad integer '" + v + "'");
    }
  };

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected key=value");
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    auto it = setters.find(key);
    if (it == setters.end()) {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" +
                        key + "'");
    }
    it->second(value);
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return from_stream(in);
}

void RunConfig::save(std::ostream& out) const {
  out << "train_file=" << train_file << '\n';
  out << "dev_file=" << dev_file << '\n';
  out << "lexicon_es=" << lexicon_es << '\n';
  out << "lexicon_en=" << lexicon_en << '\n';
  out << "bilingual=" << bilingual << '\n';
  out << "out_dir=" << out_dir << '\n';
  out << "seq_len=" << seq_len << '\n';
  out << "embed_dim=" << embed_dim << '\n';
  out << "hidden1=" << hidden1 << '\n';
  out << "hidden2=" << hidden2 << '\n';
  out << "n_classes=" << n_classes << '\n';
  out << "dropout=" << double_str(dropout) << '\n';
  out << "recurrent_dropout=" << double_str(recurrent_dropout) << '\n';
  out << "l2_attn_w=" << double_str(l2_attn_w) << '\n';
  out << "l2_attn_b=" << double_str(l2_attn_b) << '\n';
  out << "seed=" << seed << '\n';
  out << "ratio=" << double_str(ratio) << '\n';
  out << "lr=" << double_str(lr) << '\n';
  out << "batch_size=" << batch_size << '\n';
  out << "max_epochs=" << max_epochs << '\n';
  out << "min_freq=" << min_freq << '\n';
  out << "max_vocab=" << max_vocab << '\n';
  out << "segment_hashtags=" << bool_str(segment_hashtags) << '\n';
  out << "use_class_weights=" << bool_str(use_class_weights) << '\n';
  out << "record_timing=" << bool_str(record_timing) << '\n';
}

void RunConfig::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config '" + path + "'");
  save(out);
}

ModelConfig RunConfig::model_config() const {
  ModelConfig cfg;
  cfg.seq_len = seq_len;
  cfg.embed_dim = embed_dim;
  cfg.hidden1 = hidden1;
  cfg.hidden2 = hidden2;
  cfg.n_classes = n_classes;
  cfg.dropout = dropout;
  cfg.recurrent_dropout = recurrent_dropout;
  cfg.l2_attn_w = l2_attn_w;
  cfg.l2_attn_b = l2_attn_b;
  cfg.seed = seed;
  return cfg;
}

TrainOptions RunConfig::train_options() const {
  TrainOptions opts;
  opts.ratio = ratio;
  opts.batch_size = batch_size;
  opts.max_epochs = max_epochs;
  opts.segment_hashtags = segment_hashtags;
  opts.min_freq = min_freq;
  opts.max_vocab = max_vocab;
  opts.use_class_weights = use_class_weights;
  opts.adam.lr = lr;
  return opts;
}

FeatureResources RunConfig::load_resources() const {
  FeatureResources res;
  if (!lexicon_es.empty()) res.lexicon_es = load_lexicon_file(lexicon_es, "es");
  if (!lexicon_en.empty()) res.lexicon_en = load_lexicon_file(lexicon_en, "en");
  if (!bilingual.empty()) res.bilingual = load_bilingual_file(bilingual);
  return res;
}

}  // namespace tweetsent
