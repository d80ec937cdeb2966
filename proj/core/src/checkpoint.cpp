#include "tweetsent/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace tweetsent {

namespace {

constexpr char kMagic[8] = {'T', 'W', 'S', 'E', 'N', 'T', '0', '1'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw CheckpointError("truncated checkpoint");
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw CheckpointError("truncated checkpoint");
  return v;
}

nlohmann::json config_to_json(const ModelConfig& cfg) {
  return {{"vocab_size", cfg.vocab_size},
          {"seq_len", cfg.seq_len},
          {"embed_dim", cfg.embed_dim},
          {"hidden1", cfg.hidden1},
          {"hidden2", cfg.hidden2},
          {"n_feat", cfg.n_feat},
          {"n_classes", cfg.n_classes},
          {"dropout", cfg.dropout},
          {"recurrent_dropout", cfg.recurrent_dropout},
          {"l2_attn_w", cfg.l2_attn_w},
          {"l2_attn_b", cfg.l2_attn_b},
          {"seed", cfg.seed}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.vocab_size = j.at("vocab_size").get<int>();
  cfg.seq_len = j.at("seq_len").get<int>();
  cfg.embed_dim = j.at("embed_dim").get<int>();
  cfg.hidden1 = j.at("hidden1").get<int>();
  cfg.hidden2 = j.at("hidden2").get<int>();
  cfg.n_feat = j.at("n_feat").get<int>();
  cfg.n_classes = j.at("n_classes").get<int>();
  cfg.dropout = j.at("dropout").get<double>();
  cfg.recurrent_dropout = j.at("recurrent_dropout").get<double>();
  cfg.l2_attn_w = j.at("l2_attn_w").get<double>();
  cfg.l2_attn_b = j.at("l2_attn_b").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

// Row-major value streams regardless of Eigen's internal layout.
void write_tensor(std::ostream& out, const NamedTensor& t) {
  write_u32(out, static_cast<std::uint32_t>(t.name.size()));
  out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
  if (t.mat) {
    write_u32(out, 2);
    write_u64(out, static_cast<std::uint64_t>(t.mat->rows()));
    write_u64(out, static_cast<std::uint64_t>(t.mat->cols()));
    for (Eigen::Index r = 0; r < t.mat->rows(); ++r) {
      for (Eigen::Index c = 0; c < t.mat->cols(); ++c) {
        const double v = (*t.mat)(r, c);
        out.write(reinterpret_cast<const char*>(&v), sizeof v);
      }
    }
  } else {
    write_u32(out, 1);
    write_u64(out, static_cast<std::uint64_t>(t.vec->size()));
    out.write(reinterpret_cast<const char*>(t.vec->data()),
              static_cast<std::streamsize>(sizeof(double) * t.vec->size()));
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelState& state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write '" + path + "'");

  out.write(kMagic, sizeof kMagic);
  write_u32(out, kVersion);

  nlohmann::json manifest = {{"format_version", kVersion},
                             {"seed", state.config.seed},
                             {"config", config_to_json(state.config)}};
  const std::string m = manifest.dump();
  write_u32(out, static_cast<std::uint32_t>(m.size()));
  out.write(m.data(), static_cast<std::streamsize>(m.size()));

  auto tensors = state_tensors(const_cast<ModelState&>(state));
  write_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) write_tensor(out, t);

  if (!out) throw CheckpointError("write failed for '" + path + "'");
}

ModelState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open '" + path + "'");

  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw CheckpointError("bad magic; not a checkpoint file");
  }
  const std::uint32_t version = read_u32(in);
  if (version != kVersion) {
    throw CheckpointError("unsupported checkpoint version " +
                          std::to_string(version));
  }

  const std::uint32_t manifest_len = read_u32(in);
  std::string manifest_str(manifest_len, '\0');
  in.read(manifest_str.data(), manifest_len);
  if (!in) throw CheckpointError("truncated manifest");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(manifest_str);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad manifest: ") + e.what());
  }
  const ModelConfig cfg = config_from_json(manifest.at("config"));
  cfg.validate();

  ModelState state;
  state.config = cfg;
  state.params = ModelParams::zeros(cfg);
  state.bn_run_mean = Vec::Zero(cfg.embed_dim);
  state.bn_run_var = Vec::Ones(cfg.embed_dim);
  state.feat_mean = Vec::Zero(cfg.n_feat);
  state.feat_std = Vec::Ones(cfg.n_feat);

  std::map<std::string, NamedTensor> by_name;
  for (auto& t : state_tensors(state)) by_name.emplace(t.name, t);

  const std::uint32_t count = read_u32(in);
  std::map<std::string, bool> filled;
  for (std::uint32_t a = 0; a < count; ++a) {
    const std::uint32_t name_len = read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const std::uint32_t rank = read_u32(in);
    std::vector<std::uint64_t> dims(rank);
    for (auto& d : dims) d = read_u64(in);

    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw CheckpointError("unknown array '" + name + "'");
    }
    NamedTensor& t = it->second;
    if (t.mat) {
      if (rank != 2 || dims[0] != static_cast<std::uint64_t>(t.mat->rows()) ||
          dims[1] != static_cast<std::uint64_t>(t.mat->cols())) {
        throw CheckpointError("shape mismatch for '" + name + "'");
      }
      for (Eigen::Index r = 0; r < t.mat->rows(); ++r) {
        for (Eigen::Index c = 0; c < t.mat->cols(); ++c) {
          double v;
          in.read(reinterpret_cast<char*>(&v), sizeof v);
          (*t.mat)(r, c) = v;
        }
      }
    } else {
      if (rank != 1 || dims[0] != static_cast<std::uint64_t>(t.vec->size())) {
        throw CheckpointError("shape mismatch for '" + name + "'");
      }
      in.read(reinterpret_cast<char*>(t.vec->data()),
              static_cast<std::streamsize>(sizeof(double) * t.vec->size()));
    }
    if (!in) throw CheckpointError("truncated array '" + name + "'");
    filled[name] = true;
  }
  if (filled.size() != by_name.size()) {
    throw CheckpointError("checkpoint is missing arrays");
  }
  return state;
}

}  // namespace tweetsent
