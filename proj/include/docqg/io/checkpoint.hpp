#pragma once

// Checkpoint file: one line of JSON header, then every array as little-endian
// float32 in visiting order.
//
//   {"format":"docqg-checkpoint","version":1,"config":{...},"arrays":[...],
//    "checksum":"<fnv1a-64 of the data>","vocab_hash":"...","seed":7,...}\n
//   <data>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "docqg/corpus/vocab.hpp"
#include "docqg/model/params.hpp"

namespace docqg::io {

inline constexpr const char* kCheckpointFormat = "docqg-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Everything besides the weights.
struct CheckpointMeta {
  std::string vocab_hash;
  std::uint64_t seed = 0;
  nlohmann::json extra = nlohmann::json::object();  // training settings, free-form
};

inline nlohmann::json config_to_json(const model::ModelConfig& c) {
  return {{"vocab_size", c.vocab_size}, {"emb_dim", c.emb_dim}, {"hidden", c.hidden},
          {"stages", c.stages},         {"attention", c.attention}, {"masking", c.masking}};
}

inline model::ModelConfig config_from_json(const nlohmann::json& j) {
  model::ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.emb_dim = j.at("emb_dim").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.stages = j.at("stages").get<int>();
  c.attention = j.at("attention").get<bool>();
  c.masking = j.at("masking").get<bool>();
  c.validate();
  return c;
}

namespace detail {

inline std::string checksum_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(corpus::fnv1a(bytes)));
  return buf;
}

inline void put_f32(std::string& out, float v) {
  const auto u = std::bit_cast<std::uint32_t>(v);
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((u >> (8 * b)) & 0xffu));
}

inline float get_f32(const char* p) {
  std::uint32_t u = 0;
  for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[b])) << (8 * b);
  return std::bit_cast<float>(u);
}

}  // namespace detail

/// Serializes to bytes. Values are stored as float32, so double parameters
/// are rounded.
template <typename T>
std::string checkpoint_bytes(const model::ModelParams<T>& params, const CheckpointMeta& meta) {
  std::string data;
  nlohmann::json arrays = nlohmann::json::array();
  params.visit([&](const std::string& name, const nd::Array<T>& a, bool) {
    arrays.push_back({{"name", name}, {"shape", a.shape()}, {"offset", data.size() / 4}});
    for (T v : a.values()) detail::put_f32(data, static_cast<float>(v));
  });
  nlohmann::json header = {{"format", kCheckpointFormat},
                           {"version", kCheckpointVersion},
                           {"config", config_to_json(params.config)},
                           {"embedding_frozen", params.embedding_frozen},
                           {"arrays", arrays},
                           {"vocab_hash", meta.vocab_hash},
                           {"seed", meta.seed},
                           {"extra", meta.extra},
                           {"checksum", detail::checksum_hex(data)},
                           {"data_bytes", data.size()}};
  return header.dump() + '\n' + data;
}

template <typename T>
void save_checkpoint(const std::string& path, const model::ModelParams<T>& params,
                     const CheckpointMeta& meta) {
  const std::string bytes = checkpoint_bytes(params, meta);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing checkpoint " + path);
}

template <typename T>
model::ModelParams<T> parse_checkpoint(const std::string& bytes, CheckpointMeta* meta = nullptr) {
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw CheckpointError("checkpoint: missing header line");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(bytes.substr(0, nl));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint: unreadable header: ") + e.what());
  }
  try {
    if (h.at("format") != kCheckpointFormat) throw CheckpointError("checkpoint: unknown format");
    const int version = h.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw CheckpointError("checkpoint: unsupported version " + std::to_string(version) +
                            " (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    const std::string_view data(bytes.data() + nl + 1, bytes.size() - nl - 1);
    if (data.size() != h.at("data_bytes").get<std::size_t>()) {
      throw CheckpointError("checkpoint: data is " + std::to_string(data.size()) +
                            " bytes, header says " + h.at("data_bytes").dump());
    }
    if (detail::checksum_hex(data) != h.at("checksum").get<std::string>()) {
      throw CheckpointError("checkpoint: checksum mismatch (file corrupted)");
    }
    model::ModelConfig config;
    try {
      config = config_from_json(h.at("config"));
    } catch (const std::invalid_argument& e) {
      throw CheckpointError(std::string("checkpoint: bad config: ") + e.what());
    }
    auto params = model::init_params<T>(
        config, nd::Array<T>({config.vocab_size, config.emb_dim}), 0,
        h.at("embedding_frozen").get<bool>());
    const auto& arrays = h.at("arrays");
    std::size_t k = 0;
    params.visit([&](const std::string& name, nd::Array<T>& a, bool) {
      if (k >= arrays.size()) throw CheckpointError("checkpoint: missing array " + name);
      const auto& entry = arrays[k++];
      if (entry.at("name") != name) {
        throw CheckpointError("checkpoint: expected array " + name + ", found " +
                              entry.at("name").get<std::string>());
      }
      if (entry.at("shape").get<nd::Shape>() != a.shape()) {
        throw CheckpointError("checkpoint: shape mismatch for " + name);
      }
      const std::size_t off = entry.at("offset").get<std::size_t>();
      if ((off + a.size()) * 4 > data.size()) {
        throw CheckpointError("checkpoint: array " + name + " runs past the data");
      }
      for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = static_cast<T>(detail::get_f32(data.data() + 4 * (off + i)));
      }
    });
    if (k != arrays.size()) throw CheckpointError("checkpoint: unexpected extra arrays");
    if (meta) {
      meta->vocab_hash = h.at("vocab_hash").get<std::string>();
      meta->seed = h.at("seed").get<std::uint64_t>();
      meta->extra = h.value("extra", nlohmann::json::object());
    }
    return params;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint: malformed header: ") + e.what());
  }
}

template <typename T>
model::ModelParams<T> load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_checkpoint<T>(bytes, meta);
}

/// Rejects a vocabulary whose id assignment differs from training.
inline void check_vocab(const CheckpointMeta& meta, const corpus::Vocab& vocab) {
  if (meta.vocab_hash != vocab.hash()) {
    throw CheckpointError("checkpoint: vocabulary hash " + vocab.hash() +
                          " does not match the training vocabulary " + meta.vocab_hash);
  }
}

}  // namespace docqg::io
