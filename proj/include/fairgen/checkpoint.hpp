#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fairgen/error.hpp"
#include "fairgen/mat.hpp"
#include "fairgen/sentiment_head.hpp"
#include "fairgen/transformer.hpp"
#include "fairgen/vocab.hpp"

namespace fairgen {

// Checkpoint container: an 8-byte magic, a format version, a JSON header
// (kind, config, vocab, tensor directory, provenance), then the raw tensor
// payloads as little-endian doubles in directory order. Host byte order is
// assumed little-endian (x86-64 / AArch64).
inline constexpr char kCheckpointMagic[8] = {'F', 'G', 'E', 'N', 'C', 'K', 'P', 'T'};
inline constexpr uint32_t kCheckpointVersion = 1;

namespace detail {

inline void write_exact(std::ofstream& out, const void* p, size_t n, const std::string& path) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  require(out.good(), errc::io_error, "write failed: " + path);
}

inline void read_exact(std::ifstream& in, void* p, size_t n, const std::string& path) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  require(in.gcount() == static_cast<std::streamsize>(n), errc::bad_checkpoint,
          "truncated checkpoint: " + path);
}

inline void save_container(const std::string& path, const nlohmann::json& header,
                           const std::vector<std::pair<std::string, const Mat*>>& tensors) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), errc::io_error, "cannot open for writing: " + path);
  write_exact(out, kCheckpointMagic, sizeof(kCheckpointMagic), path);
  write_exact(out, &kCheckpointVersion, sizeof(kCheckpointVersion), path);
  const std::string hs = header.dump();
  const uint64_t hlen = hs.size();
  write_exact(out, &hlen, sizeof(hlen), path);
  write_exact(out, hs.data(), hs.size(), path);
  for (const auto& [name, mat] : tensors)
    write_exact(out, mat->data.data(), mat->data.size() * sizeof(double), path);
  out.close();
  require(out.good(), errc::io_error, "close failed: " + path);
}

inline nlohmann::json load_header(std::ifstream& in, const std::string& path,
                                  const std::string& expected_kind) {
  require(in.good(), errc::io_error, "cannot open checkpoint: " + path);
  char magic[8];
  read_exact(in, magic, sizeof(magic), path);
  require(std::memcmp(magic, kCheckpointMagic, sizeof(magic)) == 0, errc::bad_checkpoint,
          "bad magic in " + path);
  uint32_t version = 0;
  read_exact(in, &version, sizeof(version), path);
  require(version == kCheckpointVersion, errc::bad_checkpoint,
          "unsupported checkpoint version " + std::to_string(version) + " in " + path);
  uint64_t hlen = 0;
  read_exact(in, &hlen, sizeof(hlen), path);
  require(hlen < (1ull << 30), errc::bad_checkpoint, "implausible header length in " + path);
  std::string hs(hlen, '\0');
  read_exact(in, hs.data(), hlen, path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(hs);
  } catch (const nlohmann::json::exception& e) {
    raise(errc::bad_checkpoint, std::string("unparseable checkpoint header: ") + e.what());
  }
  require(header.value("kind", "") == expected_kind, errc::bad_checkpoint,
          "checkpoint kind mismatch in " + path + " (want " + expected_kind + ")");
  return header;
}

inline void load_tensors(std::ifstream& in, const std::string& path, const nlohmann::json& dir,
                         std::vector<std::pair<std::string, Mat*>> tensors) {
  require(dir.is_array() && dir.size() == tensors.size(), errc::bad_checkpoint,
          "tensor directory size mismatch in " + path);
  for (size_t i = 0; i < tensors.size(); ++i) {
    const nlohmann::json& e = dir[i];
    require(e.value("name", "") == tensors[i].first, errc::bad_checkpoint,
            "tensor name mismatch at index " + std::to_string(i) + " in " + path);
    Mat* mat = tensors[i].second;
    require(e.value("rows", -1) == mat->rows && e.value("cols", -1) == mat->cols,
            errc::bad_checkpoint, "tensor shape mismatch for " + tensors[i].first + " in " + path);
    read_exact(in, mat->data.data(), mat->data.size() * sizeof(double), path);
    require(mat->all_finite(), errc::bad_checkpoint,
            "non-finite values in tensor " + tensors[i].first + " of " + path);
  }
}

inline nlohmann::json tensor_directory(
    const std::vector<std::pair<std::string, const Mat*>>& tensors) {
  nlohmann::json dir = nlohmann::json::array();
  for (const auto& [name, mat] : tensors)
    dir.push_back({{"name", name}, {"rows", mat->rows}, {"cols", mat->cols}});
  return dir;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Language model checkpoints
// ---------------------------------------------------------------------------

inline void save_lm_checkpoint(const std::string& path, const LmModel& model, const Vocab& vocab,
                               const nlohmann::json& provenance = nlohmann::json::object()) {
  nlohmann::json header;
  header["kind"] = "lm";
  header["config"] = {{"layers", model.cfg.layers}, {"d_model", model.cfg.d_model},
                      {"heads", model.cfg.heads},   {"context", model.cfg.context},
                      {"vocab", model.cfg.vocab}};
  header["vocab"] = vocab.tokens();
  auto tensors = model.named_tensors();
  header["tensors"] = detail::tensor_directory(tensors);
  header["provenance"] = provenance;
  detail::save_container(path, header, tensors);
}

struct LoadedLm {
  LmModel model;
  Vocab vocab;
  nlohmann::json provenance;
};

inline LoadedLm load_lm_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  nlohmann::json header = detail::load_header(in, path, "lm");
  const nlohmann::json& c = header.at("config");
  LmConfig cfg;
  cfg.layers = c.at("layers").get<int>();
  cfg.d_model = c.at("d_model").get<int>();
  cfg.heads = c.at("heads").get<int>();
  cfg.context = c.at("context").get<int>();
  cfg.vocab = c.at("vocab").get<int>();
  cfg.validate();
  LoadedLm out{LmModel::init(cfg, 0), Vocab::from_tokens(header.at("vocab")),
               header.value("provenance", nlohmann::json::object())};
  require(static_cast<int>(out.vocab.size()) == cfg.vocab, errc::bad_checkpoint,
          "vocab size disagrees with config in " + path);
  detail::load_tensors(in, path, header.at("tensors"), out.model.named_tensors());
  return out;
}

// ---------------------------------------------------------------------------
// Sentiment head checkpoints (sidecar)
// ---------------------------------------------------------------------------

inline void save_head_checkpoint(const std::string& path, const SentimentHead& head,
                                 const nlohmann::json& provenance = nlohmann::json::object()) {
  nlohmann::json header;
  header["kind"] = "head";
  header["config"] = {{"d_in", head.d_in}, {"hidden", SentimentHead::kHidden}};
  auto tensors = head.named_tensors();
  header["tensors"] = detail::tensor_directory(tensors);
  header["provenance"] = provenance;
  detail::save_container(path, header, tensors);
}

struct LoadedHead {
  SentimentHead head;
  nlohmann::json provenance;
};

inline LoadedHead load_head_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  nlohmann::json header = detail::load_header(in, path, "head");
  const int d_in = header.at("config").at("d_in").get<int>();
  require(header.at("config").at("hidden").get<int>() == SentimentHead::kHidden,
          errc::bad_checkpoint, "unsupported head hidden width in " + path);
  LoadedHead out{SentimentHead::init(d_in, 0),
                 header.value("provenance", nlohmann::json::object())};
  detail::load_tensors(in, path, header.at("tensors"), out.head.named_tensors());
  return out;
}

}  // namespace fairgen
