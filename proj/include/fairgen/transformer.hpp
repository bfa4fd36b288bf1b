#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fairgen/error.hpp"
#include "fairgen/mat.hpp"
#include "fairgen/rng.hpp"
#include "fairgen/tape.hpp"
#include "fairgen/vocab.hpp"

namespace fairgen {

// ---------------------------------------------------------------------------
// Configuration and parameters
// ---------------------------------------------------------------------------

struct LmConfig {
  int layers = 2;
  int d_model = 64;
  int heads = 2;
  int context = 64;
  int vocab = 0;

  int head_dim() const { return d_model / heads; }

  void validate() const {
    require(layers >= 2, errc::invalid_config, "layers must be >= 2 (h-bar needs the last two)");
    require(d_model > 0 && heads > 0 && context > 0 && vocab > 0, errc::invalid_config,
            "all LmConfig dimensions must be positive");
    require(d_model % heads == 0, errc::invalid_config, "heads must divide d_model");
  }
};

struct LayerParams {
  Mat ln1_g, ln1_b;          // pre-attention layer norm
  Mat wq, bq, wk, bk, wv, bv;  // attention projections (d x d, biases 1 x d)
  Mat wo, bo;                // attention output projection
  Mat ln2_g, ln2_b;          // pre-MLP layer norm
  Mat w_up, b_up;            // d x 4d
  Mat w_down, b_down;        // 4d x d
};

// Decoder-only pre-norm transformer with learned positional embeddings and a
// separate (untied) output projection.
struct LmModel {
  LmConfig cfg;
  Mat tok_emb;   // vocab x d
  Mat pos_emb;   // context x d
  std::vector<LayerParams> layers;
  Mat lnf_g, lnf_b;  // final layer norm
  Mat w_out, b_out;  // d x vocab, 1 x vocab

  static LmModel init(const LmConfig& cfg, uint64_t seed) {
    cfg.validate();
    Rng rng(derive_seed(seed, 0x1a7e));
    const int d = cfg.d_model;
    const double s = 0.02;
    LmModel m;
    m.cfg = cfg;
    m.tok_emb = Mat::randn(cfg.vocab, d, s, rng);
    m.pos_emb = Mat::randn(cfg.context, d, s, rng);
    for (int l = 0; l < cfg.layers; ++l) {
      LayerParams p;
      p.ln1_g = Mat::full(1, d, 1.0);
      p.ln1_b = Mat::zeros(1, d);
      p.wq = Mat::randn(d, d, s, rng);
      p.bq = Mat::zeros(1, d);
      p.wk = Mat::randn(d, d, s, rng);
      p.bk = Mat::zeros(1, d);
      p.wv = Mat::randn(d, d, s, rng);
      p.bv = Mat::zeros(1, d);
      p.wo = Mat::randn(d, d, s, rng);
      p.bo = Mat::zeros(1, d);
      p.ln2_g = Mat::full(1, d, 1.0);
      p.ln2_b = Mat::zeros(1, d);
      p.w_up = Mat::randn(d, 4 * d, s, rng);
      p.b_up = Mat::zeros(1, 4 * d);
      p.w_down = Mat::randn(4 * d, d, s, rng);
      p.b_down = Mat::zeros(1, d);
      m.layers.push_back(std::move(p));
    }
    m.lnf_g = Mat::full(1, d, 1.0);
    m.lnf_b = Mat::zeros(1, d);
    m.w_out = Mat::randn(d, cfg.vocab, s, rng);
    m.b_out = Mat::zeros(1, cfg.vocab);
    return m;
  }

  // Stable name -> tensor directory; the single source of truth for the
  // optimizer, checkpoints, and gradient checks. Order is fixed.
  std::vector<std::pair<std::string, Mat*>> named_tensors() {
    std::vector<std::pair<std::string, Mat*>> out;
    out.emplace_back("tok_emb", &tok_emb);
    out.emplace_back("pos_emb", &pos_emb);
    for (size_t l = 0; l < layers.size(); ++l) {
      const std::string p = "layer" + std::to_string(l) + ".";
      LayerParams& q = layers[l];
      out.emplace_back(p + "ln1_g", &q.ln1_g);
      out.emplace_back(p + "ln1_b", &q.ln1_b);
      out.emplace_back(p + "wq", &q.wq);
      out.emplace_back(p + "bq", &q.bq);
      out.emplace_back(p + "wk", &q.wk);
      out.emplace_back(p + "bk", &q.bk);
      out.emplace_back(p + "wv", &q.wv);
      out.emplace_back(p + "bv", &q.bv);
      out.emplace_back(p + "wo", &q.wo);
      out.emplace_back(p + "bo", &q.bo);
      out.emplace_back(p + "ln2_g", &q.ln2_g);
      out.emplace_back(p + "ln2_b", &q.ln2_b);
      out.emplace_back(p + "w_up", &q.w_up);
      out.emplace_back(p + "b_up", &q.b_up);
      out.emplace_back(p + "w_down", &q.w_down);
      out.emplace_back(p + "b_down", &q.b_down);
    }
    out.emplace_back("lnf_g", &lnf_g);
    out.emplace_back("lnf_b", &lnf_b);
    out.emplace_back("w_out", &w_out);
    out.emplace_back("b_out", &b_out);
    return out;
  }

  std::vector<std::pair<std::string, const Mat*>> named_tensors() const {
    auto mut = const_cast<LmModel*>(this)->named_tensors();
    std::vector<std::pair<std::string, const Mat*>> out;
    out.reserve(mut.size());
    for (auto& [n, p] : mut) out.emplace_back(n, p);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Differentiable forward (training path)
// ---------------------------------------------------------------------------

// Parameter tensors injected into a tape, in named_tensors() order.
struct ParamNodes {
  std::vector<Tape::NodeId> ids;

  Tape::NodeId tok_emb() const { return ids[0]; }
  Tape::NodeId pos_emb() const { return ids[1]; }
  // Offsets of the 16 per-layer tensors within a layer block.
  enum : int { LN1G, LN1B, WQ, BQ, WK, BK, WV, BV, WO, BO, LN2G, LN2B, WUP, BUP, WDOWN, BDOWN };
  Tape::NodeId layer(int l, int which) const { return ids[2 + 16 * l + which]; }
  Tape::NodeId lnf_g(int layers) const { return ids[2 + 16 * layers]; }
  Tape::NodeId lnf_b(int layers) const { return ids[2 + 16 * layers + 1]; }
  Tape::NodeId w_out(int layers) const { return ids[2 + 16 * layers + 2]; }
  Tape::NodeId b_out(int layers) const { return ids[2 + 16 * layers + 3]; }
};

inline ParamNodes inject_params(Tape& tape, const LmModel& m) {
  ParamNodes pn;
  for (const auto& [name, mat] : m.named_tensors()) pn.ids.push_back(tape.input(*mat));
  return pn;
}

struct TapeForwardOut {
  std::vector<Tape::NodeId> block_out;  // per layer: T x d residual-stream node
  Tape::NodeId final_normed;            // after the final layer norm, T x d
  Tape::NodeId logits;                  // T x vocab
};

// Full-sequence differentiable forward pass over token ids.
inline TapeForwardOut lm_forward_tape(Tape& tape, const LmConfig& cfg, const ParamNodes& pn,
                                      std::span<const int> ids) {
  require(!ids.empty(), errc::empty_prefix, "forward over an empty token sequence");
  require(static_cast<int>(ids.size()) <= cfg.context, errc::prefix_too_long,
          "sequence length " + std::to_string(ids.size()) + " exceeds context " +
              std::to_string(cfg.context));
  const int T = static_cast<int>(ids.size());
  std::vector<int> positions(T);
  for (int t = 0; t < T; ++t) positions[t] = t;
  Tape::NodeId x = tape.add(tape.gather_rows(pn.tok_emb(), std::vector<int>(ids.begin(), ids.end())),
                            tape.gather_rows(pn.pos_emb(), positions));
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(cfg.head_dim()));
  TapeForwardOut out;
  for (int l = 0; l < cfg.layers; ++l) {
    Tape::NodeId a = tape.layer_norm(x, pn.layer(l, ParamNodes::LN1G), pn.layer(l, ParamNodes::LN1B));
    Tape::NodeId q = tape.affine(a, pn.layer(l, ParamNodes::WQ), pn.layer(l, ParamNodes::BQ));
    Tape::NodeId k = tape.affine(a, pn.layer(l, ParamNodes::WK), pn.layer(l, ParamNodes::BK));
    Tape::NodeId v = tape.affine(a, pn.layer(l, ParamNodes::WV), pn.layer(l, ParamNodes::BV));
    std::vector<Tape::NodeId> heads;
    for (int h = 0; h < cfg.heads; ++h) {
      const int c0 = h * cfg.head_dim();
      heads.push_back(tape.causal_attention(tape.col_slice(q, c0, cfg.head_dim()),
                                            tape.col_slice(k, c0, cfg.head_dim()),
                                            tape.col_slice(v, c0, cfg.head_dim()), att_scale));
    }
    Tape::NodeId att = tape.affine(tape.concat_cols(heads), pn.layer(l, ParamNodes::WO),
                                   pn.layer(l, ParamNodes::BO));
    x = tape.add(x, att);
    Tape::NodeId n2 = tape.layer_norm(x, pn.layer(l, ParamNodes::LN2G), pn.layer(l, ParamNodes::LN2B));
    Tape::NodeId mlp = tape.affine(
        tape.gelu(tape.affine(n2, pn.layer(l, ParamNodes::WUP), pn.layer(l, ParamNodes::BUP))),
        pn.layer(l, ParamNodes::WDOWN), pn.layer(l, ParamNodes::BDOWN));
    x = tape.add(x, mlp);
    out.block_out.push_back(x);
  }
  out.final_normed = tape.layer_norm(x, pn.lnf_g(cfg.layers), pn.lnf_b(cfg.layers));
  out.logits = tape.affine(out.final_normed, pn.w_out(cfg.layers), pn.b_out(cfg.layers));
  return out;
}

// h-bar on the tape: elementwise mean of the last two residual-stream block
// outputs at one position.
inline Tape::NodeId h_bar_tape(Tape& tape, const TapeForwardOut& f, int position) {
  const int L = static_cast<int>(f.block_out.size());
  return tape.average(tape.pick_row(f.block_out[L - 2], position),
                      tape.pick_row(f.block_out[L - 1], position));
}

// ---------------------------------------------------------------------------
// Plain inference path (no tape, KV cache)
// ---------------------------------------------------------------------------

// Per-layer hidden feature vectors h^(1)..h^(L) at each position.
struct HiddenStack {
  std::vector<Mat> h;  // layers entries, each T x d

  int layers() const { return static_cast<int>(h.size()); }
  int positions() const { return h.empty() ? 0 : h[0].rows; }
};

// Elementwise mean of h^(L-1) and h^(L) at a position.
inline std::vector<double> h_bar(const HiddenStack& stack, int position) {
  require(stack.layers() >= 2, errc::invalid_config, "h-bar needs at least two layers");
  require(position >= 0 && position < stack.positions(), errc::position_out_of_range,
          "h-bar position " + std::to_string(position) + " out of range");
  const Mat& a = stack.h[stack.layers() - 2];
  const Mat& b = stack.h[stack.layers() - 1];
  std::vector<double> out(a.cols);
  for (int c = 0; c < a.cols; ++c) out[c] = 0.5 * (a(position, c) + b(position, c));
  return out;
}

// Incremental decoder state: feeds one token at a time, caching per-layer
// keys/values. Model parameters are read-only; sessions over the same model
// may run concurrently.
class LmSession {
 public:
  explicit LmSession(const LmModel& model) : m_(model) {
    m_.cfg.validate();
    const int d = m_.cfg.d_model;
    k_cache_.assign(m_.cfg.layers, Mat(m_.cfg.context, d));
    v_cache_.assign(m_.cfg.layers, Mat(m_.cfg.context, d));
    block_rows_.assign(m_.cfg.layers, Mat(m_.cfg.context, d));
  }

  int position() const { return pos_; }

  // Feeds one token; returns the next-token logit row (1 x vocab).
  Mat step(int token) {
    require(pos_ < m_.cfg.context, errc::prefix_too_long,
            "sequence exceeds context length " + std::to_string(m_.cfg.context));
    require(token >= 0 && token < m_.cfg.vocab, errc::invalid_config, "token id out of range");
    const int d = m_.cfg.d_model;
    const int dh = m_.cfg.head_dim();
    const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));
    Mat x(1, d);
    for (int c = 0; c < d; ++c) x(0, c) = m_.tok_emb(token, c) + m_.pos_emb(pos_, c);
    for (int l = 0; l < m_.cfg.layers; ++l) {
      const LayerParams& p = m_.layers[l];
      Mat a = layer_norm_row(x, p.ln1_g, p.ln1_b);
      Mat q = affine_row(a, p.wq, p.bq);
      Mat k = affine_row(a, p.wk, p.bk);
      Mat v = affine_row(a, p.wv, p.bv);
      std::copy(k.row_ptr(0), k.row_ptr(0) + d, k_cache_[l].row_ptr(pos_));
      std::copy(v.row_ptr(0), v.row_ptr(0) + d, v_cache_[l].row_ptr(pos_));
      Mat att(1, d);
      for (int h = 0; h < m_.cfg.heads; ++h) {
        const int c0 = h * dh;
        // softmax over cached positions 0..pos_
        std::vector<double> score(pos_ + 1);
        double mx = -1e300;
        for (int u = 0; u <= pos_; ++u) {
          score[u] = att_scale * dot(q.row_ptr(0) + c0, k_cache_[l].row_ptr(u) + c0, dh);
          mx = std::max(mx, score[u]);
        }
        double z = 0.0;
        for (int u = 0; u <= pos_; ++u) {
          score[u] = std::exp(score[u] - mx);
          z += score[u];
        }
        for (int u = 0; u <= pos_; ++u) {
          const double w = score[u] / z;
          const double* vrow = v_cache_[l].row_ptr(u) + c0;
          double* arow = att.row_ptr(0) + c0;
          for (int c = 0; c < dh; ++c) arow[c] += w * vrow[c];
        }
      }
      Mat proj = affine_row(att, p.wo, p.bo);
      for (int c = 0; c < d; ++c) x(0, c) += proj(0, c);
      Mat n2 = layer_norm_row(x, p.ln2_g, p.ln2_b);
      Mat up = affine_row(n2, p.w_up, p.b_up);
      for (double& u : up.data) u *= normal_cdf(u);  // exact GELU
      Mat down = affine_row(up, p.w_down, p.b_down);
      for (int c = 0; c < d; ++c) x(0, c) += down(0, c);
      std::copy(x.row_ptr(0), x.row_ptr(0) + d, block_rows_[l].row_ptr(pos_));
    }
    Mat y = layer_norm_row(x, m_.lnf_g, m_.lnf_b);
    Mat logits = affine_row(y, m_.w_out, m_.b_out);
    ++pos_;
    return logits;
  }

  // Residual-stream output of block l at an already-fed position.
  std::vector<double> block_output(int layer, int position) const {
    require(layer >= 0 && layer < m_.cfg.layers, errc::invalid_config, "layer out of range");
    require(position >= 0 && position < pos_, errc::position_out_of_range,
            "position not yet computed");
    const Mat& b = block_rows_[layer];
    return std::vector<double>(b.row_ptr(position), b.row_ptr(position) + b.cols);
  }

 private:
  static double normal_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }

  static Mat layer_norm_row(const Mat& x, const Mat& g, const Mat& b) {
    const int n = x.cols;
    Mat out(1, n);
    double mean = 0.0;
    for (int c = 0; c < n; ++c) mean += x(0, c);
    mean /= n;
    double var = 0.0;
    for (int c = 0; c < n; ++c) {
      const double dd = x(0, c) - mean;
      var += dd * dd;
    }
    var /= n;
    const double is = 1.0 / std::sqrt(var + 1e-5);
    for (int c = 0; c < n; ++c) out(0, c) = g(0, c) * (x(0, c) - mean) * is + b(0, c);
    return out;
  }

  static Mat affine_row(const Mat& x, const Mat& w, const Mat& b) {
    Mat out(1, w.cols);
    for (int k = 0; k < w.rows; ++k) {
      const double xv = x(0, k);
      if (xv == 0.0) continue;
      const double* wrow = w.row_ptr(k);
      for (int c = 0; c < w.cols; ++c) out(0, c) += xv * wrow[c];
    }
    for (int c = 0; c < w.cols; ++c) out(0, c) += b(0, c);
    return out;
  }

  const LmModel& m_;
  int pos_ = 0;
  std::vector<Mat> k_cache_, v_cache_;
  std::vector<Mat> block_rows_;
};

struct ForwardResult {
  HiddenStack stack;
  Mat logprobs;  // T x vocab, row t = log p(next token | ids[0..t])
};

// Whole-prefix forward on the plain path: hidden stack plus normalized
// next-token log-probabilities at every position.
inline ForwardResult lm_forward(const LmModel& m, std::span<const int> ids) {
  require(!ids.empty(), errc::empty_prefix, "forward over an empty prefix");
  require(static_cast<int>(ids.size()) <= m.cfg.context, errc::prefix_too_long,
          "prefix length " + std::to_string(ids.size()) + " exceeds context " +
              std::to_string(m.cfg.context));
  const int T = static_cast<int>(ids.size());
  LmSession sess(m);
  ForwardResult out;
  out.logprobs = Mat(T, m.cfg.vocab);
  for (int t = 0; t < T; ++t) {
    Mat logits = sess.step(ids[t]);
    // log softmax
    double mx = logits(0, 0);
    for (int c = 1; c < logits.cols; ++c) mx = std::max(mx, logits(0, c));
    double z = 0.0;
    for (int c = 0; c < logits.cols; ++c) z += std::exp(logits(0, c) - mx);
    const double lse = mx + std::log(z);
    for (int c = 0; c < logits.cols; ++c) out.logprobs(t, c) = logits(0, c) - lse;
  }
  out.stack.h.reserve(m.cfg.layers);
  for (int l = 0; l < m.cfg.layers; ++l) {
    Mat hl(T, m.cfg.d_model);
    for (int t = 0; t < T; ++t) {
      std::vector<double> row = sess.block_output(l, t);
      std::copy(row.begin(), row.end(), hl.row_ptr(t));
    }
    out.stack.h.push_back(std::move(hl));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sampling and perplexity
// ---------------------------------------------------------------------------

// Samples n continuations of a prefix. Each continuation j draws from its own
// RNG stream derive_seed(seed, j), so results are independent of evaluation
// order and of how continuations are distributed over threads. Stops at
// <eos> (not included in the returned sequence) or after max_tokens tokens.
// Temperature 0 selects the argmax (lowest id wins ties).
inline std::vector<std::vector<int>> sample_continuations(const LmModel& m,
                                                          std::span<const int> prefix, int n,
                                                          int max_tokens, double temperature,
                                                          uint64_t seed) {
  require(!prefix.empty(), errc::empty_prefix, "sampling from an empty prefix");
  require(n >= 0, errc::invalid_config, "negative sample count");
  require(max_tokens > 0, errc::invalid_config, "max_tokens must be positive");
  require(temperature >= 0.0, errc::invalid_config, "temperature must be >= 0");
  require(static_cast<int>(prefix.size()) <= m.cfg.context, errc::prefix_too_long,
          "prefix exceeds context length");
  std::vector<std::vector<int>> out;
  out.reserve(n);
  for (int j = 0; j < n; ++j) {
    Rng rng(derive_seed(seed, static_cast<uint64_t>(j)));
    LmSession sess(m);
    Mat logits;
    for (int id : prefix) logits = sess.step(id);
    std::vector<int> cont;
    for (int t = 0; t < max_tokens; ++t) {
      int next;
      if (temperature == 0.0) {
        next = 0;
        for (int c = 1; c < logits.cols; ++c)
          if (logits(0, c) > logits(0, next)) next = c;
      } else {
        std::vector<double> p(logits.cols);
        double mx = logits(0, 0);
        for (int c = 1; c < logits.cols; ++c) mx = std::max(mx, logits(0, c));
        double z = 0.0;
        for (int c = 0; c < logits.cols; ++c) {
          p[c] = std::exp((logits(0, c) - mx) / temperature);
          z += p[c];
        }
        for (double& x : p) x /= z;
        next = static_cast<int>(rng.categorical(p));
      }
      if (next == Vocab::kEos) break;
      cont.push_back(next);
      if (t + 1 >= max_tokens || sess.position() >= m.cfg.context) break;
      logits = sess.step(next);
    }
    out.push_back(std::move(cont));
  }
  return out;
}

// Perplexity over a corpus of id sequences: exp of the mean negative
// log-likelihood over every predicted token. Each sequence predicts its
// tokens 1..T-1 from the preceding context (callers prepend <bos> and append
// <eos>, so every word and the terminator are predicted).
inline double perplexity(const LmModel& m, const std::vector<std::vector<int>>& corpus) {
  double nll = 0.0;
  long count = 0;
  for (const std::vector<int>& ids : corpus) {
    if (ids.size() < 2) continue;
    ForwardResult f = lm_forward(m, ids);
    for (size_t t = 1; t < ids.size(); ++t) {
      nll -= f.logprobs(static_cast<int>(t) - 1, ids[t]);
      ++count;
    }
  }
  require(count > 0, errc::empty_corpus, "perplexity over a corpus with no predicted tokens");
  return std::exp(nll / count);
}

// Perplexity restricted to sequences containing at least one sensitive
// token of the given word set (PPL^s). `sensitive` holds the surface tokens;
// `words` holds each sequence's original words aligned with `corpus`.
inline double perplexity_subset(const LmModel& m, const std::vector<std::vector<int>>& corpus,
                                const std::vector<TokenSeq>& words,
                                const std::vector<std::string>& sensitive) {
  require(corpus.size() == words.size(), errc::invalid_config,
          "perplexity_subset: ids/words size mismatch");
  std::vector<std::vector<int>> subset;
  for (size_t i = 0; i < corpus.size(); ++i) {
    bool hit = false;
    for (const std::string& w : words[i]) {
      if (std::find(sensitive.begin(), sensitive.end(), w) != sensitive.end()) {
        hit = true;
        break;
      }
    }
    if (hit) subset.push_back(corpus[i]);
  }
  require(!subset.empty(), errc::no_sensitive_sequences,
          "no corpus sequence contains a sensitive token");
  return perplexity(m, subset);
}

}  // namespace fairgen
