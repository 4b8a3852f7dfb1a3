// LSTM-attention block and its dual-path / triple-path compositions.
#pragma once

#include "septda/nn.hpp"

namespace septda {

// LayerNorm -> BLSTM -> linear 2H -> D
template <class S>
struct LstmModule {
  LayerNorm<S> norm;
  Blstm<S> rnn;
  Linear<S> proj;

  void init(Rng& rng, int dim, int hidden) {
    norm.init(dim);
    rnn.init(rng, dim, hidden);
    proj.init(rng, 2 * hidden, dim);
  }
  Tensor<S> operator()(const Tensor<S>& x) const { return proj(rnn(norm(x))); }
  void visit(const std::string& p, const ParamVisitor<S>& f) {
    norm.visit(p + ".norm", f);
    rnn.visit(p + ".lstm", f);
    proj.visit(p + ".proj", f);
  }
};

// Fig-style sequence block: each sub-module is followed by a residual
// connection and a layer normalization. LSTM and attention sub-modules can
// be dropped for the ablation variants.
template <class S>
struct LstmAttentionBlock {
  bool use_lstm = true;
  bool use_attention = true;
  LstmModule<S> lstm;
  LayerNorm<S> ln_lstm;
  Attention<S> attn;
  LayerNorm<S> ln_attn;
  FeedForward<S> ffn;
  LayerNorm<S> ln_ffn;

  void init(Rng& rng, int dim, int hidden, int heads, int expansion, int t5_buckets,
            int t5_max_distance, bool with_lstm = true, bool with_attention = true) {
    use_lstm = with_lstm;
    use_attention = with_attention;
    if (use_lstm) {
      lstm.init(rng, dim, hidden);
      ln_lstm.init(dim);
    }
    if (use_attention) {
      attn.init(rng, dim, heads, true, t5_buckets, t5_max_distance);
      ln_attn.init(dim);
    }
    ffn.init(rng, dim, expansion);
    ln_ffn.init(dim);
  }

  // x: (B, T, D)
  Tensor<S> operator()(const Tensor<S>& x) const {
    Tensor<S> y = x;
    if (use_lstm) y = ln_lstm(add(y, lstm(y)));
    if (use_attention) y = ln_attn(add(y, attn.forward(y)));
    return ln_ffn(add(y, ffn(y)));
  }

  void visit(const std::string& p, const ParamVisitor<S>& f) {
    if (use_lstm) {
      lstm.visit(p + ".lstm", f);
      ln_lstm.visit(p + ".ln_lstm", f);
    }
    if (use_attention) {
      attn.visit(p + ".attn", f);
      ln_attn.visit(p + ".ln_attn", f);
    }
    ffn.visit(p + ".ffn", f);
    ln_ffn.visit(p + ".ln_ffn", f);
  }
};

// Plain transformer layer for the inter-speaker path: self-attention and
// feed-forward with residual+LN, no positional information.
template <class S>
struct TransformerLayer {
  Attention<S> attn;
  LayerNorm<S> ln_attn;
  FeedForward<S> ffn;
  LayerNorm<S> ln_ffn;

  void init(Rng& rng, int dim, int heads, int expansion) {
    attn.init(rng, dim, heads, false);
    ln_attn.init(dim);
    ffn.init(rng, dim, expansion);
    ln_ffn.init(dim);
  }
  Tensor<S> operator()(const Tensor<S>& x) const {
    auto y = ln_attn(add(x, attn.forward(x)));
    return ln_ffn(add(y, ffn(y)));
  }
  void visit(const std::string& p, const ParamVisitor<S>& f) {
    attn.visit(p + ".attn", f);
    ln_attn.visit(p + ".ln_attn", f);
    ffn.visit(p + ".ffn", f);
    ln_ffn.visit(p + ".ln_ffn", f);
  }
};

// Intra-chunk then inter-chunk processing; the inter output is added to the
// block input and layer-normalized.
template <class S>
struct DualPathBlock {
  LstmAttentionBlock<S> intra, inter;
  LayerNorm<S> out_norm;

  void init(Rng& rng, int dim, int hidden, int heads, int expansion, int t5_buckets,
            int t5_max_distance, bool with_lstm = true, bool with_attention = true) {
    intra.init(rng, dim, hidden, heads, expansion, t5_buckets, t5_max_distance, with_lstm,
               with_attention);
    inter.init(rng, dim, hidden, heads, expansion, t5_buckets, t5_max_distance, with_lstm,
               with_attention);
    out_norm.init(dim);
  }

  // u: (K, S, D)
  Tensor<S> operator()(const Tensor<S>& u) const {
    const int K = u.dim(0), Sc = u.dim(1), D = u.dim(2);
    // intra: sequences of length K, one per chunk s
    auto u1 = permute(intra(permute(u, {1, 0, 2})), {1, 0, 2});
    // inter: sequences of length S, one per in-chunk position k
    auto u2 = inter(u1);
    (void)K;
    (void)Sc;
    (void)D;
    return out_norm(add(u2, u));
  }

  void visit(const std::string& p, const ParamVisitor<S>& f) {
    intra.visit(p + ".intra", f);
    inter.visit(p + ".inter", f);
    out_norm.visit(p + ".norm", f);
  }
};

// Dual-path plus an inter-speaker transformer; residual from the block input.
template <class S>
struct TriplePathBlock {
  LstmAttentionBlock<S> intra, inter;
  TransformerLayer<S> speaker;
  LayerNorm<S> out_norm;

  void init(Rng& rng, int dim, int hidden, int heads, int expansion, int t5_buckets,
            int t5_max_distance) {
    intra.init(rng, dim, hidden, heads, expansion, t5_buckets, t5_max_distance);
    inter.init(rng, dim, hidden, heads, expansion, t5_buckets, t5_max_distance);
    speaker.init(rng, dim, heads, expansion);
    out_norm.init(dim);
  }

  // v: (C, K, S, D)
  Tensor<S> operator()(const Tensor<S>& v) const {
    const int C = v.dim(0), K = v.dim(1), Sc = v.dim(2), D = v.dim(3);
    auto v1 = reshape(intra(reshape(permute(v, {0, 2, 1, 3}), {C * Sc, K, D})), {C, Sc, K, D});
    v1 = permute(v1, {0, 2, 1, 3});  // back to (C, K, S, D)
    auto v2 = reshape(inter(reshape(v1, {C * K, Sc, D})), {C, K, Sc, D});
    auto v3 = reshape(speaker(reshape(permute(v2, {1, 2, 0, 3}), {K * Sc, C, D})), {K, Sc, C, D});
    v3 = permute(v3, {2, 0, 1, 3});
    return out_norm(add(v3, v));
  }

  void visit(const std::string& p, const ParamVisitor<S>& f) {
    intra.visit(p + ".intra", f);
    inter.visit(p + ".inter", f);
    speaker.visit(p + ".speaker", f);
    out_norm.visit(p + ".norm", f);
  }
};

}  // namespace septda
