// Transformer-decoder attractor calculation, speaker counting, FiLM.
#pragma once

#include "septda/blocks.hpp"

namespace septda {

// Decoder layer: masked self-attention (skipped in the first layer),
// cross-attention over the mixture context, feed-forward; residual + LN
// after each sub-module.
template <class S>
struct TdaLayer {
  bool has_self = true;
  Attention<S> self_attn;
  LayerNorm<S> ln_self;
  Attention<S> cross;
  LayerNorm<S> ln_cross;
  FeedForward<S> ffn;
  LayerNorm<S> ln_ffn;

  void init(Rng& rng, int dim, int heads, int expansion, bool with_self) {
    has_self = with_self;
    if (has_self) {
      self_attn.init(rng, dim, heads, false);
      ln_self.init(dim);
    }
    cross.init(rng, dim, heads, false);
    ln_cross.init(dim);
    ffn.init(rng, dim, expansion);
    ln_ffn.init(dim);
  }

  // q: (1, C1, D); ctx: (1, T', D); mask: causal (C1, C1)
  Tensor<S> forward(const Tensor<S>& q, const Tensor<S>& ctx, const Tensor<S>& mask) const {
    Tensor<S> y = q;
    if (has_self) y = ln_self(add(y, self_attn.forward(y, y, mask)));
    y = ln_cross(add(y, cross.forward(y, ctx, Tensor<S>())));
    return ln_ffn(add(y, ffn(y)));
  }

  void visit(const std::string& p, const ParamVisitor<S>& f) {
    if (has_self) {
      self_attn.visit(p + ".self", f);
      ln_self.visit(p + ".ln_self", f);
    }
    cross.visit(p + ".cross", f);
    ln_cross.visit(p + ".ln_cross", f);
    ffn.visit(p + ".ffn", f);
    ln_ffn.visit(p + ".ln_ffn", f);
  }
};

template <class S>
struct AttractorSet {
  Tensor<S> attractors;       // (C+1, D)
  Tensor<S> existence_logits; // (C+1)
  std::vector<double> probs;  // sigmoid of logits
};

template <class S>
struct TdaModule {
  std::vector<TdaLayer<S>> layers;
  Tensor<S> queries;  // (C_max+1, D), shared prefix across mixture sizes
  Linear<S> existence;
  int max_speakers = 0;

  void init(Rng& rng, int dim, int num_layers, int heads, int expansion, int c_max) {
    max_speakers = c_max;
    layers.resize(static_cast<std::size_t>(num_layers));
    for (int i = 0; i < num_layers; ++i)
      layers[static_cast<std::size_t>(i)].init(rng, dim, heads, expansion, i > 0);
    queries = make_param_normal<S>(rng, {c_max + 1, dim}, 0.0, 0.02);
    existence.init(rng, dim, 1);
  }

  // context: (T', D); uses the first C+1 query rows.
  AttractorSet<S> forward(const Tensor<S>& context, int c) const {
    if (c < 1 || c > max_speakers)
      throw std::invalid_argument("tda: speaker count out of range");
    const int c1 = c + 1;
    const int dim = context.dim(1);
    auto q = reshape(slice0(queries, 0, c1), {1, c1, dim});
    auto ctx = reshape(context, {1, context.dim(0), dim});
    Tensor<S> mask({c1, c1}, S(0));
    for (int i = 0; i < c1; ++i)
      for (int j = i + 1; j < c1; ++j)
        mask.data()[static_cast<std::size_t>(i) * c1 + j] =
            -std::numeric_limits<S>::infinity();
    Tensor<S> y = q;
    for (const auto& layer : layers) y = layer.forward(y, ctx, mask);
    AttractorSet<S> out;
    out.attractors = reshape(y, {c1, dim});
    out.existence_logits = reshape(existence(out.attractors), {c1});
    out.probs.resize(static_cast<std::size_t>(c1));
    for (int i = 0; i < c1; ++i) {
      double l = static_cast<double>(out.existence_logits.data()[static_cast<std::size_t>(i)]);
      out.probs[static_cast<std::size_t>(i)] =
          l >= 0 ? 1.0 / (1.0 + std::exp(-l)) : std::exp(l) / (1.0 + std::exp(l));
    }
    return out;
  }

  void visit(const std::string& p, const ParamVisitor<S>& f) {
    f(p + ".queries", queries);
    for (std::size_t i = 0; i < layers.size(); ++i)
      layers[i].visit(p + ".layer." + std::to_string(i), f);
    existence.visit(p + ".existence", f);
  }
};

// Leading run of probabilities > 0.5, capped at c_max. Zero is a valid
// result; the caller decides how to report it.
inline int count_speakers(const std::vector<double>& probs, int c_max) {
  int n = 0;
  for (double p : probs) {
    if (p <= 0.5) break;
    ++n;
    if (n == c_max) break;
  }
  return n;
}

// FiLM conditioning: V[c] = scale(a_c) * U + shift(a_c), broadcast over K x S.
template <class S>
struct Film {
  Linear<S> scale, shift;

  void init(Rng& rng, int dim) {
    scale.init(rng, dim, dim);
    shift.init(rng, dim, dim);
  }

  // u: (K, S, D); attractors: (C, D) -> (C, K, S, D)
  Tensor<S> forward(const Tensor<S>& u, const Tensor<S>& attractors) const {
    const int c = attractors.dim(0);
    const int d = attractors.dim(1);
    auto s = reshape(scale(attractors), {c, 1, 1, d});
    auto t = reshape(shift(attractors), {c, 1, 1, d});
    return add(mul(s, u), t);
  }

  void visit(const std::string& p, const ParamVisitor<S>& f) {
    scale.visit(p + ".scale", f);
    shift.visit(p + ".shift", f);
  }
};

// Mean binary cross-entropy of the existence logits against [1, ..., 1, 0].
template <class S>
Tensor<S> attractor_existence_loss(const Tensor<S>& logits) {
  std::vector<S> targets(static_cast<std::size_t>(logits.size()), S(1));
  targets.back() = S(0);
  return bce_with_logits(logits, targets);
}

}  // namespace septda
