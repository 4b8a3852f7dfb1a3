// Parameterized building blocks: linear, layer norm, multi-head attention
// with T5 relative-position bias, bidirectional LSTM, feed-forward.
#pragma once

#include <string>

#include "septda/ops.hpp"
#include "septda/random.hpp"

namespace septda {

template <class S>
using ParamVisitor = std::function<void(const std::string&, Tensor<S>&)>;

template <class S>
Tensor<S> make_param(Rng& rng, std::vector<int> shape, double lo, double hi) {
  std::vector<S> data(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& v : data) v = static_cast<S>(rng.uniform(lo, hi));
  return Tensor<S>(std::move(shape), std::move(data), true);
}

template <class S>
Tensor<S> make_param_normal(Rng& rng, std::vector<int> shape, double mean, double std) {
  std::vector<S> data(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& v : data) v = static_cast<S>(rng.normal(mean, std));
  return Tensor<S>(std::move(shape), std::move(data), true);
}

template <class S>
struct Linear {
  Tensor<S> w, b;

  void init(Rng& rng, int in, int out, bool bias = true) {
    double a = 1.0 / std::sqrt(static_cast<double>(in));
    w = make_param<S>(rng, {in, out}, -a, a);
    if (bias) b = make_param<S>(rng, {out}, -a, a);
  }
  Tensor<S> operator()(const Tensor<S>& x) const { return affine(x, w, b); }
  void visit(const std::string& p, const ParamVisitor<S>& f) {
    f(p + ".w", w);
    if (b.defined()) f(p + ".b", b);
  }
};

template <class S>
struct LayerNorm {
  Tensor<S> gamma, beta;

  void init(int dim) {
    gamma = Tensor<S>({dim}, S(1), true);
    beta = Tensor<S>({dim}, S(0), true);
  }
  Tensor<S> operator()(const Tensor<S>& x) const { return layer_norm(x, gamma, beta); }
  void visit(const std::string& p, const ParamVisitor<S>& f) {
    f(p + ".gamma", gamma);
    f(p + ".beta", beta);
  }
};

// ---------------------------------------------------------------------------
// T5 relative-position bucketing (bidirectional)

inline int relative_position_bucket(std::int64_t rel, int num_buckets, int max_distance) {
  int bucket = 0;
  const int half = num_buckets / 2;
  if (rel > 0) bucket += half;
  const std::int64_t ar = rel < 0 ? -rel : rel;
  const int max_exact = half / 2;
  if (ar < max_exact) {
    bucket += static_cast<int>(ar);
  } else {
    int v = max_exact +
            static_cast<int>(std::log(static_cast<double>(ar) / max_exact) /
                             std::log(static_cast<double>(max_distance) / max_exact) *
                             (half - max_exact));
    bucket += std::min(v, half - 1);
  }
  return bucket;
}

// table: (num_buckets, heads) -> per-head additive logits (heads, tq, tk)
template <class S>
Tensor<S> t5_bias(const Tensor<S>& table, int tq, int tk, int max_distance) {
  const int nb = table.dim(0);
  const int h = table.dim(1);
  auto buckets = std::make_shared<std::vector<int>>(static_cast<std::size_t>(tq) * tk);
  for (int i = 0; i < tq; ++i)
    for (int j = 0; j < tk; ++j)
      (*buckets)[static_cast<std::size_t>(i) * tk + j] =
          relative_position_bucket(j - i, nb, max_distance);
  std::vector<S> out(static_cast<std::size_t>(h) * tq * tk);
  const S* pt = table.data().data();
  for (int hd = 0; hd < h; ++hd)
    for (std::size_t ij = 0; ij < buckets->size(); ++ij)
      out[static_cast<std::size_t>(hd) * tq * tk + ij] = pt[(*buckets)[ij] * h + hd];
  return detail::make_node<S>(
      {h, tq, tk}, std::move(out), {table}, [table, buckets, h](TensorImpl<S>& self) mutable {
        if (!table.requires_grad()) return;
        table.impl()->ensure_grad();
        S* gt = table.grad().data();
        const S* g = self.grad.data();
        const std::size_t qk = buckets->size();
        for (int hd = 0; hd < h; ++hd)
          for (std::size_t ij = 0; ij < qk; ++ij)
            gt[(*buckets)[ij] * h + hd] += g[static_cast<std::size_t>(hd) * qk + ij];
      });
}

// ---------------------------------------------------------------------------
// multi-head attention; mask is an optional additive (tq, tk) tensor

template <class S>
struct Attention {
  Linear<S> q, k, v, o;
  Tensor<S> bias_table;  // undefined when relative-position bias is off
  int heads = 1;
  int max_distance = 128;

  void init(Rng& rng, int dim, int num_heads, bool use_t5 = false, int buckets = 32,
            int max_dist = 128) {
    if (dim % num_heads != 0) throw std::invalid_argument("attention: dim % heads != 0");
    heads = num_heads;
    max_distance = max_dist;
    q.init(rng, dim, dim);
    k.init(rng, dim, dim);
    v.init(rng, dim, dim);
    o.init(rng, dim, dim);
    if (use_t5) bias_table = Tensor<S>({buckets, num_heads}, S(0), true);
  }

  Tensor<S> forward(const Tensor<S>& x, const Tensor<S>& kv, const Tensor<S>& mask) const {
    const int B = x.dim(0), tq = x.dim(1), D = x.dim(2);
    const int tk = kv.dim(1);
    const int dh = D / heads;
    auto split = [&](const Tensor<S>& inp, const Linear<S>& proj, int t) {
      auto y = proj(reshape(inp, {inp.dim(0) * t, D}));
      return reshape(permute(reshape(y, {B, t, heads, dh}), {0, 2, 1, 3}), {B * heads, t, dh});
    };
    auto Q = split(x, q, tq);
    auto K = split(kv, k, tk);
    auto V = split(kv, v, tk);
    auto scores = mul_scalar(matmul(Q, K, true), static_cast<S>(1.0 / std::sqrt(double(dh))));
    if (bias_table.defined()) {
      auto bias = t5_bias(bias_table, tq, tk, max_distance);
      scores = reshape(add(reshape(scores, {B, heads, tq, tk}), bias), {B * heads, tq, tk});
    }
    if (mask.defined()) {
      if (mask.ndim() != 2 || mask.dim(0) != tq || mask.dim(1) != tk)
        throw std::invalid_argument("attention: mask shape mismatch");
      scores = add(scores, mask);
    }
    auto attn = softmax_lastdim(scores);
    auto ctx = matmul(attn, V);  // (B*heads, tq, dh)
    auto merged = reshape(permute(reshape(ctx, {B, heads, tq, dh}), {0, 2, 1, 3}), {B * tq, D});
    return reshape(o(merged), {B, tq, D});
  }

  Tensor<S> forward(const Tensor<S>& x) const { return forward(x, x, Tensor<S>()); }

  void visit(const std::string& p, const ParamVisitor<S>& f) {
    q.visit(p + ".q", f);
    k.visit(p + ".k", f);
    v.visit(p + ".v", f);
    o.visit(p + ".o", f);
    if (bias_table.defined()) f(p + ".bias_table", bias_table);
  }
};

// ---------------------------------------------------------------------------
// bidirectional LSTM, fused forward/backward (BPTT)

namespace detail {

template <class S>
struct LstmDirCache {
  std::vector<S> gates;  // (T, B, 4H) post-activation, step order
  std::vector<S> cells;  // (T, B, H)
  std::vector<S> hprev;  // (T, B, H) hidden state entering each step
};

// One direction over x-projected gates xw (B*T, 4H). Writes h into
// out(B,T,2H) at column offset `col`. Step s maps to time t = fwd ? s : T-1-s.
template <class S>
void lstm_dir_forward(const S* xw, const S* whh, int B, int T, int H, bool fwd, S* out,
                      int col, LstmDirCache<S>& cache) {
  const int G = 4 * H;
  cache.gates.assign(static_cast<std::size_t>(T) * B * G, S(0));
  cache.cells.assign(static_cast<std::size_t>(T) * B * H, S(0));
  cache.hprev.assign(static_cast<std::size_t>(T) * B * H, S(0));
  std::vector<S> h(static_cast<std::size_t>(B) * H, S(0));
  std::vector<S> c(static_cast<std::size_t>(B) * H, S(0));
  for (int s = 0; s < T; ++s) {
    const int t = fwd ? s : T - 1 - s;
    S* gt = cache.gates.data() + static_cast<std::size_t>(s) * B * G;
    // gate pre-activations: strided copy of the x projection, then + h*Whh
    for (int b = 0; b < B; ++b)
      std::copy_n(xw + (static_cast<std::int64_t>(b) * T + t) * G, G, gt + b * G);
    gemm(false, false, B, G, H, h.data(), whh, S(1), gt);
    std::copy(h.begin(), h.end(), cache.hprev.begin() + static_cast<std::size_t>(s) * B * H);
    S* ct = cache.cells.data() + static_cast<std::size_t>(s) * B * H;
    for (int b = 0; b < B; ++b) {
      S* gb = gt + b * G;
      S* cb = c.data() + b * H;
      S* hb = h.data() + b * H;
      for (int u = 0; u < H; ++u) {
        S gi = S(1) / (S(1) + std::exp(-gb[u]));
        S gf = S(1) / (S(1) + std::exp(-gb[H + u]));
        S gg = std::tanh(gb[2 * H + u]);
        S go = S(1) / (S(1) + std::exp(-gb[3 * H + u]));
        gb[u] = gi;
        gb[H + u] = gf;
        gb[2 * H + u] = gg;
        gb[3 * H + u] = go;
        cb[u] = gf * cb[u] + gi * gg;
        hb[u] = go * std::tanh(cb[u]);
        ct[b * H + u] = cb[u];
        out[(static_cast<std::int64_t>(b) * T + t) * 2 * H + col + u] = hb[u];
      }
    }
  }
}

template <class S>
void lstm_dir_backward(const S* gy, const S* whh, int B, int T, int H, bool fwd, int col,
                       const LstmDirCache<S>& cache, S* dxw, S* dwhh, S* dbias) {
  const int G = 4 * H;
  std::vector<S> dh(static_cast<std::size_t>(B) * H, S(0));
  std::vector<S> dc(static_cast<std::size_t>(B) * H, S(0));
  std::vector<S> dg(static_cast<std::size_t>(B) * G);
  for (int s = T - 1; s >= 0; --s) {
    const int t = fwd ? s : T - 1 - s;
    const S* gt = cache.gates.data() + static_cast<std::size_t>(s) * B * G;
    const S* ct = cache.cells.data() + static_cast<std::size_t>(s) * B * H;
    const S* cprev = s > 0 ? cache.cells.data() + static_cast<std::size_t>(s - 1) * B * H : nullptr;
    for (int b = 0; b < B; ++b) {
      const S* gb = gt + b * G;
      S* dgb = dg.data() + b * G;
      for (int u = 0; u < H; ++u) {
        S dhv = dh[b * H + u] + gy[(static_cast<std::int64_t>(b) * T + t) * 2 * H + col + u];
        S gi = gb[u], gf = gb[H + u], gg = gb[2 * H + u], go = gb[3 * H + u];
        S tc = std::tanh(ct[b * H + u]);
        S dct = dhv * go * (S(1) - tc * tc) + dc[b * H + u];
        S cp = cprev ? cprev[b * H + u] : S(0);
        dgb[u] = dct * gg * gi * (S(1) - gi);
        dgb[H + u] = dct * cp * gf * (S(1) - gf);
        dgb[2 * H + u] = dct * gi * (S(1) - gg * gg);
        dgb[3 * H + u] = dhv * tc * go * (S(1) - go);
        dc[b * H + u] = dct * gf;
      }
    }
    // dh_prev = dG * Whh^T ; dWhh += hprev^T * dG
    std::fill(dh.begin(), dh.end(), S(0));
    gemm(false, true, B, H, G, dg.data(), whh, S(1), dh.data());
    const S* hp = cache.hprev.data() + static_cast<std::size_t>(s) * B * H;
    gemm(true, false, H, G, B, hp, dg.data(), S(1), dwhh);
    for (int b = 0; b < B; ++b) {
      S* dst = dxw + (static_cast<std::int64_t>(b) * T + t) * G;
      const S* src = dg.data() + b * G;
      for (int u = 0; u < G; ++u) {
        dst[u] += src[u];
        dbias[u] += src[u];
      }
    }
  }
}

}  // namespace detail

// x: (B, T, D) -> (B, T, 2H). Weights per direction: wih (D,4H), whh (H,4H),
// bih/bhh (4H). Gate layout [i|f|g|o]; states start at zero.
template <class S>
Tensor<S> blstm(const Tensor<S>& x, const Tensor<S>& wih_f, const Tensor<S>& whh_f,
                const Tensor<S>& bih_f, const Tensor<S>& bhh_f, const Tensor<S>& wih_b,
                const Tensor<S>& whh_b, const Tensor<S>& bih_b, const Tensor<S>& bhh_b) {
  if (x.ndim() != 3) throw std::invalid_argument("blstm: expects (B,T,D)");
  const int B = x.dim(0), T = x.dim(1), D = x.dim(2);
  const int H = whh_f.dim(0);
  const int G = 4 * H;
  auto project = [&](const Tensor<S>& wih, const Tensor<S>& bih, const Tensor<S>& bhh) {
    std::vector<S> xw(static_cast<std::size_t>(B) * T * G);
    for (std::int64_t r = 0; r < static_cast<std::int64_t>(B) * T; ++r)
      for (int u = 0; u < G; ++u) xw[r * G + u] = bih.data()[u] + bhh.data()[u];
    detail::gemm(false, false, B * T, G, D, x.data().data(), wih.data().data(), S(1), xw.data());
    return xw;
  };
  auto cache_f = std::make_shared<detail::LstmDirCache<S>>();
  auto cache_b = std::make_shared<detail::LstmDirCache<S>>();
  auto xw_f = std::make_shared<std::vector<S>>(project(wih_f, bih_f, bhh_f));
  auto xw_b = std::make_shared<std::vector<S>>(project(wih_b, bih_b, bhh_b));
  std::vector<S> out(static_cast<std::size_t>(B) * T * 2 * H);
  detail::lstm_dir_forward(xw_f->data(), whh_f.data().data(), B, T, H, true, out.data(), 0,
                           *cache_f);
  detail::lstm_dir_forward(xw_b->data(), whh_b.data().data(), B, T, H, false, out.data(), H,
                           *cache_b);
  std::vector<Tensor<S>> parents{x,     wih_f, whh_f, bih_f, bhh_f,
                                 wih_b, whh_b, bih_b, bhh_b};
  return detail::make_node<S>(
      {B, T, 2 * H}, std::move(out), parents,
      [x, wih_f, whh_f, bih_f, bhh_f, wih_b, whh_b, bih_b, bhh_b, cache_f, cache_b, B, T, D, H,
       G](TensorImpl<S>& self) mutable {
        const S* g = self.grad.data();
        auto run_dir = [&](bool fwd, int col, const detail::LstmDirCache<S>& cache,
                           const Tensor<S>& wih, const Tensor<S>& whh, const Tensor<S>& bih,
                           const Tensor<S>& bhh) {
          std::vector<S> dxw(static_cast<std::size_t>(B) * T * G, S(0));
          std::vector<S> dwhh(static_cast<std::size_t>(H) * G, S(0));
          std::vector<S> dbias(static_cast<std::size_t>(G), S(0));
          detail::lstm_dir_backward(g, whh.data().data(), B, T, H, fwd, col, cache, dxw.data(),
                                    dwhh.data(), dbias.data());
          if (whh.requires_grad()) {
            whh.impl()->ensure_grad();
            for (std::size_t i = 0; i < dwhh.size(); ++i) whh.grad()[i] += dwhh[i];
          }
          if (bih.requires_grad()) {
            bih.impl()->ensure_grad();
            for (int u = 0; u < G; ++u) bih.grad()[u] += dbias[u];
          }
          if (bhh.requires_grad()) {
            bhh.impl()->ensure_grad();
            for (int u = 0; u < G; ++u) bhh.grad()[u] += dbias[u];
          }
          if (wih.requires_grad()) {
            wih.impl()->ensure_grad();
            detail::gemm(true, false, D, G, B * T, x.data().data(), dxw.data(), S(1),
                         wih.grad().data());
          }
          if (x.requires_grad()) {
            x.impl()->ensure_grad();
            detail::gemm(false, true, B * T, D, G, dxw.data(), wih.data().data(), S(1),
                         x.grad().data());
          }
        };
        run_dir(true, 0, *cache_f, wih_f, whh_f, bih_f, bhh_f);
        run_dir(false, H, *cache_b, wih_b, whh_b, bih_b, bhh_b);
      });
}

template <class S>
struct Blstm {
  Tensor<S> wih_f, whh_f, bih_f, bhh_f;
  Tensor<S> wih_b, whh_b, bih_b, bhh_b;
  int hidden = 0;

  void init(Rng& rng, int in, int H) {
    hidden = H;
    double a = 1.0 / std::sqrt(static_cast<double>(H));
    auto dir = [&](Tensor<S>& wih, Tensor<S>& whh, Tensor<S>& bih, Tensor<S>& bhh) {
      wih = make_param<S>(rng, {in, 4 * H}, -a, a);
      whh = make_param<S>(rng, {H, 4 * H}, -a, a);
      bih = make_param<S>(rng, {4 * H}, -a, a);
      bhh = make_param<S>(rng, {4 * H}, -a, a);
      // forget-gate bias starts at 1
      for (int u = 0; u < H; ++u) bih.data()[H + u] = S(1);
    };
    dir(wih_f, whh_f, bih_f, bhh_f);
    dir(wih_b, whh_b, bih_b, bhh_b);
  }

  Tensor<S> operator()(const Tensor<S>& x) const {
    return blstm(x, wih_f, whh_f, bih_f, bhh_f, wih_b, whh_b, bih_b, bhh_b);
  }

  void visit(const std::string& p, const ParamVisitor<S>& f) {
    f(p + ".w_ih_f", wih_f);
    f(p + ".w_hh_f", whh_f);
    f(p + ".b_ih_f", bih_f);
    f(p + ".b_hh_f", bhh_f);
    f(p + ".w_ih_b", wih_b);
    f(p + ".w_hh_b", whh_b);
    f(p + ".b_ih_b", bih_b);
    f(p + ".b_hh_b", bhh_b);
  }
};

// ---------------------------------------------------------------------------

template <class S>
struct FeedForward {
  Linear<S> in, out;

  void init(Rng& rng, int dim, int expansion) {
    in.init(rng, dim, dim * expansion);
    out.init(rng, dim * expansion, dim);
  }
  Tensor<S> operator()(const Tensor<S>& x) const { return out(gelu(in(x))); }
  void visit(const std::string& p, const ParamVisitor<S>& f) {
    in.visit(p + ".in", f);
    out.visit(p + ".out", f);
  }
};

}  // namespace septda
