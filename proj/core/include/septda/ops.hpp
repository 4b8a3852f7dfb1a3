// Differentiable operations on Tensor.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "septda/tensor.hpp"

namespace septda {

namespace detail {

inline std::vector<int> broadcast_shape(const std::vector<int>& a, const std::vector<int>& b) {
  std::size_t nd = std::max(a.size(), b.size());
  std::vector<int> out(nd);
  for (std::size_t i = 0; i < nd; ++i) {
    int da = i < nd - a.size() ? 1 : a[i - (nd - a.size())];
    int db = i < nd - b.size() ? 1 : b[i - (nd - b.size())];
    if (da != db && da != 1 && db != 1)
      throw std::invalid_argument("broadcast: incompatible shapes");
    out[i] = std::max(da, db);
  }
  return out;
}

// Row-major strides of `shape` aligned into `out_shape`, 0 on broadcast axes.
inline std::vector<std::int64_t> effective_strides(const std::vector<int>& shape,
                                                   const std::vector<int>& out_shape) {
  std::vector<std::int64_t> st(out_shape.size(), 0);
  std::int64_t s = 1;
  std::size_t off = out_shape.size() - shape.size();
  for (std::size_t i = shape.size(); i-- > 0;) {
    if (shape[i] != 1) st[i + off] = s;
    s *= shape[i];
  }
  return st;
}

// Walks the broadcast output space, yielding flat offsets into both operands.
template <class S, class F>
void broadcast_walk(const std::vector<int>& out_shape, const std::vector<std::int64_t>& sa,
                    const std::vector<std::int64_t>& sb, F&& f) {
  const int nd = static_cast<int>(out_shape.size());
  const std::int64_t total = shape_numel(out_shape);
  std::vector<int> idx(static_cast<std::size_t>(nd), 0);
  std::int64_t oa = 0, ob = 0;
  for (std::int64_t flat = 0; flat < total; ++flat) {
    f(flat, oa, ob);
    for (int d = nd - 1; d >= 0; --d) {
      ++idx[d];
      oa += sa[d];
      ob += sb[d];
      if (idx[d] < out_shape[d]) break;
      idx[d] = 0;
      oa -= sa[d] * out_shape[d];
      ob -= sb[d] * out_shape[d];
    }
  }
}

template <class S, class FwdF, class DaF, class DbF>
Tensor<S> binary_bc(const Tensor<S>& a, const Tensor<S>& b, FwdF fwd, DaF dfa, DbF dfb) {
  const auto& sa_shape = a.shape();
  const auto& sb_shape = b.shape();
  if (sa_shape == sb_shape) {
    std::vector<S> out(a.data().size());
    const S* pa = a.data().data();
    const S* pb = b.data().data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(pa[i], pb[i]);
    return make_node<S>(
        sa_shape, std::move(out), {a, b}, [a, b, dfa, dfb](TensorImpl<S>& self) mutable {
          const S* g = self.grad.data();
          if (a.requires_grad()) {
            a.impl()->ensure_grad();
            S* ga = a.grad().data();
            const S* pa = a.data().data();
            const S* pb = b.data().data();
            for (std::size_t i = 0; i < self.grad.size(); ++i)
              ga[i] += dfa(g[i], pa[i], pb[i]);
          }
          if (b.requires_grad()) {
            b.impl()->ensure_grad();
            S* gb = b.grad().data();
            const S* pa = a.data().data();
            const S* pb = b.data().data();
            for (std::size_t i = 0; i < self.grad.size(); ++i)
              gb[i] += dfb(g[i], pa[i], pb[i]);
          }
        });
  }
  auto out_shape = broadcast_shape(sa_shape, sb_shape);
  auto stra = effective_strides(sa_shape, out_shape);
  auto strb = effective_strides(sb_shape, out_shape);
  std::vector<S> out(static_cast<std::size_t>(shape_numel(out_shape)));
  {
    const S* pa = a.data().data();
    const S* pb = b.data().data();
    broadcast_walk<S>(out_shape, stra, strb,
                      [&](std::int64_t flat, std::int64_t oa, std::int64_t ob) {
                        out[flat] = fwd(pa[oa], pb[ob]);
                      });
  }
  return make_node<S>(
      out_shape, std::move(out), {a, b},
      [a, b, out_shape, stra, strb, dfa, dfb](TensorImpl<S>& self) mutable {
        const S* g = self.grad.data();
        const S* pa = a.data().data();
        const S* pb = b.data().data();
        bool need_a = a.requires_grad();
        bool need_b = b.requires_grad();
        if (need_a) a.impl()->ensure_grad();
        if (need_b) b.impl()->ensure_grad();
        S* ga = need_a ? a.grad().data() : nullptr;
        S* gb = need_b ? b.grad().data() : nullptr;
        broadcast_walk<S>(out_shape, stra, strb,
                          [&](std::int64_t flat, std::int64_t oa, std::int64_t ob) {
                            if (need_a) ga[oa] += dfa(g[flat], pa[oa], pb[ob]);
                            if (need_b) gb[ob] += dfb(g[flat], pa[oa], pb[ob]);
                          });
      });
}

template <class S, class FwdF, class DerF>
Tensor<S> unary_op(const Tensor<S>& x, FwdF fwd, DerF der) {
  std::vector<S> out(x.data().size());
  const S* px = x.data().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(px[i]);
  return make_node<S>(x.shape(), std::move(out), {x}, [x, der](TensorImpl<S>& self) mutable {
    if (!x.requires_grad()) return;
    x.impl()->ensure_grad();
    S* gx = x.grad().data();
    const S* px = x.data().data();
    const S* py = self.data.data();
    const S* g = self.grad.data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += der(g[i], px[i], py[i]);
  });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise

template <class S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  return detail::binary_bc<S>(
      a, b, [](S x, S y) { return x + y; }, [](S g, S, S) { return g; },
      [](S g, S, S) { return g; });
}

template <class S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
  return detail::binary_bc<S>(
      a, b, [](S x, S y) { return x - y; }, [](S g, S, S) { return g; },
      [](S g, S, S) { return -g; });
}

template <class S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  return detail::binary_bc<S>(
      a, b, [](S x, S y) { return x * y; }, [](S g, S, S y) { return g * y; },
      [](S g, S x, S) { return g * x; });
}

template <class S>
Tensor<S> div(const Tensor<S>& a, const Tensor<S>& b) {
  return detail::binary_bc<S>(
      a, b, [](S x, S y) { return x / y; }, [](S g, S, S y) { return g / y; },
      [](S g, S x, S y) { return -g * x / (y * y); });
}

template <class S>
Tensor<S> mul_scalar(const Tensor<S>& x, S c) {
  return detail::unary_op<S>(
      x, [c](S v) { return v * c; }, [c](S g, S, S) { return g * c; });
}

template <class S>
Tensor<S> add_scalar(const Tensor<S>& x, S c) {
  return detail::unary_op<S>(
      x, [c](S v) { return v + c; }, [](S g, S, S) { return g; });
}

template <class S>
Tensor<S> neg(const Tensor<S>& x) {
  return mul_scalar(x, S(-1));
}

template <class S>
Tensor<S> gelu(const Tensor<S>& x) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  constexpr double inv_sqrt2pi = 0.39894228040143267794;
  return detail::unary_op<S>(
      x,
      [](S v) {
        return static_cast<S>(0.5 * static_cast<double>(v) *
                              (1.0 + std::erf(static_cast<double>(v) * inv_sqrt2)));
      },
      [](S g, S v, S) {
        double d = static_cast<double>(v);
        double cdf = 0.5 * (1.0 + std::erf(d * inv_sqrt2));
        double pdf = inv_sqrt2pi * std::exp(-0.5 * d * d);
        return static_cast<S>(static_cast<double>(g) * (cdf + d * pdf));
      });
}

template <class S>
Tensor<S> sigmoid(const Tensor<S>& x) {
  return detail::unary_op<S>(
      x,
      [](S v) {
        return v >= S(0) ? S(1) / (S(1) + std::exp(-v))
                         : std::exp(v) / (S(1) + std::exp(v));
      },
      [](S g, S, S y) { return g * y * (S(1) - y); });
}

template <class S>
Tensor<S> tanh_t(const Tensor<S>& x) {
  return detail::unary_op<S>(
      x, [](S v) { return std::tanh(v); }, [](S g, S, S y) { return g * (S(1) - y * y); });
}

template <class S>
Tensor<S> log_t(const Tensor<S>& x) {
  return detail::unary_op<S>(
      x, [](S v) { return std::log(v); }, [](S g, S v, S) { return g / v; });
}

template <class S>
Tensor<S> log10_t(const Tensor<S>& x) {
  return mul_scalar(log_t(x), static_cast<S>(1.0 / 2.30258509299404568402));
}

// Gradient is zero wherever the value is clamped.
template <class S>
Tensor<S> clamp(const Tensor<S>& x, S lo, S hi) {
  return detail::unary_op<S>(
      x, [lo, hi](S v) { return std::min(hi, std::max(lo, v)); },
      [lo, hi](S g, S v, S) { return (v > lo && v < hi) ? g : S(0); });
}

template <class S>
Tensor<S> max_const(const Tensor<S>& x, S c) {
  return detail::unary_op<S>(
      x, [c](S v) { return std::max(v, c); }, [c](S g, S v, S) { return v > c ? g : S(0); });
}

// ---------------------------------------------------------------------------
// shape

template <class S>
Tensor<S> reshape(const Tensor<S>& x, std::vector<int> shape) {
  if (shape_numel(shape) != x.size()) throw std::invalid_argument("reshape: size mismatch");
  return detail::make_node<S>(std::move(shape), x.data(), {x}, [x](TensorImpl<S>& self) mutable {
    if (!x.requires_grad()) return;
    x.impl()->ensure_grad();
    S* gx = x.grad().data();
    const S* g = self.grad.data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += g[i];
  });
}

template <class S>
Tensor<S> permute(const Tensor<S>& x, const std::vector<int>& axes) {
  const int nd = x.ndim();
  if (static_cast<int>(axes.size()) != nd) throw std::invalid_argument("permute: rank mismatch");
  std::vector<int> out_shape(axes.size());
  for (int i = 0; i < nd; ++i) out_shape[i] = x.dim(axes[i]);
  // source strides arranged in output axis order
  std::vector<std::int64_t> src_stride(static_cast<std::size_t>(nd));
  {
    std::vector<std::int64_t> st(static_cast<std::size_t>(nd));
    std::int64_t s = 1;
    for (int i = nd; i-- > 0;) {
      st[i] = s;
      s *= x.dim(i);
    }
    for (int i = 0; i < nd; ++i) src_stride[i] = st[axes[i]];
  }
  std::vector<S> out(x.data().size());
  const S* px = x.data().data();
  std::vector<int> idx(static_cast<std::size_t>(nd), 0);
  std::int64_t off = 0;
  for (std::int64_t flat = 0; flat < x.size(); ++flat) {
    out[flat] = px[off];
    for (int d = nd - 1; d >= 0; --d) {
      ++idx[d];
      off += src_stride[d];
      if (idx[d] < out_shape[d]) break;
      idx[d] = 0;
      off -= src_stride[d] * out_shape[d];
    }
  }
  return detail::make_node<S>(
      out_shape, std::move(out), {x},
      [x, out_shape, src_stride, nd](TensorImpl<S>& self) mutable {
        if (!x.requires_grad()) return;
        x.impl()->ensure_grad();
        S* gx = x.grad().data();
        const S* g = self.grad.data();
        std::vector<int> idx(static_cast<std::size_t>(nd), 0);
        std::int64_t off = 0;
        for (std::int64_t flat = 0; flat < static_cast<std::int64_t>(self.grad.size()); ++flat) {
          gx[off] += g[flat];
          for (int d = nd - 1; d >= 0; --d) {
            ++idx[d];
            off += src_stride[d];
            if (idx[d] < out_shape[d]) break;
            idx[d] = 0;
            off -= src_stride[d] * out_shape[d];
          }
        }
      });
}

template <class S>
Tensor<S> slice0(const Tensor<S>& x, int start, int len) {
  if (start < 0 || len < 0 || start + len > x.dim(0))
    throw std::out_of_range("slice0: range out of bounds");
  std::int64_t row = x.size() / x.dim(0);
  std::vector<int> shape = x.shape();
  shape[0] = len;
  std::vector<S> out(x.data().begin() + start * row, x.data().begin() + (start + len) * row);
  return detail::make_node<S>(std::move(shape), std::move(out), {x},
                              [x, start, row](TensorImpl<S>& self) mutable {
                                if (!x.requires_grad()) return;
                                x.impl()->ensure_grad();
                                S* gx = x.grad().data() + start * row;
                                const S* g = self.grad.data();
                                for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += g[i];
                              });
}

template <class S>
Tensor<S> concat0(const std::vector<Tensor<S>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat0: empty");
  std::vector<int> shape = parts[0].shape();
  int total0 = 0;
  for (const auto& p : parts) {
    auto s = p.shape();
    s[0] = shape[0];
    if (s != shape) throw std::invalid_argument("concat0: trailing dims differ");
    total0 += p.dim(0);
  }
  shape[0] = total0;
  std::vector<S> out;
  out.reserve(static_cast<std::size_t>(shape_numel(shape)));
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  return detail::make_node<S>(std::move(shape), std::move(out), parts,
                              [parts](TensorImpl<S>& self) mutable {
                                const S* g = self.grad.data();
                                std::int64_t off = 0;
                                for (auto& p : parts) {
                                  if (p.requires_grad()) {
                                    p.impl()->ensure_grad();
                                    S* gp = p.grad().data();
                                    for (std::int64_t i = 0; i < p.size(); ++i) gp[i] += g[off + i];
                                  }
                                  off += p.size();
                                }
                              });
}

// ---------------------------------------------------------------------------
// reductions

template <class S>
Tensor<S> sum_all(const Tensor<S>& x) {
  S acc = 0;
  for (S v : x.data()) acc += v;
  return detail::make_node<S>({1}, std::vector<S>{acc}, {x}, [x](TensorImpl<S>& self) mutable {
    if (!x.requires_grad()) return;
    x.impl()->ensure_grad();
    S g = self.grad[0];
    for (auto& gv : x.grad()) gv += g;
  });
}

template <class S>
Tensor<S> mean_all(const Tensor<S>& x) {
  return mul_scalar(sum_all(x), static_cast<S>(1.0 / static_cast<double>(x.size())));
}

template <class S>
Tensor<S> dot(const Tensor<S>& a, const Tensor<S>& b) {
  return sum_all(mul(a, b));
}

// ---------------------------------------------------------------------------
// matmul: a is (..., m, k); b is (k, n) shared or (..., k, n) batch-congruent.
// transpose_b treats b as (n, k) / (..., n, k).

template <class S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b, bool transpose_b = false) {
  if (a.ndim() < 2 || b.ndim() < 2) throw std::invalid_argument("matmul: rank < 2");
  const int m = a.dim(a.ndim() - 2);
  const int k = a.dim(a.ndim() - 1);
  const int bk = transpose_b ? b.dim(b.ndim() - 1) : b.dim(b.ndim() - 2);
  const int n = transpose_b ? b.dim(b.ndim() - 2) : b.dim(b.ndim() - 1);
  if (bk != k) throw std::invalid_argument("matmul: inner dims differ");
  const bool shared_b = b.ndim() == 2;
  const std::int64_t batch = a.size() / (static_cast<std::int64_t>(m) * k);
  if (!shared_b) {
    std::vector<int> la(a.shape().begin(), a.shape().end() - 2);
    std::vector<int> lb(b.shape().begin(), b.shape().end() - 2);
    if (la != lb) throw std::invalid_argument("matmul: batch dims differ");
  }
  std::vector<int> out_shape = a.shape();
  out_shape.back() = n;
  std::vector<S> out(static_cast<std::size_t>(batch) * m * n);
  const S* pa = a.data().data();
  const S* pb = b.data().data();
  if (shared_b) {
    detail::gemm(false, transpose_b, static_cast<int>(batch * m), n, k, pa, pb, S(0),
                 out.data());
  } else {
    for (std::int64_t i = 0; i < batch; ++i)
      detail::gemm(false, transpose_b, m, n, k, pa + i * m * k,
                   pb + i * static_cast<std::int64_t>(k) * n, S(0), out.data() + i * m * n);
  }
  return detail::make_node<S>(
      std::move(out_shape), std::move(out), {a, b},
      [a, b, m, n, k, batch, shared_b, transpose_b](TensorImpl<S>& self) mutable {
        const S* g = self.grad.data();
        const S* pa = a.data().data();
        const S* pb = b.data().data();
        if (a.requires_grad()) {
          a.impl()->ensure_grad();
          S* ga = a.grad().data();
          if (shared_b) {
            // dA = dC * B^T  (or dC * B when b was transposed)
            detail::gemm(false, !transpose_b, static_cast<int>(batch * m), k, n, g, pb, S(1), ga);
          } else {
            for (std::int64_t i = 0; i < batch; ++i)
              detail::gemm(false, !transpose_b, m, k, n, g + i * m * n,
                           pb + i * static_cast<std::int64_t>(k) * n, S(1), ga + i * m * k);
          }
        }
        if (b.requires_grad()) {
          b.impl()->ensure_grad();
          S* gb = b.grad().data();
          if (shared_b) {
            if (!transpose_b)  // dB = A^T * dC
              detail::gemm(true, false, k, n, static_cast<int>(batch * m), pa, g, S(1), gb);
            else  // dB = dC^T * A
              detail::gemm(true, false, n, k, static_cast<int>(batch * m), g, pa, S(1), gb);
          } else {
            for (std::int64_t i = 0; i < batch; ++i) {
              if (!transpose_b)
                detail::gemm(true, false, k, n, m, pa + i * m * k, g + i * m * n, S(1),
                             gb + i * static_cast<std::int64_t>(k) * n);
              else
                detail::gemm(true, false, n, k, m, g + i * m * n, pa + i * m * k, S(1),
                             gb + i * static_cast<std::int64_t>(k) * n);
            }
          }
        }
      });
}

// x: (..., in); w: (in, out); b: (out) optional
template <class S>
Tensor<S> affine(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b) {
  auto y = matmul(x, w);
  if (b.defined()) y = add(y, b);
  return y;
}

// ---------------------------------------------------------------------------
// softmax over the last axis, numerically stabilized

template <class S>
Tensor<S> softmax_lastdim(const Tensor<S>& x) {
  const int n = x.dim(x.ndim() - 1);
  const std::int64_t rows = x.size() / n;
  std::vector<S> out(x.data().size());
  const S* px = x.data().data();
  for (std::int64_t r = 0; r < rows; ++r) {
    const S* row = px + r * n;
    S* orow = out.data() + r * n;
    S mx = row[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, row[i]);
    S sum = 0;
    for (int i = 0; i < n; ++i) {
      orow[i] = std::exp(row[i] - mx);
      sum += orow[i];
    }
    S inv = S(1) / sum;
    for (int i = 0; i < n; ++i) orow[i] *= inv;
  }
  return detail::make_node<S>(x.shape(), std::move(out), {x},
                              [x, n, rows](TensorImpl<S>& self) mutable {
                                if (!x.requires_grad()) return;
                                x.impl()->ensure_grad();
                                S* gx = x.grad().data();
                                const S* y = self.data.data();
                                const S* g = self.grad.data();
                                for (std::int64_t r = 0; r < rows; ++r) {
                                  const S* yr = y + r * n;
                                  const S* gr = g + r * n;
                                  S dotv = 0;
                                  for (int i = 0; i < n; ++i) dotv += gr[i] * yr[i];
                                  S* gxr = gx + r * n;
                                  for (int i = 0; i < n; ++i) gxr[i] += yr[i] * (gr[i] - dotv);
                                }
                              });
}

template <class S>
Tensor<S> softmax(const Tensor<S>& x, int axis) {
  if (axis < 0) axis += x.ndim();
  if (axis < 0 || axis >= x.ndim()) throw std::out_of_range("softmax: bad axis");
  if (axis == x.ndim() - 1) return softmax_lastdim(x);
  std::vector<int> fwd_axes, inv_axes(static_cast<std::size_t>(x.ndim()));
  for (int i = 0; i < x.ndim(); ++i)
    if (i != axis) fwd_axes.push_back(i);
  fwd_axes.push_back(axis);
  for (int i = 0; i < x.ndim(); ++i) inv_axes[fwd_axes[i]] = i;
  return permute(softmax_lastdim(permute(x, fwd_axes)), inv_axes);
}

// ---------------------------------------------------------------------------
// layer normalization over the last axis (population variance + eps, affine)

template <class S>
Tensor<S> layer_norm(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,
                     S eps = static_cast<S>(1e-5)) {
  const int n = x.dim(x.ndim() - 1);
  if (gamma.size() != n || beta.size() != n)
    throw std::invalid_argument("layer_norm: affine size mismatch");
  const std::int64_t rows = x.size() / n;
  std::vector<S> out(x.data().size());
  auto inv_std = std::make_shared<std::vector<S>>(static_cast<std::size_t>(rows));
  auto means = std::make_shared<std::vector<S>>(static_cast<std::size_t>(rows));
  const S* px = x.data().data();
  const S* pg = gamma.data().data();
  const S* pbt = beta.data().data();
  for (std::int64_t r = 0; r < rows; ++r) {
    const S* row = px + r * n;
    S mean = 0;
    for (int i = 0; i < n; ++i) mean += row[i];
    mean /= static_cast<S>(n);
    S var = 0;
    for (int i = 0; i < n; ++i) var += (row[i] - mean) * (row[i] - mean);
    var /= static_cast<S>(n);
    S istd = S(1) / std::sqrt(var + eps);
    (*means)[r] = mean;
    (*inv_std)[r] = istd;
    S* orow = out.data() + r * n;
    for (int i = 0; i < n; ++i) orow[i] = (row[i] - mean) * istd * pg[i] + pbt[i];
  }
  return detail::make_node<S>(
      x.shape(), std::move(out), {x, gamma, beta},
      [x, gamma, beta, n, rows, inv_std, means](TensorImpl<S>& self) mutable {
        const S* g = self.grad.data();
        const S* px = x.data().data();
        const S* pg = gamma.data().data();
        const bool need_x = x.requires_grad();
        if (need_x) x.impl()->ensure_grad();
        if (gamma.requires_grad()) gamma.impl()->ensure_grad();
        if (beta.requires_grad()) beta.impl()->ensure_grad();
        for (std::int64_t r = 0; r < rows; ++r) {
          const S* row = px + r * n;
          const S* gr = g + r * n;
          const S mean = (*means)[r];
          const S istd = (*inv_std)[r];
          if (gamma.requires_grad() || beta.requires_grad()) {
            for (int i = 0; i < n; ++i) {
              S xhat = (row[i] - mean) * istd;
              if (gamma.requires_grad()) gamma.grad()[i] += gr[i] * xhat;
              if (beta.requires_grad()) beta.grad()[i] += gr[i];
            }
          }
          if (need_x) {
            S sum_d = 0, sum_dx = 0;
            for (int i = 0; i < n; ++i) {
              S d = gr[i] * pg[i];
              S xhat = (row[i] - mean) * istd;
              sum_d += d;
              sum_dx += d * xhat;
            }
            sum_d /= static_cast<S>(n);
            sum_dx /= static_cast<S>(n);
            S* gx = x.grad().data() + r * n;
            for (int i = 0; i < n; ++i) {
              S d = gr[i] * pg[i];
              S xhat = (row[i] - mean) * istd;
              gx[i] += istd * (d - sum_d - xhat * sum_dx);
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// gather / scatter primitives used by conv, segmentation and overlap-add

// x: (R, C); idx entries in [-1, R), -1 yields a zero row.
template <class S>
Tensor<S> gather_rows(const Tensor<S>& x, std::vector<std::int64_t> idx) {
  if (x.ndim() != 2) throw std::invalid_argument("gather_rows: expects 2-D input");
  const int cols = x.dim(1);
  std::vector<S> out(idx.size() * static_cast<std::size_t>(cols), S(0));
  const S* px = x.data().data();
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0) continue;
    std::copy_n(px + idx[r] * cols, cols, out.data() + r * cols);
  }
  std::vector<int> shape{static_cast<int>(idx.size()), cols};
  return detail::make_node<S>(std::move(shape), std::move(out), {x},
                              [x, idx = std::move(idx), cols](TensorImpl<S>& self) mutable {
                                if (!x.requires_grad()) return;
                                x.impl()->ensure_grad();
                                S* gx = x.grad().data();
                                const S* g = self.grad.data();
                                for (std::size_t r = 0; r < idx.size(); ++r) {
                                  if (idx[r] < 0) continue;
                                  S* dst = gx + idx[r] * cols;
                                  const S* src = g + r * cols;
                                  for (int c = 0; c < cols; ++c) dst[c] += src[c];
                                }
                              });
}

// chunks: (..., K, S, D) -> (..., T, D); frames summed at original positions
// and divided by the per-position overlap count (pad region dropped).
template <class S>
Tensor<S> overlap_add(const Tensor<S>& chunks, int hop, int t_out) {
  if (chunks.ndim() < 3) throw std::invalid_argument("overlap_add: rank < 3");
  const int nd = chunks.ndim();
  const int K = chunks.dim(nd - 3);
  const int Sc = chunks.dim(nd - 2);
  const int D = chunks.dim(nd - 1);
  if (hop <= 0 || t_out <= 0) throw std::invalid_argument("overlap_add: bad geometry");
  if (static_cast<std::int64_t>(hop) * (Sc - 1) + K < t_out)
    throw std::invalid_argument("overlap_add: chunks do not cover the target length");
  auto counts = std::make_shared<std::vector<S>>(static_cast<std::size_t>(t_out), S(0));
  for (int s = 0; s < Sc; ++s)
    for (int k = 0; k < K; ++k) {
      std::int64_t t = static_cast<std::int64_t>(s) * hop + k;
      if (t < t_out) (*counts)[t] += S(1);
    }
  const std::int64_t batch = chunks.size() / (static_cast<std::int64_t>(K) * Sc * D);
  std::vector<int> out_shape(chunks.shape().begin(), chunks.shape().end() - 3);
  out_shape.push_back(t_out);
  out_shape.push_back(D);
  std::vector<S> out(static_cast<std::size_t>(batch) * t_out * D, S(0));
  const S* pc = chunks.data().data();
  for (std::int64_t b = 0; b < batch; ++b) {
    const S* cb = pc + b * K * Sc * D;
    S* ob = out.data() + b * t_out * D;
    for (int k = 0; k < K; ++k)
      for (int s = 0; s < Sc; ++s) {
        std::int64_t t = static_cast<std::int64_t>(s) * hop + k;
        if (t >= t_out) continue;
        const S* src = cb + (static_cast<std::int64_t>(k) * Sc + s) * D;
        S* dst = ob + t * D;
        for (int d = 0; d < D; ++d) dst[d] += src[d];
      }
    for (int t = 0; t < t_out; ++t) {
      S inv = S(1) / (*counts)[t];
      S* dst = ob + static_cast<std::int64_t>(t) * D;
      for (int d = 0; d < D; ++d) dst[d] *= inv;
    }
  }
  return detail::make_node<S>(
      std::move(out_shape), std::move(out), {chunks},
      [chunks, counts, hop, t_out, K, Sc, D, batch](TensorImpl<S>& self) mutable {
        if (!chunks.requires_grad()) return;
        chunks.impl()->ensure_grad();
        S* gc = chunks.grad().data();
        const S* g = self.grad.data();
        for (std::int64_t b = 0; b < batch; ++b) {
          S* cb = gc + b * K * Sc * D;
          const S* gb = g + b * static_cast<std::int64_t>(t_out) * D;
          for (int k = 0; k < K; ++k)
            for (int s = 0; s < Sc; ++s) {
              std::int64_t t = static_cast<std::int64_t>(s) * hop + k;
              if (t >= t_out) continue;
              S inv = S(1) / (*counts)[t];
              S* dst = cb + (static_cast<std::int64_t>(k) * Sc + s) * D;
              const S* src = gb + t * D;
              for (int d = 0; d < D; ++d) dst[d] += src[d] * inv;
            }
        }
      });
}

// p: (F, L) frame taps -> waveform (t_out): y[t] = sum over i*hop+j == t.
// This is the scatter half of a stride-hop transposed convolution.
template <class S>
Tensor<S> scatter_overlap(const Tensor<S>& p, int hop, int t_out) {
  if (p.ndim() != 2) throw std::invalid_argument("scatter_overlap: expects 2-D input");
  const int F = p.dim(0);
  const int L = p.dim(1);
  std::vector<S> out(static_cast<std::size_t>(t_out), S(0));
  const S* pp = p.data().data();
  for (int i = 0; i < F; ++i) {
    std::int64_t base = static_cast<std::int64_t>(i) * hop;
    const S* row = pp + static_cast<std::int64_t>(i) * L;
    for (int j = 0; j < L; ++j) {
      std::int64_t t = base + j;
      if (t < t_out) out[t] += row[j];
    }
  }
  return detail::make_node<S>({t_out}, std::move(out), {p},
                              [p, hop, t_out, F, L](TensorImpl<S>& self) mutable {
                                if (!p.requires_grad()) return;
                                p.impl()->ensure_grad();
                                S* gp = p.grad().data();
                                const S* g = self.grad.data();
                                for (int i = 0; i < F; ++i) {
                                  std::int64_t base = static_cast<std::int64_t>(i) * hop;
                                  S* row = gp + static_cast<std::int64_t>(i) * L;
                                  for (int j = 0; j < L; ++j) {
                                    std::int64_t t = base + j;
                                    if (t < t_out) row[j] += g[t];
                                  }
                                }
                              });
}

// ---------------------------------------------------------------------------
// stable binary cross-entropy from logits, mean over entries

template <class S>
Tensor<S> bce_with_logits(const Tensor<S>& logits, const std::vector<S>& targets) {
  if (static_cast<std::int64_t>(targets.size()) != logits.size())
    throw std::invalid_argument("bce_with_logits: target length mismatch");
  const std::int64_t n = logits.size();
  double acc = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    double l = static_cast<double>(logits.data()[i]);
    double t = static_cast<double>(targets[i]);
    acc += std::max(l, 0.0) - l * t + std::log1p(std::exp(-std::abs(l)));
  }
  acc /= static_cast<double>(n);
  return detail::make_node<S>(
      {1}, std::vector<S>{static_cast<S>(acc)}, {logits},
      [logits, targets, n](TensorImpl<S>& self) mutable {
        if (!logits.requires_grad()) return;
        logits.impl()->ensure_grad();
        S g = self.grad[0];
        for (std::int64_t i = 0; i < n; ++i) {
          double l = static_cast<double>(logits.data()[i]);
          double p = l >= 0 ? 1.0 / (1.0 + std::exp(-l)) : std::exp(l) / (1.0 + std::exp(l));
          logits.grad()[i] += g * static_cast<S>((p - targets[i]) / static_cast<double>(n));
        }
      });
}

}  // namespace septda
