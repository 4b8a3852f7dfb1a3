// Waveform encoder/decoder and chunk segmentation.
#pragma once

#include "septda/ops.hpp"

namespace septda {

// ceil(T / hop) == ceil(2T / L) for hop = L/2
inline int encoded_length(std::int64_t t, int hop) {
  return static_cast<int>((t + hop - 1) / hop);
}

inline int chunk_hop(int k) { return (k + 1) / 2; }

// smallest S with hop*(S-1) + K >= t_prime
inline int chunk_count(int t_prime, int k) {
  const int hop = chunk_hop(k);
  if (t_prime <= k) return 1;
  return static_cast<int>((t_prime - k + hop - 1) / hop) + 1;
}

template <class S>
struct ChunkTensor {
  Tensor<S> chunks;         // (K, S, D)
  int original_length = 0;  // T', for the inverse
  int hop = 0;
};

// x: (T) waveform; w: (L, D_e); b: (D_e). 1-D convolution with kernel L and
// stride L/2, zero-padded at the tail so the output has exactly ceil(2T/L)
// frames, followed by GELU.
template <class S>
Tensor<S> encode_frames(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b) {
  if (x.size() < 1) throw std::invalid_argument("encode: empty signal");
  const int L = w.dim(0);
  const int hop = L / 2;
  const std::int64_t T = x.size();
  const int frames = encoded_length(T, hop);
  std::vector<std::int64_t> idx(static_cast<std::size_t>(frames) * L);
  for (int i = 0; i < frames; ++i)
    for (int j = 0; j < L; ++j) {
      std::int64_t t = static_cast<std::int64_t>(i) * hop + j;
      idx[static_cast<std::size_t>(i) * L + j] = t < T ? t : -1;
    }
  auto windows = reshape(gather_rows(reshape(x, {static_cast<int>(T), 1}), std::move(idx)),
                         {frames, L});
  return gelu(affine(windows, w, b));
}

// z: (T', D_e); w: (D_e, L); b: scalar (1). Transposed 1-D convolution with
// kernel L, stride L/2, one output channel, trimmed to exactly t_samples.
template <class S>
Tensor<S> decode_frames(const Tensor<S>& z, const Tensor<S>& w, const Tensor<S>& b,
                        int t_samples) {
  if (z.ndim() != 2 || z.dim(1) != w.dim(0))
    throw std::invalid_argument("decode: channel mismatch");
  const int hop = w.dim(1) / 2;
  auto taps = matmul(z, w);  // (T', L)
  auto y = scatter_overlap(taps, hop, t_samples);
  return add(y, b);
}

// frames: (T', D) -> overlapping chunks (K, S, D), zero-padded tail.
template <class S>
ChunkTensor<S> segment(const Tensor<S>& frames, int k) {
  if (k < 2) throw std::invalid_argument("segment: K must be >= 2");
  if (frames.ndim() != 2 || frames.dim(0) < 1)
    throw std::invalid_argument("segment: empty frame sequence");
  const int t_prime = frames.dim(0);
  const int hop = chunk_hop(k);
  const int s_count = chunk_count(t_prime, k);
  std::vector<std::int64_t> idx(static_cast<std::size_t>(k) * s_count);
  for (int kk = 0; kk < k; ++kk)
    for (int s = 0; s < s_count; ++s) {
      std::int64_t t = static_cast<std::int64_t>(s) * hop + kk;
      idx[static_cast<std::size_t>(kk) * s_count + s] = t < t_prime ? t : -1;
    }
  ChunkTensor<S> out;
  out.chunks = reshape(gather_rows(frames, std::move(idx)), {k, s_count, frames.dim(1)});
  out.original_length = t_prime;
  out.hop = hop;
  return out;
}

// Inverse of segment (count-normalized overlap-add).
template <class S>
Tensor<S> overlap_add(const ChunkTensor<S>& ct) {
  const int k = ct.chunks.dim(0);
  const int s_count = ct.chunks.dim(1);
  if (static_cast<std::int64_t>(ct.hop) * (s_count - 1) + k < ct.original_length)
    throw std::invalid_argument("overlap_add: geometry mismatch");
  return overlap_add(ct.chunks, ct.hop, ct.original_length);
}

}  // namespace septda
