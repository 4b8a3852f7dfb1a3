// SI-SDR, permutation-invariant assignment, multi-scale reconstruction loss.
#pragma once

#include <algorithm>
#include <numeric>

#include "septda/ops.hpp"
#include "septda/tda.hpp"

namespace septda {

inline constexpr double kSiSdrClampDb = 80.0;
inline constexpr double kSiSdrEps = 1e-8;

// Scale-invariant signal-to-distortion ratio in dB, clamped to [-80, 80].
// Both signals are mean-subtracted first. A degenerate (all-zero) reference
// or estimate pins the result to -80 dB with no gradient.
template <class S>
Tensor<S> si_sdr(const Tensor<S>& reference, const Tensor<S>& estimate) {
  if (reference.size() != estimate.size())
    throw std::invalid_argument("si_sdr: length mismatch");
  auto y = sub(reference, mean_all(reference));
  auto e = sub(estimate, mean_all(estimate));
  double ypow = 0, epow = 0;
  for (S v : y.data()) ypow += static_cast<double>(v) * v;
  for (S v : e.data()) epow += static_cast<double>(v) * v;
  if (ypow == 0.0 || epow == 0.0) return Tensor<S>::scalar(static_cast<S>(-kSiSdrClampDb));
  auto target = mul(div(dot(e, y), dot(y, y)), y);  // projection of e onto y
  auto residual = sub(e, target);
  auto num = max_const(dot(target, target), static_cast<S>(kSiSdrEps));
  auto den = max_const(dot(residual, residual), static_cast<S>(kSiSdrEps));
  auto db = mul_scalar(log10_t(div(num, den)), S(10));
  return clamp(db, static_cast<S>(-kSiSdrClampDb), static_cast<S>(kSiSdrClampDb));
}

inline double si_sdr_value(const std::vector<double>& reference,
                           const std::vector<double>& estimate) {
  Tensor<double> r({static_cast<int>(reference.size())}, reference);
  Tensor<double> e({static_cast<int>(estimate.size())}, estimate);
  return si_sdr(r, e).value();
}

// ---------------------------------------------------------------------------
// assignment

struct PitAssignment {
  std::vector<int> perm;  // reference index -> estimate index
  double score = 0;       // mean SI-SDR under perm, dB
};

// Exhaustive search over all permutations; maximizes the mean of
// scores[i][perm[i]].
inline PitAssignment assignment_brute_force(const std::vector<std::vector<double>>& scores) {
  const int n = static_cast<int>(scores.size());
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  PitAssignment best;
  best.score = -std::numeric_limits<double>::infinity();
  do {
    double total = 0;
    for (int i = 0; i < n; ++i) total += scores[static_cast<std::size_t>(i)][perm[i]];
    if (total > best.score) {
      best.score = total;
      best.perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  best.score /= n;
  // recompute in index order so brute force and Hungarian round identically
  double total = 0;
  for (int i = 0; i < n; ++i) total += scores[static_cast<std::size_t>(i)][best.perm[i]];
  best.score = total / n;
  return best;
}

// O(n^3) Hungarian algorithm (potentials formulation), maximizing.
inline PitAssignment assignment_hungarian(const std::vector<std::vector<double>>& scores) {
  const int n = static_cast<int>(scores.size());
  const double inf = std::numeric_limits<double>::infinity();
  // minimize negated scores; 1-based helper arrays
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0), v(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      int i0 = p[static_cast<std::size_t>(j0)], j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        double cur = -scores[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                     u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  PitAssignment out;
  out.perm.assign(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) out.perm[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  double total = 0;
  for (int i = 0; i < n; ++i) total += scores[static_cast<std::size_t>(i)][out.perm[i]];
  out.score = total / n;
  return out;
}

inline PitAssignment best_assignment(const std::vector<std::vector<double>>& scores) {
  return scores.size() <= 5 ? assignment_brute_force(scores) : assignment_hungarian(scores);
}

// ---------------------------------------------------------------------------
// utterance-level PIT over graph nodes

template <class S>
std::vector<std::vector<Tensor<S>>> si_sdr_matrix(const std::vector<Tensor<S>>& references,
                                                  const std::vector<Tensor<S>>& estimates) {
  if (references.size() != estimates.size())
    throw std::invalid_argument("pit: speaker count mismatch");
  std::vector<std::vector<Tensor<S>>> m(references.size());
  for (std::size_t i = 0; i < references.size(); ++i) {
    m[i].reserve(estimates.size());
    for (std::size_t j = 0; j < estimates.size(); ++j)
      m[i].push_back(si_sdr(references[i], estimates[j]));
  }
  return m;
}

template <class S>
std::vector<std::vector<double>> matrix_values(const std::vector<std::vector<Tensor<S>>>& m) {
  std::vector<std::vector<double>> v(m.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (const auto& t : m[i]) v[i].push_back(static_cast<double>(t.value()));
  return v;
}

template <class S>
PitAssignment pit_assign(const std::vector<Tensor<S>>& references,
                         const std::vector<Tensor<S>>& estimates) {
  return best_assignment(matrix_values(si_sdr_matrix(references, estimates)));
}

inline PitAssignment pit_assign(const std::vector<std::vector<double>>& references,
                                const std::vector<std::vector<double>>& estimates) {
  if (references.size() != estimates.size())
    throw std::invalid_argument("pit: speaker count mismatch");
  std::vector<std::vector<double>> m(references.size());
  for (std::size_t i = 0; i < references.size(); ++i)
    for (std::size_t j = 0; j < estimates.size(); ++j)
      m[i].push_back(si_sdr_value(references[i], estimates[j]));
  return best_assignment(m);
}

// Negative mean over scales of the best-permutation mean SI-SDR; the
// permutation is re-solved independently per scale.
template <class S>
Tensor<S> recon_loss(const std::vector<std::vector<Tensor<S>>>& per_scale_estimates,
                     const std::vector<Tensor<S>>& references) {
  if (per_scale_estimates.empty()) throw std::invalid_argument("recon_loss: no scales");
  const int c = static_cast<int>(references.size());
  std::vector<Tensor<S>> scale_scores;
  for (const auto& estimates : per_scale_estimates) {
    auto m = si_sdr_matrix(references, estimates);
    auto assign = best_assignment(matrix_values(m));
    Tensor<S> acc = m[0][static_cast<std::size_t>(assign.perm[0])];
    for (int i = 1; i < c; ++i)
      acc = add(acc, m[static_cast<std::size_t>(i)][static_cast<std::size_t>(assign.perm[i])]);
    scale_scores.push_back(mul_scalar(acc, static_cast<S>(1.0 / c)));
  }
  Tensor<S> total = scale_scores[0];
  for (std::size_t n = 1; n < scale_scores.size(); ++n) total = add(total, scale_scores[n]);
  return mul_scalar(total, static_cast<S>(-1.0 / static_cast<double>(scale_scores.size())));
}

template <class S>
Tensor<S> total_loss(const Tensor<S>& recon, const Tensor<S>& attractor) {
  return add(recon, attractor);
}

}  // namespace septda
