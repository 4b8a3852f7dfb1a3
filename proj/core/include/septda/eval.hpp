// Mixture simulation and the evaluation protocol (Delta SI-SDR, known and
// unknown speaker counts, counting accuracy).
#pragma once

#include <functional>
#include <iomanip>
#include <sstream>

#include "septda/audio.hpp"
#include "septda/losses.hpp"
#include "septda/model.hpp"
#include "septda/training.hpp"

namespace septda {

// Scales source i by 10^(levels_db[i]/20), truncates everything to the
// shortest source, and sums. If the mixture peak exceeds `peak`, mixture and
// scaled references are rescaled together, so the references always sum to
// the mixture exactly.
inline std::pair<std::vector<double>, std::vector<std::vector<double>>> simulate_mixture(
    const std::vector<std::vector<double>>& sources, const std::vector<double>& levels_db,
    double peak = 0.9) {
  if (sources.size() < 1) throw DataError("simulate: need at least one source");
  if (sources.size() != levels_db.size())
    throw DataError("simulate: one level per source required");
  std::size_t t = sources[0].size();
  for (const auto& s : sources) t = std::min(t, s.size());
  if (t == 0) throw DataError("simulate: empty source");
  std::vector<std::vector<double>> refs(sources.size());
  std::vector<double> mix(t, 0.0);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    double g = std::pow(10.0, levels_db[i] / 20.0);
    refs[i].resize(t);
    for (std::size_t n = 0; n < t; ++n) {
      refs[i][n] = g * sources[i][n];
      mix[n] += refs[i][n];
    }
  }
  double m = 0;
  for (double v : mix) m = std::max(m, std::abs(v));
  if (m > peak) {
    double scale = peak / m;
    for (double& v : mix) v *= scale;
    for (auto& r : refs)
      for (double& v : r) v *= scale;
  }
  return {std::move(mix), std::move(refs)};
}

// First source at 0 dB, the rest uniform in [0, 5] dB relative to it.
inline std::vector<double> random_levels(Rng& rng, std::size_t n) {
  std::vector<double> levels(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) levels[i] = rng.uniform(0.0, 5.0);
  return levels;
}

inline double delta_si_sdr(const std::vector<double>& mixture, const std::vector<double>& reference,
                           const std::vector<double>& estimate) {
  return si_sdr_value(reference, estimate) - si_sdr_value(reference, mixture);
}

// ---------------------------------------------------------------------------
// evaluation protocol

struct SepOutput {
  std::vector<std::vector<double>> estimates;
  std::vector<double> probs;
  int chat = 0;  // estimated speaker count (0 when nothing was detected)
};

// known_speakers = 0 requests automatic counting.
using Separator = std::function<SepOutput(const std::vector<double>& mixture, int known_speakers)>;

template <class S>
Separator make_separator(SepTdaModel<S>& model) {
  return [&model](const std::vector<double>& mixture, int known) {
    const int t = static_cast<int>(mixture.size());
    std::vector<S> x(mixture.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<S>(mixture[i]);
    Tensor<S> mix({t}, std::move(x));
    SepOutput out;
    try {
      auto r = model.forward(mix, known, false);
      out.chat = r.chat;
      out.probs = r.probs;
      for (const auto& e : r.estimates) {
        std::vector<double> w(e.data().size());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<double>(e.data()[i]);
        out.estimates.push_back(std::move(w));
      }
    } catch (const NoSpeakersError& err) {
      out.chat = 0;
      out.probs = err.probs;
    }
    return out;
  };
}

struct EvalItemResult {
  int speakers = 0;
  int estimated = 0;
  double delta = 0;  // mean Delta SI-SDR over references, dB
};

struct EvalReport {
  std::vector<EvalItemResult> items;
  bool auto_count = false;

  double mean_delta(int speakers = 0) const {  // 0 = all items
    double sum = 0;
    int n = 0;
    for (const auto& r : items)
      if (speakers == 0 || r.speakers == speakers) {
        sum += r.delta;
        ++n;
      }
    return n ? sum / n : 0.0;
  }

  double counting_accuracy() const {
    if (items.empty()) return 0.0;
    int ok = 0;
    for (const auto& r : items) ok += r.speakers == r.estimated;
    return static_cast<double>(ok) / static_cast<double>(items.size());
  }

  std::map<std::pair<int, int>, int> confusion() const {
    std::map<std::pair<int, int>, int> m;
    for (const auto& r : items) ++m[{r.speakers, r.estimated}];
    return m;
  }

  std::string to_string() const {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    std::map<int, int> counts;
    for (const auto& r : items) ++counts[r.speakers];
    for (const auto& [c, n] : counts)
      os << c << " speakers: mean delta SI-SDR " << mean_delta(c) << " dB over " << n
         << " mixtures\n";
    os << "overall: mean delta SI-SDR " << mean_delta() << " dB over " << items.size()
       << " mixtures\n";
    if (auto_count) {
      os << "counting accuracy: " << 100.0 * counting_accuracy() << "%\n";
      os << "confusion (true -> estimated: count):\n";
      for (const auto& [key, n] : confusion())
        os << "  " << key.first << " -> " << key.second << ": " << n << "\n";
    }
    return os.str();
  }
};

// With auto counting: surplus estimates beyond the true count are dropped
// (first ones kept), missing ones are padded with silence, then the best
// permutation is scored.
inline EvalItemResult evaluate_item(const Separator& separate, const TrainItem& item,
                                    bool auto_count) {
  const int c = static_cast<int>(item.references.size());
  auto out = separate(item.mixture, auto_count ? 0 : c);
  EvalItemResult res;
  res.speakers = c;
  res.estimated = auto_count ? out.chat : c;
  auto ests = std::move(out.estimates);
  if (static_cast<int>(ests.size()) > c) ests.resize(static_cast<std::size_t>(c));
  while (static_cast<int>(ests.size()) < c)
    ests.emplace_back(item.mixture.size(), 0.0);
  auto assign = pit_assign(item.references, ests);
  double delta = 0;
  for (int i = 0; i < c; ++i)
    delta += si_sdr_value(item.references[static_cast<std::size_t>(i)],
                          ests[static_cast<std::size_t>(assign.perm[i])]) -
             si_sdr_value(item.references[static_cast<std::size_t>(i)], item.mixture);
  res.delta = delta / c;
  return res;
}

inline EvalReport evaluate(const Separator& separate, const Dataset& items, bool auto_count) {
  EvalReport report;
  report.auto_count = auto_count;
  for (const auto& item : items) report.items.push_back(evaluate_item(separate, item, auto_count));
  return report;
}

}  // namespace septda
