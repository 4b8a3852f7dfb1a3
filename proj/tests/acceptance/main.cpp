// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any
// failure.
#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "../common/gradcheck.hpp"
#include "septda/eval.hpp"
#include "septda/losses.hpp"
#include "septda/model.hpp"
#include "septda/training.hpp"

using namespace septda;

namespace {

int failures = 0;

void report(int criterion, bool ok, const std::string& what, const std::string& detail = "") {
  std::cout << (ok ? "PASS" : "FAIL") << " " << criterion << ": " << what;
  if (!ok && !detail.empty()) std::cout << " (" << detail << ")";
  std::cout << std::endl;
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Tensor<double> randu(Rng& rng, std::vector<int> shape, double scale = 1.0, bool grad = true) {
  std::vector<double> d(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& v : d) v = scale * rng.uniform(-1.0, 1.0);
  return Tensor<double>(std::move(shape), std::move(d), grad);
}

// -------------------------------------------------------------------------
// 1: parameter counts

void criterion_params() {
  auto count = [](ModelConfig cfg) {
    SepTdaModel<float> m(std::move(cfg), 0);
    return static_cast<double>(m.count_parameters()) / 1e6;
  };
  ModelConfig ref;
  ModelConfig dual;
  dual.use_tda = false;
  dual.dual_blocks = 8;
  ModelConfig no_attn = dual;
  no_attn.use_self_attention = false;
  ModelConfig no_lstm = dual;
  no_lstm.use_lstm = false;
  no_lstm.model_dim = 256;
  struct Case {
    double expect, got;
  } cases[] = {{21.2, count(ref)}, {17.0, count(dual)}, {16.0, count(no_attn)},
               {13.0, count(no_lstm)}};
  bool ok = true;
  std::ostringstream detail;
  for (auto& c : cases) {
    if (std::abs(c.got - c.expect) > 0.1 * c.expect) {
      ok = false;
      detail << c.expect << "M expected, got " << c.got << "M; ";
    }
  }
  report(1, ok, "parameter counts match the reference and ablation targets within 10%",
         detail.str());
}

// -------------------------------------------------------------------------
// 2: gradient suite (each parameterized operation plus the full toy model)

void criterion_gradients() {
  using testutil::check_gradients;
  using Params = std::vector<std::pair<std::string, Tensor<double>>>;
  bool ok = true;
  std::string detail;
  auto run = [&](const std::string& what, const Params& params,
                 const std::function<Tensor<double>()>& fn, int sample) {
    if (!ok) return;
    auto res = check_gradients(params, fn, 1e-4, 1e-5, sample);
    if (!res.ok) {
      ok = false;
      detail = what + ": " + res.detail;
    }
  };

  Rng rng(101);
  {
    auto x = randu(rng, {21}, 0.5);
    auto we = randu(rng, {4, 6});
    auto be = randu(rng, {6});
    auto wd = randu(rng, {6, 4});
    auto bd = randu(rng, {1});
    run("encoder/decoder", {{"x", x}, {"we", we}, {"be", be}, {"wd", wd}, {"bd", bd}}, [&] {
      auto y = decode_frames(encode_frames(x, we, be), wd, bd, 21);
      return sum_all(mul(y, y));
    }, 0);
  }
  {
    Blstm<double> rnn;
    rnn.init(rng, 3, 4);
    auto x = randu(rng, {2, 5, 3});
    auto probe = randu(rng, {2, 5, 8}, 1.0, false);
    Params p{{"x", x}};
    rnn.visit("lstm", [&](const std::string& n, Tensor<double>& t) { p.emplace_back(n, t); });
    run("lstm module", p, [&] { return sum_all(mul(rnn(x), probe)); }, 0);
  }
  {
    Attention<double> attn;
    attn.init(rng, 8, 2, true, 8, 16);
    auto x = randu(rng, {2, 4, 8}, 0.5);
    const double ninf = -std::numeric_limits<double>::infinity();
    Tensor<double> mask({4, 4}, 0.0);
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) mask.data()[i * 4 + j] = ninf;
    Params p{{"x", x}};
    attn.visit("attn", [&](const std::string& n, Tensor<double>& t) { p.emplace_back(n, t); });
    run("masked self-attention with T5 bias", p,
        [&] { return sum_all(mul(attn.forward(x, x, mask), x)); }, 0);
  }
  {
    Attention<double> attn;
    attn.init(rng, 8, 2);
    auto q = randu(rng, {1, 3, 8}, 0.5);
    auto kv = randu(rng, {1, 6, 8}, 0.5);
    Params p{{"q", q}, {"kv", kv}};
    attn.visit("attn", [&](const std::string& n, Tensor<double>& t) { p.emplace_back(n, t); });
    run("cross-attention", p, [&] { return sum_all(mul(attn.forward(q, kv, Tensor<double>()), q)); },
        0);
  }
  {
    FeedForward<double> ffn;
    ffn.init(rng, 6, 2);
    auto x = randu(rng, {4, 6});
    Params p{{"x", x}};
    ffn.visit("ffn", [&](const std::string& n, Tensor<double>& t) { p.emplace_back(n, t); });
    run("feed-forward", p, [&] { return sum_all(mul(ffn(x), x)); }, 0);
  }
  {
    Film<double> film;
    film.init(rng, 4);
    auto u = randu(rng, {3, 2, 4});
    auto a = randu(rng, {2, 4});
    Params p{{"u", u}, {"a", a}};
    film.visit("film", [&](const std::string& n, Tensor<double>& t) { p.emplace_back(n, t); });
    run("film", p, [&] {
      auto y = film.forward(u, a);
      return sum_all(mul(y, y));
    }, 0);
  }
  {
    TdaModule<double> tda;
    tda.init(rng, 8, 2, 2, 2, 2);
    auto ctx = randu(rng, {6, 8}, 0.5);
    Params p{{"ctx", ctx}};
    tda.visit("tda", [&](const std::string& n, Tensor<double>& t) { p.emplace_back(n, t); });
    run("tda with existence head", p, [&] {
      auto out = tda.forward(ctx, 2);
      return add(attractor_existence_loss(out.existence_logits),
                 mean_all(mul(out.attractors, out.attractors)));
    }, 0);
  }
  {
    ModelConfig cfg;
    cfg.kernel = 4;
    cfg.latent_dim = 8;
    cfg.model_dim = 8;
    cfg.chunk = 4;
    cfg.tda_layers = 2;
    cfg.triple_blocks = 1;
    cfg.lstm_hidden = 4;
    cfg.heads = 2;
    cfg.ffn_expansion = 2;
    cfg.max_speakers = 2;
    SepTdaModel<double> model(cfg, 102);
    auto mix = randu(rng, {32}, 0.3, false);
    std::vector<Tensor<double>> refs{randu(rng, {32}, 0.3, false), randu(rng, {32}, 0.3, false)};
    Params p;
    model.visit([&](const std::string& n, Tensor<double>& t) { p.emplace_back(n, t); });
    run("full toy model through total loss", p, [&] {
      auto out = model.forward(mix, 2, true);
      return total_loss(recon_loss(out.per_scale, refs),
                        attractor_existence_loss(out.existence_logits));
    }, 6);
  }
  report(2, ok, "analytic gradients match central finite differences within 1e-4", detail);
}

// -------------------------------------------------------------------------
// 3: toy overfit

Dataset toy_dataset() {
  Rng rng(301);
  Dataset data;
  const int t = 4000;  // 0.5 s at 8 kHz
  for (int n = 0; n < 4; ++n) {
    TrainItem item;
    item.mixture.assign(t, 0.0);
    for (int c = 0; c < 2; ++c) {
      std::vector<double> ref(t);
      double f1 = rng.uniform(120, 400) * (c + 1);
      double f2 = f1 * rng.uniform(1.9, 2.6);
      double ph1 = rng.uniform(0, 6.28), ph2 = rng.uniform(0, 6.28);
      double vib = rng.uniform(2, 6);
      for (int i = 0; i < t; ++i) {
        double tt = i / 8000.0;
        double env = 0.6 + 0.4 * std::sin(2 * 3.14159265 * vib * tt);
        ref[i] = 0.25 * env *
                 (std::sin(2 * 3.14159265 * f1 * tt + ph1) +
                  0.5 * std::sin(2 * 3.14159265 * f2 * tt + ph2));
        item.mixture[i] += ref[i];
      }
      item.references.push_back(std::move(ref));
    }
    data.push_back(std::move(item));
  }
  return data;
}

double dataset_delta(SepTdaModel<float>& model, const Dataset& data) {
  double total = 0;
  for (const auto& item : data) {
    std::vector<float> x(item.mixture.begin(), item.mixture.end());
    const int t = static_cast<int>(x.size());
    Tensor<float> mix({t}, std::move(x));
    auto out = model.forward(mix, 2, false);
    std::vector<std::vector<double>> ests;
    for (const auto& e : out.estimates)
      ests.emplace_back(e.data().begin(), e.data().end());
    auto assign = pit_assign(item.references, ests);
    double d = 0;
    for (int i = 0; i < 2; ++i)
      d += si_sdr_value(item.references[static_cast<std::size_t>(i)],
                        ests[static_cast<std::size_t>(assign.perm[i])]) -
           si_sdr_value(item.references[static_cast<std::size_t>(i)], item.mixture);
    total += d / 2;
  }
  return total / static_cast<double>(data.size());
}

void criterion_overfit() {
  auto t0 = std::chrono::steady_clock::now();
  ModelConfig cfg;
  cfg.model_dim = 32;
  cfg.latent_dim = 64;
  cfg.lstm_hidden = 32;
  cfg.chunk = 16;
  cfg.triple_blocks = 2;
  cfg.tda_layers = 1;
  cfg.heads = 2;
  cfg.max_speakers = 2;
  SepTdaModel<float> model(cfg, 302);
  TrainingConfig tcfg;
  tcfg.lr = 1e-3;
  tcfg.batch_size = 1;
  tcfg.segment_seconds = 0.5;
  tcfg.seed = 303;
  auto data = toy_dataset();
  Trainer<float> trainer(model, tcfg);
  bool finite = true;
  double best = -1e9;
  int steps = 0;
  try {
    while (steps < 5000) {
      for (const auto& batch : trainer.make_batches(data)) {
        double loss = trainer.step(data, batch);
        ++steps;
        if (!std::isfinite(loss)) finite = false;
        if (steps >= 5000) break;
      }
      if (steps % 20 < 4) {
        best = std::max(best, dataset_delta(model, data));
        if (best >= 10.0) break;
      }
    }
    if (best < 10.0) best = std::max(best, dataset_delta(model, data));
  } catch (const NumericError&) {
    finite = false;
  }
  std::ostringstream detail;
  detail << "delta " << best << " dB after " << steps << " steps, " << seconds_since(t0) << " s";
  report(3, finite && best >= 10.0,
         "toy model overfits 4 synthetic mixtures to >= 10 dB delta SI-SDR", detail.str());
  std::cout << "   (" << detail.str() << ")" << std::endl;
}

// -------------------------------------------------------------------------
// 4: SI-SDR oracle

void criterion_sisdr() {
  bool ok = true;
  std::string detail;
  double hand = si_sdr_value({1.0, -1.0, 0.0}, {1.0, 0.0, 0.0});
  if (std::abs(hand - 10.0 * std::log10(3.0)) > 1e-9) {
    ok = false;
    detail = "hand case returned " + std::to_string(hand);
  }
  Rng rng(401);
  std::vector<double> y(128), e(128);
  for (auto& v : y) v = rng.uniform(-1, 1);
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = y[i] + 0.2 * rng.uniform(-1, 1);
  double base = si_sdr_value(y, e);
  auto scaled = e;
  for (auto& v : scaled) v *= 7.3;
  if (std::abs(si_sdr_value(y, scaled) - base) > 1e-9) {
    ok = false;
    detail = "not scale invariant";
  }
  std::vector<double> zeros(128, 0.0);
  if (si_sdr_value(zeros, e) != -80.0) {
    ok = false;
    detail = "all-zero reference did not clamp to -80";
  }
  report(4, ok, "SI-SDR matches the hand-computed oracle, scale invariance and the -80 floor",
         detail);
}

// -------------------------------------------------------------------------
// 5: PIT equivalence

void criterion_pit() {
  Rng rng(501);
  bool ok = true;
  std::string detail;
  for (int c = 2; c <= 5 && ok; ++c) {
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<std::vector<double>> m(static_cast<std::size_t>(c),
                                         std::vector<double>(static_cast<std::size_t>(c)));
      for (auto& row : m)
        for (auto& v : row) v = rng.uniform(-40, 40);
      auto bf = assignment_brute_force(m);
      auto hu = assignment_hungarian(m);
      if (std::abs(bf.score - hu.score) > 1e-9) {
        ok = false;
        detail = "C=" + std::to_string(c) + " trial " + std::to_string(trial) + ": brute " +
                 std::to_string(bf.score) + " vs hungarian " + std::to_string(hu.score);
        break;
      }
    }
  }
  report(5, ok, "Hungarian assignment equals exhaustive search on 1000 matrices per C in 2..5",
         detail);
}

// -------------------------------------------------------------------------
// 6: segmentation round trip

void criterion_roundtrip_segment() {
  Rng rng(601);
  bool ok = true;
  std::string detail;
  for (int trial = 0; trial < 200 && ok; ++trial) {
    int tp = static_cast<int>(rng.integer(1, 300));
    int k = static_cast<int>(rng.integer(2, 100));
    auto frames = randu(rng, {tp, 3}, 1.0, false);
    auto back = overlap_add(segment(frames, k));
    for (std::size_t i = 0; i < frames.data().size(); ++i) {
      double a = frames.data()[i], b = back.data()[i];
      if (std::abs(a - b) > 1e-6 * std::max(1.0, std::abs(a))) {
        ok = false;
        detail = "T'=" + std::to_string(tp) + " K=" + std::to_string(k);
        break;
      }
    }
  }
  report(6, ok, "overlap-add inverts segmentation on 200 random geometries", detail);
}

// -------------------------------------------------------------------------
// 7: TDA causality

void criterion_tda_causality() {
  Rng rng(701);
  bool ok = true;
  std::string detail;
  TdaModule<double> tda;
  tda.init(rng, 8, 2, 2, 2, 4);  // two decoder layers, up to four speakers
  for (int trial = 0; trial < 100 && ok; ++trial) {
    auto ctx = randu(rng, {6, 8}, 0.8, false);
    auto base = tda.forward(ctx, 4);
    int j = static_cast<int>(rng.integer(1, 4));
    double delta = rng.uniform(0.1, 1.0);
    int col = static_cast<int>(rng.integer(0, 7));
    double orig = tda.queries.data()[j * 8 + col];
    tda.queries.data()[j * 8 + col] = orig + delta;
    auto pert = tda.forward(ctx, 4);
    tda.queries.data()[j * 8 + col] = orig;
    for (int i = 0; i < j && ok; ++i)
      for (int d = 0; d < 8; ++d) {
        double diff = std::abs(base.attractors.data()[i * 8 + d] -
                               pert.attractors.data()[i * 8 + d]);
        if (diff > 1e-12) {
          ok = false;
          detail = "trial " + std::to_string(trial) + ": row " + std::to_string(i) +
                   " moved by " + std::to_string(diff) + " after perturbing row " +
                   std::to_string(j);
          break;
        }
      }
  }
  report(7, ok, "perturbing query row j leaves attractor rows i < j untouched (100 trials)",
         detail);
}

// -------------------------------------------------------------------------
// 8: counting protocol

void criterion_counting() {
  bool ok = true;
  std::string detail;
  struct Fixture {
    std::vector<double> probs;
    int cmax, expect;
  } fixtures[] = {
      {{0.9, 0.8, 0.3, 0.1}, 5, 2},  {{0.9, 0.4, 0.9}, 5, 1}, {{0.3, 0.9}, 5, 0},
      {{0.51, 0.52, 0.49}, 5, 2},    {{0.9, 0.9, 0.9}, 2, 2}, {{0.5}, 5, 0},
  };
  for (auto& f : fixtures) {
    int got = count_speakers(f.probs, f.cmax);
    if (got != f.expect) {
      ok = false;
      detail = "expected " + std::to_string(f.expect) + ", got " + std::to_string(got);
    }
  }

  // under-estimation: the separator returns one channel for a 2-speaker item
  Rng rng(801);
  TrainItem item;
  item.references.resize(2);
  item.mixture.assign(512, 0.0);
  for (int c = 0; c < 2; ++c) {
    item.references[static_cast<std::size_t>(c)].resize(512);
    for (int i = 0; i < 512; ++i) {
      double v = 0.4 * std::sin(0.02 * (c + 1) * i + c);
      item.references[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] = v;
      item.mixture[static_cast<std::size_t>(i)] += v;
    }
  }
  Separator under = [&](const std::vector<double>&, int) {
    SepOutput out;
    out.estimates = {item.references[0]};
    out.chat = 1;
    return out;
  };
  auto r = evaluate_item(under, item, true);
  double expect = (80.0 - si_sdr_value(item.references[0], item.mixture) - 80.0 -
                   si_sdr_value(item.references[1], item.mixture)) /
                  2.0;
  if (r.estimated != 1 || std::abs(r.delta - expect) > 1e-9) {
    ok = false;
    detail = "under-estimation delta " + std::to_string(r.delta) + " vs expected " +
             std::to_string(expect);
  }

  // over-estimation keeps the first C channels
  Separator over = [&](const std::vector<double>&, int) {
    SepOutput out;
    out.estimates = {item.references[0], item.references[1],
                     std::vector<double>(item.mixture.size(), 0.5)};
    out.chat = 3;
    return out;
  };
  auto r2 = evaluate_item(over, item, true);
  if (r2.estimated != 3 || r2.delta < 20.0) {
    ok = false;
    detail = "over-estimation was not trimmed to the true count";
  }
  report(8, ok, "counting fixtures and over/under-estimation protocol behave as specified",
         detail);
}

// -------------------------------------------------------------------------
// 9: speaker-permutation equivariance

void criterion_equivariance() {
  Rng rng(901);
  bool ok = true;
  std::string detail;
  {
    TriplePathBlock<double> block;
    block.init(rng, 8, 4, 2, 2, 8, 16);
    const int C = 3, K = 4, Sc = 3, D = 8;
    auto v = randu(rng, {C, K, Sc, D}, 1.0, false);
    auto y = block(v);
    std::vector<double> swapped(v.data());
    const std::size_t stride = static_cast<std::size_t>(K) * Sc * D;
    std::swap_ranges(swapped.begin(), swapped.begin() + stride, swapped.begin() + 2 * stride);
    auto y2 = block(Tensor<double>({C, K, Sc, D}, std::move(swapped)));
    for (std::size_t i = 0; i < stride && ok; ++i) {
      double a = y2.data()[i], b = y.data()[2 * stride + i];
      if (std::abs(a - b) > 1e-6 * std::max(1.0, std::abs(b))) {
        ok = false;
        detail = "triple-path block moved by " + std::to_string(std::abs(a - b));
      }
    }
  }
  if (ok) {
    // full post-TDA pipeline: FiLM -> triple-path stack -> shared head -> decoder
    const int K = 4, Sc = 3, D = 8, De = 6, L = 4, C = 3, Tp = 8, T = 18;
    Film<double> film;
    film.init(rng, D);
    std::vector<TriplePathBlock<double>> blocks(2);
    for (auto& b : blocks) b.init(rng, D, 4, 2, 2, 8, 16);
    LayerNorm<double> norm;
    norm.init(D);
    Linear<double> proj;
    proj.init(rng, D, De);
    auto dec_w = randu(rng, {De, L});
    auto dec_b = randu(rng, {1});
    auto u = randu(rng, {K, Sc, D}, 1.0, false);
    auto attractors = randu(rng, {C, D}, 1.0, false);
    auto run = [&](const Tensor<double>& att) {
      auto v = film.forward(u, att);
      for (const auto& b : blocks) v = b(v);
      auto o = overlap_add(v, 2, Tp);
      auto z = proj(norm(o));
      std::vector<std::vector<double>> ests;
      for (int c = 0; c < C; ++c) {
        auto e = decode_frames(reshape(slice0(z, c, 1), {Tp, De}), dec_w, dec_b, T);
        ests.emplace_back(e.data().begin(), e.data().end());
      }
      return ests;
    };
    auto base = run(attractors);
    std::vector<double> perm_att(attractors.data());
    const std::size_t astride = D;
    std::swap_ranges(perm_att.begin(), perm_att.begin() + astride,
                     perm_att.begin() + 2 * astride);
    auto permuted = run(Tensor<double>({C, D}, std::move(perm_att)));
    std::vector<int> expect_map{2, 1, 0};
    for (int c = 0; c < C && ok; ++c)
      for (int t = 0; t < T; ++t) {
        double a = permuted[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)];
        double b = base[static_cast<std::size_t>(expect_map[c])][static_cast<std::size_t>(t)];
        if (std::abs(a - b) > 1e-6 * std::max(1.0, std::abs(b))) {
          ok = false;
          detail = "post-TDA pipeline differs by " + std::to_string(std::abs(a - b));
          break;
        }
      }
  }
  report(9, ok, "triple-path block and post-TDA pipeline are speaker-permutation equivariant",
         detail);
}

// -------------------------------------------------------------------------
// 10: round trips

void criterion_roundtrips() {
  bool ok = true;
  std::string detail;
  ModelConfig cfg;
  cfg.kernel = 8;
  cfg.latent_dim = 16;
  cfg.model_dim = 8;
  cfg.chunk = 4;
  cfg.tda_layers = 1;
  cfg.triple_blocks = 1;
  cfg.lstm_hidden = 4;
  cfg.heads = 2;
  cfg.max_speakers = 2;
  {
    SepTdaModel<float> model(cfg, 1001);
    const std::string path = "/tmp/septda_acceptance_ckpt.bin";
    save_checkpoint(path, model);
    auto loaded = load_checkpoint<float>(path);
    auto a = model.parameters();
    auto b = loaded.parameters();
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i].tensor.data() != b[i].tensor.data()) {
        ok = false;
        detail = "checkpoint differs at " + a[i].name;
      }
    std::remove(path.c_str());
  }
  if (ok) {
    Rng rng(1002);
    AudioSignal sig;
    sig.samples.resize(2000);
    for (auto& v : sig.samples) v = rng.uniform(-0.99, 0.99);
    const std::string path = "/tmp/septda_acceptance_wav.wav";
    write_wav(path, sig);
    auto back = read_wav(path);
    for (std::size_t i = 0; i < sig.samples.size(); ++i)
      if (std::abs(back.samples[i] - sig.samples[i]) > 1.0 / 32768.0) {
        ok = false;
        detail = "wav sample " + std::to_string(i) + " off by more than one step";
      }
    std::remove(path.c_str());
  }
  if (ok) {
    Rng rng(1003);
    Dataset data;
    for (int n = 0; n < 3; ++n) {
      TrainItem item;
      item.mixture.assign(400, 0.0);
      for (int c = 0; c < 2; ++c) {
        std::vector<double> ref(400);
        double f = rng.uniform(200, 900);
        for (int i = 0; i < 400; ++i) ref[static_cast<std::size_t>(i)] = 0.3 * std::sin(2 * 3.14159 * f * i / 8000.0);
        for (int i = 0; i < 400; ++i) item.mixture[static_cast<std::size_t>(i)] += ref[static_cast<std::size_t>(i)];
        item.references.push_back(std::move(ref));
      }
      data.push_back(std::move(item));
    }
    TrainingConfig tcfg;
    tcfg.segment_seconds = 0.05;
    tcfg.max_epochs = 2;
    tcfg.batch_size = 2;
    tcfg.seed = 1004;
    SepTdaModel<float> m1(cfg, 1005);
    SepTdaModel<float> m2(cfg, 1005);
    auto h1 = train(m1, data, {}, tcfg);
    auto h2 = train(m2, data, {}, tcfg);
    if (h1.size() != h2.size()) {
      ok = false;
      detail = "training histories differ in length";
    } else {
      for (std::size_t i = 0; i < h1.size(); ++i)
        if (h1[i].train_loss != h2[i].train_loss || h1[i].lr != h2[i].lr) {
          ok = false;
          detail = "training histories diverge at step " + std::to_string(h1[i].step);
        }
    }
  }
  report(10, ok, "checkpoint, WAV and fixed-seed training round trips are exact", detail);
}

}  // namespace

int main() {
  criterion_params();
  criterion_gradients();
  criterion_overfit();
  criterion_sisdr();
  criterion_pit();
  criterion_roundtrip_segment();
  criterion_tda_causality();
  criterion_counting();
  criterion_equivariance();
  criterion_roundtrips();
  if (failures) {
    std::cout << failures << " criterion(s) failed" << std::endl;
    return 1;
  }
  std::cout << "all criteria passed" << std::endl;
  return 0;
}
