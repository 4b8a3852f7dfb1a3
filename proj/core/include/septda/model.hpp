// End-to-end separation model: encoder -> dual-path -> TDA -> FiLM ->
// triple-path -> shared output head -> decoder; checkpoint serialization.
#pragma once

#include <cstring>
#include <fstream>

#include "septda/audio.hpp"
#include "septda/config.hpp"
#include "septda/frontend.hpp"
#include "septda/optim.hpp"
#include "septda/tda.hpp"

namespace septda {

struct NoSpeakersError : DataError {
  explicit NoSpeakersError(std::vector<double> p)
      : DataError("no speakers detected"), probs(std::move(p)) {}
  std::vector<double> probs;
};

template <class S>
struct SeparationResult {
  std::vector<Tensor<S>> estimates;               // final scale, one (T) waveform per speaker
  std::vector<std::vector<Tensor<S>>> per_scale;  // training only: [scale][speaker]
  Tensor<S> existence_logits;                     // (C+1), undefined without TDA
  std::vector<double> probs;
  int chat = 0;
};

template <class S>
class SepTdaModel {
 public:
  SepTdaModel(ModelConfig config, std::uint64_t seed) : cfg_(std::move(config)) {
    cfg_.validate();
    Rng rng(seed);
    const int L = cfg_.kernel, de = cfg_.latent_dim, d = cfg_.model_dim;
    double a = 1.0 / std::sqrt(static_cast<double>(L));
    enc_w_ = make_param<S>(rng, {L, de}, -a, a);
    enc_b_ = make_param<S>(rng, {de}, -a, a);
    input_proj_.init(rng, de, d);
    dual_.resize(static_cast<std::size_t>(cfg_.dual_blocks));
    for (auto& blk : dual_)
      blk.init(rng, d, cfg_.lstm_hidden, cfg_.heads, cfg_.ffn_expansion, cfg_.t5_buckets,
               cfg_.t5_max_distance, cfg_.use_lstm, cfg_.use_self_attention);
    if (cfg_.use_tda) {
      tda_.init(rng, d, cfg_.tda_layers, cfg_.heads, cfg_.ffn_expansion, cfg_.max_speakers);
      film_.init(rng, d);
      triple_.resize(static_cast<std::size_t>(cfg_.triple_blocks));
      for (auto& blk : triple_)
        blk.init(rng, d, cfg_.lstm_hidden, cfg_.heads, cfg_.ffn_expansion, cfg_.t5_buckets,
                 cfg_.t5_max_distance);
    }
    head_norm_.init(d);
    head_proj_.init(rng, d, cfg_.use_tda ? de : de * cfg_.fixed_speakers);
    double ad = 1.0 / std::sqrt(static_cast<double>(de));
    dec_w_ = make_param<S>(rng, {de, L}, -ad, ad);
    dec_b_ = make_param<S>(rng, {1}, -ad, ad);
  }

  const ModelConfig& config() const { return cfg_; }

  // mixture: (T). speakers = 0 requests auto-counting. In training mode the
  // result carries per-scale estimates from every triple-path block.
  SeparationResult<S> forward(const Tensor<S>& mixture, int speakers, bool training) const {
    if (mixture.ndim() != 1) throw std::invalid_argument("forward: mixture must be 1-D");
    const int t_samples = static_cast<int>(mixture.size());
    auto frames = input_proj_(encode_frames(mixture, enc_w_, enc_b_));
    auto ct = segment(frames, cfg_.chunk);
    auto u = ct.chunks;
    for (const auto& blk : dual_) u = blk(u);

    SeparationResult<S> result;
    if (!cfg_.use_tda) {
      auto o = overlap_add(ChunkTensor<S>{u, ct.original_length, ct.hop});
      auto z = head_proj_(head_norm_(o));  // (T', C*D_e)
      const int c = cfg_.fixed_speakers;
      auto zs = permute(reshape(z, {ct.original_length, c, cfg_.latent_dim}), {1, 0, 2});
      for (int i = 0; i < c; ++i)
        result.estimates.push_back(decode_frames(
            reshape(slice0(zs, i, 1), {ct.original_length, cfg_.latent_dim}), dec_w_, dec_b_,
            t_samples));
      if (training) result.per_scale.push_back(result.estimates);
      result.chat = c;
      return result;
    }

    if (speakers < 0 || speakers > cfg_.max_speakers)
      throw std::invalid_argument("forward: speaker count out of range");
    auto context = overlap_add(ChunkTensor<S>{u, ct.original_length, ct.hop});
    const int cq = speakers == 0 ? cfg_.max_speakers : speakers;
    auto att = tda_.forward(context, cq);
    result.existence_logits = att.existence_logits;
    result.probs = att.probs;
    int c_use = speakers;
    if (speakers == 0) {
      c_use = count_speakers(att.probs, cfg_.max_speakers);
      if (c_use == 0) throw NoSpeakersError(att.probs);
    }
    result.chat = c_use;
    auto v = film_.forward(u, slice0(att.attractors, 0, c_use));
    const int n_blocks = static_cast<int>(triple_.size());
    for (int n = 0; n < n_blocks; ++n) {
      v = triple_[static_cast<std::size_t>(n)](v);
      if (training || n == n_blocks - 1) {
        auto ests = decode_scale(v, ct, t_samples);
        if (training) result.per_scale.push_back(ests);
        if (n == n_blocks - 1) result.estimates = std::move(ests);
      }
    }
    return result;
  }

  std::vector<ParamRef<S>> parameters() {
    std::vector<ParamRef<S>> out;
    visit([&](const std::string& name, Tensor<S>& t) { out.push_back({name, t}); });
    return out;
  }

  std::int64_t count_parameters() {
    std::int64_t n = 0;
    visit([&](const std::string&, Tensor<S>& t) { n += t.size(); });
    return n;
  }

  void visit(const ParamVisitor<S>& f) {
    f("encoder.w", enc_w_);
    f("encoder.b", enc_b_);
    input_proj_.visit("input_proj", f);
    for (std::size_t i = 0; i < dual_.size(); ++i) dual_[i].visit("dual." + std::to_string(i), f);
    if (cfg_.use_tda) {
      tda_.visit("tda", f);
      film_.visit("film", f);
      for (std::size_t i = 0; i < triple_.size(); ++i)
        triple_[i].visit("triple." + std::to_string(i), f);
    }
    head_norm_.visit("head.norm", f);
    head_proj_.visit("head.proj", f);
    f("decoder.w", dec_w_);
    f("decoder.b", dec_b_);
  }

 private:
  // Shared output head: overlap-add -> LN -> linear D -> D_e -> decoder.
  std::vector<Tensor<S>> decode_scale(const Tensor<S>& v, const ChunkTensor<S>& ct,
                                      int t_samples) const {
    const int c = v.dim(0);
    auto o = overlap_add(v, ct.hop, ct.original_length);  // (C, T', D)
    auto z = head_proj_(head_norm_(o));                   // (C, T', D_e)
    std::vector<Tensor<S>> out;
    out.reserve(static_cast<std::size_t>(c));
    for (int i = 0; i < c; ++i)
      out.push_back(decode_frames(reshape(slice0(z, i, 1), {ct.original_length, cfg_.latent_dim}),
                                  dec_w_, dec_b_, t_samples));
    return out;
  }

  ModelConfig cfg_;
  Tensor<S> enc_w_, enc_b_;
  Linear<S> input_proj_;
  std::vector<DualPathBlock<S>> dual_;
  TdaModule<S> tda_;
  Film<S> film_;
  std::vector<TriplePathBlock<S>> triple_;
  LayerNorm<S> head_norm_;
  Linear<S> head_proj_;
  Tensor<S> dec_w_, dec_b_;
};

// ---------------------------------------------------------------------------
// checkpoint: magic, version, key=value config text, then per-parameter
// records (name, shape, raw little-endian f32)

namespace detail {

constexpr char kCheckpointMagic[8] = {'S', 'E', 'P', 'T', 'D', 'A', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <class T>
void wr(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T rd(std::istream& is, const std::string& what) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw DataError("checkpoint: truncated file while reading " + what);
  return v;
}
inline void wr_str(std::ostream& os, const std::string& s) {
  wr<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline std::string rd_str(std::istream& is, const std::string& what) {
  auto len = rd<std::uint32_t>(is, what);
  std::string s(len, '\0');
  is.read(s.data(), len);
  if (!is) throw DataError("checkpoint: truncated file while reading " + what);
  return s;
}

}  // namespace detail

template <class S>
void save_checkpoint(const std::string& path, SepTdaModel<S>& model, AdamW<S>* opt = nullptr) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("checkpoint: cannot write " + path);
  os.write(detail::kCheckpointMagic, 8);
  detail::wr<std::uint32_t>(os, detail::kCheckpointVersion);
  detail::wr_str(os, serialize_kv(model.config().to_map()));
  auto params = model.parameters();
  detail::wr<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  auto write_blob = [&](const std::vector<S>& v) {
    for (S x : v) detail::wr<float>(os, static_cast<float>(x));
  };
  for (auto& p : params) {
    detail::wr_str(os, p.name);
    detail::wr<std::uint32_t>(os, static_cast<std::uint32_t>(p.tensor.ndim()));
    for (int d : p.tensor.shape()) detail::wr<std::int32_t>(os, d);
    write_blob(p.tensor.data());
  }
  detail::wr<std::uint8_t>(os, opt ? 1 : 0);
  if (opt) {
    detail::wr<std::uint64_t>(os, opt->step_count());
    detail::wr<double>(os, opt->lr());
    detail::wr<double>(os, opt->beta1());
    detail::wr<double>(os, opt->beta2());
    detail::wr<double>(os, opt->eps());
    detail::wr<double>(os, opt->weight_decay());
    for (auto& m : opt->first_moments()) write_blob(m);
    for (auto& v : opt->second_moments()) write_blob(v);
  }
  if (!os) throw DataError("checkpoint: short write to " + path);
}

struct OptimizerSnapshot {
  bool present = false;
  std::uint64_t step = 0;
  double lr = 0, beta1 = 0, beta2 = 0, eps = 0, weight_decay = 0;
  std::vector<std::vector<float>> first_moments, second_moments;
};

template <class S>
SepTdaModel<S> load_checkpoint(const std::string& path, OptimizerSnapshot* opt = nullptr) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, detail::kCheckpointMagic, 8) != 0)
    throw DataError("checkpoint: bad magic in " + path);
  auto version = detail::rd<std::uint32_t>(is, "version");
  if (version != detail::kCheckpointVersion)
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  auto cfg = ModelConfig::from_map(parse_kv(detail::rd_str(is, "config")));
  SepTdaModel<S> model(cfg, 0);
  std::map<std::string, Tensor<S>> by_name;
  model.visit([&](const std::string& name, Tensor<S>& t) { by_name.emplace(name, t); });
  auto count = detail::rd<std::uint32_t>(is, "parameter count");
  if (count != by_name.size())
    throw DataError("checkpoint: parameter count mismatch in " + path);
  std::size_t total = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name = detail::rd_str(is, "parameter name");
    auto it = by_name.find(name);
    if (it == by_name.end()) throw DataError("checkpoint: unknown parameter name " + name);
    auto nd = detail::rd<std::uint32_t>(is, "rank of " + name);
    std::vector<int> shape(nd);
    for (auto& d : shape) d = detail::rd<std::int32_t>(is, "shape of " + name);
    if (shape != it->second.shape())
      throw DataError("checkpoint: shape mismatch for " + name);
    for (auto& x : it->second.data()) x = static_cast<S>(detail::rd<float>(is, name));
    total += it->second.data().size();
  }
  if (opt) {
    opt->present = detail::rd<std::uint8_t>(is, "optimizer flag") != 0;
    if (opt->present) {
      opt->step = detail::rd<std::uint64_t>(is, "optimizer step");
      opt->lr = detail::rd<double>(is, "optimizer lr");
      opt->beta1 = detail::rd<double>(is, "optimizer beta1");
      opt->beta2 = detail::rd<double>(is, "optimizer beta2");
      opt->eps = detail::rd<double>(is, "optimizer eps");
      opt->weight_decay = detail::rd<double>(is, "optimizer weight decay");
      auto read_blobs = [&](std::vector<std::vector<float>>& dst) {
        auto params = model.parameters();
        dst.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
          dst[i].resize(static_cast<std::size_t>(params[i].tensor.size()));
          for (auto& x : dst[i]) x = detail::rd<float>(is, "optimizer moments");
        }
      };
      read_blobs(opt->first_moments);
      read_blobs(opt->second_moments);
    }
  }
  (void)total;
  return model;
}

// Throws naming the first differing field.
inline void ensure_config_match(const ModelConfig& expected, const ModelConfig& actual) {
  auto a = expected.to_map();
  auto b = actual.to_map();
  for (const auto& [k, v] : a)
    if (b.at(k) != v)
      throw DataError("config mismatch on field " + k + ": expected " + v + ", got " + b.at(k));
}

}  // namespace septda
