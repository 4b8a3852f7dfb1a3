#include "septda/config.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>

namespace septda {

namespace {

std::string get(const std::map<std::string, std::string>& kv, const std::string& key,
                const std::string& fallback) {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

int geti(const std::map<std::string, std::string>& kv, const std::string& key, int fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": " + it->second);
  }
}

double getd(const std::map<std::string, std::string>& kv, const std::string& key,
            double fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": " + it->second);
  }
}

bool getb(const std::map<std::string, std::string>& kv, const std::string& key, bool fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ConfigError("config: bad boolean for " + key + ": " + it->second);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void ModelConfig::validate() const {
  if (kernel < 2 || kernel % 2 != 0) throw ConfigError("config: kernel must be even and >= 2");
  if (model_dim % heads != 0) throw ConfigError("config: model_dim must be divisible by heads");
  if (chunk < 2) throw ConfigError("config: chunk must be >= 2");
  if (triple_blocks < 1) throw ConfigError("config: triple_blocks must be >= 1");
  if (tda_layers < 1) throw ConfigError("config: tda_layers must be >= 1");
  if (max_speakers < 1) throw ConfigError("config: max_speakers must be >= 1");
  if (dual_blocks < 1) throw ConfigError("config: dual_blocks must be >= 1");
  if (latent_dim < 1 || model_dim < 1 || lstm_hidden < 1 || sample_rate < 1)
    throw ConfigError("config: dimensions must be positive");
  if (!use_tda && fixed_speakers < 1)
    throw ConfigError("config: fixed_speakers must be >= 1 without TDA");
  if (t5_buckets < 3) throw ConfigError("config: t5_buckets must be >= 3");
}

std::map<std::string, std::string> ModelConfig::to_map() const {
  return {
      {"kernel", std::to_string(kernel)},
      {"latent_dim", std::to_string(latent_dim)},
      {"model_dim", std::to_string(model_dim)},
      {"chunk", std::to_string(chunk)},
      {"tda_layers", std::to_string(tda_layers)},
      {"triple_blocks", std::to_string(triple_blocks)},
      {"lstm_hidden", std::to_string(lstm_hidden)},
      {"heads", std::to_string(heads)},
      {"ffn_expansion", std::to_string(ffn_expansion)},
      {"max_speakers", std::to_string(max_speakers)},
      {"sample_rate", std::to_string(sample_rate)},
      {"t5_buckets", std::to_string(t5_buckets)},
      {"t5_max_distance", std::to_string(t5_max_distance)},
      {"dual_blocks", std::to_string(dual_blocks)},
      {"use_tda", use_tda ? "true" : "false"},
      {"use_self_attention", use_self_attention ? "true" : "false"},
      {"use_lstm", use_lstm ? "true" : "false"},
      {"fixed_speakers", std::to_string(fixed_speakers)},
  };
}

ModelConfig ModelConfig::from_map(const std::map<std::string, std::string>& kv) {
  ModelConfig c;
  c.kernel = geti(kv, "kernel", c.kernel);
  c.latent_dim = geti(kv, "latent_dim", c.latent_dim);
  c.model_dim = geti(kv, "model_dim", c.model_dim);
  c.chunk = geti(kv, "chunk", c.chunk);
  c.tda_layers = geti(kv, "tda_layers", c.tda_layers);
  c.triple_blocks = geti(kv, "triple_blocks", c.triple_blocks);
  c.lstm_hidden = geti(kv, "lstm_hidden", c.lstm_hidden);
  c.heads = geti(kv, "heads", c.heads);
  c.ffn_expansion = geti(kv, "ffn_expansion", c.ffn_expansion);
  c.max_speakers = geti(kv, "max_speakers", c.max_speakers);
  c.sample_rate = geti(kv, "sample_rate", c.sample_rate);
  c.t5_buckets = geti(kv, "t5_buckets", c.t5_buckets);
  c.t5_max_distance = geti(kv, "t5_max_distance", c.t5_max_distance);
  c.dual_blocks = geti(kv, "dual_blocks", c.dual_blocks);
  c.use_tda = getb(kv, "use_tda", c.use_tda);
  c.use_self_attention = getb(kv, "use_self_attention", c.use_self_attention);
  c.use_lstm = getb(kv, "use_lstm", c.use_lstm);
  c.fixed_speakers = geti(kv, "fixed_speakers", c.fixed_speakers);
  c.validate();
  return c;
}

void TrainingConfig::validate() const {
  if (lr <= 0 || grad_clip <= 0 || batch_size < 1 || segment_seconds <= 0 || patience < 1 ||
      lr_factor <= 0 || lr_factor >= 1 || max_epochs < 1)
    throw ConfigError("config: invalid training parameters");
}

std::map<std::string, std::string> TrainingConfig::to_map() const {
  return {
      {"lr", fmt(lr)},
      {"grad_clip", fmt(grad_clip)},
      {"batch_size", std::to_string(batch_size)},
      {"segment_seconds", fmt(segment_seconds)},
      {"patience", std::to_string(patience)},
      {"lr_factor", fmt(lr_factor)},
      {"max_epochs", std::to_string(max_epochs)},
      {"seed", std::to_string(seed)},
      {"weight_decay", fmt(weight_decay)},
      {"max_steps", std::to_string(max_steps)},
  };
}

TrainingConfig TrainingConfig::from_map(const std::map<std::string, std::string>& kv) {
  TrainingConfig c;
  c.lr = getd(kv, "lr", c.lr);
  c.grad_clip = getd(kv, "grad_clip", c.grad_clip);
  c.batch_size = geti(kv, "batch_size", c.batch_size);
  c.segment_seconds = getd(kv, "segment_seconds", c.segment_seconds);
  c.patience = geti(kv, "patience", c.patience);
  c.lr_factor = getd(kv, "lr_factor", c.lr_factor);
  c.max_epochs = geti(kv, "max_epochs", c.max_epochs);
  c.seed = static_cast<std::uint64_t>(std::stoull(get(kv, "seed", std::to_string(c.seed))));
  c.weight_decay = getd(kv, "weight_decay", c.weight_decay);
  c.max_steps = geti(kv, "max_steps", c.max_steps);
  c.validate();
  return c;
}

std::string serialize_kv(const std::map<std::string, std::string>& kv) {
  std::string out;
  for (const auto& [k, v] : kv) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

std::map<std::string, std::string> parse_kv(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config: malformed line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

std::map<std::string, std::string> read_kv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_kv(ss.str());
}

}  // namespace septda
