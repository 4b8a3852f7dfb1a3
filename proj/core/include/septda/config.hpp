// Model and training hyperparameters, plain-text key=value serialization.
#pragma once

#include <map>
#include <stdexcept>
#include <string>

namespace septda {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelConfig {
  int kernel = 16;        // encoder/decoder kernel L; stride is L/2
  int latent_dim = 256;   // D_e
  int model_dim = 128;    // D
  int chunk = 96;         // K, 50% overlap
  int tda_layers = 2;     // M
  int triple_blocks = 8;  // N
  int lstm_hidden = 256;  // H per direction
  int heads = 4;
  int ffn_expansion = 4;
  int max_speakers = 5;  // C_max
  int sample_rate = 8000;
  int t5_buckets = 32;
  int t5_max_distance = 128;
  // structural variants
  int dual_blocks = 1;
  bool use_tda = true;  // false: plain dual-path stack mapping to fixed_speakers sources
  bool use_self_attention = true;
  bool use_lstm = true;
  int fixed_speakers = 2;  // output count when use_tda is false

  void validate() const;
  std::map<std::string, std::string> to_map() const;
  static ModelConfig from_map(const std::map<std::string, std::string>& kv);
};

struct TrainingConfig {
  double lr = 4e-4;
  double grad_clip = 5.0;
  int batch_size = 2;
  double segment_seconds = 4.0;
  int patience = 5;
  double lr_factor = 0.5;
  int max_epochs = 100;
  std::uint64_t seed = 0;
  double weight_decay = 1e-2;
  int max_steps = 0;  // 0 = no step cap

  void validate() const;
  std::map<std::string, std::string> to_map() const;
  static TrainingConfig from_map(const std::map<std::string, std::string>& kv);
};

std::string serialize_kv(const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> parse_kv(const std::string& text);
std::map<std::string, std::string> read_kv_file(const std::string& path);

}  // namespace septda
