// Command line front end: train, separate, count, eval, simulate, params.
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "septda/eval.hpp"
#include "septda/manifest.hpp"
#include "septda/training.hpp"

namespace fs = std::filesystem;
using namespace septda;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::map<std::string, std::string> overrides_to_map(const std::vector<std::string>& sets) {
  std::map<std::string, std::string> kv;
  for (const auto& s : sets) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value, got: " + s);
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return kv;
}

ModelConfig load_model_config(const std::string& path, const std::vector<std::string>& sets) {
  std::map<std::string, std::string> kv;
  if (!path.empty()) kv = read_kv_file(path);
  for (const auto& [k, v] : overrides_to_map(sets)) kv[k] = v;
  return ModelConfig::from_map(kv);
}

TrainingConfig load_training_config(const std::string& path, const std::vector<std::string>& sets) {
  std::map<std::string, std::string> kv;
  if (!path.empty()) kv = read_kv_file(path);
  for (const auto& [k, v] : overrides_to_map(sets)) kv[k] = v;
  return TrainingConfig::from_map(kv);
}

std::string fmt_db(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

int cmd_params(const std::string& cfg_path, const std::vector<std::string>& sets) {
  auto cfg = load_model_config(cfg_path, sets);
  SepTdaModel<float> model(cfg, 0);
  auto n = model.count_parameters();
  std::cout << "parameters: " << n << " (" << fmt_db(static_cast<double>(n) / 1e6) << "M)\n";
  return 0;
}

int cmd_simulate(const std::vector<std::string>& sources, const std::string& out_dir,
                 const std::string& manifest_path, int num, int min_c, int max_c,
                 std::uint64_t seed) {
  if (min_c < 1 || max_c < min_c) throw ConfigError("simulate: bad speaker range");
  if (static_cast<int>(sources.size()) < max_c)
    throw DataError("simulate: need at least " + std::to_string(max_c) + " source files");
  std::vector<AudioSignal> audio;
  for (const auto& p : sources) audio.push_back(read_wav(p));
  for (std::size_t i = 1; i < audio.size(); ++i)
    if (audio[i].sample_rate != audio[0].sample_rate)
      throw DataError("simulate: sources disagree on sample rate");
  fs::create_directories(out_dir);
  Rng rng(seed);
  std::vector<ManifestItem> manifest;
  for (int n = 0; n < num; ++n) {
    int c = static_cast<int>(rng.integer(min_c, max_c));
    std::vector<std::size_t> order(sources.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    std::vector<std::vector<double>> chosen;
    for (int i = 0; i < c; ++i) chosen.push_back(audio[order[static_cast<std::size_t>(i)]].samples);
    auto levels = random_levels(rng, chosen.size());
    auto [mix, refs] = simulate_mixture(chosen, levels);
    ManifestItem item;
    std::ostringstream levtxt;
    char name[64];
    std::snprintf(name, sizeof name, "mix_%04d.wav", n);
    item.mixture = name;
    write_wav((fs::path(out_dir) / name).string(), {mix, audio[0].sample_rate});
    for (int i = 0; i < c; ++i) {
      std::snprintf(name, sizeof name, "mix_%04d_src%d.wav", n, i + 1);
      item.references.emplace_back(name);
      write_wav((fs::path(out_dir) / name).string(),
                {refs[static_cast<std::size_t>(i)], audio[0].sample_rate});
      levtxt << (i ? "," : "") << levels[static_cast<std::size_t>(i)];
    }
    item.meta["levels"] = levtxt.str();
    manifest.push_back(std::move(item));
  }
  std::string mpath = manifest_path.empty() ? (fs::path(out_dir) / "manifest.tsv").string()
                                            : manifest_path;
  write_manifest(mpath, manifest);
  std::cout << "wrote " << num << " mixtures to " << out_dir << " (manifest: " << mpath << ")\n";
  return 0;
}

int cmd_train(const std::string& manifest, const std::string& val_manifest,
              const std::string& out_ckpt, const std::string& cfg_path,
              const std::string& tcfg_path, const std::vector<std::string>& sets,
              const std::vector<std::string>& tsets, const std::string& history_path,
              std::uint64_t seed) {
  auto cfg = load_model_config(cfg_path, sets);
  auto tcfg = load_training_config(tcfg_path, tsets);
  auto data = load_dataset(manifest, cfg.sample_rate);
  Dataset val;
  if (!val_manifest.empty()) val = load_dataset(val_manifest, cfg.sample_rate);
  SepTdaModel<float> model(cfg, seed);
  std::ofstream hist;
  std::ostream* log = &std::cout;
  if (!history_path.empty()) {
    hist.open(history_path);
    if (!hist) throw DataError("train: cannot write " + history_path);
    log = &hist;
  }
  auto history = train(model, data, val, tcfg, log);
  save_checkpoint(out_ckpt, model);
  std::cout << "trained " << (history.empty() ? 0 : history.back().step) << " steps, saved "
            << out_ckpt << "\n";
  return 0;
}

int cmd_separate(const std::string& ckpt, const std::string& input, const std::string& out_dir,
                 int speakers) {
  auto model = load_checkpoint<float>(ckpt);
  auto wav = read_wav(input);
  if (wav.sample_rate != model.config().sample_rate)
    throw DataError("separate: input sample rate " + std::to_string(wav.sample_rate) +
                    " does not match the model");
  auto separate = make_separator(model);
  auto out = separate(wav.samples, speakers);
  if (out.chat == 0) {
    std::cout << "no speakers detected\n";
    return 0;
  }
  fs::create_directories(out_dir);
  auto stem = fs::path(input).stem().string();
  for (std::size_t i = 0; i < out.estimates.size(); ++i) {
    auto path = (fs::path(out_dir) / (stem + "_spk" + std::to_string(i + 1) + ".wav")).string();
    write_wav(path, {out.estimates[i], wav.sample_rate});
    std::cout << path << "\n";
  }
  std::cout << "speakers: " << out.chat << "\n";
  return 0;
}

int cmd_count(const std::string& ckpt, const std::string& input) {
  auto model = load_checkpoint<float>(ckpt);
  auto wav = read_wav(input);
  if (wav.sample_rate != model.config().sample_rate)
    throw DataError("count: input sample rate does not match the model");
  auto out = make_separator(model)(wav.samples, 0);
  std::cout << "speakers: " << out.chat << "\nprobabilities:";
  for (double p : out.probs) std::cout << ' ' << fmt_db(p);
  std::cout << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& manifest, bool auto_count) {
  auto model = load_checkpoint<float>(ckpt);
  auto data = load_dataset(manifest, model.config().sample_rate);
  auto report = evaluate(make_separator(model), data, auto_count);
  std::cout << report.to_string();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-domain multi-speaker speech separation"};
  app.require_subcommand(1);

  std::string cfg_path, tcfg_path, manifest, val_manifest, ckpt, input, out_dir, out_path,
      history_path;
  std::vector<std::string> sets, tsets, sources;
  std::uint64_t seed = 0;
  int speakers = 0, num = 10, min_c = 2, max_c = 5;
  bool auto_count = false;

  auto* params = app.add_subcommand("params", "Print the model parameter count");
  params->add_option("--config", cfg_path, "Model config file (key=value lines)");
  params->add_option("--set", sets, "Override a model config field (key=value)");

  auto* simulate = app.add_subcommand("simulate", "Mix source WAVs into test mixtures");
  simulate->add_option("sources", sources, "Source WAV files")->required();
  simulate->add_option("--out", out_dir, "Output directory")->required();
  simulate->add_option("--manifest", out_path, "Manifest path (default <out>/manifest.tsv)");
  simulate->add_option("--num", num, "Number of mixtures");
  simulate->add_option("--min-speakers", min_c, "Minimum speakers per mixture");
  simulate->add_option("--max-speakers", max_c, "Maximum speakers per mixture");
  simulate->add_option("--seed", seed, "Random seed");

  auto* train = app.add_subcommand("train", "Train a model on a manifest");
  train->add_option("--manifest", manifest, "Training manifest")->required();
  train->add_option("--val-manifest", val_manifest, "Validation manifest");
  train->add_option("--out", out_path, "Output checkpoint")->required();
  train->add_option("--config", cfg_path, "Model config file");
  train->add_option("--train-config", tcfg_path, "Training config file");
  train->add_option("--set", sets, "Override a model config field");
  train->add_option("--train-set", tsets, "Override a training config field");
  train->add_option("--history", history_path, "Write per-step CSV here instead of stdout");
  train->add_option("--seed", seed, "Weight init seed");

  auto* separate = app.add_subcommand("separate", "Separate one mixture WAV");
  separate->add_option("--model", ckpt, "Checkpoint")->required();
  separate->add_option("--input", input, "Mixture WAV")->required();
  separate->add_option("--out", out_dir, "Output directory")->required();
  separate->add_option("--speakers", speakers, "Known speaker count (0 = detect)");

  auto* count = app.add_subcommand("count", "Estimate the speaker count of a WAV");
  count->add_option("--model", ckpt, "Checkpoint")->required();
  count->add_option("--input", input, "Mixture WAV")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a model on a manifest");
  eval->add_option("--model", ckpt, "Checkpoint")->required();
  eval->add_option("--manifest", manifest, "Evaluation manifest")->required();
  eval->add_flag("--auto", auto_count, "Detect speaker counts instead of using the manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (params->parsed()) return cmd_params(cfg_path, sets);
    if (simulate->parsed())
      return cmd_simulate(sources, out_dir, out_path, num, min_c, max_c, seed);
    if (train->parsed())
      return cmd_train(manifest, val_manifest, out_path, cfg_path, tcfg_path, sets, tsets,
                       history_path, seed);
    if (separate->parsed()) return cmd_separate(ckpt, input, out_dir, speakers);
    if (count->parsed()) return cmd_count(ckpt, input);
    if (eval->parsed()) return cmd_eval(ckpt, manifest, auto_count);
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
