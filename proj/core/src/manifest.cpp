#include "septda/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "septda/audio.hpp"

namespace septda {

namespace fs = std::filesystem;

std::vector<ManifestItem> read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("manifest: cannot open " + path);
  std::vector<ManifestItem> items;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    std::string field;
    ManifestItem item;
    while (std::getline(is, field, '\t')) {
      auto eq = field.find('=');
      if (eq != std::string::npos) {
        item.meta[field.substr(0, eq)] = field.substr(eq + 1);
      } else if (item.mixture.empty()) {
        item.mixture = field;
      } else {
        item.references.push_back(field);
      }
    }
    if (item.mixture.empty() || item.references.empty())
      throw DataError("manifest: line " + std::to_string(lineno) +
                      " needs a mixture and at least one reference");
    items.push_back(std::move(item));
  }
  return items;
}

void write_manifest(const std::string& path, const std::vector<ManifestItem>& items) {
  std::ofstream f(path);
  if (!f) throw DataError("manifest: cannot write " + path);
  for (const auto& item : items) {
    f << item.mixture;
    for (const auto& r : item.references) f << '\t' << r;
    for (const auto& [k, v] : item.meta) f << '\t' << k << '=' << v;
    f << '\n';
  }
  if (!f) throw DataError("manifest: short write to " + path);
}

Dataset load_dataset(const std::string& manifest_path, int expected_sample_rate) {
  auto base = fs::path(manifest_path).parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };
  Dataset data;
  for (const auto& item : read_manifest(manifest_path)) {
    TrainItem ti;
    auto mix = read_wav(resolve(item.mixture));
    if (mix.sample_rate != expected_sample_rate)
      throw DataError("manifest: " + item.mixture + " has sample rate " +
                      std::to_string(mix.sample_rate) + ", expected " +
                      std::to_string(expected_sample_rate));
    ti.mixture = std::move(mix.samples);
    for (const auto& r : item.references) {
      auto ref = read_wav(resolve(r));
      if (ref.sample_rate != expected_sample_rate)
        throw DataError("manifest: " + r + " has an unexpected sample rate");
      if (ref.samples.size() != ti.mixture.size())
        throw DataError("manifest: " + r + " length differs from its mixture");
      ti.references.push_back(std::move(ref.samples));
    }
    data.push_back(std::move(ti));
  }
  return data;
}

}  // namespace septda
