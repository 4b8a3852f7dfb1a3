// Tab-separated dataset manifests: mixture path, reference paths, optional
// trailing key=value metadata fields.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "septda/training.hpp"

namespace septda {

struct ManifestItem {
  std::string mixture;
  std::vector<std::string> references;
  std::map<std::string, std::string> meta;
};

std::vector<ManifestItem> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ManifestItem>& items);

// Reads every WAV referenced by the manifest. Relative paths resolve against
// the manifest's directory. Verifies a common sample rate and that each
// reference matches its mixture length.
Dataset load_dataset(const std::string& manifest_path, int expected_sample_rate);

}  // namespace septda
