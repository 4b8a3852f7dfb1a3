// WAV PCM 16-bit mono I/O.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace septda {

struct AudioSignal {
  std::vector<double> samples;  // nominally in [-1, 1)
  int sample_rate = 8000;
};

// Thrown for malformed or unsupported files and data.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

AudioSignal read_wav(const std::string& path);
void write_wav(const std::string& path, const AudioSignal& signal);

}  // namespace septda
