#include "septda/audio.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace septda {

namespace {

std::uint32_t rd_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t rd_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
void wr_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void wr_u16(std::string& s, std::uint16_t v) {
  for (int i = 0; i < 2; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace

AudioSignal read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("wav: cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw DataError("wav: not a RIFF/WAVE file: " + path);

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0, format = 0;
  std::uint32_t rate = 0;
  AudioSignal out;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const char* id = reinterpret_cast<const char*>(buf.data() + pos);
    std::uint32_t len = rd_u32(buf.data() + pos + 4);
    std::size_t body = pos + 8;
    if (body + len > buf.size()) throw DataError("wav: truncated chunk in " + path);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16) throw DataError("wav: malformed fmt chunk in " + path);
      format = rd_u16(buf.data() + body);
      channels = rd_u16(buf.data() + body + 2);
      rate = rd_u32(buf.data() + body + 4);
      bits = rd_u16(buf.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!have_fmt) throw DataError("wav: data chunk before fmt in " + path);
      if (format != 1) throw DataError("wav: unsupported format (PCM required) in " + path);
      if (channels != 1) throw DataError("wav: multichannel input not supported: " + path);
      if (bits != 16) throw DataError("wav: only 16-bit PCM supported: " + path);
      if (len == 0) throw DataError("wav: zero-length data chunk in " + path);
      if (len % 2 != 0) throw DataError("wav: odd data chunk size in " + path);
      out.samples.resize(len / 2);
      for (std::size_t i = 0; i < out.samples.size(); ++i) {
        std::int16_t v;
        std::memcpy(&v, buf.data() + body + 2 * i, 2);
        out.samples[i] = static_cast<double>(v) / 32768.0;
      }
      out.sample_rate = static_cast<int>(rate);
      have_data = true;
    }
    pos = body + len + (len & 1);
  }
  if (!have_data) throw DataError("wav: no data chunk in " + path);
  return out;
}

void write_wav(const std::string& path, const AudioSignal& signal) {
  if (signal.samples.empty()) throw DataError("wav: refusing to write empty signal");
  std::string body;
  body.reserve(44 + 2 * signal.samples.size());
  const std::uint32_t data_len = static_cast<std::uint32_t>(2 * signal.samples.size());
  body += "RIFF";
  wr_u32(body, 36 + data_len);
  body += "WAVEfmt ";
  wr_u32(body, 16);
  wr_u16(body, 1);  // PCM
  wr_u16(body, 1);  // mono
  wr_u32(body, static_cast<std::uint32_t>(signal.sample_rate));
  wr_u32(body, static_cast<std::uint32_t>(signal.sample_rate) * 2);
  wr_u16(body, 2);
  wr_u16(body, 16);
  body += "data";
  wr_u32(body, data_len);
  for (double s : signal.samples) {
    double v = std::round(s * 32768.0);
    v = std::min(32767.0, std::max(-32768.0, v));
    wr_u16(body, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("wav: cannot write " + path);
  f.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!f) throw DataError("wav: short write to " + path);
}

}  // namespace septda
