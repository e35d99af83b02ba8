#include "ctfvb/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace ctfvb::wav {
namespace {

static_assert(std::endian::native == std::endian::little, "WAV codec assumes a little-endian host");

constexpr std::uint16_t kPcm = 1;
constexpr std::uint16_t kFloat = 3;

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

template <typename T>
T get(const std::vector<std::uint8_t>& in, std::size_t pos) {
  if (pos + sizeof(T) > in.size()) throw Error("WAV: truncated file");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  return v;
}

bool tag_at(const std::vector<std::uint8_t>& in, std::size_t pos, const char* tag) {
  return pos + 4 <= in.size() && std::memcmp(in.data() + pos, tag, 4) == 0;
}

}  // namespace

std::vector<std::uint8_t> encode(const Waveform& wave, Format format) {
  const std::uint16_t bits = format == Format::pcm16 ? 16 : 32;
  const std::uint16_t block = bits / 8;
  const auto data_bytes = static_cast<std::uint32_t>(wave.samples.size() * block);

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put<std::uint32_t>(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put<std::uint32_t>(out, 16);
  put<std::uint16_t>(out, format == Format::pcm16 ? kPcm : kFloat);
  put<std::uint16_t>(out, 1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(wave.sample_rate));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(wave.sample_rate) * block);
  put<std::uint16_t>(out, block);
  put<std::uint16_t>(out, bits);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put<std::uint32_t>(out, data_bytes);
  for (double v : wave.samples) {
    if (format == Format::pcm16) {
      const double c = std::clamp(v, -1.0, 1.0) * 32767.0;
      put<std::int16_t>(out, static_cast<std::int16_t>(std::lround(c)));
    } else {
      put<float>(out, static_cast<float>(v));
    }
  }
  return out;
}

Waveform decode(const std::vector<std::uint8_t>& in, int required_rate) {
  if (!tag_at(in, 0, "RIFF") || !tag_at(in, 8, "WAVE")) throw Error("WAV: not a RIFF/WAVE file");
  std::size_t pos = 12;
  std::uint16_t fmt = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  while (pos + 8 <= in.size()) {
    const auto len = get<std::uint32_t>(in, pos + 4);
    const std::size_t body = pos + 8;
    if (tag_at(in, pos, "fmt ")) {
      fmt = get<std::uint16_t>(in, body);
      channels = get<std::uint16_t>(in, body + 2);
      rate = get<std::uint32_t>(in, body + 4);
      bits = get<std::uint16_t>(in, body + 14);
      have_fmt = true;
    } else if (tag_at(in, pos, "data")) {
      if (!have_fmt) throw Error("WAV: data chunk before fmt chunk");
      if (channels != 1) throw Error("WAV: only mono input is supported (got " + std::to_string(channels) + " channels)");
      if (required_rate > 0 && rate != static_cast<std::uint32_t>(required_rate))
        throw Error("WAV: sample rate " + std::to_string(rate) + " Hz is not supported; expected " +
                    std::to_string(required_rate) + " Hz (no resampling)");
      Waveform w;
      w.sample_rate = static_cast<int>(rate);
      const std::size_t avail = std::min<std::size_t>(len, in.size() - body);
      if (fmt == kPcm && bits == 16) {
        w.samples.resize(avail / 2);
        for (std::size_t i = 0; i < w.samples.size(); ++i)
          w.samples[i] = get<std::int16_t>(in, body + 2 * i) / 32768.0;
      } else if (fmt == kFloat && bits == 32) {
        w.samples.resize(avail / 4);
        for (std::size_t i = 0; i < w.samples.size(); ++i) w.samples[i] = get<float>(in, body + 4 * i);
      } else {
        throw Error("WAV: unsupported encoding (format " + std::to_string(fmt) + ", " + std::to_string(bits) +
                    " bits); use 16-bit PCM or 32-bit float");
      }
      return w;
    }
    pos = body + len + (len & 1u);
  }
  throw Error("WAV: missing data chunk");
}

Waveform read(const std::filesystem::path& path, int required_rate) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  try {
    return decode(bytes, required_rate);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write(const std::filesystem::path& path, const Waveform& wave, Format format) {
  const auto bytes = encode(wave, format);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("write failed: " + path.string());
}

}  // namespace ctfvb::wav
