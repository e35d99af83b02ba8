#include "ctfvb/prior.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

namespace ctfvb::prior {
namespace {

constexpr char kMagic[4] = {'V', 'P', 'R', 'I'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ofstream& f, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& f, const std::filesystem::path& path) {
  unsigned char b[4];
  if (!f.read(reinterpret_cast<char*>(b), 4)) throw Error(path.string() + ": truncated VPRI header");
  return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
         (std::uint32_t{b[3]} << 24);
}

}  // namespace

PriorPrecision from_magnitude(const RealGrid& mag, double floor) {
  if (!(floor > 0.0) || !std::isfinite(floor)) throw Error("prior floor must be positive and finite");
  PriorPrecision p{RealGrid(mag.rows(), mag.cols()), floor};
  auto in = mag.flat();
  auto out = p.alpha.flat();
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double m = in[i];
    if (!std::isfinite(m) || m < 0.0) throw Error("prior magnitudes must be finite and nonnegative");
    out[i] = 1.0 / std::max(m * m, floor);
  }
  return p;
}

RealGrid magnitude(const Spectrogram& spec) {
  RealGrid m(spec.bins(), spec.frames());
  auto in = spec.data.flat();
  auto out = m.flat();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::abs(in[i]);
  return m;
}

PriorPrecision oracle_from_reference(const Waveform& clean, const StftConfig& cfg, double floor) {
  return from_magnitude(magnitude(stft::forward(clean, cfg)), floor);
}

PriorPrecision oracle_from_reference(const Waveform& clean, const Spectrogram& observation, double floor) {
  validate(clean);
  const std::size_t target = observation.source_length;
  const std::size_t diff = clean.size() > target ? clean.size() - target : target - clean.size();
  if (diff > observation.config.hop)
    throw Error("reference length " + std::to_string(clean.size()) + " differs from observation length " +
                std::to_string(target) + " by more than one frame");
  Waveform aligned{std::vector<double>(target, 0.0), clean.sample_rate};
  const std::size_t n = std::min(target, clean.size());
  for (std::size_t i = 0; i < n; ++i) aligned.samples[i] = clean.samples[i] / observation.scale;
  auto p = oracle_from_reference(aligned, observation.config, floor);
  if (p.alpha.cols() != observation.frames() || p.alpha.rows() != observation.bins())
    throw Error("reference spectrogram shape does not match observation");
  return p;
}

void save_prior_file(const std::filesystem::path& path, const RealGrid& mag) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f.write(kMagic, 4);
  write_u32(f, kVersion);
  write_u32(f, static_cast<std::uint32_t>(mag.rows()));
  write_u32(f, static_cast<std::uint32_t>(mag.cols()));
  for (double v : mag.flat()) {
    const float x = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &x, 4);
    write_u32(f, bits);
  }
  if (!f) throw Error("write failed: " + path.string());
}

RealGrid load_prior_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open prior file " + path.string());
  char magic[4];
  if (!f.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw Error(path.string() + ": bad magic, not a VPRI prior file");
  const auto version = read_u32(f, path);
  if (version != kVersion) throw Error(path.string() + ": unsupported VPRI version " + std::to_string(version));
  const auto rows = read_u32(f, path);
  const auto cols = read_u32(f, path);
  RealGrid mag(rows, cols);
  for (double& v : mag.flat()) {
    const auto bits = read_u32(f, path);
    float x;
    std::memcpy(&x, &bits, 4);
    v = x;
  }
  return mag;
}

RealGrid load_prior_file(const std::filesystem::path& path, std::size_t bins, std::size_t frames) {
  auto mag = load_prior_file(path);
  if (mag.rows() != bins || mag.cols() != frames)
    throw Error(path.string() + ": prior is " + std::to_string(mag.rows()) + "x" + std::to_string(mag.cols()) +
                " but the observation STFT is " + std::to_string(bins) + "x" + std::to_string(frames));
  return mag;
}

}  // namespace ctfvb::prior
