#include "ctfvb/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace ctfvb {

PipelineConfig::PipelineConfig() { rir.crop_margin = 2 * stft.win_length; }

PipelineConfig PipelineConfig::synced() const {
  PipelineConfig c = *this;
  c.rir.skip_low_bands = vem.skip_low_bands;
  c.rir.threads = vem.threads;
  return c;
}

void PipelineConfig::validate() const {
  stft.validate();
  vem.validate();
  rir.sweep.validate();
  if (rir.sweep.sample_rate != 16000) throw Error("only 16 kHz processing is supported");
  if (!(prior_floor > 0.0)) throw Error("prior_floor must be positive");
}

namespace config {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view key, std::string_view v) {
  const std::string s(v);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw Error("config: bad number for " + std::string(key) + ": '" + s + "'");
  return out;
}

std::uint64_t parse_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc{} || r.ptr != v.data() + v.size())
    throw Error("config: bad unsigned integer for " + std::string(key) + ": '" + std::string(v) + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error("config: bad boolean for " + std::string(key) + ": '" + std::string(v) + "'");
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Field {
  std::string name;
  std::function<void(PipelineConfig&, std::string_view)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename T>
Field size_field(std::string name, T PipelineConfig::*outer, std::size_t T::*member) {
  return {name,
          [=](PipelineConfig& c, std::string_view v) { (c.*outer).*member = parse_uint(name, v); },
          [=](const PipelineConfig& c) { return std::to_string((c.*outer).*member); }};
}

template <typename T>
Field double_field(std::string name, T PipelineConfig::*outer, double T::*member) {
  return {name,
          [=](PipelineConfig& c, std::string_view v) { (c.*outer).*member = parse_double(name, v); },
          [=](const PipelineConfig& c) { return fmt_double((c.*outer).*member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = [] {
    std::vector<Field> v;
    v.push_back(size_field("win_length", &PipelineConfig::stft, &StftConfig::win_length));
    v.push_back(size_field("hop", &PipelineConfig::stft, &StftConfig::hop));
    v.push_back(size_field("ctf_len", &PipelineConfig::vem, &VemConfig::ctf_len));
    v.push_back(double_field("lambda", &PipelineConfig::vem, &VemConfig::lambda));
    v.push_back(size_field("iters", &PipelineConfig::vem, &VemConfig::max_iters));
    v.push_back(size_field("skip_bands", &PipelineConfig::vem, &VemConfig::skip_low_bands));
    v.push_back(double_field("delta_cap", &PipelineConfig::vem, &VemConfig::delta_cap));
    v.push_back(double_field("jitter", &PipelineConfig::vem, &VemConfig::jitter));
    v.push_back(double_field("power_floor", &PipelineConfig::vem, &VemConfig::power_floor));
    v.push_back({"threads",
                 [](PipelineConfig& c, std::string_view s) { c.vem.threads = static_cast<int>(parse_uint("threads", s)); },
                 [](const PipelineConfig& c) { return std::to_string(c.vem.threads); }});
    v.push_back({"prior_floor", [](PipelineConfig& c, std::string_view s) { c.prior_floor = parse_double("prior_floor", s); },
                 [](const PipelineConfig& c) { return fmt_double(c.prior_floor); }});
    v.push_back({"seed", [](PipelineConfig& c, std::string_view s) { c.seed = parse_uint("seed", s); },
                 [](const PipelineConfig& c) { return std::to_string(c.seed); }});
    v.push_back({"sweep_f1", [](PipelineConfig& c, std::string_view s) { c.rir.sweep.f1 = parse_double("sweep_f1", s); },
                 [](const PipelineConfig& c) { return fmt_double(c.rir.sweep.f1); }});
    v.push_back({"sweep_f2", [](PipelineConfig& c, std::string_view s) { c.rir.sweep.f2 = parse_double("sweep_f2", s); },
                 [](const PipelineConfig& c) { return fmt_double(c.rir.sweep.f2); }});
    v.push_back({"sweep_duration",
                 [](PipelineConfig& c, std::string_view s) { c.rir.sweep.duration = parse_double("sweep_duration", s); },
                 [](const PipelineConfig& c) { return fmt_double(c.rir.sweep.duration); }});
    v.push_back({"sweep_fade_in",
                 [](PipelineConfig& c, std::string_view s) { c.rir.sweep.fade_in = parse_uint("sweep_fade_in", s); },
                 [](const PipelineConfig& c) { return std::to_string(c.rir.sweep.fade_in); }});
    v.push_back({"sweep_fade_out",
                 [](PipelineConfig& c, std::string_view s) { c.rir.sweep.fade_out = parse_uint("sweep_fade_out", s); },
                 [](const PipelineConfig& c) { return std::to_string(c.rir.sweep.fade_out); }});
    v.push_back(size_field("crop_margin", &PipelineConfig::rir, &RirConfig::crop_margin));
    v.push_back({"zero_skipped_bands",
                 [](PipelineConfig& c, std::string_view s) { c.rir.zero_skipped_bands = parse_bool("zero_skipped_bands", s); },
                 [](const PipelineConfig& c) { return std::string(c.rir.zero_skipped_bands ? "true" : "false"); }});
    v.push_back(double_field("rt60_start_drop_db", &PipelineConfig::acoustics, &AcousticsConfig::start_drop_db));
    v.push_back(double_field("rt60_max_start_ms", &PipelineConfig::acoustics, &AcousticsConfig::max_start_ms));
    v.push_back(double_field("rt60_fit_drop_db", &PipelineConfig::acoustics, &AcousticsConfig::fit_drop_db));
    v.push_back(double_field("rt60_stride_ms", &PipelineConfig::acoustics, &AcousticsConfig::stride_ms));
    v.push_back(double_field("edc_floor_db", &PipelineConfig::acoustics, &AcousticsConfig::edc_floor_db));
    v.push_back(double_field("drr_window_ms", &PipelineConfig::acoustics, &AcousticsConfig::direct_window_ms));
    v.push_back(double_field("drr_cap_db", &PipelineConfig::acoustics, &AcousticsConfig::drr_cap_db));
    return v;
  }();
  return f;
}

}  // namespace

const std::vector<std::string>& keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.name);
    return out;
  }();
  return k;
}

void set(PipelineConfig& cfg, std::string_view key, std::string_view value) {
  for (const auto& f : fields()) {
    if (f.name == key) {
      f.set(cfg, trim(value));
      return;
    }
  }
  throw Error("config: unknown key '" + std::string(key) + "'");
}

std::string to_text(const PipelineConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += f.name + " = " + f.get(cfg) + "\n";
  return out;
}

void apply_text(PipelineConfig& cfg, std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw Error("config line " + std::to_string(lineno) + ": expected key = value");
    set(cfg, trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
  }
}

void apply_file(PipelineConfig& cfg, const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  apply_text(cfg, ss.str());
}

}  // namespace config
}  // namespace ctfvb
