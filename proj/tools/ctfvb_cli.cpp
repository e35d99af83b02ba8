#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "ctfvb/config.hpp"
#include "ctfvb/eval.hpp"
#include "ctfvb/pipeline.hpp"
#include "ctfvb/simulate.hpp"
#include "ctfvb/wav.hpp"

using namespace ctfvb;
namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config_file;
  std::optional<std::size_t> iters;
  std::optional<std::size_t> ctf_len;
  std::optional<double> lambda;
  std::optional<std::size_t> skip_bands;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  bool dump_config = false;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config_file, "key = value config file")->check(CLI::ExistingFile);
  app->add_option("--iters", o.iters, "VEM iterations");
  app->add_option("--ctf-len", o.ctf_len, "CTF filter length in frames");
  app->add_option("--lambda", o.lambda, "EMA smoothing factor in [0, 1)");
  app->add_option("--skip-bands", o.skip_bands, "lowest bands left out of inference");
  app->add_option("--threads", o.threads, "worker threads (0 = all cores)");
  app->add_option("--seed", o.seed, "random seed");
  app->add_flag("--dump-config", o.dump_config, "print the effective config and exit");
}

// Defaults, then the config file, then explicit flags.
PipelineConfig resolve(const CommonOptions& o, std::size_t default_iters) {
  PipelineConfig c;
  c.vem.max_iters = default_iters;
  if (!o.config_file.empty()) config::apply_file(c, o.config_file);
  if (o.iters) c.vem.max_iters = *o.iters;
  if (o.ctf_len) c.vem.ctf_len = *o.ctf_len;
  if (o.lambda) c.vem.lambda = *o.lambda;
  if (o.skip_bands) c.vem.skip_low_bands = *o.skip_bands;
  if (o.threads) c.vem.threads = *o.threads;
  if (o.seed) c.seed = *o.seed;
  c.validate();
  return c;
}

std::uint64_t fnv1a(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::uint64_t h = 1469598103934665603ULL;
  char buf[65536];
  while (f.read(buf, sizeof buf) || f.gcount() > 0) {
    for (std::streamsize i = 0; i < f.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

struct RunManifest {
  nlohmann::ordered_json j;

  RunManifest(const std::string& command, const PipelineConfig& cfg) {
    j["command"] = command;
    j["config"] = config::to_text(cfg);
    j["inputs"] = nlohmann::ordered_json::object();
    j["outputs"] = nlohmann::ordered_json::object();
    j["timings_s"] = nlohmann::ordered_json::object();
  }
  void input(const std::string& key, const fs::path& p) { j["inputs"][key] = p.string(); }
  void output(const std::string& key, const fs::path& p) {
    j["outputs"][key] = {{"path", p.string()}, {"fnv1a64", hex64(fnv1a(p))}};
  }
  void timing(const std::string& stage, double s) { j["timings_s"][stage] = s; }
  void write(const fs::path& p) const {
    std::ofstream f(p);
    if (!f) throw Error("cannot write " + p.string());
    f << j.dump(2) << '\n';
  }
};

struct PriorOptions {
  std::string oracle;
  std::string prior;
};

void add_prior(CLI::App* app, PriorOptions& p) {
  auto* g = app->add_option_group("prior", "source of the clean-speech prior");
  g->add_option("--oracle", p.oracle, "clean direct-path reference WAV")->check(CLI::ExistingFile);
  g->add_option("--prior", p.prior, "VPRI prior magnitude file")->check(CLI::ExistingFile);
  g->require_option(1);
}

PriorSource load_prior(const PriorOptions& p, RunManifest& m) {
  if (!p.oracle.empty()) {
    m.input("oracle", p.oracle);
    return OracleReference{wav::read(p.oracle)};
  }
  m.input("prior", p.prior);
  return PriorFile{p.prior};
}

wav::Format parse_format(const std::string& s) {
  if (s == "float32") return wav::Format::float32;
  if (s == "pcm16") return wav::Format::pcm16;
  throw Error("unknown WAV format '" + s + "'");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Rows keyed by the "id" column; every row is a column -> value map.
std::map<std::string, std::map<std::string, std::string>> read_keyed_csv(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw Error("cannot open " + p.string());
  std::string line;
  if (!std::getline(f, line)) throw Error(p.string() + ": empty CSV");
  const auto header = split_csv_line(line);
  if (std::find(header.begin(), header.end(), "id") == header.end()) throw Error(p.string() + ": no id column");
  std::map<std::string, std::map<std::string, std::string>> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) row[header[i]] = cells[i];
    rows[row["id"]] = row;
  }
  return rows;
}

double number(const std::map<std::string, std::string>& row, const std::string& key, const std::string& where) {
  const auto it = row.find(key);
  if (it == row.end() || it->second.empty()) throw Error(where + ": missing " + key);
  std::size_t used = 0;
  const double v = std::stod(it->second, &used);
  if (used != it->second.size() || !std::isfinite(v)) throw Error(where + ": bad " + key + " '" + it->second + "'");
  return v;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& cell : split_csv_line(s)) {
    std::size_t used = 0;
    out.push_back(std::stod(cell, &used));
    if (used != cell.size()) throw Error("bad number list '" + s + "'");
  }
  if (out.empty()) throw Error("empty number list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint speech dereverberation and blind room impulse response identification"};
  app.require_subcommand(1);

  // dereverb
  CommonOptions der_common;
  PriorOptions der_prior;
  std::string der_in, der_out, der_trace, der_manifest, der_format = "float32";
  auto* der = app.add_subcommand("dereverb", "estimate the direct-path speech");
  der->add_option("input", der_in, "reverberant 16 kHz mono WAV")->check(CLI::ExistingFile);
  der->add_option("-o,--output", der_out, "enhanced WAV");
  der->add_option("--trace", der_trace, "per-band likelihood trace CSV");
  der->add_option("--manifest", der_manifest, "run manifest JSON");
  der->add_option("--format", der_format, "output sample format: float32 or pcm16");
  add_common(der, der_common);
  add_prior(der, der_prior);

  // identify-rir
  CommonOptions rir_common;
  PriorOptions rir_prior;
  std::string rir_in, rir_out, rir_params, rir_filter, rir_trace, rir_manifest, rir_id;
  auto* idr = app.add_subcommand("identify-rir", "estimate the RIR, RT60 and DRR");
  idr->add_option("input", rir_in, "reverberant 16 kHz mono WAV")->check(CLI::ExistingFile);
  idr->add_option("-o,--output", rir_out, "estimated RIR WAV");
  idr->add_option("--params", rir_params, "CSV with id,rt60,drr (default: output with .csv)");
  idr->add_option("--id", rir_id, "row id in the params CSV (default: input file stem)");
  idr->add_option("--filter", rir_filter, "CTF filter CSV");
  idr->add_option("--trace", rir_trace, "per-band likelihood trace CSV");
  idr->add_option("--manifest", rir_manifest, "run manifest JSON");
  add_common(idr, rir_common);
  add_prior(idr, rir_prior);

  // rt60 / drr
  std::string rt_in, drr_in;
  CommonOptions rt_common, drr_common;
  auto* rt = app.add_subcommand("rt60", "RT60 of an impulse response WAV");
  rt->add_option("rir", rt_in, "impulse response WAV")->check(CLI::ExistingFile);
  add_common(rt, rt_common);
  auto* drr = app.add_subcommand("drr", "DRR of an impulse response WAV");
  drr->add_option("rir", drr_in, "impulse response WAV")->check(CLI::ExistingFile);
  add_common(drr, drr_common);

  // simulate
  CommonOptions sim_common;
  std::string sim_dir, sim_rt = "0.3,0.5,0.8,1.0", sim_drr = "-5,0,5,10";
  std::size_t sim_count = 20;
  double sim_snr = 20.0, sim_seconds = 3.0;
  auto* sim = app.add_subcommand("simulate", "generate reverberant test material");
  sim->add_option("-o,--out-dir", sim_dir, "output directory");
  sim->add_option("--count", sim_count, "number of cases");
  sim->add_option("--rt60", sim_rt, "comma-separated RT60 grid in seconds");
  sim->add_option("--drr", sim_drr, "comma-separated DRR grid in dB");
  sim->add_option("--snr", sim_snr, "white-noise SNR in dB (inf for none)");
  sim->add_option("--seconds", sim_seconds, "source duration");
  add_common(sim, sim_common);

  // eval
  CommonOptions ev_common;
  std::string ev_manifest, ev_report;
  std::vector<std::string> ev_estimates;
  auto* ev = app.add_subcommand("eval", "score RT60/DRR estimates against a simulate manifest");
  ev->add_option("--manifest", ev_manifest, "manifest.csv written by simulate")->check(CLI::ExistingFile);
  ev->add_option("--estimates", ev_estimates, "CSV files with id,rt60,drr and optional enhanced column")
      ->check(CLI::ExistingFile);
  ev->add_option("--report", ev_report, "per-item CSV report");
  add_common(ev, ev_common);

  CLI11_PARSE(app, argc, argv);

  try {
    auto dump = [](const CommonOptions& o, const PipelineConfig& c) {
      if (o.dump_config) std::cout << config::to_text(c);
      return o.dump_config;
    };
    auto require = [](const std::string& v, const char* what) {
      if (v.empty()) throw Error(std::string("missing ") + what);
    };

    if (der->parsed()) {
      const auto cfg = resolve(der_common, kDereverbIters);
      if (dump(der_common, cfg)) return 0;
      require(der_in, "input WAV");
      require(der_out, "--output");
      const auto format = parse_format(der_format);
      RunManifest m("dereverb", cfg);
      Stopwatch sw;
      m.input("reverberant", der_in);
      const auto input = wav::read(der_in);
      const auto prior = load_prior(der_prior, m);
      m.timing("read", sw.lap());
      const auto out = pipeline::dereverb(input, prior, cfg);
      m.timing("inference", sw.lap());
      wav::write(der_out, out.enhanced, format);
      m.output("enhanced", der_out);
      if (!der_trace.empty()) {
        vem::write_trace_csv(der_trace, out.vem);
        m.output("trace", der_trace);
      }
      m.timing("write", sw.lap());
      if (!der_manifest.empty()) m.write(der_manifest);
      if (out.vem.solver_warnings > 0)
        std::cerr << "warning: " << out.vem.solver_warnings << " filter solves needed extra regularisation\n";
      return 0;
    }

    if (idr->parsed()) {
      const auto cfg = resolve(rir_common, kRirIters);
      if (dump(rir_common, cfg)) return 0;
      require(rir_in, "input WAV");
      require(rir_out, "--output");
      if (rir_params.empty()) rir_params = fs::path(rir_out).replace_extension(".csv").string();
      if (rir_id.empty()) rir_id = fs::path(rir_in).stem().string();
      RunManifest m("identify-rir", cfg);
      Stopwatch sw;
      m.input("reverberant", rir_in);
      const auto input = wav::read(rir_in);
      const auto prior = load_prior(rir_prior, m);
      m.timing("read", sw.lap());
      const auto out = pipeline::identify_rir(input, prior, cfg);
      m.timing("inference", sw.lap());
      wav::write(rir_out, out.rir.waveform);
      m.output("rir", rir_out);
      {
        std::ofstream f(rir_params);
        if (!f) throw Error("cannot write " + rir_params);
        f << "id,rt60,drr,rt60_error,drr_error\n";
        f << rir_id << ',' << (out.rt60 ? fmt(out.rt60->rt60) : "") << ',' << (out.drr ? fmt(out.drr->drr) : "") << ','
          << out.rt60_error << ',' << out.drr_error << '\n';
      }
      m.output("params", rir_params);
      if (!rir_filter.empty()) {
        vem::write_filter_csv(rir_filter, out.vem.filter);
        m.output("filter", rir_filter);
      }
      if (!rir_trace.empty()) {
        vem::write_trace_csv(rir_trace, out.vem);
        m.output("trace", rir_trace);
      }
      m.timing("write", sw.lap());
      if (!rir_manifest.empty()) m.write(rir_manifest);
      std::cout << "rt60 " << (out.rt60 ? fmt(out.rt60->rt60) + " s" : out.rt60_error) << "\n";
      std::cout << "drr " << (out.drr ? fmt(out.drr->drr) + " dB" : out.drr_error) << "\n";
      return 0;
    }

    if (rt->parsed() || drr->parsed()) {
      const bool is_rt = rt->parsed();
      const auto& common = is_rt ? rt_common : drr_common;
      const auto cfg = resolve(common, kDereverbIters);
      if (dump(common, cfg)) return 0;
      const auto& path = is_rt ? rt_in : drr_in;
      require(path, "impulse response WAV");
      const auto h = wav::read(path, 0);
      if (is_rt)
        std::cout << fmt(acoustics::estimate_rt60(h, cfg.acoustics).rt60) << '\n';
      else
        std::cout << fmt(acoustics::estimate_drr(h, cfg.acoustics).drr) << '\n';
      return 0;
    }

    if (sim->parsed()) {
      const auto cfg = resolve(sim_common, kDereverbIters);
      if (dump(sim_common, cfg)) return 0;
      require(sim_dir, "--out-dir");
      const auto rts = parse_list(sim_rt), drrs = parse_list(sim_drr);
      const fs::path root(sim_dir);
      for (const char* sub : {"reverberant", "reference", "rir"}) fs::create_directories(root / sub);
      std::ofstream man(root / "manifest.csv");
      if (!man) throw Error("cannot write manifest in " + sim_dir);
      man << "id,reverberant,reference,rir,rt60_spec,drr_spec,snr_db,rt60_true,drr_true\n";
      const std::uint64_t base = cfg.seed;
      for (std::size_t i = 0; i < sim_count; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "case%03zu", i);
        SynthRirSpec spec;
        spec.rt60 = rts[i % rts.size()];
        spec.drr = drrs[(i / rts.size() + i) % drrs.size()];
        spec.seed = base * 1000003ULL + 3 * i;
        const auto h = simulate::synth_rir(spec);
        const auto s = simulate::speech_like(sim_seconds, 16000, base * 1000003ULL + 3 * i + 1);
        std::optional<Waveform> noise;
        if (std::isfinite(sim_snr))
          noise = simulate::white_noise(s.size() + h.size(), 16000, base * 1000003ULL + 3 * i + 2);
        const auto y = simulate::mix(s, h, noise, sim_snr);
        const auto ref = simulate::direct_path_reference(s, h);
        const std::string name = std::string(id) + ".wav";
        wav::write(root / "reverberant" / name, y);
        wav::write(root / "reference" / name, ref);
        wav::write(root / "rir" / name, h);
        const auto t60 = acoustics::estimate_rt60(h, cfg.acoustics);
        const auto d = acoustics::estimate_drr(h, cfg.acoustics);
        man << id << ",reverberant/" << name << ",reference/" << name << ",rir/" << name << ',' << fmt(spec.rt60)
            << ',' << fmt(spec.drr) << ',' << fmt(sim_snr) << ',' << fmt(t60.rt60) << ',' << fmt(d.drr) << '\n';
      }
      std::cout << "wrote " << sim_count << " cases to " << sim_dir << '\n';
      return 0;
    }

    if (ev->parsed()) {
      const auto cfg = resolve(ev_common, kDereverbIters);
      if (dump(ev_common, cfg)) return 0;
      require(ev_manifest, "--manifest");
      if (ev_estimates.empty()) throw Error("missing --estimates");
      const auto truth = read_keyed_csv(ev_manifest);
      std::map<std::string, std::map<std::string, std::string>> est;
      for (const auto& p : ev_estimates)
        for (auto& [k, v] : read_keyed_csv(p)) est[k] = v;
      const fs::path root = fs::path(ev_manifest).parent_path();

      std::vector<AcousticPair> e, t;
      std::vector<std::string> ids;
      std::vector<double> lsds;
      bool failed = false;
      for (const auto& [id, row] : est) {
        const auto it = truth.find(id);
        if (it == truth.end()) {
          std::cerr << "error: " << id << " is not in the manifest\n";
          failed = true;
          continue;
        }
        try {
          e.push_back({number(row, "rt60", id), number(row, "drr", id)});
          t.push_back({number(it->second, "rt60_true", id), number(it->second, "drr_true", id)});
          ids.push_back(id);
          const auto enh = row.find("enhanced");
          if (enh != row.end() && !enh->second.empty()) {
            const auto a = wav::read(enh->second);
            const auto b = wav::read(root / it->second.at("reference"));
            Waveform bt = b;
            bt.samples.resize(a.size(), 0.0);
            lsds.push_back(eval::lsd(stft::forward(a, cfg.stft), stft::forward(bt, cfg.stft)));
          }
        } catch (const std::exception& ex) {
          std::cerr << "error: " << id << ": " << ex.what() << '\n';
          failed = true;
          if (e.size() > t.size()) e.pop_back();
        }
      }
      if (e.empty()) throw Error("no item could be scored");
      auto report = eval::score_rir_batch(e, t);
      if (!lsds.empty()) {
        double sum = 0.0;
        for (double v : lsds) sum += v;
        report.lsd = sum / double(lsds.size());
        report.lsd_pairs = lsds.size();
      }
      std::cout << eval::format_report(report);
      if (!ev_report.empty()) {
        std::ofstream f(ev_report);
        if (!f) throw Error("cannot write " + ev_report);
        f << "id,rt60_est,rt60_true,drr_est,drr_true\n";
        for (std::size_t i = 0; i < ids.size(); ++i)
          f << ids[i] << ',' << fmt(e[i].rt60) << ',' << fmt(t[i].rt60) << ',' << fmt(e[i].drr) << ','
            << fmt(t[i].drr) << '\n';
      }
      return failed ? 2 : 0;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}
