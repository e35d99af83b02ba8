#include "ctfvb/pipeline.hpp"

namespace ctfvb::pipeline {
namespace {

struct Analysed {
  Spectrogram x;
  PriorPrecision prior;
};

// Prior problems surface before any inference runs.
Analysed analyse(const Waveform& input, const PriorSource& source, const PipelineConfig& cfg) {
  cfg.validate();
  validate(input);
  if (input.sample_rate != cfg.rir.sweep.sample_rate)
    throw Error("input sample rate " + std::to_string(input.sample_rate) + " Hz is not supported");
  Spectrogram x = stft::analyze_normalized(input, cfg.stft, cfg.vem.threads);
  PriorPrecision p = build_prior(x, source, cfg.prior_floor);
  return {std::move(x), std::move(p)};
}

}  // namespace

PriorPrecision build_prior(const Spectrogram& observation, const PriorSource& source, double floor) {
  return std::visit(
      [&](const auto& s) -> PriorPrecision {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, OracleReference>) {
          return prior::oracle_from_reference(s.clean, observation, floor);
        } else if constexpr (std::is_same_v<S, PriorFile>) {
          return prior::from_magnitude(prior::load_prior_file(s.path, observation.bins(), observation.frames()), floor);
        } else {
          if (s.magnitude.rows() != observation.bins() || s.magnitude.cols() != observation.frames())
            throw Error("prior magnitudes do not match the observation STFT shape");
          return prior::from_magnitude(s.magnitude, floor);
        }
      },
      source);
}

DereverbOutput dereverb(const Waveform& input, const PriorSource& source, const PipelineConfig& cfg) {
  auto [x, p] = analyse(input, source, cfg);
  DereverbOutput out;
  out.vem = vem::run(x, p, cfg.vem);
  out.enhanced = stft::inverse(out.vem.clean);
  out.observation = std::move(x);
  return out;
}

RirIdentification identify_rir(const Waveform& input, const PriorSource& source, const PipelineConfig& cfg) {
  const PipelineConfig c = cfg.synced();
  auto [x, p] = analyse(input, source, c);
  RirIdentification out;
  out.vem = vem::run(x, p, c.vem);
  out.rir = rir::ctf_to_rir(out.vem.filter, c.stft, c.rir);
  try {
    out.rt60 = acoustics::estimate_rt60(out.rir.waveform, c.acoustics);
  } catch (const Error& e) {
    out.rt60_error = e.what();
  }
  try {
    out.drr = acoustics::estimate_drr(out.rir.waveform, c.acoustics);
  } catch (const Error& e) {
    out.drr_error = e.what();
  }
  out.observation = std::move(x);
  return out;
}

}  // namespace ctfvb::pipeline
