#pragma once

#include <filesystem>

#include "ctfvb/stft.hpp"
#include "ctfvb/types.hpp"

namespace ctfvb {

inline constexpr double kDefaultPowerFloor = 1e-10;

/// Precision of the zero-mean complex Gaussian prior on the anechoic
/// spectrum: alpha = 1 / max(|S|^2, floor). Fixed for the whole inference.
struct PriorPrecision {
  RealGrid alpha;  // bins x frames
  double floor = kDefaultPowerFloor;
};

namespace prior {

PriorPrecision from_magnitude(const RealGrid& mag, double floor = kDefaultPowerFloor);

/// Prior from a clean reference analysed with `cfg`, as-is (scale 1).
PriorPrecision oracle_from_reference(const Waveform& clean, const StftConfig& cfg,
                                     double floor = kDefaultPowerFloor);

/// Prior aligned to an observation: the reference is divided by the
/// observation's normalisation factor and zero-padded or trimmed to its
/// length. A length mismatch of more than one hop is an error.
PriorPrecision oracle_from_reference(const Waveform& clean, const Spectrogram& observation,
                                     double floor = kDefaultPowerFloor);

RealGrid magnitude(const Spectrogram& spec);

// VPRI file: "VPRI", u32 version = 1, u32 F, u32 T, F*T float32 magnitudes,
// frequency-major, all little-endian.
void save_prior_file(const std::filesystem::path& path, const RealGrid& mag);
RealGrid load_prior_file(const std::filesystem::path& path);
/// Also checks the stored dimensions against the observation's.
RealGrid load_prior_file(const std::filesystem::path& path, std::size_t bins, std::size_t frames);

}  // namespace prior
}  // namespace ctfvb
