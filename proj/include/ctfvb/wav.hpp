#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ctfvb/types.hpp"

namespace ctfvb::wav {

enum class Format { pcm16, float32 };

inline constexpr int kSampleRate = 16000;

/// Reads a mono 16-bit PCM or 32-bit float WAV. Any rate other than
/// `required_rate` is rejected; pass 0 to accept every rate.
Waveform read(const std::filesystem::path& path, int required_rate = kSampleRate);

std::vector<std::uint8_t> encode(const Waveform& wave, Format format = Format::float32);
Waveform decode(const std::vector<std::uint8_t>& bytes, int required_rate = kSampleRate);

void write(const std::filesystem::path& path, const Waveform& wave, Format format = Format::float32);

}  // namespace ctfvb::wav
