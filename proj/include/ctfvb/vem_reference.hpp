#pragma once

// Serial, literal transcription of the VEM updates. Every sum is evaluated
// term by term with stacked L-vectors and full L x L outer products, so the
// cost is O(T L^2) per band for each step. Kept for testing and benchmarking
// the optimised band kernels in vem.cpp; not used by the pipeline.

#include "ctfvb/vem.hpp"

namespace ctfvb::vem::reference {

Posterior e_step(const VemState& state, const Spectrogram& x, const PriorPrecision& prior, const VemConfig& cfg);
MStepResult m_step(const VemState& state, const Spectrogram& x, const VemConfig& cfg);
std::vector<double> expected_loglik(const VemState& state, const Spectrogram& x, const PriorPrecision& prior);
VemResult run(const Spectrogram& x, const PriorPrecision& prior, const VemConfig& cfg);

}  // namespace ctfvb::vem::reference
