#pragma once

#include <filesystem>

#include "crydet/audio.hpp"
#include "crydet/manifest.hpp"
#include "crydet/rng.hpp"

namespace crydet::synth {

// Amplitude-modulated harmonic burst with fundamental in 350-550 Hz.
audio::AudioClip cry_clip(Rng& rng, int sample_rate, double seconds);

// Low-passed noise or a plain tone outside the cry band.
audio::AudioClip other_clip(Rng& rng, int sample_rate, double seconds);

// Writes `count` one-second WAV files (half cry, half other) plus a
// manifest.csv with an interleaved 8:1:1 train/val/test split.
audio::DatasetManifest make_dataset(const std::filesystem::path& dir, int count,
                                    int sample_rate, uint64_t seed);

}  // namespace crydet::synth
