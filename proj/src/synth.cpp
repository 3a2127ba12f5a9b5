#include "crydet/synth.hpp"

#include <cmath>
#include <cstdio>

#include "crydet/errors.hpp"

namespace crydet::synth {

namespace {
constexpr double kPi = 3.14159265358979323846;

void normalize_peak(std::vector<float>& samples, double peak) {
  double mx = 0.0;
  for (float v : samples) mx = std::max(mx, std::fabs(static_cast<double>(v)));
  if (mx == 0.0) return;
  const double g = peak / mx;
  for (auto& v : samples) v = static_cast<float>(v * g);
}
}  // namespace

audio::AudioClip cry_clip(Rng& rng, int sample_rate, double seconds) {
  const double f0 = rng.uniform(350.0, 550.0);
  const double am_rate = rng.uniform(3.0, 7.0);     // burst repetition
  const double am_phase = rng.uniform(0.0, 2.0 * kPi);
  const double vib_rate = rng.uniform(4.0, 8.0);
  const double vib_depth = rng.uniform(0.005, 0.02);
  const double harmonics[4] = {1.0, 0.6, 0.35, 0.2};

  const int n = static_cast<int>(std::lround(seconds * sample_rate));
  audio::AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.resize(static_cast<size_t>(n));

  double phase = rng.uniform(0.0, 2.0 * kPi);
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    const double f = f0 * (1.0 + vib_depth * std::sin(2.0 * kPi * vib_rate * t));
    phase += 2.0 * kPi * f / sample_rate;
    double v = 0.0;
    for (int h = 0; h < 4; ++h) v += harmonics[h] * std::sin((h + 1) * phase);
    // half-rectified AM gives burst/pause structure
    const double am = std::max(0.0, std::sin(2.0 * kPi * am_rate * t + am_phase));
    v *= 0.15 + 0.85 * am;
    v += 0.01 * rng.normal();  // light noise floor
    clip.samples[static_cast<size_t>(i)] = static_cast<float>(v);
  }
  normalize_peak(clip.samples, 0.7);
  return clip;
}

audio::AudioClip other_clip(Rng& rng, int sample_rate, double seconds) {
  const int n = static_cast<int>(std::lround(seconds * sample_rate));
  audio::AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.resize(static_cast<size_t>(n));

  if (rng.bernoulli(0.5)) {
    // one-pole low-passed white noise, random cutoff
    const double a = rng.uniform(0.6, 0.98);
    double y = 0.0;
    for (int i = 0; i < n; ++i) {
      y = a * y + (1.0 - a) * rng.normal();
      clip.samples[static_cast<size_t>(i)] = static_cast<float>(y);
    }
  } else {
    // steady tone outside the cry band, no harmonics, no bursts
    const double f = rng.uniform(700.0, 3500.0);
    const double phase = rng.uniform(0.0, 2.0 * kPi);
    for (int i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / sample_rate;
      double v = std::sin(2.0 * kPi * f * t + phase);
      v += 0.01 * rng.normal();
      clip.samples[static_cast<size_t>(i)] = static_cast<float>(v);
    }
  }
  normalize_peak(clip.samples, 0.7);
  return clip;
}

audio::DatasetManifest make_dataset(const std::filesystem::path& dir, int count,
                                    int sample_rate, uint64_t seed) {
  if (count < 2) throw ContractError("synthetic dataset needs at least 2 clips");
  std::filesystem::create_directories(dir);
  Rng rng(seed);
  audio::DatasetManifest manifest;
  manifest.base_dir = dir;

  for (int i = 0; i < count; ++i) {
    const bool is_cry = i % 2 == 0;  // alternate so every split sees both classes
    const audio::AudioClip clip = is_cry ? cry_clip(rng, sample_rate, 1.0)
                                         : other_clip(rng, sample_rate, 1.0);
    char name[48];
    std::snprintf(name, sizeof(name), "%s_%04d.wav", is_cry ? "cry" : "other", i);
    audio::write_wav16(dir / name, clip);

    audio::ManifestEntry e;
    e.path = name;
    e.label = is_cry ? audio::Label::kCry : audio::Label::kOther;
    // interleaved 8:1:1
    const int slot = i % 10;
    e.split = slot < 8 ? audio::Split::kTrain
                       : (slot == 8 ? audio::Split::kVal : audio::Split::kTest);
    manifest.entries.push_back(std::move(e));
  }
  audio::save_manifest(manifest, dir / "manifest.csv");
  return manifest;
}

}  // namespace crydet::synth
