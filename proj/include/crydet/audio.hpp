#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crydet/tensor.hpp"

namespace crydet::audio {

// Mono waveform, samples in [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = 0;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// All DSP knobs for one log-mel front end.
struct MelProfile {
  std::string name;
  int sample_rate = 0;
  int n_mels = 0;
  double fft_window_s = 0.0;
  double fft_hop_s = 0.0;
  double fmin = 0.0;
  double fmax = 0.0;
  double log_offset = 0.0;
  double example_window_s = 0.0;
  double example_hop_s = 0.0;
  int target_frames = 0;
  int target_mels = 0;

  int window_samples() const;
  int hop_samples() const;
  void validate() const;  // throws ContractError
};

// 64x64 input for the lightweight backbone; 8 kHz, 1 s examples.
MelProfile blazenet_profile_1s();
// Same output size from 5 s examples; window/hop scaled by 5.
MelProfile blazenet_profile_5s();
// 96x64 front end matching the pretrained embedding network's defaults
// (16 kHz, 1 s example window).
MelProfile embedding_profile();

MelProfile profile_by_name(const std::string& name);

struct Spectrogram {
  Tensor data;  // [frames, mels]
  MelProfile profile;

  int64_t frames() const { return data.shape[0]; }
  int64_t mels() const { return data.shape[1]; }
};

// RIFF/WAVE decode: PCM 8/16/24-bit int or 32-bit float, 1-2 channels,
// channels averaged to mono. Throws DecodeError / UnsupportedFormatError.
AudioClip decode_wav(const std::vector<uint8_t>& bytes);
AudioClip read_wav(const std::filesystem::path& path);

// 16-bit PCM writer (round-to-nearest, clipped to [-1, 1]).
std::vector<uint8_t> encode_wav16(const AudioClip& clip);
void write_wav16(const std::filesystem::path& path, const AudioClip& clip);

// Windowed-sinc low-pass (when downsampling) followed by linear
// interpolation. Output length = round(len * target_rate / source_rate).
AudioClip resample(const AudioClip& clip, int target_rate);

// Non-overlapping-capable framing; the trailing remainder shorter than
// frame_s is dropped. A clip shorter than one frame gives an empty list.
std::vector<AudioClip> frame_clip(const AudioClip& clip, double frame_s, double hop_s);

// Triangular mel filterbank on the HTK scale; row-major [n_mels, n_bins].
// Each row is one filter over the FFT bins of an n_fft transform.
Tensor64 mel_filterbank(int n_mels, int n_fft, int sample_rate, double fmin, double fmax);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Magnitude STFT -> mel filterbank -> ln(mel + log_offset), cropped to the
// profile's target shape. Throws ProfileMismatchError on rate/length
// mismatch, DimensionError if fewer frames than the target come out.
Spectrogram log_mel(const AudioClip& frame, const MelProfile& profile);

}  // namespace crydet::audio
