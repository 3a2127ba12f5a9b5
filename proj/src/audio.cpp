#include "crydet/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "crydet/errors.hpp"
#include "crydet/fft.hpp"
#include "crydet/log.hpp"

namespace crydet::audio {

namespace {

constexpr double kPi = 3.14159265358979323846;

uint32_t read_u32le(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16le(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

int MelProfile::window_samples() const {
  return static_cast<int>(std::lround(fft_window_s * sample_rate));
}

int MelProfile::hop_samples() const {
  return static_cast<int>(std::lround(fft_hop_s * sample_rate));
}

void MelProfile::validate() const {
  if (sample_rate <= 0) throw ContractError("profile: sample_rate must be positive");
  if (n_mels <= 0) throw ContractError("profile: n_mels must be positive");
  if (fft_window_s <= fft_hop_s) throw ContractError("profile: window must exceed hop");
  if (target_frames <= 0 || target_mels <= 0) {
    throw ContractError("profile: target shape must be positive");
  }
  if (target_mels != n_mels) {
    throw ContractError("profile: target_mels must equal n_mels");
  }
  const double nyquist = sample_rate / 2.0;
  const double fmax_eff = std::min(fmax, nyquist);
  if (!(fmin < fmax_eff)) throw ContractError("profile: fmin must be below clamped fmax");
}

MelProfile blazenet_profile_1s() {
  MelProfile p;
  p.name = "blazenet1s";
  p.sample_rate = 8000;
  p.n_mels = 64;
  p.fft_window_s = 0.064;
  p.fft_hop_s = 0.01475;
  p.fmin = 0.0;
  p.fmax = 8000.0;  // above Nyquist; clamped in the filterbank
  p.log_offset = 0.01;
  p.example_window_s = 1.0;
  p.example_hop_s = 1.0;
  p.target_frames = 64;
  p.target_mels = 64;
  return p;
}

MelProfile blazenet_profile_5s() {
  MelProfile p = blazenet_profile_1s();
  p.name = "blazenet5s";
  p.fft_window_s = 0.32;
  p.fft_hop_s = 0.07375;
  p.example_window_s = 5.0;
  p.example_hop_s = 5.0;
  return p;
}

MelProfile embedding_profile() {
  MelProfile p;
  p.name = "embedding";
  p.sample_rate = 16000;
  p.n_mels = 64;
  p.fft_window_s = 0.025;
  p.fft_hop_s = 0.010;
  p.fmin = 125.0;
  p.fmax = 7500.0;
  p.log_offset = 0.01;
  p.example_window_s = 1.0;
  p.example_hop_s = 0.96;
  p.target_frames = 96;
  p.target_mels = 64;
  return p;
}

MelProfile profile_by_name(const std::string& name) {
  if (name == "blazenet1s") return blazenet_profile_1s();
  if (name == "blazenet5s") return blazenet_profile_5s();
  if (name == "embedding") return embedding_profile();
  throw ConfigError("unknown mel profile: " + name +
                    " (expected blazenet1s, blazenet5s or embedding)");
}

AudioClip decode_wav(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw DecodeError("not a RIFF/WAVE file");
  }

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  const uint8_t* data_ptr = nullptr;
  uint32_t data_len = 0;

  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const uint32_t chunk_len = read_u32le(bytes.data() + pos + 4);
    if (pos + 8 + chunk_len > bytes.size()) {
      throw DecodeError("chunk overruns file end");
    }
    const uint8_t* body = bytes.data() + pos + 8;
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw DecodeError("fmt chunk too short");
      format = read_u16le(body);
      channels = read_u16le(body + 2);
      rate = read_u32le(body + 4);
      bits = read_u16le(body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_ptr = body;
      data_len = chunk_len;
    }
    pos += 8 + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data_ptr == nullptr) throw DecodeError("missing fmt or data chunk");
  if (rate == 0) throw DecodeError("zero sample rate");
  if (channels < 1 || channels > 2) {
    throw UnsupportedFormatError("unsupported channel count: " + std::to_string(channels));
  }
  const bool is_float = format == 3;
  if (format != 1 && !is_float) {
    throw UnsupportedFormatError("unsupported codec tag: " + std::to_string(format));
  }
  if (is_float && bits != 32) {
    throw UnsupportedFormatError("float PCM must be 32-bit, got " + std::to_string(bits));
  }
  if (!is_float && bits != 8 && bits != 16 && bits != 24) {
    throw UnsupportedFormatError("unsupported bit depth: " + std::to_string(bits));
  }

  const uint32_t bytes_per_sample = bits / 8;
  const uint32_t frame_size = bytes_per_sample * channels;
  if (frame_size == 0 || data_len < frame_size) throw DecodeError("empty data chunk");
  const uint32_t n_frames = data_len / frame_size;

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.samples.resize(n_frames);
  for (uint32_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (uint16_t ch = 0; ch < channels; ++ch) {
      const uint8_t* s = data_ptr + i * frame_size + ch * bytes_per_sample;
      double v = 0.0;
      switch (bits) {
        case 8:
          v = (static_cast<int>(s[0]) - 128) / 128.0;
          break;
        case 16: {
          const int16_t raw = static_cast<int16_t>(s[0] | (s[1] << 8));
          v = raw / 32768.0;
          break;
        }
        case 24: {
          int32_t raw = s[0] | (s[1] << 8) | (s[2] << 16);
          if (raw & 0x800000) raw |= ~0xFFFFFF;  // sign extend
          v = raw / 8388608.0;
          break;
        }
        case 32: {
          float f;
          std::memcpy(&f, s, 4);
          v = f;
          break;
        }
        default:
          break;
      }
      acc += v;
    }
    clip.samples[i] = static_cast<float>(acc / channels);
  }
  return clip;
}

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DecodeError("cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

std::vector<uint8_t> encode_wav16(const AudioClip& clip) {
  const uint32_t n = static_cast<uint32_t>(clip.samples.size());
  const uint32_t data_len = n * 2;
  std::vector<uint8_t> out(44 + data_len);
  auto put_u32 = [&](size_t at, uint32_t v) {
    out[at] = v & 0xFF;
    out[at + 1] = (v >> 8) & 0xFF;
    out[at + 2] = (v >> 16) & 0xFF;
    out[at + 3] = (v >> 24) & 0xFF;
  };
  auto put_u16 = [&](size_t at, uint16_t v) {
    out[at] = v & 0xFF;
    out[at + 1] = (v >> 8) & 0xFF;
  };
  std::memcpy(out.data(), "RIFF", 4);
  put_u32(4, 36 + data_len);
  std::memcpy(out.data() + 8, "WAVE", 4);
  std::memcpy(out.data() + 12, "fmt ", 4);
  put_u32(16, 16);
  put_u16(20, 1);  // PCM
  put_u16(22, 1);  // mono
  put_u32(24, static_cast<uint32_t>(clip.sample_rate));
  put_u32(28, static_cast<uint32_t>(clip.sample_rate) * 2);
  put_u16(32, 2);
  put_u16(34, 16);
  std::memcpy(out.data() + 36, "data", 4);
  put_u32(40, data_len);
  for (uint32_t i = 0; i < n; ++i) {
    const double v = std::clamp(static_cast<double>(clip.samples[i]), -1.0, 1.0);
    const int32_t q = static_cast<int32_t>(std::lround(v * 32767.0));
    put_u16(44 + i * 2, static_cast<uint16_t>(static_cast<int16_t>(q)));
  }
  return out;
}

void write_wav16(const std::filesystem::path& path, const AudioClip& clip) {
  const auto bytes = encode_wav16(clip);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) throw ContractError("resample: target_rate must be positive");
  if (clip.sample_rate <= 0 || clip.samples.empty()) {
    throw ContractError("resample: clip must be non-empty with positive rate");
  }
  if (target_rate == clip.sample_rate) return clip;

  const size_t in_len = clip.samples.size();
  std::vector<double> work(clip.samples.begin(), clip.samples.end());

  if (target_rate < clip.sample_rate) {
    // anti-aliasing low-pass at 0.45 of the target Nyquist ratio
    const double cutoff = 0.45 * static_cast<double>(target_rate) / clip.sample_rate;
    const int half = 32;
    std::vector<double> taps(2 * half + 1);
    double sum = 0.0;
    for (int i = -half; i <= half; ++i) {
      const double sinc =
          i == 0 ? 2.0 * cutoff : std::sin(2.0 * kPi * cutoff * i) / (kPi * i);
      const double hann = 0.5 + 0.5 * std::cos(kPi * i / (half + 1.0));
      taps[static_cast<size_t>(i + half)] = sinc * hann;
      sum += sinc * hann;
    }
    for (auto& t : taps) t /= sum;  // unity DC gain

    std::vector<double> filtered(in_len, 0.0);
    for (size_t i = 0; i < in_len; ++i) {
      double acc = 0.0;
      for (int j = -half; j <= half; ++j) {
        const int64_t k = static_cast<int64_t>(i) + j;
        if (k < 0 || k >= static_cast<int64_t>(in_len)) continue;
        acc += work[static_cast<size_t>(k)] * taps[static_cast<size_t>(j + half)];
      }
      filtered[i] = acc;
    }
    work.swap(filtered);
  }

  const size_t out_len = static_cast<size_t>(
      std::llround(static_cast<double>(in_len) * target_rate / clip.sample_rate));
  AudioClip out;
  out.sample_rate = target_rate;
  out.samples.resize(out_len);
  const double step = static_cast<double>(clip.sample_rate) / target_rate;
  for (size_t i = 0; i < out_len; ++i) {
    const double p = static_cast<double>(i) * step;
    const size_t i0 = std::min(static_cast<size_t>(p), in_len - 1);
    const size_t i1 = std::min(i0 + 1, in_len - 1);
    const double frac = p - static_cast<double>(i0);
    out.samples[i] = static_cast<float>(work[i0] * (1.0 - frac) + work[i1] * frac);
  }
  return out;
}

std::vector<AudioClip> frame_clip(const AudioClip& clip, double frame_s, double hop_s) {
  if (frame_s <= 0.0 || hop_s <= 0.0) {
    throw ContractError("frame_clip: frame_s and hop_s must be positive");
  }
  const size_t frame_len = static_cast<size_t>(std::lround(frame_s * clip.sample_rate));
  const size_t hop_len = static_cast<size_t>(std::lround(hop_s * clip.sample_rate));
  std::vector<AudioClip> frames;
  if (frame_len == 0 || hop_len == 0 || clip.samples.size() < frame_len) return frames;
  for (size_t start = 0; start + frame_len <= clip.samples.size(); start += hop_len) {
    AudioClip f;
    f.sample_rate = clip.sample_rate;
    f.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(start),
                     clip.samples.begin() + static_cast<std::ptrdiff_t>(start + frame_len));
    frames.push_back(std::move(f));
  }
  return frames;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Tensor64 mel_filterbank(int n_mels, int n_fft, int sample_rate, double fmin, double fmax) {
  if (n_mels < 1 || n_fft < 2) throw ContractError("mel_filterbank: bad sizes");
  const double nyquist = sample_rate / 2.0;
  if (fmax > nyquist) {
    LOG_WARN("mel fmax " << fmax << " Hz above Nyquist; clamped to " << nyquist << " Hz");
    fmax = nyquist;
  }
  if (!(fmin >= 0.0 && fmin < fmax)) throw ContractError("mel_filterbank: need 0 <= fmin < fmax");

  const int n_bins = n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);
  std::vector<double> edges(static_cast<size_t>(n_mels) + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    edges[static_cast<size_t>(i)] =
        mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));
  }

  Tensor64 fb({n_mels, n_bins});
  for (int m = 0; m < n_mels; ++m) {
    const double left = edges[static_cast<size_t>(m)];
    const double center = edges[static_cast<size_t>(m) + 1];
    const double right = edges[static_cast<size_t>(m) + 2];
    for (int b = 0; b < n_bins; ++b) {
      const double f = static_cast<double>(b) * sample_rate / n_fft;
      double w = 0.0;
      if (f > left && f < right) {
        w = f <= center ? (f - left) / (center - left) : (right - f) / (right - center);
      }
      fb.at2(m, b) = w;
    }
  }
  return fb;
}

Spectrogram log_mel(const AudioClip& frame, const MelProfile& profile) {
  profile.validate();
  if (frame.sample_rate != profile.sample_rate) {
    throw ProfileMismatchError("log_mel: clip rate " + std::to_string(frame.sample_rate) +
                               " != profile rate " + std::to_string(profile.sample_rate));
  }
  const size_t expect_len =
      static_cast<size_t>(std::lround(profile.example_window_s * profile.sample_rate));
  if (frame.samples.size() != expect_len) {
    throw ProfileMismatchError("log_mel: clip length " +
                               std::to_string(frame.samples.size()) + " != example window " +
                               std::to_string(expect_len));
  }

  const int win = profile.window_samples();
  const int hop = profile.hop_samples();
  const size_t n_fft = dsp::next_pow2(static_cast<size_t>(win));
  const int n_stft_frames =
      1 + static_cast<int>((frame.samples.size() - static_cast<size_t>(win)) /
                           static_cast<size_t>(hop));
  if (n_stft_frames < profile.target_frames) {
    throw DimensionError("log_mel: profile yields " + std::to_string(n_stft_frames) +
                         " frames, fewer than target " +
                         std::to_string(profile.target_frames));
  }

  // periodic Hann
  std::vector<double> window(static_cast<size_t>(win));
  for (int i = 0; i < win; ++i) {
    window[static_cast<size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / win);
  }

  const Tensor64 fb = mel_filterbank(profile.n_mels, static_cast<int>(n_fft),
                                     profile.sample_rate, profile.fmin, profile.fmax);
  const int n_bins = static_cast<int>(n_fft / 2 + 1);

  Spectrogram spec;
  spec.profile = profile;
  spec.data = Tensor({profile.target_frames, profile.target_mels});

  std::vector<double> buf(static_cast<size_t>(win));
  for (int t = 0; t < profile.target_frames; ++t) {
    const size_t start = static_cast<size_t>(t) * static_cast<size_t>(hop);
    for (int i = 0; i < win; ++i) {
      buf[static_cast<size_t>(i)] =
          static_cast<double>(frame.samples[start + static_cast<size_t>(i)]) *
          window[static_cast<size_t>(i)];
    }
    const std::vector<double> mag = dsp::real_magnitude_spectrum(buf, n_fft);
    for (int m = 0; m < profile.n_mels; ++m) {
      double e = 0.0;
      for (int b = 0; b < n_bins; ++b) e += fb.at2(m, b) * mag[static_cast<size_t>(b)];
      spec.data.at2(t, m) = static_cast<float>(std::log(e + profile.log_offset));
    }
  }
  return spec;
}

}  // namespace crydet::audio
