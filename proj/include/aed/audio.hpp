#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <variant>
#include <vector>
#include <stdexcept>

namespace aed {

inline constexpr int kCanonicalRate = 22050;
inline constexpr double kDefaultClipSeconds = 3.0;

// Mono waveform with amplitudes nominally in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = kCanonicalRate;
  std::string label;      // class name, may be empty
  std::string source_id;  // provenance, may be empty

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Returned by normalize_clip when a clip cannot be used.
struct Rejected {
  std::string reason;
  double duration_s = 0.0;
};

namespace detail {

inline std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint16_t read_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

inline void write_u16(std::ostream& out, std::uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

}  // namespace detail

// Reads a RIFF/WAVE file. Accepts PCM 16-bit integer and IEEE float 32-bit,
// 1 or 2 channels. Stereo is mixed down by per-sample channel mean. Samples
// are scaled (and clamped) to [-1, 1].
inline AudioClip read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_wav: cannot open " + path);

  char tag[4];
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "RIFF", 4) != 0)
    throw std::runtime_error("read_wav: not a RIFF file: " + path);
  detail::read_u32(in);  // riff size, unused
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "WAVE", 4) != 0)
    throw std::runtime_error("read_wav: not a WAVE file: " + path);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::vector<char> data;

  while (in.read(tag, 4)) {
    std::uint32_t chunk_size = detail::read_u32(in);
    if (!in) break;
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = detail::read_u16(in);
      channels = detail::read_u16(in);
      rate = detail::read_u32(in);
      detail::read_u32(in);  // byte rate
      detail::read_u16(in);  // block align
      bits = detail::read_u16(in);
      if (chunk_size > 16) in.seekg(chunk_size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data.resize(chunk_size);
      in.read(data.data(), chunk_size);
      data.resize(static_cast<std::size_t>(in.gcount()));
      break;
    } else {
      in.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
    }
  }

  if (!have_fmt) throw std::runtime_error("read_wav: missing fmt chunk: " + path);
  if (rate == 0) throw std::runtime_error("read_wav: zero sample rate: " + path);
  if (channels != 1 && channels != 2)
    throw std::runtime_error("read_wav: unsupported channel count " + std::to_string(channels) +
                             ": " + path);
  const bool pcm16 = (format == 1 && bits == 16);
  const bool float32 = (format == 3 && bits == 32);
  if (!pcm16 && !float32)
    throw std::runtime_error("read_wav: unsupported encoding (format tag " +
                             std::to_string(format) + ", " + std::to_string(bits) +
                             " bits): " + path);

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t n_frames = data.size() / frame_bytes;
  if (n_frames == 0) throw std::runtime_error("read_wav: zero-length audio: " + path);

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.samples.resize(n_frames);
  const char* p = data.data();
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      if (pcm16) {
        std::int16_t s;
        std::memcpy(&s, p + (i * channels + c) * 2, 2);
        acc += static_cast<double>(s) / 32767.0;
      } else {
        float s;
        std::memcpy(&s, p + (i * channels + c) * 4, 4);
        acc += static_cast<double>(s);
      }
    }
    clip.samples[i] = std::clamp(acc / channels, -1.0, 1.0);
  }
  return clip;
}

// Writes a 16-bit PCM mono file. Samples are clamped to [-1, 1] before
// quantization; a round-trip through write_wav/read_wav is accurate to
// better than 1/32768 per sample.
inline void write_wav(const AudioClip& clip, const std::string& path) {
  if (clip.samples.empty()) throw std::runtime_error("write_wav: empty clip");
  for (double s : clip.samples)
    if (!std::isfinite(s)) throw std::runtime_error("write_wav: non-finite sample");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_wav: cannot open " + path);

  const std::uint32_t n = static_cast<std::uint32_t>(clip.samples.size());
  const std::uint32_t data_bytes = n * 2;
  out.write("RIFF", 4);
  detail::write_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  detail::write_u32(out, 16);
  detail::write_u16(out, 1);  // PCM
  detail::write_u16(out, 1);  // mono
  detail::write_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  detail::write_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  detail::write_u16(out, 2);
  detail::write_u16(out, 16);
  out.write("data", 4);
  detail::write_u32(out, data_bytes);

  std::vector<char> buf(data_bytes);
  for (std::uint32_t i = 0; i < n; ++i) {
    const double x = std::clamp(clip.samples[i], -1.0, 1.0);
    const std::int16_t q = static_cast<std::int16_t>(std::lround(x * 32767.0));
    std::memcpy(buf.data() + i * 2, &q, 2);
  }
  out.write(buf.data(), data_bytes);
  if (!out) throw std::runtime_error("write_wav: write failed: " + path);
}

// Linear-interpolation resampler. Output length is round(len * target/source).
inline AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) throw std::invalid_argument("resample: target rate must be positive");
  if (clip.sample_rate == target_rate) return clip;

  const std::size_t n_in = clip.samples.size();
  const std::size_t n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(n_in) * target_rate / clip.sample_rate));
  AudioClip out;
  out.sample_rate = target_rate;
  out.label = clip.label;
  out.source_id = clip.source_id;
  out.samples.resize(n_out);

  const double step = static_cast<double>(clip.sample_rate) / target_rate;
  for (std::size_t i = 0; i < n_out; ++i) {
    double pos = std::min(static_cast<double>(i) * step, static_cast<double>(n_in - 1));
    const std::size_t k = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(k);
    const double a = clip.samples[k];
    const double b = clip.samples[std::min(k + 1, n_in - 1)];
    out.samples[i] = a + frac * (b - a);
  }
  return out;
}

// Resamples to the canonical 22050 Hz, rejects clips shorter than
// clip_seconds, and crops longer clips to the clip_seconds window of
// maximum energy so the event of interest survives.
inline std::variant<AudioClip, Rejected> normalize_clip(const AudioClip& clip,
                                                        double clip_seconds = kDefaultClipSeconds) {
  if (clip.samples.empty() || clip.sample_rate <= 0)
    throw std::invalid_argument("normalize_clip: invalid clip");
  const double duration = clip.duration_s();
  if (duration < clip_seconds) return Rejected{"too_short", duration};

  AudioClip out = resample(clip, kCanonicalRate);
  const std::size_t target = static_cast<std::size_t>(std::llround(kCanonicalRate * clip_seconds));

  if (out.samples.size() > target) {
    // Max-energy window: prefix sums of squared amplitude, scan every start.
    std::vector<double> prefix(out.samples.size() + 1, 0.0);
    for (std::size_t i = 0; i < out.samples.size(); ++i)
      prefix[i + 1] = prefix[i] + out.samples[i] * out.samples[i];
    std::size_t best_start = 0;
    double best_energy = -1.0;
    for (std::size_t s = 0; s + target <= out.samples.size(); ++s) {
      const double e = prefix[s + target] - prefix[s];
      if (e > best_energy) {
        best_energy = e;
        best_start = s;
      }
    }
    out.samples = std::vector<double>(out.samples.begin() + best_start,
                                      out.samples.begin() + best_start + target);
  } else if (out.samples.size() < target) {
    out.samples.resize(target, 0.0);  // rounding shortfall of at most one sample
  }
  return out;
}

}  // namespace aed
