#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>
#include <stdexcept>

#include "aed/audio.hpp"
#include "aed/fft.hpp"

namespace aed {

struct StftConfig {
  int fft_size = 1024;
  int hop = 512;
  // Analysis/synthesis window is periodic Hann; no other kinds are needed.

  void validate() const {
    if (fft_size <= 0 || (fft_size & (fft_size - 1)) != 0)
      throw std::invalid_argument("StftConfig: fft_size must be a power of two");
    if (hop <= 0 || hop > fft_size)
      throw std::invalid_argument("StftConfig: need 0 < hop <= fft_size");
  }
};

// Complex STFT coefficients, (fft_size/2 + 1) bins by n_frames columns.
struct ComplexSpectrum {
  int n_bins = 0;
  int n_frames = 0;
  StftConfig config;
  int sample_rate = kCanonicalRate;
  std::vector<std::complex<double>> coef;  // row-major [bin][frame]

  std::complex<double>& at(int b, int t) { return coef[static_cast<std::size_t>(b) * n_frames + t]; }
  const std::complex<double>& at(int b, int t) const {
    return coef[static_cast<std::size_t>(b) * n_frames + t];
  }
};

enum class BandKind { linear, mel };

// Decibel time-frequency matrix, n_bands by n_frames.
struct Spectrogram {
  int n_bands = 0;
  int n_frames = 0;
  BandKind band_kind = BandKind::linear;
  double floor_db = -80.0;
  int sample_rate = kCanonicalRate;
  std::vector<double> values;  // row-major [band][frame]

  double& at(int b, int t) { return values[static_cast<std::size_t>(b) * n_frames + t]; }
  double at(int b, int t) const { return values[static_cast<std::size_t>(b) * n_frames + t]; }
};

inline int stft_frame_count(std::size_t len, const StftConfig& cfg) {
  if (len < static_cast<std::size_t>(cfg.fft_size)) return 0;
  return 1 + static_cast<int>((len - cfg.fft_size) / cfg.hop);
}

inline std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / n);  // periodic form
  return w;
}

// Hann-windowed, hop-advanced STFT. The final partial frame is dropped.
inline ComplexSpectrum stft(const AudioClip& clip, const StftConfig& cfg = {}) {
  cfg.validate();
  const int frames = stft_frame_count(clip.samples.size(), cfg);
  if (frames == 0)
    throw std::invalid_argument("stft: clip shorter than one frame");

  ComplexSpectrum spec;
  spec.config = cfg;
  spec.sample_rate = clip.sample_rate;
  spec.n_bins = cfg.fft_size / 2 + 1;
  spec.n_frames = frames;
  spec.coef.assign(static_cast<std::size_t>(spec.n_bins) * frames, {0.0, 0.0});

  const std::vector<double> window = hann_window(cfg.fft_size);
  std::vector<std::complex<double>> buf(cfg.fft_size);
  for (int t = 0; t < frames; ++t) {
    const std::size_t start = static_cast<std::size_t>(t) * cfg.hop;
    for (int i = 0; i < cfg.fft_size; ++i)
      buf[i] = {clip.samples[start + i] * window[i], 0.0};
    fft_inplace(buf, false);
    for (int b = 0; b < spec.n_bins; ++b) spec.at(b, t) = buf[b];
  }
  return spec;
}

// Weighted overlap-add inverse with Hann synthesis window; each output
// sample is normalized by the accumulated squared-window weight, so the
// round trip is exact away from the first and last few samples.
inline AudioClip istft(const ComplexSpectrum& spec) {
  spec.config.validate();
  const int n = spec.config.fft_size;
  if (spec.n_bins != n / 2 + 1)
    throw std::invalid_argument("istft: bin count inconsistent with fft_size");
  if (spec.n_frames <= 0 ||
      spec.coef.size() != static_cast<std::size_t>(spec.n_bins) * spec.n_frames)
    throw std::invalid_argument("istft: coefficient storage inconsistent with shape");

  const std::size_t out_len =
      static_cast<std::size_t>(spec.n_frames - 1) * spec.config.hop + n;
  std::vector<double> acc(out_len, 0.0), wsum(out_len, 0.0);
  const std::vector<double> window = hann_window(n);

  std::vector<std::complex<double>> buf(n);
  for (int t = 0; t < spec.n_frames; ++t) {
    for (int b = 0; b < spec.n_bins; ++b) buf[b] = spec.at(b, t);
    for (int b = spec.n_bins; b < n; ++b) buf[b] = std::conj(spec.at(n - b, t));
    fft_inplace(buf, true);
    const std::size_t start = static_cast<std::size_t>(t) * spec.config.hop;
    for (int i = 0; i < n; ++i) {
      acc[start + i] += buf[i].real() * window[i];
      wsum[start + i] += window[i] * window[i];
    }
  }

  AudioClip clip;
  clip.sample_rate = spec.sample_rate;
  clip.samples.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i)
    clip.samples[i] = wsum[i] > 1e-12 ? acc[i] / wsum[i] : 0.0;
  return clip;
}

// 20*log10(|coef| / max|coef|), clamped at floor_db. The reference is the
// per-clip maximum, so a globally rescaled clip maps to the same matrix.
inline Spectrogram to_db(const ComplexSpectrum& spec, double floor_db = -80.0) {
  if (floor_db >= 0.0) throw std::invalid_argument("to_db: floor_db must be negative");
  Spectrogram out;
  out.n_bands = spec.n_bins;
  out.n_frames = spec.n_frames;
  out.band_kind = BandKind::linear;
  out.floor_db = floor_db;
  out.sample_rate = spec.sample_rate;
  out.values.resize(spec.coef.size());

  double max_mag = 0.0;
  for (const auto& c : spec.coef) max_mag = std::max(max_mag, std::abs(c));
  if (max_mag == 0.0) {
    std::fill(out.values.begin(), out.values.end(), floor_db);
    return out;
  }
  for (std::size_t i = 0; i < spec.coef.size(); ++i) {
    const double mag = std::abs(spec.coef[i]);
    out.values[i] = mag > 0.0 ? std::max(floor_db, 20.0 * std::log10(mag / max_mag)) : floor_db;
  }
  return out;
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular mel filterbank rows (HTK scale, 0 Hz to Nyquist), each
// normalized to sum 1 over the linear bins it covers.
inline std::vector<std::vector<double>> mel_filterbank(int n_bands, int n_linear_bins,
                                                       int sample_rate) {
  const int fft_size = 2 * (n_linear_bins - 1);
  const double mel_max = hz_to_mel(sample_rate / 2.0);
  std::vector<double> centers_hz(n_bands + 2);
  for (int i = 0; i < n_bands + 2; ++i)
    centers_hz[i] = mel_to_hz(mel_max * i / (n_bands + 1));

  std::vector<std::vector<double>> rows(n_bands, std::vector<double>(n_linear_bins, 0.0));
  for (int b = 0; b < n_bands; ++b) {
    const double lo = centers_hz[b], mid = centers_hz[b + 1], hi = centers_hz[b + 2];
    double total = 0.0;
    for (int k = 0; k < n_linear_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / fft_size;
      double w = 0.0;
      if (f > lo && f < mid)
        w = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi)
        w = (hi - f) / (hi - mid);
      rows[b][k] = w;
      total += w;
    }
    if (total > 0.0)
      for (double& w : rows[b]) w /= total;
  }
  return rows;
}

// Maps a linear-band dB spectrogram onto n_bands mel bands. The filterbank
// is applied to linear-power values, then re-expressed in dB with the same
// floor.
inline Spectrogram to_mel(const Spectrogram& spec_db, int n_bands) {
  if (spec_db.band_kind != BandKind::linear)
    throw std::invalid_argument("to_mel: input must be linear-band");
  if (n_bands <= 0 || n_bands >= spec_db.n_bands)
    throw std::invalid_argument("to_mel: n_bands must be below the linear band count");

  const auto bank = mel_filterbank(n_bands, spec_db.n_bands, spec_db.sample_rate);
  Spectrogram out;
  out.n_bands = n_bands;
  out.n_frames = spec_db.n_frames;
  out.band_kind = BandKind::mel;
  out.floor_db = spec_db.floor_db;
  out.sample_rate = spec_db.sample_rate;
  out.values.resize(static_cast<std::size_t>(n_bands) * spec_db.n_frames);

  std::vector<double> power(spec_db.values.size());
  for (std::size_t i = 0; i < power.size(); ++i)
    power[i] = std::pow(10.0, spec_db.values[i] / 10.0);

  for (int b = 0; b < n_bands; ++b) {
    for (int t = 0; t < spec_db.n_frames; ++t) {
      double p = 0.0;
      for (int k = 0; k < spec_db.n_bands; ++k) {
        const double w = bank[b][k];
        if (w > 0.0) p += w * power[static_cast<std::size_t>(k) * spec_db.n_frames + t];
      }
      out.at(b, t) =
          p > 0.0 ? std::max(spec_db.floor_db, 10.0 * std::log10(p)) : spec_db.floor_db;
    }
  }
  return out;
}

inline constexpr int kModelBands = 64;
inline constexpr int kModelFrames = 128;
inline constexpr double kModelFloorDb = -80.0;

// Full classifier front end: STFT (1024/512 Hann), dB at -80 floor, 64 mel
// bands, pad/trim to 128 frames, rescale [-80, 0] dB onto [0, 1].
inline Spectrogram clip_to_model_input(const AudioClip& clip) {
  const StftConfig cfg{1024, 512};
  Spectrogram mel = to_mel(to_db(stft(clip, cfg), kModelFloorDb), kModelBands);

  Spectrogram out;
  out.n_bands = kModelBands;
  out.n_frames = kModelFrames;
  out.band_kind = BandKind::mel;
  out.floor_db = kModelFloorDb;
  out.sample_rate = clip.sample_rate;
  out.values.assign(static_cast<std::size_t>(kModelBands) * kModelFrames, 0.0);

  const int copy_frames = std::min(mel.n_frames, kModelFrames);
  for (int b = 0; b < kModelBands; ++b)
    for (int t = 0; t < copy_frames; ++t)
      out.at(b, t) = std::clamp((mel.at(b, t) - kModelFloorDb) / (0.0 - kModelFloorDb), 0.0, 1.0);
  return out;
}

inline std::vector<float> model_input_floats(const Spectrogram& s) {
  std::vector<float> v(s.values.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(s.values[i]);
  return v;
}

// Debug exports: CSV (one row per band) and 8-bit PGM.
inline void write_spectrogram_csv(const Spectrogram& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_spectrogram_csv: cannot open " + path);
  for (int b = 0; b < s.n_bands; ++b) {
    for (int t = 0; t < s.n_frames; ++t) {
      if (t) out << ',';
      out << s.at(b, t);
    }
    out << '\n';
  }
}

inline void write_spectrogram_pgm(const Spectrogram& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_spectrogram_pgm: cannot open " + path);
  double lo = s.floor_db, hi = 0.0;
  const auto [min_it, max_it] = std::minmax_element(s.values.begin(), s.values.end());
  if (*min_it >= 0.0 && *max_it <= 1.0 + 1e-9) {  // already rescaled to [0, 1]
    lo = 0.0;
    hi = 1.0;
  }
  out << "P5\n" << s.n_frames << ' ' << s.n_bands << "\n255\n";
  for (int b = s.n_bands - 1; b >= 0; --b)  // low bands at the bottom
    for (int t = 0; t < s.n_frames; ++t) {
      const double g = std::clamp((s.at(b, t) - lo) / (hi - lo), 0.0, 1.0);
      out.put(static_cast<char>(std::lround(g * 255.0)));
    }
}

}  // namespace aed
