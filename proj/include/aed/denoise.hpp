#pragma once

#include <algorithm>
#include <cmath>
#include <vector>
#include <stdexcept>

#include "aed/audio.hpp"
#include "aed/dsp.hpp"

namespace aed {

/*
 * Profile-free spectral gating. The noise threshold is derived from the
 * clip being denoised itself (per-band mean + standard deviation over
 * time), so no separate noise recording is ever consulted. Bins whose
 * level stays under their band threshold are attenuated; the binary gate
 * is softened by a separable triangular smoothing kernel before being
 * applied to the complex STFT.
 */
struct DenoiseConfig {
  double floor_db = -80.0;
  double threshold_offset_db = 0.0;
  int smooth_freq_bins = 2;
  int smooth_time_frames = 3;
  double attenuation_db = 30.0;
  StftConfig stft{1024, 512};

  void validate() const {
    if (smooth_freq_bins < 0 || smooth_time_frames < 0)
      throw std::invalid_argument("DenoiseConfig: smoothing radii must be >= 0");
    if (attenuation_db <= 0.0)
      throw std::invalid_argument("DenoiseConfig: attenuation_db must be > 0");
  }
};

// Per-band threshold: mean over time plus (population) standard deviation,
// plus the configured offset.
inline std::vector<double> derive_threshold(const Spectrogram& spec_db,
                                            double threshold_offset_db = 0.0) {
  std::vector<double> thr(spec_db.n_bands);
  for (int b = 0; b < spec_db.n_bands; ++b) {
    double mean = 0.0;
    for (int t = 0; t < spec_db.n_frames; ++t) mean += spec_db.at(b, t);
    mean /= spec_db.n_frames;
    double var = 0.0;
    for (int t = 0; t < spec_db.n_frames; ++t) {
      const double d = spec_db.at(b, t) - mean;
      var += d * d;
    }
    var /= spec_db.n_frames;
    thr[b] = mean + std::sqrt(var) + threshold_offset_db;
  }
  return thr;
}

namespace detail {

// Normalized triangular kernel of the given radius: 1, 2, ..., r+1, ..., 2, 1.
inline std::vector<double> triangle_kernel(int radius) {
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = static_cast<double>(radius + 1 - std::abs(i));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable convolution with replicate padding, along rows or columns of
// an n_bands x n_frames matrix.
inline void convolve_axis(std::vector<double>& m, int n_bands, int n_frames,
                          const std::vector<double>& kernel, bool along_time) {
  const int radius = static_cast<int>(kernel.size() / 2);
  if (radius == 0) return;
  std::vector<double> out(m.size());
  for (int b = 0; b < n_bands; ++b) {
    for (int t = 0; t < n_frames; ++t) {
      double acc = 0.0;
      for (int d = -radius; d <= radius; ++d) {
        int bb = b, tt = t;
        if (along_time)
          tt = std::clamp(t + d, 0, n_frames - 1);
        else
          bb = std::clamp(b + d, 0, n_bands - 1);
        acc += kernel[d + radius] * m[static_cast<std::size_t>(bb) * n_frames + tt];
      }
      out[static_cast<std::size_t>(b) * n_frames + t] = acc;
    }
  }
  m.swap(out);
}

}  // namespace detail

// Binary gate (1 where the bin exceeds its band threshold) smoothed by the
// outer product of two triangular ramps; values end up in [0, 1].
inline std::vector<double> gate_mask(const Spectrogram& spec_db,
                                     const std::vector<double>& thresholds,
                                     int smooth_freq_bins = 2, int smooth_time_frames = 3) {
  if (static_cast<int>(thresholds.size()) != spec_db.n_bands)
    throw std::invalid_argument("gate_mask: threshold count must match band count");

  std::vector<double> mask(spec_db.values.size());
  for (int b = 0; b < spec_db.n_bands; ++b)
    for (int t = 0; t < spec_db.n_frames; ++t)
      mask[static_cast<std::size_t>(b) * spec_db.n_frames + t] =
          spec_db.at(b, t) > thresholds[b] ? 1.0 : 0.0;

  if (smooth_freq_bins > 0)
    detail::convolve_axis(mask, spec_db.n_bands, spec_db.n_frames,
                          detail::triangle_kernel(smooth_freq_bins), false);
  if (smooth_time_frames > 0)
    detail::convolve_axis(mask, spec_db.n_bands, spec_db.n_frames,
                          detail::triangle_kernel(smooth_time_frames), true);
  return mask;
}

// Full denoising pass: derive the gate from the clip's own statistics,
// scale every STFT coefficient between full attenuation (mask 0) and
// unity (mask 1) in the linear-magnitude domain, and resynthesize at the
// input length. Never amplifies any bin.
//
// The clip is zero-padded by one frame on each side before analysis: once
// coefficients are modified, overlap-add normalization at the outer
// half-frames would otherwise divide leaked energy by a near-zero window
// sum and spray spikes over the clip edges. The padding is sliced off
// after resynthesis.
inline AudioClip denoise(const AudioClip& clip, const DenoiseConfig& cfg = {}) {
  cfg.validate();

  // Thresholds come from the clip's own spectrum, exactly as stated.
  const ComplexSpectrum clip_spec = stft(clip, cfg.stft);
  const Spectrogram db = to_db(clip_spec, cfg.floor_db);
  const std::vector<double> thresholds = derive_threshold(db, cfg.threshold_offset_db);
  double ref_mag = 0.0;
  for (const auto& c : clip_spec.coef) ref_mag = std::max(ref_mag, std::abs(c));

  const std::size_t pad = static_cast<std::size_t>(cfg.stft.fft_size);
  AudioClip padded;
  padded.sample_rate = clip.sample_rate;
  padded.samples.assign(clip.samples.size() + 2 * pad, 0.0);
  std::copy(clip.samples.begin(), clip.samples.end(), padded.samples.begin() + pad);

  ComplexSpectrum spec = stft(padded, cfg.stft);

  // dB view of the padded spectrum against the clip's own reference, so
  // the gate decisions match the threshold statistics; the pure-padding
  // frames land on the floor and stay gated.
  Spectrogram padded_db = db;
  padded_db.n_frames = spec.n_frames;
  padded_db.values.assign(static_cast<std::size_t>(spec.n_bins) * spec.n_frames, cfg.floor_db);
  if (ref_mag > 0.0) {
    for (std::size_t i = 0; i < spec.coef.size(); ++i) {
      const double mag = std::abs(spec.coef[i]);
      if (mag > 0.0)
        padded_db.values[i] = std::max(cfg.floor_db, 20.0 * std::log10(mag / ref_mag));
    }
  }
  const std::vector<double> mask =
      gate_mask(padded_db, thresholds, cfg.smooth_freq_bins, cfg.smooth_time_frames);

  const double atten = std::pow(10.0, -cfg.attenuation_db / 20.0);
  for (std::size_t i = 0; i < spec.coef.size(); ++i)
    spec.coef[i] *= atten + (1.0 - atten) * mask[i];

  AudioClip resynth = istft(spec);
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.label = clip.label;
  out.source_id = clip.source_id;
  out.samples.assign(clip.samples.size(), 0.0);
  const std::size_t avail =
      resynth.samples.size() > pad ? resynth.samples.size() - pad : 0;
  const std::size_t n = std::min(clip.samples.size(), avail);
  std::copy(resynth.samples.begin() + pad, resynth.samples.begin() + pad + n,
            out.samples.begin());
  return out;
}

}  // namespace aed
