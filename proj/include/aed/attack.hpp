#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>
#include <stdexcept>

#include "aed/audio.hpp"

namespace aed {

enum class NoiseKind { background, white };

inline const char* noise_kind_name(NoiseKind k) {
  return k == NoiseKind::background ? "background" : "white";
}

// The white-noise level ladder used across the attack experiments.
inline constexpr std::array<double, 11> kWhiteNoiseLevels = {
    0.0001, 0.0005, 0.001, 0.005, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5};

// Attack parameterization. White noise uses adjustment_factor only;
// background noise uses either adjustment_factor as a direct gain or
// target_snr_db (exactly one of the two).
struct NoiseSpec {
  NoiseKind kind = NoiseKind::white;
  double adjustment_factor = 0.0;
  std::optional<double> target_snr_db;  // background only
  std::string noise_name;               // background only, provenance
  std::uint64_t seed = 0;
};

// Which share of positive-class test clips gets perturbed.
struct InfusionPlan {
  double fraction = 1.0;  // of positive-class clips
  NoiseSpec spec;
  std::uint64_t selection_seed = 0;
};

struct InfusionRecord {
  std::string clip_id;
  NoiseKind kind;
  double factor_or_snr;
  std::uint64_t seed;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// 10*log10 of signal power over noise power. Zero noise power returns
// +infinity, zero signal power returns -infinity (sentinels, not errors).
inline double snr_db(const AudioClip& signal, const AudioClip& noise_term) {
  if (signal.samples.size() != noise_term.samples.size())
    throw std::invalid_argument("snr_db: length mismatch");
  double ps = 0.0, pn = 0.0;
  for (double s : signal.samples) ps += s * s;
  for (double n : noise_term.samples) pn += n * n;
  if (pn == 0.0) return std::numeric_limits<double>::infinity();
  if (ps == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(ps / pn);
}

// Seeded i.i.d. standard-normal sequence scaled by amplitude.
inline std::vector<double> white_noise_term(std::size_t n, double amplitude, std::uint64_t seed) {
  std::vector<double> term(n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) term[i] = amplitude * normal(rng);
  return term;
}

// White-noise attack: amplitude = adjustment_factor * max(samples), added
// per sample from the seeded generator, result clamped to [-1, 1]. An
// all-zero sample has max 0, so it passes through unchanged.
inline AudioClip add_white_noise(const AudioClip& sample, const NoiseSpec& spec) {
  if (spec.adjustment_factor < 0.0)
    throw std::invalid_argument("add_white_noise: adjustment_factor must be >= 0");
  AudioClip out = sample;
  if (sample.samples.empty() || spec.adjustment_factor == 0.0) return out;

  const double max_elem = *std::max_element(sample.samples.begin(), sample.samples.end());
  const double amplitude = spec.adjustment_factor * max_elem;
  if (amplitude == 0.0) return out;

  const std::vector<double> term = white_noise_term(sample.samples.size(), amplitude, spec.seed);
  for (std::size_t i = 0; i < out.samples.size(); ++i)
    out.samples[i] = std::clamp(sample.samples[i] + term[i], -1.0, 1.0);
  return out;
}

// Cuts (or loops) the noise clip to the requested length, starting from a
// seeded offset so repeated mixes do not always align.
inline std::vector<double> fit_noise_segment(const AudioClip& noise, std::size_t len,
                                             std::uint64_t seed) {
  if (noise.samples.empty()) throw std::invalid_argument("fit_noise_segment: empty noise clip");
  std::mt19937_64 rng(splitmix64(seed ^ 0x6e6f697365ull));
  const std::size_t offset =
      std::uniform_int_distribution<std::size_t>(0, noise.samples.size() - 1)(rng);
  std::vector<double> seg(len);
  for (std::size_t i = 0; i < len; ++i)
    seg[i] = noise.samples[(offset + i) % noise.samples.size()];
  return seg;
}

// Background-noise attack. The gain is the adjustment factor directly, or,
// in SNR mode, chosen so the mixed-in noise term sits exactly target_snr_db
// below the sample. Output is clamped to [-1, 1].
inline AudioClip add_background_noise(const AudioClip& sample, const AudioClip& noise,
                                      const NoiseSpec& spec) {
  if (sample.sample_rate != noise.sample_rate)
    throw std::invalid_argument("add_background_noise: sample-rate mismatch");
  if (!spec.target_snr_db && spec.adjustment_factor == 0.0) return sample;

  const std::vector<double> seg = fit_noise_segment(noise, sample.samples.size(), spec.seed);

  double gain = spec.adjustment_factor;
  if (spec.target_snr_db) {
    double ps = 0.0, pn = 0.0;
    for (double s : sample.samples) ps += s * s;
    for (double n : seg) pn += n * n;
    if (pn == 0.0)
      throw std::runtime_error("add_background_noise: silent noise source with target SNR set");
    gain = ps > 0.0 ? std::sqrt(ps / (pn * std::pow(10.0, *spec.target_snr_db / 10.0))) : 0.0;
  }

  AudioClip out = sample;
  for (std::size_t i = 0; i < out.samples.size(); ++i)
    out.samples[i] = std::clamp(sample.samples[i] + gain * seg[i], -1.0, 1.0);
  return out;
}

inline AudioClip apply_noise(const AudioClip& sample, const NoiseSpec& spec,
                             const AudioClip* noise_source) {
  if (spec.kind == NoiseKind::white) return add_white_noise(sample, spec);
  if (!noise_source)
    throw std::invalid_argument("apply_noise: background noise requires a noise source");
  return add_background_noise(sample, *noise_source, spec);
}

// Perturbs a seeded subset of positive-class clips, leaving negatives and
// all labels untouched. Selection is the first round(fraction * n_pos)
// entries of a seeded permutation, so fractions are nested for a fixed
// selection seed. Per-clip noise seeds derive from the spec seed and the
// clip's position, so a clip keeps its noise realization across levels.
inline std::pair<std::vector<AudioClip>, std::vector<InfusionRecord>> infuse_testset(
    const std::vector<AudioClip>& clips, const std::string& positive_class,
    const InfusionPlan& plan, const AudioClip* noise_source = nullptr) {
  if (plan.fraction < 0.0 || plan.fraction > 1.0)
    throw std::invalid_argument("infuse_testset: fraction must be in [0, 1]");

  std::vector<std::size_t> positives;
  for (std::size_t i = 0; i < clips.size(); ++i)
    if (clips[i].label == positive_class) positives.push_back(i);
  if (positives.empty()) throw std::runtime_error("infuse_testset: empty positive class");

  std::vector<std::size_t> order(positives.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(plan.selection_seed);
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t n_sel =
      static_cast<std::size_t>(std::llround(plan.fraction * static_cast<double>(positives.size())));

  std::vector<AudioClip> out = clips;
  std::vector<InfusionRecord> manifest;
  manifest.reserve(n_sel);
  std::vector<std::size_t> selected(order.begin(), order.begin() + n_sel);
  std::sort(selected.begin(), selected.end());
  for (std::size_t pos_idx : selected) {
    const std::size_t clip_idx = positives[pos_idx];
    NoiseSpec per_clip = plan.spec;
    per_clip.seed = splitmix64(plan.spec.seed + 0x517cc1b727220a95ull * (pos_idx + 1));
    out[clip_idx] = apply_noise(clips[clip_idx], per_clip, noise_source);
    out[clip_idx].label = clips[clip_idx].label;
    out[clip_idx].source_id = clips[clip_idx].source_id;
    manifest.push_back({clips[clip_idx].source_id, per_clip.kind,
                        per_clip.target_snr_db ? *per_clip.target_snr_db
                                               : per_clip.adjustment_factor,
                        per_clip.seed});
  }
  return {std::move(out), std::move(manifest)};
}

// ---- Stock background-noise stand-ins ------------------------------------
// The real traffic / talking recordings are not distributable, so the repo
// ships two generated surrogates with similar spectral texture.

// Brown-ish noise with a low-frequency emphasis and a mid band buzz.
inline AudioClip make_traffic_noise(double seconds, int sample_rate, std::uint64_t seed) {
  const std::size_t n = static_cast<std::size_t>(std::llround(seconds * sample_rate));
  std::mt19937_64 rng(splitmix64(seed ^ 0x7472616666696bull));
  std::normal_distribution<double> normal(0.0, 1.0);

  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.label = "traffic-like";
  clip.source_id = "stock:traffic-like";
  clip.samples.resize(n);

  double brown = 0.0, lp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    brown = 0.995 * brown + 0.06 * normal(rng);
    lp = 0.92 * lp + 0.08 * normal(rng);
    const double t = static_cast<double>(i) / sample_rate;
    const double buzz = 0.08 * std::sin(2.0 * M_PI * 95.0 * t) * (1.0 + 0.4 * std::sin(2.0 * M_PI * 0.7 * t));
    clip.samples[i] = brown + 0.25 * lp + buzz;
  }
  double peak = 1e-12;
  for (double s : clip.samples) peak = std::max(peak, std::abs(s));
  for (double& s : clip.samples) s *= 0.6 / peak;
  return clip;
}

// Band-limited noise with syllabic-rate amplitude modulation.
inline AudioClip make_babble_noise(double seconds, int sample_rate, std::uint64_t seed) {
  const std::size_t n = static_cast<std::size_t>(std::llround(seconds * sample_rate));
  std::mt19937_64 rng(splitmix64(seed ^ 0x626162626c65ull));
  std::normal_distribution<double> normal(0.0, 1.0);

  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.label = "babble-like";
  clip.source_id = "stock:babble-like";
  clip.samples.resize(n);

  double lp1 = 0.0, lp2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = normal(rng);
    lp1 = 0.80 * lp1 + 0.20 * w;   // ~800 Hz one-pole
    lp2 = 0.985 * lp2 + 0.015 * w; // remove band below ~50 Hz
    const double band = lp1 - lp2;
    const double t = static_cast<double>(i) / sample_rate;
    const double am = 0.55 + 0.45 * std::sin(2.0 * M_PI * 3.4 * t) * std::sin(2.0 * M_PI * 0.9 * t + 1.3);
    clip.samples[i] = band * am;
  }
  double peak = 1e-12;
  for (double s : clip.samples) peak = std::max(peak, std::abs(s));
  for (double& s : clip.samples) s *= 0.6 / peak;
  return clip;
}

}  // namespace aed
