#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>
#include <stdexcept>

#include "json.hpp"

#include "aed/attack.hpp"
#include "aed/audio.hpp"

namespace aed::data {

enum class Split { train, test };

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory (or absolute)
  std::string class_name;
  Split split = Split::train;
};

struct Manifest {
  std::string positive_class;
  std::vector<std::string> negative_classes;
  std::vector<ManifestEntry> entries;
  std::string base_dir;  // set by load_manifest; entry paths resolve against it

  std::string resolve(const std::string& rel) const {
    std::filesystem::path p(rel);
    if (p.is_absolute()) return rel;
    return (std::filesystem::path(base_dir) / p).string();
  }
};

inline Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_manifest: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_manifest: bad JSON in " + path + ": " + e.what());
  }

  Manifest m;
  m.base_dir = std::filesystem::path(path).parent_path().string();
  if (!j.contains("positive_class") || !j.contains("negative_classes") || !j.contains("entries"))
    throw std::runtime_error("load_manifest: missing required key in " + path);
  m.positive_class = j.at("positive_class").get<std::string>();
  if (m.positive_class.empty()) throw std::runtime_error("load_manifest: empty positive_class");
  for (const auto& c : j.at("negative_classes")) {
    const auto name = c.get<std::string>();
    if (name.empty()) throw std::runtime_error("load_manifest: empty negative class name");
    m.negative_classes.push_back(name);
  }

  std::set<std::string> seen;
  for (const auto& e : j.at("entries")) {
    ManifestEntry entry;
    entry.path = e.at("path").get<std::string>();
    entry.class_name = e.at("class").get<std::string>();
    const auto split = e.at("split").get<std::string>();
    if (split == "train")
      entry.split = Split::train;
    else if (split == "test")
      entry.split = Split::test;
    else
      throw std::runtime_error("load_manifest: entry '" + entry.path + "' has unknown split tag '" +
                               split + "'");
    if (entry.class_name.empty())
      throw std::runtime_error("load_manifest: entry '" + entry.path + "' has empty class");
    if (!seen.insert(entry.path).second)
      throw std::runtime_error("load_manifest: duplicate path '" + entry.path + "'");
    if (!std::filesystem::exists(m.resolve(entry.path)))
      throw std::runtime_error("load_manifest: missing file '" + m.resolve(entry.path) + "'");
    m.entries.push_back(std::move(entry));
  }
  return m;
}

inline void save_manifest(const Manifest& m, const std::string& path) {
  nlohmann::ordered_json j;
  j["positive_class"] = m.positive_class;
  j["negative_classes"] = m.negative_classes;
  j["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : m.entries) {
    j["entries"].push_back({{"path", e.path},
                            {"class", e.class_name},
                            {"split", e.split == Split::train ? "train" : "test"}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_manifest: cannot open " + path);
  out << j.dump(2) << '\n';
}

// One clip reference inside a constructed set.
struct DataItem {
  std::string id;          // manifest-relative path, stable across runs
  std::string path;        // resolved path on disk
  std::string class_name;
  int label = 0;           // 0/1 for binary sets, class index for multiclass
};

struct SplitSet {
  std::vector<DataItem> train;
  std::vector<DataItem> test;
};

namespace detail {

inline std::vector<const ManifestEntry*> pool_of(const Manifest& m, const std::string& cls,
                                                 Split split) {
  std::vector<const ManifestEntry*> pool;
  for (const auto& e : m.entries)
    if (e.class_name == cls && e.split == split) pool.push_back(&e);
  return pool;
}

inline void sample_into(const Manifest& m, const std::string& cls, Split split, int count,
                        int label, std::mt19937_64& rng, std::vector<DataItem>& out) {
  auto pool = pool_of(m, cls, split);
  if (static_cast<int>(pool.size()) < count)
    throw std::runtime_error("build split: class '" + cls + "' has " +
                             std::to_string(pool.size()) + " " +
                             (split == Split::train ? "train" : "test") + " clips, need " +
                             std::to_string(count) + " (short " +
                             std::to_string(count - pool.size()) + ")");
  std::shuffle(pool.begin(), pool.end(), rng);
  for (int i = 0; i < count; ++i)
    out.push_back({pool[i]->path, m.resolve(pool[i]->path), pool[i]->class_name, label});
}

}  // namespace detail

// Balanced binary split: n_per_class positives against the same number of
// negatives drawn evenly across the negative classes (remainder assigned
// round-robin in manifest order). Sampling is seeded and without
// replacement; train and test pools are disjoint by manifest split tags.
inline SplitSet build_balanced_split(const Manifest& m, int n_train_per_class,
                                     int n_test_per_class, std::uint64_t seed,
                                     const std::string& positive_override = "") {
  const std::string pos = positive_override.empty() ? m.positive_class : positive_override;
  if (m.negative_classes.empty())
    throw std::runtime_error("build_balanced_split: no negative classes in manifest");
  std::mt19937_64 rng(seed);
  SplitSet s;

  auto fill = [&](Split split, int n, std::vector<DataItem>& out) {
    detail::sample_into(m, pos, split, n, 1, rng, out);
    const int k = static_cast<int>(m.negative_classes.size());
    const int base = n / k, rem = n % k;
    for (int i = 0; i < k; ++i)
      detail::sample_into(m, m.negative_classes[i], split, base + (i < rem ? 1 : 0), 0, rng, out);
  };
  fill(Split::train, n_train_per_class, s.train);
  fill(Split::test, n_test_per_class, s.test);
  return s;
}

// Balanced multiclass split over the given classes; labels are indices
// into class_names.
inline SplitSet build_multiclass_split(const Manifest& m,
                                       const std::vector<std::string>& class_names,
                                       int n_train_per_class, int n_test_per_class,
                                       std::uint64_t seed) {
  if (class_names.size() < 2)
    throw std::runtime_error("build_multiclass_split: need at least two classes");
  std::mt19937_64 rng(seed);
  SplitSet s;
  for (std::size_t c = 0; c < class_names.size(); ++c)
    detail::sample_into(m, class_names[c], Split::train, n_train_per_class, static_cast<int>(c),
                        rng, s.train);
  for (std::size_t c = 0; c < class_names.size(); ++c)
    detail::sample_into(m, class_names[c], Split::test, n_test_per_class, static_cast<int>(c), rng,
                        s.test);
  return s;
}

// ---- Adversarial training sets --------------------------------------------

struct WhiteNoiseSchedule {
  // Ten of the eleven ladder levels (all but the weakest).
  std::vector<double> levels{0.0005, 0.001, 0.005, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
  int per_level = 100;
};

struct TrainRecipe {
  double adversarial_fraction = 1.0;  // share of positive train clips to perturb
  bool oversample = false;            // keep originals AND add perturbed copies
  NoiseSpec noise;                    // used when schedule is not set
  std::optional<WhiteNoiseSchedule> schedule;
  std::uint64_t selection_seed = 0;
};

// A clip plus the noise to apply when it is materialized.
struct PlannedClip {
  DataItem item;
  std::optional<NoiseSpec> noise;
};

// Builds the training plan for adversarial training. In-place mode
// replaces a seeded subset of positive clips with perturbed versions;
// oversample mode appends a perturbed copy of every train clip to the
// originals, doubling the set; schedule mode spreads the white-noise
// levels evenly over the perturbed positives. The provenance manifest
// lists every perturbation exactly once.
inline std::pair<std::vector<PlannedClip>, std::vector<InfusionRecord>>
build_adversarial_trainset(const std::vector<DataItem>& train, const std::string& positive_class,
                           const TrainRecipe& recipe) {
  if (recipe.adversarial_fraction < 0.0 || recipe.adversarial_fraction > 1.0)
    throw std::invalid_argument("build_adversarial_trainset: fraction must be in [0, 1]");

  std::vector<PlannedClip> out;
  std::vector<InfusionRecord> records;

  auto noise_for = [&](std::size_t position, std::size_t rank,
                       std::size_t total) -> NoiseSpec {
    NoiseSpec spec = recipe.noise;
    if (recipe.schedule) {
      const auto& levels = recipe.schedule->levels;
      if (levels.empty())
        throw std::invalid_argument("build_adversarial_trainset: empty schedule");
      const std::size_t per = (total + levels.size() - 1) / levels.size();
      spec.kind = NoiseKind::white;
      spec.adjustment_factor = levels[std::min(rank / per, levels.size() - 1)];
      spec.target_snr_db.reset();
    }
    spec.seed = splitmix64(recipe.noise.seed + 0x9e3779b97f4a7c15ull * (position + 1));
    return spec;
  };

  if (recipe.oversample) {
    for (const auto& item : train) out.push_back({item, std::nullopt});
    for (std::size_t i = 0; i < train.size(); ++i) {
      const NoiseSpec spec = noise_for(i, i, train.size());
      PlannedClip copy{train[i], spec};
      copy.item.id += "#adv";
      out.push_back(copy);
      records.push_back({train[i].id, spec.kind,
                         spec.target_snr_db ? *spec.target_snr_db : spec.adjustment_factor,
                         spec.seed});
    }
    return {std::move(out), std::move(records)};
  }

  std::vector<std::size_t> positives;
  for (std::size_t i = 0; i < train.size(); ++i)
    if (train[i].class_name == positive_class) positives.push_back(i);

  std::size_t n_sel = 0;
  if (recipe.schedule) {
    n_sel = static_cast<std::size_t>(recipe.schedule->per_level) * recipe.schedule->levels.size();
    if (n_sel == 0) throw std::invalid_argument("build_adversarial_trainset: zero selected clips");
    if (n_sel > positives.size())
      throw std::runtime_error("build_adversarial_trainset: schedule needs " +
                               std::to_string(n_sel) + " positives, have " +
                               std::to_string(positives.size()));
  } else {
    n_sel = static_cast<std::size_t>(
        std::llround(recipe.adversarial_fraction * static_cast<double>(positives.size())));
  }

  std::vector<std::size_t> order(positives.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(recipe.selection_seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::optional<NoiseSpec>> planned(train.size());
  for (std::size_t r = 0; r < n_sel; ++r) {
    const std::size_t idx = positives[order[r]];
    planned[idx] = noise_for(order[r], r, n_sel);
  }
  for (std::size_t i = 0; i < train.size(); ++i) {
    out.push_back({train[i], planned[i]});
    if (planned[i])
      records.push_back({train[i].id, planned[i]->kind,
                         planned[i]->target_snr_db ? *planned[i]->target_snr_db
                                                   : planned[i]->adjustment_factor,
                         planned[i]->seed});
  }
  return {std::move(out), std::move(records)};
}

// ---- Synthetic corpus ------------------------------------------------------
// Desk-scale stand-in for the public audio databases: every family is a
// parametrized generator, so the full pipeline runs with zero downloads.

enum class Family { burst, shatter, tone_sweep, yelp, hum, chatter, rumble };

struct ClassSpec {
  std::string name;
  Family family = Family::burst;
  int n_train = 0;
  int n_test = 0;
  bool positive = false;
};

struct CorpusSpec {
  std::string out_dir;
  std::vector<ClassSpec> classes;
  double clip_seconds = kDefaultClipSeconds;
  int sample_rate = kCanonicalRate;
  bool write_noise_sources = true;
};

inline CorpusSpec default_corpus_spec(const std::string& out_dir, int n_train_per_class,
                                      int n_test_per_class) {
  CorpusSpec spec;
  spec.out_dir = out_dir;
  spec.classes = {
      {"burst", Family::burst, n_train_per_class, n_test_per_class, true},
      {"shatter", Family::shatter, n_train_per_class, n_test_per_class, true},
      {"tone-sweep", Family::tone_sweep, n_train_per_class, n_test_per_class, true},
      {"yelp", Family::yelp, n_train_per_class, n_test_per_class, true},
      {"hum", Family::hum, n_train_per_class, n_test_per_class, false},
      {"chatter", Family::chatter, n_train_per_class, n_test_per_class, false},
      {"rumble", Family::rumble, n_train_per_class, n_test_per_class, false},
  };
  return spec;
}

namespace synth {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::vector<double> burst(std::mt19937_64& rng, std::size_t n, int rate) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(n, 0.0);

  const double dur = static_cast<double>(n) / rate;
  const double t0 = uniform(rng, 0.25, dur - 0.7);
  const double tau = uniform(rng, 0.05, 0.18);
  const double peak = uniform(rng, 0.45, 0.9);
  const double floor_amp = peak * uniform(rng, 2e-5, 1.2e-4);
  for (auto& s : x) s = floor_amp * normal(rng);
  const std::size_t i0 = static_cast<std::size_t>(t0 * rate);
  for (std::size_t i = i0; i < n; ++i) {
    const double e = std::exp(-(static_cast<double>(i - i0) / rate) / tau);
    if (e < 1e-4) break;
    x[i] += peak * e * normal(rng);
  }
  if (uniform(rng, 0.0, 1.0) < 0.4) {  // reflection
    const double t1 = t0 + uniform(rng, 0.05, 0.18);
    const double amp = peak * uniform(rng, 0.2, 0.45);
    const std::size_t i1 = static_cast<std::size_t>(t1 * rate);
    for (std::size_t i = i1; i < n; ++i) {
      const double e = std::exp(-(static_cast<double>(i - i1) / rate) / (tau * 0.8));
      if (e < 1e-4) break;
      x[i] += amp * e * normal(rng);
    }
  }
  for (auto& s : x) s = std::clamp(s, -0.98, 0.98);
  return x;
}

inline std::vector<double> shatter(std::mt19937_64& rng, std::size_t n, int rate) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(n, 0.0);
  const double floor_amp = uniform(rng, 1e-5, 8e-5);
  for (auto& s : x) s = floor_amp * normal(rng);

  const double dur = static_cast<double>(n) / rate;
  const int n_pings = static_cast<int>(uniform(rng, 6.0, 15.0));
  const double start = uniform(rng, 0.15, dur - 1.6);
  const double spread = uniform(rng, 0.4, 1.3);
  for (int p = 0; p < n_pings; ++p) {
    const double tp = start + uniform(rng, 0.0, spread);
    const double f = uniform(rng, 2500.0, 8800.0);
    const double tau = uniform(rng, 0.004, 0.02);
    const double amp = uniform(rng, 0.2, 0.75);
    const double phase = uniform(rng, 0.0, 2.0 * M_PI);
    const std::size_t ip = static_cast<std::size_t>(tp * rate);
    for (std::size_t i = ip; i < n; ++i) {
      const double t = static_cast<double>(i - ip) / rate;
      const double e = std::exp(-t / tau);
      if (e < 1e-4) break;
      x[i] += amp * e * (std::sin(2.0 * M_PI * f * t + phase) + 0.25 * normal(rng));
    }
  }
  for (auto& s : x) s = std::clamp(s, -0.98, 0.98);
  return x;
}

inline std::vector<double> tone_sweep(std::mt19937_64& rng, std::size_t n, int rate) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(n);
  const double f_lo = uniform(rng, 500.0, 900.0);
  const double f_hi = uniform(rng, 1200.0, 1900.0);
  const double period = uniform(rng, 0.8, 2.0);
  const double amp = uniform(rng, 0.25, 0.55);
  const double noise_amp = amp * uniform(rng, 5e-5, 2.5e-4);
  double phase = uniform(rng, 0.0, 2.0 * M_PI);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    double frac = std::fmod(t / period, 1.0);
    frac = frac < 0.5 ? 2.0 * frac : 2.0 - 2.0 * frac;  // triangle
    const double f = f_lo + (f_hi - f_lo) * frac;
    phase += 2.0 * M_PI * f / rate;
    x[i] = amp * (std::sin(phase) + 0.12 * std::sin(2.0 * phase)) + noise_amp * normal(rng);
  }
  return x;
}

inline std::vector<double> yelp(std::mt19937_64& rng, std::size_t n, int rate) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(n, 0.0);
  const double floor_amp = uniform(rng, 2e-5, 1.5e-4);
  for (auto& s : x) s = floor_amp * normal(rng);

  const double dur = static_cast<double>(n) / rate;
  const int k = static_cast<int>(uniform(rng, 2.0, 6.0));
  for (int y = 0; y < k; ++y) {
    const double tb = uniform(rng, 0.1, dur - 0.3);
    const double d = uniform(rng, 0.08, 0.2);
    const double f0 = uniform(rng, 350.0, 700.0);
    const double amp = uniform(rng, 0.3, 0.7);
    const std::size_t ib = static_cast<std::size_t>(tb * rate);
    const std::size_t ie = std::min(n, ib + static_cast<std::size_t>(d * rate));
    double phase = uniform(rng, 0.0, 2.0 * M_PI);
    for (std::size_t i = ib; i < ie; ++i) {
      const double t = static_cast<double>(i - ib) / rate;
      const double attack = std::min(1.0, t / 0.005);
      const double env = attack * std::exp(-t / (0.6 * d));
      const double f = f0 * (1.0 - 0.15 * t / d);
      phase += 2.0 * M_PI * f / rate;
      x[i] += amp * env *
              (std::sin(phase) + 0.5 * std::sin(2.0 * phase) + 0.25 * std::sin(3.0 * phase));
    }
  }
  for (auto& s : x) s = std::clamp(s, -0.98, 0.98);
  return x;
}

inline std::vector<double> hum(std::mt19937_64& rng, std::size_t n, int rate) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(n);
  const double f0 = uniform(rng, 60.0, 170.0);
  const int harmonics = static_cast<int>(uniform(rng, 3.0, 6.0));
  const double amp = uniform(rng, 0.12, 0.4);
  const double wobble_f = uniform(rng, 0.2, 0.7);
  const double noise_amp = amp * uniform(rng, 5e-5, 2e-4);
  const double phase0 = uniform(rng, 0.0, 2.0 * M_PI);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    double s = 0.0;
    for (int h = 1; h <= harmonics; ++h)
      s += std::sin(2.0 * M_PI * f0 * h * t + phase0 * h) / std::pow(h, 1.2);
    const double wobble = 1.0 + 0.08 * std::sin(2.0 * M_PI * wobble_f * t);
    x[i] = amp * wobble * s / harmonics + noise_amp * normal(rng);
  }
  return x;
}

inline std::vector<double> chatter(std::mt19937_64& rng, std::size_t n, int rate) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(n);
  const double a_fast = uniform(rng, 0.5, 0.7);
  const double fm = uniform(rng, 2.0, 7.0);
  const double fm2 = uniform(rng, 0.4, 1.2);
  const double depth = uniform(rng, 0.5, 0.9);
  const double phase = uniform(rng, 0.0, 2.0 * M_PI);
  double lp_fast = 0.0, lp_slow = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = normal(rng);
    lp_fast = a_fast * lp_fast + (1.0 - a_fast) * w;
    lp_slow = 0.995 * lp_slow + 0.005 * w;
    const double t = static_cast<double>(i) / rate;
    const double am =
        1.0 - depth * 0.5 * (1.0 + std::sin(2.0 * M_PI * fm * t + phase) *
                                       std::sin(2.0 * M_PI * fm2 * t));
    x[i] = (lp_fast - lp_slow) * am;
  }
  double rms = 0.0;
  for (double s : x) rms += s * s;
  rms = std::sqrt(rms / n);
  const double target = uniform(rng, 0.08, 0.3);
  for (auto& s : x) s = std::clamp(s * target / std::max(rms, 1e-9), -0.98, 0.98);
  return x;
}

inline std::vector<double> rumble(std::mt19937_64& rng, std::size_t n, int rate) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(n);
  const double a_lp = uniform(rng, 0.95, 0.985);
  double brown = 0.0, lp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    brown = 0.997 * brown + 0.05 * normal(rng);
    lp = a_lp * lp + (1.0 - a_lp) * brown;
    x[i] = lp;
  }
  double rms = 0.0;
  for (double s : x) rms += s * s;
  rms = std::sqrt(rms / n);
  const double target = uniform(rng, 0.1, 0.35);
  for (auto& s : x) s = std::clamp(s * target / std::max(rms, 1e-9), -0.98, 0.98);
  return x;
}

inline std::vector<double> make(Family family, std::mt19937_64& rng, std::size_t n, int rate) {
  switch (family) {
    case Family::burst: return burst(rng, n, rate);
    case Family::shatter: return shatter(rng, n, rate);
    case Family::tone_sweep: return tone_sweep(rng, n, rate);
    case Family::yelp: return yelp(rng, n, rate);
    case Family::hum: return hum(rng, n, rate);
    case Family::chatter: return chatter(rng, n, rate);
    case Family::rumble: return rumble(rng, n, rate);
  }
  throw std::logic_error("synth::make: unknown family");
}

}  // namespace synth

// Generates the corpus WAVs plus manifest.json (and the stock
// background-noise WAVs under noise/). Deterministic per seed: every clip
// gets its own generator derived from (seed, class index, clip index).
inline Manifest generate_synthetic_corpus(const CorpusSpec& spec, std::uint64_t seed) {
  namespace fs = std::filesystem;
  if (spec.classes.empty())
    throw std::invalid_argument("generate_synthetic_corpus: no classes requested");
  fs::create_directories(spec.out_dir);

  const std::size_t n_samples =
      static_cast<std::size_t>(std::llround(spec.clip_seconds * spec.sample_rate));

  Manifest m;
  m.base_dir = spec.out_dir;
  for (const auto& cls : spec.classes) {
    if (cls.positive && m.positive_class.empty()) m.positive_class = cls.name;
    if (!cls.positive) m.negative_classes.push_back(cls.name);
  }
  if (m.positive_class.empty())
    throw std::invalid_argument("generate_synthetic_corpus: need at least one positive class");

  for (std::size_t c = 0; c < spec.classes.size(); ++c) {
    const auto& cls = spec.classes[c];
    fs::create_directories(fs::path(spec.out_dir) / cls.name);
    const int total = cls.n_train + cls.n_test;
    for (int i = 0; i < total; ++i) {
      std::mt19937_64 rng(
          splitmix64(seed ^ splitmix64((c + 1) * 0x100000001ull + static_cast<std::uint64_t>(i))));
      AudioClip clip;
      clip.sample_rate = spec.sample_rate;
      clip.samples = synth::make(cls.family, rng, n_samples, spec.sample_rate);
      clip.label = cls.name;

      char name[64];
      std::snprintf(name, sizeof(name), "%s_%05d.wav", cls.name.c_str(), i);
      const std::string rel = cls.name + "/" + name;
      clip.source_id = rel;
      write_wav(clip, (fs::path(spec.out_dir) / rel).string());
      m.entries.push_back({rel, cls.name, i < cls.n_train ? Split::train : Split::test});
    }
  }

  if (spec.write_noise_sources) {
    fs::create_directories(fs::path(spec.out_dir) / "noise");
    const double noise_seconds = 30.0;
    write_wav(make_traffic_noise(noise_seconds, spec.sample_rate, splitmix64(seed ^ 0xbadcab1eull)),
              (fs::path(spec.out_dir) / "noise" / "traffic_like.wav").string());
    write_wav(make_babble_noise(noise_seconds, spec.sample_rate, splitmix64(seed ^ 0xfadedcafeull)),
              (fs::path(spec.out_dir) / "noise" / "babble_like.wav").string());
  }

  save_manifest(m, (fs::path(spec.out_dir) / "manifest.json").string());
  return m;
}

}  // namespace aed::data
