#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>
#include <stdexcept>

#include "json.hpp"

#include "aed/attack.hpp"
#include "aed/audio.hpp"
#include "aed/data.hpp"
#include "aed/denoise.hpp"
#include "aed/dsp.hpp"
#include "aed/neural.hpp"

namespace aed::exp {

// Per-run metrics keyed by experiment id and condition, mirroring the
// metric columns of the result tables.
struct ExperimentReport {
  std::string id;
  std::string condition;
  int train_size = 0;
  int test_size = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<std::vector<int>> confusion;
  double wall_clock_s = 0.0;
  std::uint64_t seed = 0;
};

inline nlohmann::ordered_json report_to_json(const ExperimentReport& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["condition"] = r.condition;
  j["train_size"] = r.train_size;
  j["test_size"] = r.test_size;
  j["accuracy"] = r.accuracy;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["confusion"] = r.confusion;
  j["seed"] = r.seed;
  j["wall_clock_s"] = r.wall_clock_s;
  return j;
}

inline ExperimentReport report_from_json(const nlohmann::json& j) {
  ExperimentReport r;
  r.id = j.at("id").get<std::string>();
  r.condition = j.at("condition").get<std::string>();
  r.train_size = j.at("train_size").get<int>();
  r.test_size = j.at("test_size").get<int>();
  r.accuracy = j.at("accuracy").get<double>();
  r.precision = j.at("precision").get<double>();
  r.recall = j.at("recall").get<double>();
  r.f1 = j.at("f1").get<double>();
  r.confusion = j.at("confusion").get<std::vector<std::vector<int>>>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.wall_clock_s = j.at("wall_clock_s").get<double>();
  return r;
}

// CSV mirrors the paper's table layout; JSON carries the full structure.
inline void emit_report(const std::vector<ExperimentReport>& reports, const std::string& format,
                        const std::string& path) {
  if (reports.empty()) throw std::invalid_argument("emit_report: empty report list");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_report: cannot open " + path);
  if (format == "csv") {
    out << "exp_id,condition,train_size,test_size,accuracy,precision,recall,f1\n";
    for (const auto& r : reports) {
      char row[256];
      std::snprintf(row, sizeof(row), "%s,%s,%d,%d,%.6g,%.6g,%.6g,%.6g\n", r.id.c_str(),
                    r.condition.c_str(), r.train_size, r.test_size, r.accuracy, r.precision,
                    r.recall, r.f1);
      out << row;
    }
  } else if (format == "json") {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : reports) arr.push_back(report_to_json(r));
    out << arr.dump(2) << '\n';
  } else {
    throw std::invalid_argument("emit_report: unknown format '" + format + "'");
  }
  if (!out) throw std::runtime_error("emit_report: write failed: " + path);
}

inline void write_infusion_manifest(const std::vector<InfusionRecord>& records,
                                    const std::string& path) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& rec : records)
    arr.push_back({{"clip_id", rec.clip_id},
                   {"kind", noise_kind_name(rec.kind)},
                   {"factor_or_snr", rec.factor_or_snr},
                   {"seed", rec.seed}});
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_infusion_manifest: cannot open " + path);
  out << arr.dump(2) << '\n';
}

// ---- Pipeline plumbing -----------------------------------------------------

struct PreparedSet {
  std::vector<std::vector<float>> x;
  std::vector<int> y;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline AudioClip load_normalized(const data::DataItem& item) {
  AudioClip raw = read_wav(item.path);
  auto result = normalize_clip(raw);
  if (std::holds_alternative<Rejected>(result)) {
    const auto& rej = std::get<Rejected>(result);
    throw std::runtime_error("clip '" + item.path + "' rejected (" + rej.reason + ", " +
                             std::to_string(rej.duration_s) + " s)");
  }
  AudioClip clip = std::move(std::get<AudioClip>(result));
  clip.label = item.class_name;
  clip.source_id = item.id;
  return clip;
}

inline std::vector<AudioClip> load_clips(const std::vector<data::DataItem>& items) {
  std::vector<AudioClip> clips;
  clips.reserve(items.size());
  for (const auto& item : items) clips.push_back(load_normalized(item));
  return clips;
}

// Streams a training plan to spectrogram inputs: load, perturb when the
// plan says so, optionally denoise, convert. Waveforms are not retained.
inline PreparedSet prepare_planned(const std::vector<data::PlannedClip>& plan,
                                   const AudioClip* noise_source,
                                   const DenoiseConfig* dn = nullptr) {
  PreparedSet set;
  set.x.reserve(plan.size());
  set.y.reserve(plan.size());
  for (const auto& pc : plan) {
    AudioClip clip = load_normalized(pc.item);
    if (pc.noise) clip = apply_noise(clip, *pc.noise, noise_source);
    if (dn) clip = denoise(clip, *dn);
    set.x.push_back(model_input_floats(clip_to_model_input(clip)));
    set.y.push_back(pc.item.label);
  }
  return set;
}

inline PreparedSet prepare_items(const std::vector<data::DataItem>& items) {
  std::vector<data::PlannedClip> plan;
  plan.reserve(items.size());
  for (const auto& item : items) plan.push_back({item, std::nullopt});
  return prepare_planned(plan, nullptr);
}

inline PreparedSet clips_to_inputs(const std::vector<AudioClip>& clips,
                                   const std::string& positive_class,
                                   const DenoiseConfig* dn = nullptr) {
  PreparedSet set;
  set.x.reserve(clips.size());
  set.y.reserve(clips.size());
  for (const auto& c : clips) {
    const AudioClip* use = &c;
    AudioClip denoised;
    if (dn) {
      denoised = denoise(c, *dn);
      use = &denoised;
    }
    set.x.push_back(model_input_floats(clip_to_model_input(*use)));
    set.y.push_back(c.label == positive_class ? 1 : 0);
  }
  return set;
}

inline ExperimentReport make_report(const std::string& id, const std::string& condition,
                                    int train_size, const nn::EvalResult& eval,
                                    std::uint64_t seed, double wall_clock_s) {
  ExperimentReport r;
  r.id = id;
  r.condition = condition;
  r.train_size = train_size;
  r.test_size = static_cast<int>(eval.per_sample.size());
  r.accuracy = eval.accuracy;
  r.precision = eval.precision;
  r.recall = eval.recall;
  r.f1 = eval.f1;
  r.confusion = eval.confusion;
  r.seed = seed;
  r.wall_clock_s = wall_clock_s;
  return r;
}

// ---- Experiment runners ----------------------------------------------------

struct BaselinePlan {
  data::Manifest manifest;
  std::string positive_class;  // empty: manifest's positive class
  int n_train_per_class = 1000;
  int n_test_per_class = 150;
  nn::TrainConfig train_cfg;
  std::uint64_t split_seed = 42;
  int eval_threads = 1;
};

struct BaselineResult {
  nn::Model<float> model;
  std::vector<double> loss_history;
  ExperimentReport report;
  data::SplitSet split;
};

// Experiment 1a: clean split, train, evaluate.
inline BaselineResult run_baseline(const BaselinePlan& plan, const std::string& id = "1a") {
  Stopwatch watch;
  const std::string pos =
      plan.positive_class.empty() ? plan.manifest.positive_class : plan.positive_class;
  data::SplitSet split = data::build_balanced_split(plan.manifest, plan.n_train_per_class,
                                                    plan.n_test_per_class, plan.split_seed, pos);
  PreparedSet train_set = prepare_items(split.train);
  nn::ModelDef def;  // default classifier, binary head
  auto trained = nn::train(def, train_set.x, train_set.y, plan.train_cfg);

  PreparedSet test_set = prepare_items(split.test);
  const auto eval = nn::evaluate(trained.model, test_set.x, test_set.y, plan.eval_threads);
  ExperimentReport report =
      make_report(id, "baseline " + pos, static_cast<int>(split.train.size()), eval,
                  plan.train_cfg.seed, watch.seconds());
  return {std::move(trained.model), std::move(trained.loss_history), std::move(report),
          std::move(split)};
}

// Experiment 1b: multiclass over the given classes (no negative pool).
inline BaselineResult run_baseline_multiclass(const BaselinePlan& plan,
                                              const std::vector<std::string>& class_names,
                                              const std::string& id = "1b") {
  Stopwatch watch;
  data::SplitSet split = data::build_multiclass_split(
      plan.manifest, class_names, plan.n_train_per_class, plan.n_test_per_class, plan.split_seed);
  PreparedSet train_set = prepare_items(split.train);
  nn::ModelDef def;
  def.head = nn::Head::multiclass;
  def.n_classes = static_cast<int>(class_names.size());
  auto trained = nn::train(def, train_set.x, train_set.y, plan.train_cfg);

  PreparedSet test_set = prepare_items(split.test);
  const auto eval = nn::evaluate(trained.model, test_set.x, test_set.y, plan.eval_threads);
  ExperimentReport report =
      make_report(id, "baseline multiclass", static_cast<int>(split.train.size()), eval,
                  plan.train_cfg.seed, watch.seconds());
  return {std::move(trained.model), std::move(trained.loss_history), std::move(report),
          std::move(split)};
}

struct AttackCondition {
  std::string label;  // e.g. "0.05 WN" or "100% BN"
  InfusionPlan plan;
};

inline AttackCondition white_noise_condition(double level, std::uint64_t seed,
                                             double fraction = 1.0) {
  AttackCondition c;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g WN", level);
  c.label = buf;
  c.plan.fraction = fraction;
  c.plan.selection_seed = splitmix64(seed ^ 0x57ull);
  c.plan.spec.kind = NoiseKind::white;
  c.plan.spec.adjustment_factor = level;
  c.plan.spec.seed = splitmix64(seed ^ 0x575eedull);
  return c;
}

inline AttackCondition background_noise_condition(double fraction, double snr_db,
                                                  std::uint64_t seed,
                                                  const std::string& noise_name) {
  AttackCondition c;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%d%% BN", static_cast<int>(std::lround(fraction * 100)));
  c.label = buf;
  c.plan.fraction = fraction;
  c.plan.selection_seed = splitmix64(seed ^ 0xb7ull);
  c.plan.spec.kind = NoiseKind::background;
  c.plan.spec.target_snr_db = snr_db;
  c.plan.spec.noise_name = noise_name;
  c.plan.spec.seed = splitmix64(seed ^ 0xb75eedull);
  return c;
}

struct AttackOutcome {
  std::vector<ExperimentReport> reports;
  std::vector<std::vector<InfusionRecord>> manifests;  // one per condition
};

// Experiment 3: evaluate a trained model against perturbed test sets, one
// report per condition. Negative-class clips are never modified.
inline AttackOutcome run_attack(nn::Model<float>& model, const std::vector<AudioClip>& test_clips,
                                const std::string& positive_class,
                                const std::vector<AttackCondition>& conditions,
                                const AudioClip* noise_source, const std::string& id,
                                int train_size, int eval_threads = 1) {
  AttackOutcome outcome;
  for (const auto& cond : conditions) {
    Stopwatch watch;
    auto [infused, records] =
        infuse_testset(test_clips, positive_class, cond.plan, noise_source);
    PreparedSet set = clips_to_inputs(infused, positive_class);
    const auto eval = nn::evaluate(model, set.x, set.y, eval_threads);
    outcome.reports.push_back(make_report(id, cond.label, train_size, eval, cond.plan.spec.seed,
                                          watch.seconds()));
    outcome.manifests.push_back(std::move(records));
  }
  return outcome;
}

struct AdvTrainResult {
  nn::Model<float> model;
  std::vector<double> loss_history;
  std::vector<InfusionRecord> provenance;
  int train_size = 0;
};

// Experiments 4/5: rebuild the training set per recipe and train fresh.
inline AdvTrainResult run_adversarial_training(const data::SplitSet& split,
                                               const std::string& positive_class,
                                               const data::TrainRecipe& recipe,
                                               const nn::TrainConfig& cfg,
                                               const AudioClip* noise_source) {
  auto [plan, records] = data::build_adversarial_trainset(split.train, positive_class, recipe);
  PreparedSet train_set = prepare_planned(plan, noise_source);
  auto trained = nn::train(nn::ModelDef{}, train_set.x, train_set.y, cfg);
  return {std::move(trained.model), std::move(trained.loss_history), std::move(records),
          static_cast<int>(plan.size())};
}

struct DenoisePair {
  ExperimentReport attacked;
  ExperimentReport denoised;
  double delta = 0.0;  // denoised accuracy - attacked accuracy
};

// Experiments 6/7: denoise each attacked test set and evaluate the
// clean-trained model on it, paired with the matching attack report.
inline std::vector<DenoisePair> run_denoise_eval(nn::Model<float>& model,
                                                 const std::vector<AudioClip>& test_clips,
                                                 const std::string& positive_class,
                                                 const std::vector<AttackCondition>& conditions,
                                                 const std::vector<ExperimentReport>& attacked,
                                                 const AudioClip* noise_source,
                                                 const DenoiseConfig& dn, const std::string& id,
                                                 int train_size, int eval_threads = 1) {
  if (attacked.size() != conditions.size())
    throw std::invalid_argument("run_denoise_eval: attacked reports must match conditions");
  std::vector<DenoisePair> pairs;
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    Stopwatch watch;
    auto [infused, records] =
        infuse_testset(test_clips, positive_class, conditions[i].plan, noise_source);
    PreparedSet set = clips_to_inputs(infused, positive_class, &dn);
    const auto eval = nn::evaluate(model, set.x, set.y, eval_threads);
    DenoisePair pair;
    pair.attacked = attacked[i];
    pair.denoised = make_report(id, "denoised " + conditions[i].label, train_size, eval,
                                conditions[i].plan.spec.seed, watch.seconds());
    pair.delta = pair.denoised.accuracy - pair.attacked.accuracy;
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

// ---- The experiment grid ---------------------------------------------------

inline const std::set<std::string>& supported_experiments() {
  static const std::set<std::string> ids = {"1a", "1b", "3a", "3c", "4a", "4b", "5a", "6a", "7a"};
  return ids;
}

struct GridPlan {
  std::string manifest_path;
  std::string positive_class;  // empty: manifest default
  std::vector<std::string> multiclass_classes;
  int n_train_per_class = 1000;
  int n_test_per_class = 150;
  nn::TrainConfig train_cfg;
  std::uint64_t seed = 42;
  double bn_snr_db = 10.0;
  std::vector<double> bn_fractions{0.25, 0.5, 1.0};
  std::vector<double> wn_levels{kWhiteNoiseLevels.begin(), kWhiteNoiseLevels.end()};
  std::vector<std::string> experiments{"1a", "1b", "3a", "3c", "4a", "4b", "5a", "6a", "7a"};
  DenoiseConfig denoise_cfg;
  int eval_threads = 1;
  int train_threads = 1;  // independent retraining conditions may run in parallel

  void validate() const {
    for (const auto& id : experiments) {
      if (!id.empty() && id[0] == '2')
        throw std::invalid_argument("experiment " + id +
                                    " is reserved (physical-device study, not implemented)");
      if (!supported_experiments().count(id))
        throw std::invalid_argument("unknown experiment id '" + id + "'");
    }
  }
};

inline GridPlan load_grid_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_grid_plan: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("load_grid_plan: bad JSON: " + std::string(e.what()));
  }
  GridPlan p;
  p.manifest_path = j.value("manifest", "");
  p.positive_class = j.value("positive_class", "");
  p.multiclass_classes = j.value("multiclass_classes", std::vector<std::string>{});
  p.n_train_per_class = j.value("n_train_per_class", p.n_train_per_class);
  p.n_test_per_class = j.value("n_test_per_class", p.n_test_per_class);
  p.seed = j.value("seed", p.seed);
  p.bn_snr_db = j.value("bn_snr_db", p.bn_snr_db);
  p.bn_fractions = j.value("bn_fractions", p.bn_fractions);
  p.wn_levels = j.value("wn_levels", p.wn_levels);
  p.experiments = j.value("experiments", p.experiments);
  p.eval_threads = j.value("eval_threads", p.eval_threads);
  p.train_threads = j.value("train_threads", p.train_threads);
  if (j.contains("train")) {
    const auto& t = j["train"];
    p.train_cfg.learning_rate = t.value("learning_rate", p.train_cfg.learning_rate);
    p.train_cfg.rms_decay = t.value("rms_decay", p.train_cfg.rms_decay);
    p.train_cfg.epsilon = t.value("epsilon", p.train_cfg.epsilon);
    p.train_cfg.batch_size = t.value("batch_size", p.train_cfg.batch_size);
    p.train_cfg.epochs = t.value("epochs", p.train_cfg.epochs);
    p.train_cfg.seed = t.value("seed", p.train_cfg.seed);
  }
  if (j.contains("denoise")) {
    const auto& d = j["denoise"];
    p.denoise_cfg.threshold_offset_db =
        d.value("threshold_offset_db", p.denoise_cfg.threshold_offset_db);
    p.denoise_cfg.smooth_freq_bins = d.value("smooth_freq_bins", p.denoise_cfg.smooth_freq_bins);
    p.denoise_cfg.smooth_time_frames =
        d.value("smooth_time_frames", p.denoise_cfg.smooth_time_frames);
    p.denoise_cfg.attenuation_db = d.value("attenuation_db", p.denoise_cfg.attenuation_db);
  }
  return p;
}

// Runs the requested experiment grid end to end and writes reports.json,
// reports.csv, the model checkpoint, and per-condition infusion manifests
// under out_dir. Reports come back in deterministic order.
inline std::vector<ExperimentReport> run_grid(const GridPlan& plan, const std::string& out_dir) {
  namespace fs = std::filesystem;
  plan.validate();
  if (plan.manifest_path.empty())
    throw std::invalid_argument("run_grid: plan needs a manifest path");
  fs::create_directories(out_dir);
  fs::create_directories(fs::path(out_dir) / "infusions");

  const auto requested = [&](const std::string& id) {
    return std::find(plan.experiments.begin(), plan.experiments.end(), id) !=
           plan.experiments.end();
  };

  data::Manifest manifest = data::load_manifest(plan.manifest_path);
  const std::string pos =
      plan.positive_class.empty() ? manifest.positive_class : plan.positive_class;

  // Background noise source: the corpus's stock recording when present,
  // otherwise a generated stand-in.
  AudioClip bn_noise;
  const fs::path stock = fs::path(manifest.base_dir) / "noise" / "traffic_like.wav";
  if (fs::exists(stock))
    bn_noise = read_wav(stock.string());
  else
    bn_noise = make_traffic_noise(30.0, kCanonicalRate, splitmix64(plan.seed ^ 0x7261ffull));

  BaselinePlan base_plan;
  base_plan.manifest = manifest;
  base_plan.positive_class = pos;
  base_plan.n_train_per_class = plan.n_train_per_class;
  base_plan.n_test_per_class = plan.n_test_per_class;
  base_plan.train_cfg = plan.train_cfg;
  base_plan.split_seed = plan.seed;
  base_plan.eval_threads = plan.eval_threads;

  std::vector<ExperimentReport> reports;

  BaselineResult base = run_baseline(base_plan, "1a");
  reports.push_back(base.report);
  nn::save_model(base.model, (fs::path(out_dir) / "model_1a.ckpt").string());

  std::vector<AudioClip> test_clips = load_clips(base.split.test);
  const int train_size = static_cast<int>(base.split.train.size());

  std::vector<AttackCondition> bn_conditions;
  for (double f : plan.bn_fractions)
    bn_conditions.push_back(
        background_noise_condition(f, plan.bn_snr_db, plan.seed, bn_noise.source_id));
  std::vector<AttackCondition> wn_conditions;
  for (double lvl : plan.wn_levels)
    wn_conditions.push_back(white_noise_condition(lvl, plan.seed));

  AttackOutcome bn_attack, wn_attack;
  if (requested("3a") || requested("4a") || requested("4b") || requested("6a")) {
    bn_attack = run_attack(base.model, test_clips, pos, bn_conditions, &bn_noise, "3a",
                           train_size, plan.eval_threads);
    if (requested("3a")) {
      for (std::size_t i = 0; i < bn_attack.reports.size(); ++i) {
        reports.push_back(bn_attack.reports[i]);
        write_infusion_manifest(bn_attack.manifests[i],
                                (fs::path(out_dir) / "infusions" /
                                 ("3a_" + std::to_string(i) + ".json"))
                                    .string());
      }
    }
  }
  if (requested("3c") || requested("5a") || requested("7a")) {
    wn_attack = run_attack(base.model, test_clips, pos, wn_conditions, nullptr, "3c", train_size,
                           plan.eval_threads);
    if (requested("3c")) {
      for (std::size_t i = 0; i < wn_attack.reports.size(); ++i) {
        reports.push_back(wn_attack.reports[i]);
        write_infusion_manifest(wn_attack.manifests[i],
                                (fs::path(out_dir) / "infusions" /
                                 ("3c_" + std::to_string(i) + ".json"))
                                    .string());
      }
    }
  }

  // Retraining conditions are independent of each other; run them on a
  // small worker pool when the plan allows. Each job owns its model and
  // seeds, so the reports do not depend on the pool size.
  std::vector<std::function<std::vector<ExperimentReport>()>> jobs;

  if (requested("1b")) {
    std::vector<std::string> classes = plan.multiclass_classes;
    if (classes.empty()) {
      for (const auto& e : manifest.entries) {
        if (std::find(manifest.negative_classes.begin(), manifest.negative_classes.end(),
                      e.class_name) == manifest.negative_classes.end() &&
            std::find(classes.begin(), classes.end(), e.class_name) == classes.end())
          classes.push_back(e.class_name);
      }
    }
    jobs.push_back([&, classes] {
      BaselineResult multi = run_baseline_multiclass(base_plan, classes, "1b");
      return std::vector<ExperimentReport>{multi.report};
    });
  }
  if (requested("4a") && !bn_conditions.empty()) {
    for (double f : plan.bn_fractions) {
      jobs.push_back([&, f] {
        const AttackCondition& strongest = bn_conditions.back();
        data::TrainRecipe recipe;
        recipe.adversarial_fraction = f;
        recipe.noise = strongest.plan.spec;
        recipe.selection_seed = splitmix64(plan.seed ^ 0x4aull);
        AdvTrainResult adv =
            run_adversarial_training(base.split, pos, recipe, plan.train_cfg, &bn_noise);
        auto outcome = run_attack(adv.model, test_clips, pos, {strongest}, &bn_noise, "4a",
                                  adv.train_size, plan.eval_threads);
        char label[64];
        std::snprintf(label, sizeof(label), "advtrain %d%% BN vs %s",
                      static_cast<int>(std::lround(f * 100)), strongest.label.c_str());
        outcome.reports[0].condition = label;
        return std::vector<ExperimentReport>{outcome.reports[0]};
      });
    }
  }
  if (requested("4b") && !bn_conditions.empty()) {
    jobs.push_back([&] {
      const AttackCondition& strongest = bn_conditions.back();
      data::TrainRecipe recipe;
      recipe.oversample = true;
      recipe.noise = strongest.plan.spec;
      recipe.selection_seed = splitmix64(plan.seed ^ 0x4bull);
      AdvTrainResult adv =
          run_adversarial_training(base.split, pos, recipe, plan.train_cfg, &bn_noise);
      auto outcome = run_attack(adv.model, test_clips, pos, {strongest}, &bn_noise, "4b",
                                adv.train_size, plan.eval_threads);
      outcome.reports[0].condition = "oversample BN vs " + strongest.label;
      return std::vector<ExperimentReport>{outcome.reports[0]};
    });
  }
  if (requested("5a")) {
    jobs.push_back([&] {
      data::TrainRecipe recipe;
      data::WhiteNoiseSchedule schedule;
      schedule.per_level = std::max(1, plan.n_train_per_class /
                                           static_cast<int>(schedule.levels.size()));
      recipe.schedule = schedule;
      recipe.noise.kind = NoiseKind::white;
      recipe.noise.seed = splitmix64(plan.seed ^ 0x5aull);
      recipe.selection_seed = splitmix64(plan.seed ^ 0x5a5eedull);
      AdvTrainResult adv =
          run_adversarial_training(base.split, pos, recipe, plan.train_cfg, nullptr);
      auto outcome = run_attack(adv.model, test_clips, pos, wn_conditions, nullptr, "5a",
                                adv.train_size, plan.eval_threads);
      for (auto& r : outcome.reports) r.condition = "advtrain WN schedule vs " + r.condition;
      return outcome.reports;
    });
  }

  std::vector<std::vector<ExperimentReport>> job_out(jobs.size());
  const int workers = std::max(1, std::min<int>(plan.train_threads, jobs.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) job_out[i] = jobs[i]();
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
          try {
            job_out[i] = jobs[i]();
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  for (auto& out : job_out)
    for (auto& r : out) reports.push_back(std::move(r));

  if (requested("6a") && !bn_attack.reports.empty()) {
    auto pairs = run_denoise_eval(base.model, test_clips, pos, {bn_conditions.back()},
                                  {bn_attack.reports.back()}, &bn_noise, plan.denoise_cfg, "6a",
                                  train_size, plan.eval_threads);
    for (auto& p : pairs) reports.push_back(p.denoised);
  }
  if (requested("7a") && !wn_attack.reports.empty()) {
    auto pairs = run_denoise_eval(base.model, test_clips, pos, wn_conditions, wn_attack.reports,
                                  nullptr, plan.denoise_cfg, "7a", train_size, plan.eval_threads);
    for (auto& p : pairs) reports.push_back(p.denoised);
  }

  std::stable_sort(reports.begin(), reports.end(),
                   [](const ExperimentReport& a, const ExperimentReport& b) { return a.id < b.id; });
  emit_report(reports, "json", (fs::path(out_dir) / "reports.json").string());
  emit_report(reports, "csv", (fs::path(out_dir) / "reports.csv").string());
  return reports;
}

}  // namespace aed::exp
