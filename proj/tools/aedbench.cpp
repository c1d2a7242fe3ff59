// Command-line front end: corpus generation, training, attacks, defenses,
// the full experiment grid, and report format conversion.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "aed/attack.hpp"
#include "aed/audio.hpp"
#include "aed/data.hpp"
#include "aed/denoise.hpp"
#include "aed/dsp.hpp"
#include "aed/experiments.hpp"
#include "aed/neural.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct CommonOpts {
  std::string manifest;
  std::string out = ".";
  std::uint64_t seed = 42;
};

void add_train_flags(CLI::App* cmd, aed::nn::TrainConfig& cfg) {
  cmd->add_option("--learning-rate", cfg.learning_rate, "RMSprop learning rate");
  cmd->add_option("--batch-size", cfg.batch_size, "mini-batch size");
  cmd->add_option("--epochs", cfg.epochs, "training epochs");
}

aed::AudioClip load_noise_for(const aed::data::Manifest& manifest, std::uint64_t seed) {
  const fs::path stock = fs::path(manifest.base_dir) / "noise" / "traffic_like.wav";
  if (fs::exists(stock)) return aed::read_wav(stock.string());
  return aed::make_traffic_noise(30.0, aed::kCanonicalRate, aed::splitmix64(seed ^ 0x7261ffull));
}

int cmd_generate_corpus(const std::string& out, std::uint64_t seed, int train_per_class,
                        int test_per_class) {
  auto spec = aed::data::default_corpus_spec(out, train_per_class, test_per_class);
  auto manifest = aed::data::generate_synthetic_corpus(spec, seed);
  std::printf("wrote %zu clips across %zu classes to %s\n", manifest.entries.size(),
              spec.classes.size(), out.c_str());
  return kExitOk;
}

int cmd_train(const CommonOpts& opts, const std::string& positive, int n_train, int n_test,
              const aed::nn::TrainConfig& cfg) {
  aed::exp::BaselinePlan plan;
  plan.manifest = aed::data::load_manifest(opts.manifest);
  plan.positive_class = positive;
  plan.n_train_per_class = n_train;
  plan.n_test_per_class = n_test;
  plan.train_cfg = cfg;
  plan.split_seed = opts.seed;

  auto result = aed::exp::run_baseline(plan);
  fs::create_directories(opts.out);
  aed::nn::save_model(result.model, (fs::path(opts.out) / "model.ckpt").string());
  aed::exp::emit_report({result.report}, "json",
                        (fs::path(opts.out) / "baseline_report.json").string());
  std::printf("baseline %s: accuracy %.4f (model.ckpt written to %s)\n",
              result.report.condition.c_str(), result.report.accuracy, opts.out.c_str());
  return kExitOk;
}

int cmd_attack(const CommonOpts& opts, const std::string& model_path, const std::string& kind,
               std::optional<double> factor, std::optional<double> snr_db, double fraction,
               int n_test) {
  auto manifest = aed::data::load_manifest(opts.manifest);
  auto model = aed::nn::load_model(model_path);
  auto split = aed::data::build_balanced_split(manifest, 0, n_test, opts.seed);
  auto clips = aed::exp::load_clips(split.test);

  aed::exp::AttackCondition cond;
  aed::AudioClip noise;
  const aed::AudioClip* noise_ptr = nullptr;
  if (kind == "white") {
    if (!factor) throw CLI::ValidationError("--factor is required for white noise");
    cond = aed::exp::white_noise_condition(*factor, opts.seed, fraction);
  } else if (kind == "background") {
    noise = load_noise_for(manifest, opts.seed);
    noise_ptr = &noise;
    if (snr_db)
      cond = aed::exp::background_noise_condition(fraction, *snr_db, opts.seed, noise.source_id);
    else if (factor) {
      cond.plan.fraction = fraction;
      cond.plan.selection_seed = aed::splitmix64(opts.seed ^ 0xb7ull);
      cond.plan.spec.kind = aed::NoiseKind::background;
      cond.plan.spec.adjustment_factor = *factor;
      cond.plan.spec.noise_name = noise.source_id;
      cond.plan.spec.seed = aed::splitmix64(opts.seed ^ 0xb75eedull);
      char buf[64];
      std::snprintf(buf, sizeof(buf), "gain %g BN", *factor);
      cond.label = buf;
    } else {
      throw CLI::ValidationError("background noise needs --factor or --snr-db");
    }
  } else {
    throw CLI::ValidationError("--noise-kind must be 'white' or 'background'");
  }

  auto outcome = aed::exp::run_attack(model, clips, manifest.positive_class, {cond}, noise_ptr,
                                      "attack", 0);
  fs::create_directories(opts.out);
  aed::exp::emit_report(outcome.reports, "json",
                        (fs::path(opts.out) / "attack_report.json").string());
  aed::exp::write_infusion_manifest(outcome.manifests[0],
                                    (fs::path(opts.out) / "infusion_manifest.json").string());
  std::printf("attack '%s': accuracy %.4f (%zu clips perturbed)\n", cond.label.c_str(),
              outcome.reports[0].accuracy, outcome.manifests[0].size());
  return kExitOk;
}

int cmd_defend_advtrain(const CommonOpts& opts, const std::string& positive, int n_train,
                        int n_test, const std::string& kind, double fraction, bool oversample,
                        bool schedule, double snr_db, std::optional<double> factor,
                        const aed::nn::TrainConfig& cfg) {
  auto manifest = aed::data::load_manifest(opts.manifest);
  const std::string pos = positive.empty() ? manifest.positive_class : positive;
  auto split = aed::data::build_balanced_split(manifest, n_train, n_test, opts.seed, pos);

  aed::data::TrainRecipe recipe;
  recipe.adversarial_fraction = fraction;
  recipe.oversample = oversample;
  recipe.selection_seed = aed::splitmix64(opts.seed ^ 0xadull);
  aed::AudioClip noise;
  const aed::AudioClip* noise_ptr = nullptr;
  if (schedule) {
    aed::data::WhiteNoiseSchedule sched;
    sched.per_level =
        std::max(1, static_cast<int>(std::llround(fraction * n_train / sched.levels.size())));
    recipe.schedule = sched;
    recipe.noise.kind = aed::NoiseKind::white;
    recipe.noise.seed = aed::splitmix64(opts.seed ^ 0x5cull);
  } else if (kind == "white") {
    if (!factor) throw CLI::ValidationError("--factor is required for white noise");
    recipe.noise.kind = aed::NoiseKind::white;
    recipe.noise.adjustment_factor = *factor;
    recipe.noise.seed = aed::splitmix64(opts.seed ^ 0x5dull);
  } else if (kind == "background") {
    noise = load_noise_for(manifest, opts.seed);
    noise_ptr = &noise;
    recipe.noise.kind = aed::NoiseKind::background;
    recipe.noise.target_snr_db = snr_db;
    recipe.noise.noise_name = noise.source_id;
    recipe.noise.seed = aed::splitmix64(opts.seed ^ 0x5eull);
  } else {
    throw CLI::ValidationError("--noise-kind must be 'white' or 'background'");
  }

  auto adv = aed::exp::run_adversarial_training(split, pos, recipe, cfg, noise_ptr);
  fs::create_directories(opts.out);
  aed::nn::save_model(adv.model, (fs::path(opts.out) / "model_advtrain.ckpt").string());
  aed::exp::write_infusion_manifest(adv.provenance,
                                    (fs::path(opts.out) / "advtrain_provenance.json").string());
  std::printf("adversarial training done: %d train clips, %zu perturbed (checkpoint in %s)\n",
              adv.train_size, adv.provenance.size(), opts.out.c_str());
  return kExitOk;
}

int cmd_defend_denoise(const std::string& in_dir, const std::string& out_dir,
                       const aed::DenoiseConfig& cfg) {
  fs::create_directories(out_dir);
  nlohmann::ordered_json summary = nlohmann::ordered_json::array();
  std::size_t count = 0;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(in_dir))
    if (e.is_regular_file() && e.path().extension() == ".wav") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    aed::AudioClip clip = aed::read_wav(f.string());
    aed::AudioClip cleaned = aed::denoise(clip, cfg);
    aed::write_wav(cleaned, (fs::path(out_dir) / f.filename()).string());

    // Estimated SNR gain: energy kept above the gate versus energy removed
    // below it, before and after attenuation.
    auto spec = aed::stft(clip, cfg.stft);
    auto db = aed::to_db(spec, cfg.floor_db);
    auto thr = aed::derive_threshold(db, cfg.threshold_offset_db);
    double kept = 0.0, gated_before = 0.0;
    for (int b = 0; b < db.n_bands; ++b)
      for (int t = 0; t < db.n_frames; ++t) {
        const double p = std::norm(spec.at(b, t));
        if (db.at(b, t) > thr[b])
          kept += p;
        else
          gated_before += p;
      }
    const double atten_pow = std::pow(10.0, -cfg.attenuation_db / 10.0);
    const double snr_before = 10.0 * std::log10(std::max(kept, 1e-30) /
                                                std::max(gated_before, 1e-30));
    const double snr_after = 10.0 * std::log10(std::max(kept, 1e-30) /
                                               std::max(gated_before * atten_pow, 1e-30));
    summary.push_back({{"file", f.filename().string()},
                       {"estimated_snr_gain_db", snr_after - snr_before}});
    ++count;
  }
  std::ofstream out(fs::path(out_dir) / "denoise_summary.json");
  out << summary.dump(2) << '\n';
  std::printf("denoised %zu files into %s\n", count, out_dir.c_str());
  return kExitOk;
}

int cmd_run_grid(const std::string& plan_path, const CommonOpts& opts, bool seed_given,
                 const std::vector<std::string>& only) {
  aed::exp::GridPlan plan;
  if (!plan_path.empty()) plan = aed::exp::load_grid_plan(plan_path);
  if (!opts.manifest.empty()) plan.manifest_path = opts.manifest;
  if (seed_given) {
    plan.seed = opts.seed;
    plan.train_cfg.seed = opts.seed;
  }
  if (!only.empty()) plan.experiments = only;

  auto reports = aed::exp::run_grid(plan, opts.out);
  std::printf("grid complete: %zu reports in %s\n", reports.size(), opts.out.c_str());
  for (const auto& r : reports)
    std::printf("  %-3s %-32s Ac %.4f Pr %.4f Rc %.4f F1 %.4f\n", r.id.c_str(),
                r.condition.c_str(), r.accuracy, r.precision, r.recall, r.f1);
  return kExitOk;
}

int cmd_report(const std::string& in_path, const std::string& format, const std::string& out) {
  std::ifstream in(in_path);
  if (!in) throw std::runtime_error("report: cannot open " + in_path);
  nlohmann::json j;
  in >> j;
  std::vector<aed::exp::ExperimentReport> reports;
  for (const auto& item : j) reports.push_back(aed::exp::report_from_json(item));
  aed::exp::emit_report(reports, format, out);
  std::printf("wrote %zu reports to %s\n", reports.size(), out.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"audio event detection attack/defense workbench"};
  app.require_subcommand(1);

  CommonOpts opts;
  aed::nn::TrainConfig train_cfg;

  // generate-corpus
  auto* gen = app.add_subcommand("generate-corpus", "generate the synthetic corpus + manifest");
  int gen_train = 150, gen_test = 60;
  gen->add_option("--out", opts.out, "output directory")->required();
  gen->add_option("--seed", opts.seed, "corpus seed");
  gen->add_option("--train-per-class", gen_train, "train clips per class");
  gen->add_option("--test-per-class", gen_test, "test clips per class");

  // train
  auto* tr = app.add_subcommand("train", "train a baseline classifier");
  std::string positive;
  int n_train = 1000, n_test = 150;
  tr->add_option("--manifest", opts.manifest, "dataset manifest")->required();
  tr->add_option("--out", opts.out, "output directory");
  tr->add_option("--seed", opts.seed, "split + training seed");
  tr->add_option("--positive", positive, "positive class (default: manifest's)");
  tr->add_option("--train-per-class", n_train, "train clips per side");
  tr->add_option("--test-per-class", n_test, "test clips per side");
  add_train_flags(tr, train_cfg);

  // attack
  auto* at = app.add_subcommand("attack", "evaluate a model against noise-infused test sets");
  std::string model_path, noise_kind = "white";
  double fraction = 1.0;
  std::optional<double> factor, snr_db;
  at->add_option("--manifest", opts.manifest, "dataset manifest")->required();
  at->add_option("--model", model_path, "model checkpoint")->required();
  at->add_option("--out", opts.out, "output directory");
  at->add_option("--seed", opts.seed, "seed");
  at->add_option("--noise-kind", noise_kind, "background|white");
  at->add_option("--factor", factor, "adjustment factor");
  at->add_option("--snr-db", snr_db, "target SNR in dB (background)");
  at->add_option("--infusion-fraction", fraction, "share of positive test clips to perturb");
  int at_test = 150;
  at->add_option("--test-per-class", at_test, "test clips per side");

  // defend-advtrain
  auto* ad = app.add_subcommand("defend-advtrain", "adversarial training defense");
  bool oversample = false, schedule = false;
  double adv_snr = 10.0;
  ad->add_option("--manifest", opts.manifest, "dataset manifest")->required();
  ad->add_option("--out", opts.out, "output directory");
  ad->add_option("--seed", opts.seed, "seed");
  ad->add_option("--positive", positive, "positive class");
  ad->add_option("--train-per-class", n_train, "train clips per side");
  ad->add_option("--test-per-class", n_test, "test clips per side");
  ad->add_option("--noise-kind", noise_kind, "background|white");
  ad->add_option("--factor", factor, "adjustment factor (white)");
  ad->add_option("--snr-db", adv_snr, "target SNR in dB (background)");
  ad->add_option("--infusion-fraction", fraction, "share of positive train clips to perturb");
  ad->add_flag("--oversample", oversample, "keep originals and append perturbed copies");
  ad->add_flag("--wn-schedule", schedule, "distribute the white-noise ladder over positives");
  add_train_flags(ad, train_cfg);

  // defend-denoise
  auto* dn = app.add_subcommand("defend-denoise", "denoise a directory of WAV files");
  std::string in_dir;
  aed::DenoiseConfig dn_cfg;
  dn->add_option("--in", in_dir, "input directory of WAVs")->required();
  dn->add_option("--out", opts.out, "output directory")->required();
  dn->add_option("--threshold-offset-db", dn_cfg.threshold_offset_db, "threshold offset (dB)");
  dn->add_option("--attenuation-db", dn_cfg.attenuation_db, "gate attenuation (dB)");

  // run-grid
  auto* grid = app.add_subcommand("run-grid", "run the experiment grid");
  std::string plan_path;
  std::vector<std::string> only;
  grid->add_option("--plan", plan_path, "grid plan JSON");
  grid->add_option("--manifest", opts.manifest, "dataset manifest (overrides plan)");
  grid->add_option("--out", opts.out, "output directory");
  auto* grid_seed = grid->add_option("--seed", opts.seed, "seed (overrides plan)");
  grid->add_option("--experiments", only, "subset of experiment ids to run");

  // report
  auto* rp = app.add_subcommand("report", "convert a JSON report file");
  std::string report_in, format = "csv";
  rp->add_option("--in", report_in, "reports.json produced by run-grid")->required();
  rp->add_option("--format", format, "csv|json");
  rp->add_option("--out", opts.out, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (gen->parsed()) return cmd_generate_corpus(opts.out, opts.seed, gen_train, gen_test);
    if (tr->parsed()) return cmd_train(opts, positive, n_train, n_test, train_cfg);
    if (at->parsed())
      return cmd_attack(opts, model_path, noise_kind, factor, snr_db, fraction, at_test);
    if (ad->parsed())
      return cmd_defend_advtrain(opts, positive, n_train, n_test, noise_kind, fraction,
                                 oversample, schedule, adv_snr, factor, train_cfg);
    if (dn->parsed()) return cmd_defend_denoise(in_dir, opts.out, dn_cfg);
    if (grid->parsed()) return cmd_run_grid(plan_path, opts, grid_seed->count() > 0, only);
    if (rp->parsed()) return cmd_report(report_in, format, opts.out);
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}
