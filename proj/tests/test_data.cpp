#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <set>

#include "aed/data.hpp"
#include "aed/dsp.hpp"

using namespace aed;
using namespace aed::data;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "aed_test_data" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void touch_wav(const fs::path& path) {
  AudioClip c;
  c.samples.assign(256, 0.1);
  write_wav(c, path.string());
}

std::string file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::vector<DataItem> fake_items(int n_pos, int n_neg) {
  std::vector<DataItem> items;
  for (int i = 0; i < n_pos; ++i)
    items.push_back({"pos_" + std::to_string(i), "", "event", 1});
  for (int i = 0; i < n_neg; ++i)
    items.push_back({"neg_" + std::to_string(i), "", "other", 0});
  return items;
}

}  // namespace

TEST_CASE("load_manifest: minimal valid file") {
  const auto dir = fresh_dir("manifest_ok");
  touch_wav(dir / "a.wav");
  touch_wav(dir / "b.wav");
  {
    std::ofstream out(dir / "manifest.json");
    out << R"({"positive_class":"event","negative_classes":["other"],
               "entries":[{"path":"a.wav","class":"event","split":"train"},
                          {"path":"b.wav","class":"other","split":"test"}]})";
  }
  const auto m = load_manifest((dir / "manifest.json").string());
  CHECK(m.entries.size() == 2);
  CHECK(m.positive_class == "event");
  REQUIRE(m.negative_classes.size() == 1);
}

TEST_CASE("load_manifest: schema violations name the entry") {
  const auto dir = fresh_dir("manifest_bad");
  touch_wav(dir / "a.wav");
  {
    std::ofstream out(dir / "bad_split.json");
    out << R"({"positive_class":"event","negative_classes":["other"],
               "entries":[{"path":"a.wav","class":"event","split":"validation"}]})";
  }
  CHECK_THROWS_WITH(load_manifest((dir / "bad_split.json").string()),
                    Catch::Matchers::ContainsSubstring("a.wav") &&
                        Catch::Matchers::ContainsSubstring("validation"));

  {
    std::ofstream out(dir / "dup.json");
    out << R"({"positive_class":"event","negative_classes":["other"],
               "entries":[{"path":"a.wav","class":"event","split":"train"},
                          {"path":"a.wav","class":"event","split":"test"}]})";
  }
  CHECK_THROWS_WITH(load_manifest((dir / "dup.json").string()),
                    Catch::Matchers::ContainsSubstring("duplicate"));

  {
    std::ofstream out(dir / "missing.json");
    out << R"({"positive_class":"event","negative_classes":["other"],
               "entries":[{"path":"nope.wav","class":"event","split":"train"}]})";
  }
  CHECK_THROWS_WITH(load_manifest((dir / "missing.json").string()),
                    Catch::Matchers::ContainsSubstring("missing file"));
}

TEST_CASE("build_balanced_split: counts, even negatives, determinism") {
  const auto dir = fresh_dir("split");
  CorpusSpec spec;
  spec.out_dir = dir.string();
  spec.write_noise_sources = false;
  spec.classes = {
      {"event", Family::burst, 16, 6, true},     {"neg1", Family::hum, 6, 4, false},
      {"neg2", Family::chatter, 6, 4, false},    {"neg3", Family::rumble, 6, 4, false},
      {"neg4", Family::hum, 6, 4, false},        {"neg5", Family::chatter, 6, 4, false},
  };
  const auto manifest = generate_synthetic_corpus(spec, 5);

  const auto split = build_balanced_split(manifest, 13, 5, 42);
  CHECK(split.train.size() == 26);
  CHECK(split.test.size() == 10);

  // 13 negatives over 5 classes: 3,3,3,2,2 (round-robin remainder)
  std::map<std::string, int> per_class;
  for (const auto& item : split.train)
    if (item.label == 0) per_class[item.class_name]++;
  CHECK(per_class["neg1"] == 3);
  CHECK(per_class["neg2"] == 3);
  CHECK(per_class["neg3"] == 3);
  CHECK(per_class["neg4"] == 2);
  CHECK(per_class["neg5"] == 2);

  // train/test disjoint by path
  std::set<std::string> train_paths;
  for (const auto& i : split.train) train_paths.insert(i.path);
  for (const auto& i : split.test) CHECK(train_paths.count(i.path) == 0);

  // seeded determinism
  const auto again = build_balanced_split(manifest, 13, 5, 42);
  REQUIRE(again.train.size() == split.train.size());
  for (std::size_t i = 0; i < split.train.size(); ++i)
    CHECK(again.train[i].path == split.train[i].path);

  CHECK_THROWS_WITH(build_balanced_split(manifest, 100, 5, 42),
                    Catch::Matchers::ContainsSubstring("short"));
}

TEST_CASE("build_multiclass_split: labels follow class order") {
  const auto dir = fresh_dir("multisplit");
  CorpusSpec spec;
  spec.out_dir = dir.string();
  spec.write_noise_sources = false;
  spec.classes = {
      {"a", Family::burst, 4, 2, true},
      {"b", Family::shatter, 4, 2, true},
      {"c", Family::tone_sweep, 4, 2, true},
  };
  const auto manifest = generate_synthetic_corpus(spec, 6);
  const auto split = build_multiclass_split(manifest, {"a", "b", "c"}, 3, 2, 1);
  CHECK(split.train.size() == 9);
  CHECK(split.test.size() == 6);
  for (const auto& item : split.train) {
    if (item.class_name == "a") CHECK(item.label == 0);
    if (item.class_name == "b") CHECK(item.label == 1);
    if (item.class_name == "c") CHECK(item.label == 2);
  }
}

TEST_CASE("build_adversarial_trainset: fraction 0 in-place is the identity") {
  const auto items = fake_items(10, 10);
  TrainRecipe recipe;
  recipe.adversarial_fraction = 0.0;
  recipe.noise.kind = NoiseKind::white;
  const auto [plan, records] = build_adversarial_trainset(items, "event", recipe);
  CHECK(plan.size() == items.size());
  CHECK(records.empty());
  for (const auto& pc : plan) CHECK_FALSE(pc.noise.has_value());
}

TEST_CASE("build_adversarial_trainset: oversample doubles the set and keeps balance") {
  const auto items = fake_items(10, 10);
  TrainRecipe recipe;
  recipe.oversample = true;
  recipe.noise.kind = NoiseKind::white;
  recipe.noise.adjustment_factor = 0.1;
  const auto [plan, records] = build_adversarial_trainset(items, "event", recipe);
  CHECK(plan.size() == 2 * items.size());
  CHECK(records.size() == items.size());

  int pos = 0, neg = 0, perturbed = 0;
  for (const auto& pc : plan) {
    (pc.item.label == 1 ? pos : neg)++;
    if (pc.noise) ++perturbed;
  }
  CHECK(pos == neg);
  CHECK(perturbed == static_cast<int>(items.size()));
}

TEST_CASE("build_adversarial_trainset: schedule distributes levels evenly") {
  const auto items = fake_items(20, 20);
  TrainRecipe recipe;
  WhiteNoiseSchedule schedule;
  schedule.per_level = 2;  // 10 levels x 2 = all 20 positives
  recipe.schedule = schedule;
  recipe.noise.seed = 17;
  const auto [plan, records] = build_adversarial_trainset(items, "event", recipe);
  CHECK(records.size() == 20);

  std::map<double, int> per_level;
  for (const auto& pc : plan)
    if (pc.noise) {
      CHECK(pc.item.label == 1);  // only positives perturbed
      per_level[pc.noise->adjustment_factor]++;
    }
  CHECK(per_level.size() == schedule.levels.size());
  for (const auto& [level, count] : per_level) CHECK(count == 2);
}

TEST_CASE("build_adversarial_trainset: provenance lists every perturbed clip once") {
  const auto items = fake_items(12, 12);
  TrainRecipe recipe;
  recipe.adversarial_fraction = 0.5;
  recipe.noise.kind = NoiseKind::white;
  recipe.noise.adjustment_factor = 0.2;
  recipe.selection_seed = 3;
  const auto [plan, records] = build_adversarial_trainset(items, "event", recipe);
  CHECK(records.size() == 6);  // round(0.5 * 12)
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.clip_id);
  CHECK(ids.size() == records.size());
  for (const auto& pc : plan)
    if (pc.noise) CHECK(ids.count(pc.item.id) == 1);
}

TEST_CASE("build_adversarial_trainset: schedule larger than positives is an error") {
  const auto items = fake_items(5, 5);
  TrainRecipe recipe;
  WhiteNoiseSchedule schedule;
  schedule.per_level = 100;
  recipe.schedule = schedule;
  CHECK_THROWS_AS(build_adversarial_trainset(items, "event", recipe), std::runtime_error);
}

TEST_CASE("generate_synthetic_corpus: counts, manifest, determinism") {
  const auto dir_a = fresh_dir("corpus_a");
  const auto dir_b = fresh_dir("corpus_b");
  CorpusSpec spec = default_corpus_spec(dir_a.string(), 3, 1);
  const auto manifest = generate_synthetic_corpus(spec, 11);
  CHECK(manifest.entries.size() == 7u * 4);  // 7 families, 3 train + 1 test each
  CHECK(manifest.positive_class == "burst");
  CHECK(manifest.negative_classes == std::vector<std::string>{"hum", "chatter", "rumble"});
  CHECK(fs::exists(dir_a / "manifest.json"));
  CHECK(fs::exists(dir_a / "noise" / "traffic_like.wav"));
  CHECK(fs::exists(dir_a / "noise" / "babble_like.wav"));

  // reloadable through the validating loader
  const auto reloaded = load_manifest((dir_a / "manifest.json").string());
  CHECK(reloaded.entries.size() == manifest.entries.size());

  // byte-identical for a fixed seed
  spec.out_dir = dir_b.string();
  generate_synthetic_corpus(spec, 11);
  for (const auto& e : manifest.entries)
    REQUIRE(file_bytes(dir_a / e.path) == file_bytes(dir_b / e.path));

  // and different for a different seed
  const auto dir_c = fresh_dir("corpus_c");
  spec.out_dir = dir_c.string();
  generate_synthetic_corpus(spec, 12);
  CHECK(file_bytes(dir_a / manifest.entries[0].path) !=
        file_bytes(dir_c / manifest.entries[0].path));
}

TEST_CASE("generate_synthetic_corpus: burst vs hum separate in high-band energy") {
  const auto dir = fresh_dir("corpus_sep");
  CorpusSpec spec;
  spec.out_dir = dir.string();
  spec.write_noise_sources = false;
  spec.classes = {
      {"burst", Family::burst, 15, 0, true},
      {"hum", Family::hum, 15, 0, false},
  };
  const auto manifest = generate_synthetic_corpus(spec, 21);

  // mean [0,1] mel level above ~4 kHz (bands 44+ of 64)
  auto high_band_mean = [&](const ManifestEntry& e) {
    const AudioClip clip = read_wav(manifest.resolve(e.path));
    const auto spec01 = clip_to_model_input(clip);
    double sum = 0.0;
    long n = 0;
    for (int b = 44; b < spec01.n_bands; ++b)
      for (int t = 0; t < spec01.n_frames; ++t, ++n) sum += spec01.at(b, t);
    return sum / n;
  };

  std::vector<double> burst_f, hum_f;
  for (const auto& e : manifest.entries)
    (e.class_name == "burst" ? burst_f : hum_f).push_back(high_band_mean(e));

  const auto [b_lo, b_hi] = std::minmax_element(burst_f.begin(), burst_f.end());
  const auto [h_lo, h_hi] = std::minmax_element(hum_f.begin(), hum_f.end());
  const bool separable = *b_lo > *h_hi || *h_lo > *b_hi;
  CHECK(separable);
}
