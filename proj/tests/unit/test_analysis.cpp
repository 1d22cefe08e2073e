#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "boocap/analysis/knn.hpp"
#include "boocap/analysis/plot.hpp"
#include "boocap/analysis/sweeps.hpp"
#include "boocap/corpus/synthetic.hpp"
#include "boocap/error.hpp"
#include "oracle/stats_oracle.hpp"

using namespace boocap;
using namespace boocap::analysis;

namespace {

std::vector<double> random_series(std::mt19937_64& gen, std::size_t n, int levels) {
  std::vector<double> v(n);
  for (auto& x : v) x = static_cast<double>(gen() % static_cast<unsigned>(levels)) * 0.5 - 3.0;
  return v;
}

corpus::Scene scene_with(corpus::ImageId id, std::vector<int> cats) {
  corpus::Scene s{id, 100, 100, {}};
  for (int c : cats) s.instances.push_back({c, {10, 10, 20, 20}, 300, 1.0});
  return s;
}

captioner::HyperParams small_hp() {
  captioner::HyperParams hp;
  hp.embed_dim = 8;
  hp.hidden_dim = 12;
  hp.layers = 1;
  hp.max_epochs = 2;
  hp.batch_size = 10;
  hp.dropout = 0.2;
  hp.learning_rate = 5e-3;
  hp.seed = 4;
  return hp;
}

Experiment small_synthetic(std::uint64_t seed, std::size_t scenes) {
  auto spec = corpus::SyntheticSpec::defaults();
  spec.scene_count = scenes;
  auto syn = corpus::generate_synthetic(spec, seed);
  std::vector<corpus::ImageId> ids;
  for (const auto& s : syn.scenes) ids.push_back(s.image_id);
  auto splits = corpus::make_splits(ids, scenes / 5, scenes / 5, seed);
  return Experiment::make(syn.categories, syn.scenes, syn.captions, splits, 1);
}

}  // namespace

TEST_CASE("midranks average tied positions") {
  CHECK(midranks({3, 1, 3, 2}) == std::vector<double>{3.5, 1, 3.5, 2});
}

TEST_CASE("spearman and kendall agree with the pairwise definitions") {
  std::mt19937_64 gen(11);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 3 + gen() % 40;
    auto x = random_series(gen, n, 2 + static_cast<int>(gen() % 12));
    auto y = random_series(gen, n, 2 + static_cast<int>(gen() % 12));
    if (std::all_of(x.begin(), x.end(), [&](double a) { return a == x[0]; })) x[0] += 1;
    if (std::all_of(y.begin(), y.end(), [&](double a) { return a == y[0]; })) y[0] += 1;
    const auto s = spearman(x, y);
    const auto k = kendall(x, y);
    CHECK(std::abs(s.coefficient - oracle::spearman(x, y)) <= 1e-12);
    CHECK(std::abs(k.coefficient - oracle::kendall_tau_b(x, y)) <= 1e-12);
    CHECK(s.p_value >= 0);
    CHECK(s.p_value <= 1);
    CHECK(k.p_value >= 0);
    CHECK(k.p_value <= 1);
  }
}

TEST_CASE("monotone series correlate perfectly") {
  const std::vector<double> x{1, 2, 3, 4, 5, 6};
  const std::vector<double> y{-4, 0, 0.5, 9, 10, 100};
  CHECK(spearman(x, y).coefficient == 1.0);
  CHECK(kendall(x, y).coefficient == 1.0);
  CHECK(spearman(x, {6, 5, 4, 3, 2, 1}).coefficient == -1.0);
}

TEST_CASE("p-values match published reference values") {
  const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const std::vector<double> y{2, 1, 4, 3, 6, 5, 8, 7, 10, 9};
  const std::vector<double> x2{1, 1, 2, 3, 3, 3, 4, 5, 6, 7};
  const std::vector<double> y2{3, 1, 2, 2, 5, 4, 4, 6, 9, 7};
  CHECK(spearman(x, y).p_value == doctest::Approx(5.484052998513666e-05).epsilon(1e-9));
  CHECK(spearman(x2, y2).p_value == doctest::Approx(0.0011653369934852451).epsilon(1e-9));
  CHECK(kendall(x2, y2).coefficient == doctest::Approx(0.7383045377557884).epsilon(1e-12));
  // tie-corrected normal approximation with continuity correction
  CHECK(kendall(x, y).p_value == doctest::Approx(0.002357527595795495).epsilon(1e-9));
  CHECK(kendall(x2, y2).p_value == doctest::Approx(0.005855557295385489).epsilon(1e-9));
}

TEST_CASE("correlations reject degenerate input") {
  CHECK_THROWS_AS(spearman({1, 2}, {2, 1}), ValidationError);
  CHECK_THROWS_AS(kendall({1, 1, 1}, {1, 2, 3}), ValidationError);
  CHECK_THROWS_AS(spearman({1, 2, 3}, {1, 2}), ValidationError);
  CHECK_THROWS_AS(spearman({1, 2, NAN}, {1, 2, 3}), ValidationError);
}

TEST_CASE("lexicon parsing and mention matching") {
  const auto lex = Lexicon::parse("# comment\ndog\tpuppy, hound\n\ntraffic light\tsignal,stop light\n");
  CHECK(lex.terms("dog").size() == 2);
  auto cats = corpus::CategoryTable({{1, "dog"}, {2, "traffic light"}, {3, "cup"}});
  auto covered = lex;
  covered.cover(cats);
  auto has = [&](const std::string& caption, const std::string& cat) {
    return match_category_mention(metrics::tokenize(caption), cat, covered);
  };
  CHECK(has("A puppy runs.", "dog"));
  CHECK(has("a dog runs", "dog"));
  CHECK(has("a hot dog on a plate", "dog"));  // known noise of plain term matching
  CHECK(has("the Light turned red", "traffic light"));  // head noun
  CHECK(has("a stop light ahead", "traffic light"));
  CHECK_FALSE(has("stop and light", "cup"));
  CHECK(has("one cup .", "cup"));
  CHECK_FALSE(has("cupboard", "cup"));
  CHECK_FALSE(match_category_mention(metrics::tokenize("dog"), "unknown", covered));
  CHECK_THROWS_AS(Lexicon::parse("no tab here\n"), ParseError);
}

TEST_CASE("multiword terms match only as contiguous spans") {
  Lexicon lex;
  lex.add("tl", "stop light");
  CHECK(match_category_mention(metrics::tokenize("a stop light"), "tl", lex));
  CHECK_FALSE(match_category_mention(metrics::tokenize("stop the light"), "tl", lex));
}

TEST_CASE("category statistics") {
  auto cats = corpus::CategoryTable({{1, "dog"}, {2, "cup"}, {3, "kite"}});
  std::vector<corpus::Scene> scenes;
  corpus::CaptionSet caps;
  for (int i = 0; i < 10; ++i) {
    scenes.push_back(scene_with(i, {1, 1, 2}));
    caps[i] = {"something here", i < 4 ? "a dog" : "a thing"};
  }
  std::vector<const corpus::Scene*> ptrs;
  for (const auto& s : scenes) ptrs.push_back(&s);
  const auto stats = compute_category_stats(ptrs, caps, cats, Lexicon::from_categories(cats));
  CHECK(stats.rows[0].depicted == 10);
  CHECK(stats.rows[0].depicted_mentioned == 4);
  CHECK(*stats.rows[0].p_mention == doctest::Approx(0.4));
  CHECK(*stats.rows[1].p_mention == 0.0);
  CHECK_FALSE(stats.rows[2].p_mention.has_value());
  CHECK(stats.to_csv().find("3,kite,0,0,\n") != std::string::npos);

  const auto dist = category_distribution(ptrs, cats);
  CHECK(dist == std::vector<double>{0.5, 0.5, 0.0});
  CHECK(category_distribution({}, cats) == std::vector<double>{0, 0, 0});
}

TEST_CASE("mention probability ignores caption order and stays in [0, 1]") {
  std::mt19937_64 gen(5);
  const auto ex = small_synthetic(9, 120);
  std::vector<const corpus::Scene*> train;
  for (auto id : ex.splits.train) train.push_back(&ex.scene(id));
  const auto lex = Lexicon::from_categories(*ex.categories);
  const auto a = compute_category_stats(train, ex.captions, *ex.categories, lex);
  auto shuffled = ex.captions;
  for (auto& [id, c] : shuffled) std::shuffle(c.begin(), c.end(), gen);
  const auto b = compute_category_stats(train, shuffled, *ex.categories, lex);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].p_mention == b.rows[i].p_mention);
    if (a.rows[i].p_mention) {
      CHECK(*a.rows[i].p_mention >= 0.0);
      CHECK(*a.rows[i].p_mention <= 1.0);
    }
  }
}

TEST_CASE("knn orders by distance then image id") {
  const std::vector<double> a{0, 0}, b{1, 0}, c{0, 1}, d{3, 4};
  IndexedVectors train{{9, &b}, {4, &c}, {7, &a}, {2, &d}};
  const auto n = knn({0, 0}, train, 3);
  REQUIRE(n.size() == 3);
  CHECK(n[0].image_id == 7);
  CHECK(n[1].image_id == 4);
  CHECK(n[2].image_id == 9);
  CHECK(n[2].distance == 1.0);
  CHECK(knn({0, 0}, train, 4)[3].distance == 5.0);
  CHECK_THROWS_AS(knn({0, 0}, train, 5), ConfigError);
  CHECK_THROWS_AS(knn({0, 0, 0}, train, 1), ValidationError);
}

TEST_CASE("knn report marks planted replicas exact") {
  // Six distinct training profiles, five copies each; test images copy three of them.
  auto cats = corpus::CategoryTable({{1, "dog"}, {2, "cup"}, {3, "kite"}});
  std::vector<corpus::Scene> scenes;
  corpus::CaptionSet caps;
  corpus::Splits splits;
  const std::vector<std::vector<int>> profiles{{1}, {2}, {3}, {1, 2}, {1, 1, 3}, {2, 3, 3}};
  corpus::ImageId id = 1;
  for (const auto& p : profiles) {
    for (int copy = 0; copy < 5; ++copy) {
      scenes.push_back(scene_with(id, p));
      caps[id] = {"a dog and a cup", "a kite"};
      splits.train.push_back(id++);
    }
  }
  for (int t = 0; t < 3; ++t) {
    scenes.push_back(scene_with(id, profiles[static_cast<std::size_t>(t)]));
    caps[id] = {"a dog"};
    splits.test.push_back(id++);
  }
  scenes.push_back(scene_with(id, {1, 2, 3}));
  caps[id] = {"a cup"};
  splits.test.push_back(id++);
  for (int v = 0; v < 2; ++v) {
    scenes.push_back(scene_with(id, {1}));
    caps[id] = {"a dog"};
    splits.val.push_back(id++);
  }
  const auto ex = Experiment::make(cats, scenes, caps, splits, 1);
  const auto spec = repr::ReprSpec::parse("frequency");
  const auto schema = spec.schema(ex.categories);
  const auto reprs = build_reprs(ex, spec, schema);
  TrainSettings ts;
  ts.hp = small_hp();
  const auto ck = train_model(ex, reprs, schema, ts);
  const auto report = knn_report(ex, ck, reprs, 5);
  int exact = 0;
  for (const auto& e : report.entries) exact += e.exact;
  CHECK(exact == 3);
  REQUIRE(report.subset("exact") != nullptr);
  CHECK(report.subset("exact")->count == 3);
  CHECK(report.subset("not_exact")->count == 1);
  CHECK(report.subset("all")->count == 4);
  CHECK(report.entries.back().projected.size() == 5);
  CHECK(report.to_csv().rfind("image_id,exact,", 0) == 0);
  CHECK_THROWS_AS(knn_report(ex, ck, reprs, 31), ConfigError);
}

TEST_CASE("ablating a never-depicted category changes nothing") {
  auto spec_syn = corpus::SyntheticSpec::defaults();
  spec_syn.scene_count = 80;
  spec_syn.categories.push_back({"unicorn", 0.05, 2});
  auto syn = corpus::generate_synthetic(spec_syn, 3);
  // strip the extra category from every scene
  for (auto& s : syn.scenes) {
    std::erase_if(s.instances, [](const auto& i) { return i.category_id == 9; });
    auto& c = syn.captions[s.image_id];
    c.clear();
    for (const auto& t : spec_syn.templates) c.push_back(corpus::render_caption(t, s, syn.categories, 0.12));
  }
  std::vector<corpus::ImageId> ids;
  for (const auto& s : syn.scenes) ids.push_back(s.image_id);
  const auto ex = Experiment::make(syn.categories, syn.scenes, syn.captions, corpus::make_splits(ids, 15, 15, 3), 1);
  TrainSettings ts;
  ts.hp = small_hp();
  const auto spec = repr::ReprSpec::parse("frequency");
  const double base = baseline_cider(ex, spec, ts, metrics::CiderVariant::cider_d);
  const auto report = ablation_sweep(ex, spec, ts, base, metrics::CiderVariant::cider_d, {9, 1});
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].delta == 0.0);
  CHECK(report.rows[0].name == "unicorn");
  CHECK(report.to_csv().rfind("category_id,name,cider,delta\n9,unicorn,", 0) == 0);

  ts.jobs = 2;
  const auto parallel = ablation_sweep(ex, spec, ts, base, metrics::CiderVariant::cider_d, {9, 1});
  CHECK(parallel.to_csv() == report.to_csv());
}

TEST_CASE("ablation correlations skip never-depicted categories") {
  AblationReport r;
  r.baseline_cider = 2.0;
  CategoryStats st;
  for (int c = 1; c <= 5; ++c) {
    r.rows.push_back({c, "c", 2.0 - 0.1 * c, -0.1 * c});
    st.rows.push_back({c, "c", 10L * c, c, c == 5 ? std::nullopt : std::optional<double>(0.1 * c)});
  }
  const auto rows = correlate_ablation(r, st);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].spearman.n == 4);
  CHECK(rows[1].spearman.coefficient == 1.0);
  CHECK(rows[0].kendall.coefficient == 1.0);
  CHECK(correlation_csv(rows).rfind("statistic,n,", 0) == 0);
}

TEST_CASE("mask sweep: full retention equals the unmasked score, seeds only move random") {
  const auto ex = small_synthetic(2, 100);
  const auto spec = repr::ReprSpec::parse("frequency");
  const auto schema = spec.schema(ex.categories);
  const auto reprs = build_reprs(ex, spec, schema);
  TrainSettings ts;
  ts.hp = small_hp();
  const auto ck = train_model(ex, reprs, schema, ts);
  const double full =
      evaluate_captions(ex, caption_images(ck, reprs, ex.splits.test), ex.splits.test, metrics::CiderVariant::cider_d)
          .mean_cider;
  using H = repr::MaskHeuristic;
  const auto rows = mask_sweep(ex, ck, {H::largest, H::random}, {repr::Retention::keep_fraction(1.0), repr::Retention::keep_one()},
                               {1, 2}, metrics::CiderVariant::cider_d);
  REQUIRE(rows.size() == 8);
  CHECK(rows[0].cider == full);
  CHECK(rows[4].cider == full);
  CHECK(rows[2].cider == rows[3].cider);
  CHECK(mask_sweep_csv(rows).rfind("heuristic,retention,seed,cider\nsize,1,1,", 0) == 0);

  auto bin = ck;
  bin.schema = repr::ReprSpec::parse("binarized").schema(ex.categories);
  CHECK_THROWS_AS(mask_sweep(ex, bin, {H::largest}, {repr::Retention::keep_one()}, {1}, metrics::CiderVariant::cider),
                  ConfigError);
}

TEST_CASE("svg charts") {
  const auto bar = bar_chart_svg("a <b>", {"x", "y"}, {{"s1", {1, -2}}, {"s2", {0.5, NAN}}});
  CHECK(bar.rfind("<svg", 0) == 0);
  CHECK(bar.find("a &lt;b&gt;") != std::string::npos);
  CHECK(bar.find("</svg>") != std::string::npos);
  const auto line = line_chart_svg("t", {"100%", "75%"}, {{"size", {3, 2}}});
  CHECK(line.find("<polyline") != std::string::npos);
  CHECK_THROWS_AS(bar_chart_svg("t", {"x"}, {{"s", {1, 2}}}), ValidationError);
}

TEST_CASE("shipped lexicons parse and cover their categories") {
  const auto coco = Lexicon::parse(corpus::read_file(std::string(BOOCAP_DATA_DIR) + "/lexicon_coco.tsv"));
  for (const auto* name : {"person", "hot dog", "hair drier", "toothbrush", "dining table"}) CHECK(coco.has(name));
  CHECK(match_category_mention(metrics::tokenize("two women at a table"), "person", coco));
  CHECK(match_category_mention(metrics::tokenize("a plate with a hotdog"), "hot dog", coco));
  const auto syn = Lexicon::parse(corpus::read_file(std::string(BOOCAP_DATA_DIR) + "/lexicon_synthetic.tsv"));
  auto defaults = corpus::SyntheticSpec::defaults();
  for (const auto& c : defaults.categories) CHECK(syn.has(c.name));
}
