#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "boocap/error.hpp"
#include "boocap/repr/repr.hpp"
#include "oracle/random_scene.hpp"

using namespace boocap;
using namespace boocap::repr;
using corpus::BBox;
using corpus::Category;

namespace {

std::shared_ptr<const CategoryTable> coco_like() {
  std::vector<Category> cats;
  for (int i = 1; i <= 80; ++i) cats.push_back({i, "cat" + std::to_string(i)});
  return std::make_shared<const CategoryTable>(std::move(cats));
}

ObjectInstance inst(int cat, double x, double y, double w, double h, double a) {
  return ObjectInstance{cat, BBox{x, y, w, h}, a, 1.0};
}

Scene scene_with_counts(const std::map<int, int>& counts) {
  Scene s{1, 100, 100, {}};
  for (auto [cat, n] : counts) {
    for (int i = 0; i < n; ++i) s.instances.push_back(inst(cat, 1, 1, 10, 10, 50));
  }
  return s;
}

}  // namespace

TEST_CASE("frequency vectors") {
  const auto cats = coco_like();
  const auto v = frequency_vector(scene_with_counts({{1, 3}, {15, 3}, {2, 1}}), *cats);
  CHECK(v.values.size() == 80);
  CHECK(v.values[0] == 3);
  CHECK(v.values[14] == 3);
  CHECK(v.values[1] == 1);
  double sum = 0;
  for (double x : v.values) sum += x;
  CHECK(sum == 7);

  CHECK(frequency_vector(Scene{1, 10, 10, {}}, *cats).values == std::vector<double>(80, 0.0));

  const auto w = frequency_vector(scene_with_counts({{1, 5}, {47, 8}, {50, 1}, {51, 8}, {57, 10}, {62, 6}, {67, 3}}), *cats);
  int nonzero = 0;
  for (double x : w.values) nonzero += x != 0;
  CHECK(nonzero == 7);

  CHECK_THROWS_AS(frequency_vector(scene_with_counts({{99, 1}}), *cats), ValidationError);
}

TEST_CASE("normalize and binarize") {
  CategoryTable cats({{1, "a"}, {2, "b"}, {3, "c"}, {4, "d"}});
  const auto f = frequency_vector(scene_with_counts({{1, 3}, {2, 3}, {3, 1}}), cats);
  const auto n = normalize(f);
  CHECK(n.values[0] == doctest::Approx(3.0 / 7));
  CHECK(n.values[2] == doctest::Approx(1.0 / 7));
  CHECK(n.values[3] == 0.0);
  CHECK(n.schema->kind == ReprKind::normalized);
  CHECK(normalize(frequency_vector(Scene{1, 5, 5, {}}, cats)).values == std::vector<double>(4, 0.0));
  CHECK(normalize(frequency_vector(scene_with_counts({{1, 10}}), cats)).values[0] == 1.0);

  const auto b = binarize(frequency_vector(scene_with_counts({{1, 3}, {3, 1}}), cats));
  CHECK(b.values == std::vector<double>{1, 0, 1, 0});
  const auto ones = frequency_vector(scene_with_counts({{1, 1}, {2, 1}, {3, 1}, {4, 1}}), cats);
  CHECK(binarize(ones).values == ones.values);
  CHECK_THROWS_AS(binarize(n), ValidationError);
}

TEST_CASE("pooled size and distance") {
  CategoryTable cats({{1, "a"}, {2, "b"}});
  Scene one{1, 100, 100, {inst(1, 0, 0, 50, 50, 2500)}};
  CHECK(pooled_size_vector(one, cats, Pooling::max).values == std::vector<double>{0.25, 0});

  Scene two{1, 100, 100, {inst(1, 0, 0, 50, 50, 1000), inst(1, 0, 0, 60, 60, 3000)}};
  CHECK(pooled_size_vector(two, cats, Pooling::max).values[0] == doctest::Approx(0.3));
  CHECK(pooled_size_vector(two, cats, Pooling::min).values[0] == doctest::Approx(0.1));
  CHECK(pooled_size_vector(two, cats, Pooling::mean).values[0] == doctest::Approx(0.2));

  Scene centred{1, 100, 100, {inst(1, 40, 40, 20, 20, 100)}};
  CHECK(pooled_distance_vector(centred, cats, Pooling::min).values[0] == 0.0);
  Scene corner{1, 100, 100, {inst(2, 90, 90, 20, 20, 100)}};
  const double expected = std::sqrt(50.0 * 50 + 50.0 * 50) / std::sqrt(100.0 * 100 + 100.0 * 100);
  CHECK(expected == doctest::Approx(0.5));
  CHECK(pooled_distance_vector(corner, cats, Pooling::min).values[1] == doctest::Approx(expected).epsilon(1e-14));
  CHECK(pooled_distance_vector(corner, cats, Pooling::min).values[0] == 0.0);

  // distances 0.1 and 0.4 of the diagonal along the main diagonal
  const double diag = std::sqrt(2.0) * 100;
  auto at = [&](double d) {
    const double off = d * diag / std::sqrt(2.0);
    return inst(1, 50 + off - 1, 50 + off - 1, 2, 2, 1);
  };
  Scene pair{1, 100, 100, {at(0.1), at(0.4)}};
  CHECK(pooled_distance_vector(pair, cats, Pooling::min).values[0] == doctest::Approx(0.1));
  CHECK(pooled_distance_vector(pair, cats, Pooling::max).values[0] == doctest::Approx(0.4));
}

TEST_CASE("concat") {
  const auto cats = coco_like();
  const auto s = scene_with_counts({{1, 2}});
  const auto f = frequency_vector(s, *cats);
  const auto z = pooled_size_vector(s, *cats, Pooling::max);
  const auto d = pooled_distance_vector(s, *cats, Pooling::min);
  CHECK(concat({f, z}).values.size() == 160);
  CHECK(concat({f, z, d}).values.size() == 240);
  CHECK(concat({f}).values == f.values);
  CHECK(concat({f, z}).schema->dim() == 160);
}

TEST_CASE("spatial tuple") {
  const auto t = spatial_tuple(inst(1, 10, 20, 30, 40, 1000), 100, 200);
  CHECK(t.x == doctest::Approx(0.25));
  CHECK(t.y == doctest::Approx(0.20));
  CHECK(t.w == doctest::Approx(0.30));
  CHECK(t.h == doctest::Approx(0.20));
  CHECK(t.a == doctest::Approx(0.05));
  CHECK(t.w * t.h >= t.a);
  const auto full = spatial_tuple(inst(1, 0, 0, 100, 200, 20000), 100, 200);
  CHECK(full.x == 0.5);
  CHECK(full.y == 0.5);
  CHECK(full.w == 1);
  CHECK(full.h == 1);
  CHECK(full.a == 1);
  const auto edge = spatial_tuple(inst(1, 0, 0, 10, 20, 200), 100, 100);
  CHECK(edge.a == doctest::Approx(edge.w * edge.h));
  CHECK_THROWS_AS(spatial_tuple(inst(1, 0, 0, 0, 20, 0), 100, 100), ValidationError);
}

TEST_CASE("spatial vector layout and truncation") {
  const auto cats = coco_like();
  Scene s{1, 100, 100, {}};
  CHECK(spatial_vector(s, *cats, parse_features("xywha")).values.size() == 4000);
  CHECK(spatial_vector(s, *cats, parse_features("wh")).values.size() == 1600);
  for (int i = 0; i < 12; ++i) s.instances.push_back(inst(3, 0, 0, 10, 10, 10 + i));
  const auto v = spatial_vector(s, *cats, parse_features("a"));
  const std::size_t base = 2 * 10;  // category 3 sits at position 2
  CHECK(v.values[base] == doctest::Approx(0.0021));
  CHECK(v.values[base + 9] == doctest::Approx(0.0012));
  int nonzero = 0;
  for (double x : v.values) nonzero += x != 0;
  CHECK(nonzero == 10);
  CHECK(parse_features("ax") == std::vector<SpatialFeature>{SpatialFeature::x, SpatialFeature::a});
  CHECK_THROWS_AS(parse_features("q"), ConfigError);
}

TEST_CASE("ablation deletes coordinates") {
  const auto cats = coco_like();
  const auto s = scene_with_counts({{1, 2}, {5, 1}});
  const auto f = frequency_vector(s, *cats);
  const auto a = ablate_category(f, 1);
  REQUIRE(a.values.size() == 79);
  CHECK(a.values[3] == 1);  // category 5 moved from position 4 to 3
  const auto b = ablate_category(f, 80);
  CHECK(std::equal(b.values.begin(), b.values.end(), f.values.begin()));
  CHECK_THROWS_AS(ablate_category(a, 1), ValidationError);
  CHECK_THROWS_AS(ablate_category(f, 1000), ValidationError);

  // concat schemas lose one coordinate per part
  const auto z = pooled_size_vector(s, *cats, Pooling::max);
  CHECK(ablate_category(concat({f, z}), 5).values.size() == 158);
}

TEST_CASE("masking examples") {
  CategoryTable cats({{1, "a"}, {2, "b"}, {3, "c"}});
  const auto s = scene_with_counts({{1, 5}, {2, 2}, {3, 1}});
  const auto f = frequency_vector(s, cats);
  const auto half = mask_vector(s, f, MaskHeuristic::most_frequent, Retention::keep_fraction(0.5), 0);
  CHECK(half.values == std::vector<double>{5, 2, 0});
  CHECK(mask_vector(s, f, MaskHeuristic::random, Retention::keep_fraction(1.0), 9).values == f.values);

  Scene sized{1, 100, 100, {inst(1, 0, 0, 10, 10, 50), inst(2, 0, 0, 50, 50, 2000), inst(3, 0, 0, 20, 20, 300)}};
  const auto fs = frequency_vector(sized, cats);
  CHECK(mask_vector(sized, fs, MaskHeuristic::largest, Retention::keep_one(), 0).values == std::vector<double>{0, 1, 0});

  // ties go to the lower category id
  const auto tie = scene_with_counts({{1, 2}, {2, 2}, {3, 2}});
  CHECK(mask_vector(tie, frequency_vector(tie, cats), MaskHeuristic::most_frequent, Retention::keep_one(), 0).values ==
        std::vector<double>{2, 0, 0});

  const Scene empty{1, 10, 10, {}};
  CHECK(mask_vector(empty, frequency_vector(empty, cats), MaskHeuristic::closest, Retention::keep_one(), 0).values ==
        std::vector<double>(3, 0.0));
  CHECK_THROWS_AS(mask_vector(s, f, MaskHeuristic::largest, Retention::keep_fraction(0.0), 0), ConfigError);
}

TEST_CASE("masking matches a brute-force ranking") {
  std::mt19937_64 gen(17);
  const auto cats = oracle::table_of(6);
  for (int trial = 0; trial < 300; ++trial) {
    const auto s = oracle::random_scene(gen, *cats, trial);
    const auto f = frequency_vector(s, *cats);
    for (double frac : {0.25, 0.5, 0.75}) {
      const auto m = mask_vector(s, f, MaskHeuristic::most_frequent, Retention::keep_fraction(frac), 0);
      // brute force: a category survives iff fewer than `keep` categories beat it
      int present = 0;
      for (double x : f.values) present += x > 0;
      const int keep = static_cast<int>(std::ceil(frac * present - 1e-9));
      for (std::size_t i = 0; i < f.values.size(); ++i) {
        if (f.values[i] == 0) {
          CHECK(m.values[i] == 0);
          continue;
        }
        int better = 0;
        for (std::size_t j = 0; j < f.values.size(); ++j) {
          if (f.values[j] > f.values[i] || (f.values[j] == f.values[i] && f.values[j] > 0 && j < i)) ++better;
        }
        CHECK(m.values[i] == (better < keep ? f.values[i] : 0.0));
      }
    }
  }
}

TEST_CASE("random masking depends on the seed only for random") {
  CategoryTable cats({{1, "a"}, {2, "b"}, {3, "c"}, {4, "d"}, {5, "e"}, {6, "f"}});
  const auto s = scene_with_counts({{1, 1}, {2, 1}, {3, 1}, {4, 1}, {5, 1}, {6, 1}});
  const auto f = frequency_vector(s, cats);
  bool differs = false;
  for (std::uint64_t seed = 1; seed < 20; ++seed) {
    differs |= mask_vector(s, f, MaskHeuristic::random, Retention::keep_one(), seed).values !=
               mask_vector(s, f, MaskHeuristic::random, Retention::keep_one(), 0).values;
    CHECK(mask_vector(s, f, MaskHeuristic::largest, Retention::keep_one(), seed).values ==
          mask_vector(s, f, MaskHeuristic::largest, Retention::keep_one(), 0).values);
  }
  CHECK(differs);
}

TEST_CASE("repr specs build schemas") {
  const auto cats = coco_like();
  CHECK(ReprSpec::parse("frequency").schema(cats)->dim() == 80);
  CHECK(ReprSpec::parse("frequency+size:max").schema(cats)->dim() == 160);
  CHECK(ReprSpec::parse("frequency+size+distance").schema(cats)->dim() == 240);
  CHECK(ReprSpec::parse("spatial").schema(cats)->dim() == 4000);
  CHECK(ReprSpec::parse("spatial:wh@10").schema(cats)->dim() == 1600);
  CHECK(ReprSpec::parse("frequency").schema(cats, {3})->dim() == 79);
  CHECK_THROWS_AS(ReprSpec::parse("colour"), ConfigError);
  CHECK_THROWS_AS(ReprSpec::parse("frequency+"), ConfigError);

  const auto spec = ReprSpec::parse("normalized+distance:mean");
  const auto schema = spec.schema(cats, {2});
  const auto s = scene_with_counts({{1, 2}, {2, 1}});
  const auto v = spec.build(s, schema);
  CHECK(v.values.size() == 158);
  CHECK(v.values[0] == doctest::Approx(2.0 / 3));

  const auto back = ReprSchema::from_json(schema->to_json());
  CHECK(same_layout(*back, *schema));
  CHECK(back->dim() == 158);
  CHECK(back->coordinates().front().key == schema->coordinates().front().key);
}

TEST_CASE("csv output") {
  CategoryTable cats({{1, "a"}, {2, "b"}});
  const auto v = frequency_vector(scene_with_counts({{2, 3}}), cats);
  CHECK(to_csv({v}) == "image_id,frequency#1,frequency#2\n1,0,3\n");
}
