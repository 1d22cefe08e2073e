#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "boocap/error.hpp"
#include "boocap/metrics/metrics.hpp"
#include "oracle/metric_oracle.hpp"
#include "oracle/random_corpus.hpp"

using namespace boocap;
using namespace boocap::metrics;

namespace {

TokenSeq toks(const std::string& s) { return tokenize(s); }

std::map<ImageId, TokenSeq> to_cands(const oracle::SmallCorpus& c) {
  std::map<ImageId, TokenSeq> out;
  for (auto& [id, t] : c.cands) out[id] = t;
  return out;
}

std::map<ImageId, std::vector<TokenSeq>> to_refs(const oracle::SmallCorpus& c) {
  std::map<ImageId, std::vector<TokenSeq>> out;
  for (auto& [id, r] : c.refs) out[id] = r;
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("tokenizer splits punctuation and lowercases") {
  CHECK(tokenize("A man, riding.") == TokenSeq{"a", "man", ",", "riding", "."});
  CHECK(tokenize("").empty());
  CHECK(tokenize("   \t ").empty());
  const auto once = tokenize("Two DOGS (playing) in the park!");
  CHECK(tokenize(join_tokens(once)) == once);
  CHECK(tokenize("it's fine") == TokenSeq{"it's", "fine"});
  CHECK(tokenize("ÉCOLE Ça") == TokenSeq{"école", "ça"});
}

TEST_CASE("ngram profile slot counts") {
  const auto p = NGramProfile::of(toks("a b a b c"));
  CHECK(p.slots(1) == 5);
  CHECK(p.slots(4) == 2);
  CHECK(p.counts[0].at("a") == 2);
  CHECK(p.counts[1].at("a b") == 2);
  CHECK(NGramProfile::of(toks("x y")).slots(3) == 0);
}

TEST_CASE("bleu examples") {
  const auto same = bleu(toks("the cat sat on the mat"), {toks("the cat sat on the mat")});
  for (double b : same) CHECK(b == doctest::Approx(1.0).epsilon(1e-12));

  const auto b = bleu({"the", "cat", "sat"}, {{"the", "cat", "sat", "down"}});
  CHECK(b[0] == doctest::Approx(std::exp(1.0 - 4.0 / 3.0)).epsilon(1e-12));
  CHECK(b[0] == doctest::Approx(0.7165).epsilon(1e-4));
  CHECK(b[3] == 0.0);  // only three tokens

  const auto empty = bleu({}, {toks("a dog")});
  for (double x : empty) CHECK(x == 0.0);
}

TEST_CASE("bleu brevity penalty uses the closest reference, ties to the shorter") {
  // candidate length 4; refs of length 3 and 5 are equally close, so r = 3 and no penalty.
  const auto b = bleu({"a", "b", "c", "d"}, {{"a", "b", "c"}, {"a", "b", "c", "d", "e"}});
  CHECK(b[0] == doctest::Approx(1.0));
}

TEST_CASE("rouge-l examples") {
  CHECK(rouge_l(toks("a b c"), {toks("a b c")}) == doctest::Approx(1.0));
  CHECK(rouge_l(toks("a b c"), {toks("x y z")}) == 0.0);
  CHECK(rouge_l({"a", "b", "c", "d"}, {{"a", "c", "b", "d"}}) == doctest::Approx(0.75));
  CHECK(rouge_l({}, {toks("a")}) == 0.0);
}

TEST_CASE("cider identity and disjoint cases") {
  std::map<ImageId, TokenSeq> cands{{1, toks("a dog on the mat")}, {2, toks("two cats in a box")}};
  std::map<ImageId, std::vector<TokenSeq>> refs{{1, {toks("a dog on the mat"), toks("a dog on the mat")}},
                                                {2, {toks("two cats in a box")}}};
  for (auto v : {CiderVariant::cider, CiderVariant::cider_d}) {
    const auto r = cider(cands, refs, v);
    CHECK(r.per_image.at(1) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(r.per_image.at(2) == doctest::Approx(10.0).epsilon(1e-12));
  }
  cands[1] = toks("zebra zebra zebra zebra");
  CHECK(cider(cands, refs, CiderVariant::cider_d).per_image.at(1) == 0.0);
}

TEST_CASE("cider rejects images without references or candidates") {
  std::map<ImageId, TokenSeq> cands{{1, toks("a")}};
  std::map<ImageId, std::vector<TokenSeq>> refs{{1, {}}};
  CHECK_THROWS_AS(cider(cands, refs, CiderVariant::cider), ValidationError);
  refs = {{2, {toks("a")}}};
  CHECK_THROWS_AS(cider(cands, refs, CiderVariant::cider), ValidationError);
}

TEST_CASE("unseen n-grams get idf log(N)") {
  std::map<ImageId, std::vector<TokenSeq>> refs{{1, {toks("a b")}}, {2, {toks("a c")}}, {3, {toks("d")}}};
  IdfTable idf(refs);
  CHECK(idf.idf(1, "a") == doctest::Approx(std::log(3.0 / 2.0)));
  CHECK(idf.idf(1, "zzz") == doctest::Approx(std::log(3.0)));
  CHECK(idf.idf(2, "a b") == doctest::Approx(std::log(3.0)));
}

TEST_CASE("golden corpus matches the frozen oracle scores") {
  const auto corpus = nlohmann::json::parse(slurp(std::string(BOOCAP_TESTDATA_DIR) + "/golden_corpus.json"));
  const auto golden = nlohmann::json::parse(slurp(std::string(BOOCAP_TESTDATA_DIR) + "/golden_scores.json"));
  std::map<ImageId, TokenSeq> cands;
  std::map<ImageId, std::vector<TokenSeq>> refs;
  for (auto& [k, v] : corpus["candidates"].items()) cands[std::stol(k)] = tokenize(v.get<std::string>());
  for (auto& [k, v] : corpus["references"].items()) {
    for (auto& r : v) refs[std::stol(k)].push_back(tokenize(r.get<std::string>()));
  }
  const auto c = cider(cands, refs, CiderVariant::cider);
  const auto cd = cider(cands, refs, CiderVariant::cider_d);
  for (auto& [id, t] : cands) {
    const auto& g = golden[std::to_string(id)];
    const auto b = bleu(t, refs[id]);
    for (int n = 0; n < 4; ++n) CHECK(std::fabs(b[n] - g["b" + std::to_string(n + 1)].get<double>()) <= 1e-9);
    CHECK(std::fabs(rouge_l(t, refs[id]) - g["rouge_l"].get<double>()) <= 1e-9);
    CHECK(std::fabs(c.per_image.at(id) - g["cider"].get<double>()) <= 1e-9);
    CHECK(std::fabs(cd.per_image.at(id) - g["cider_d"].get<double>()) <= 1e-9);
  }
}

TEST_CASE("random small corpora match the brute-force oracle") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto sc = oracle::random_small_corpus(gen);
    const auto cands = to_cands(sc);
    const auto refs = to_refs(sc);
    for (bool d : {false, true}) {
      const auto ours = cider(cands, refs, d ? CiderVariant::cider_d : CiderVariant::cider);
      const auto theirs = oracle::cider(sc.cands, sc.refs, d);
      for (auto& [id, s] : theirs) REQUIRE(std::fabs(ours.per_image.at(id) - s) <= 1e-9);
    }
    for (auto& [id, t] : sc.cands) {
      const auto ob = oracle::bleu(t, sc.refs.at(id));
      const auto b = bleu(t, refs.at(id));
      for (int n = 0; n < 4; ++n) REQUIRE(std::fabs(b[n] - ob[n]) <= 1e-9);
      REQUIRE(std::fabs(rouge_l(t, refs.at(id)) - oracle::rouge_l(t, sc.refs.at(id))) <= 1e-9);
    }
  }
}

TEST_CASE("scores are bounded and invariant to reference order") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto sc = oracle::random_small_corpus(gen);
    auto cands = to_cands(sc);
    auto refs = to_refs(sc);
    const auto base = cider(cands, refs, CiderVariant::cider_d);
    auto shuffled = refs;
    for (auto& [id, r] : shuffled) std::shuffle(r.begin(), r.end(), gen);
    const auto perm = cider(cands, shuffled, CiderVariant::cider_d);
    for (auto& [id, s] : base.per_image) {
      CHECK(s >= 0.0);
      CHECK(s <= 10.0 + 1e-9);
      CHECK(perm.per_image.at(id) == doctest::Approx(s).epsilon(1e-12));
      const auto b1 = bleu(cands[id], refs[id]);
      const auto b2 = bleu(cands[id], shuffled[id]);
      for (int n = 0; n < 4; ++n) {
        CHECK(b1[n] >= 0.0);
        CHECK(b1[n] <= 1.0 + 1e-12);
        CHECK(b1[n] == b2[n]);
      }
      const double r = rouge_l(cands[id], refs[id]);
      CHECK(r >= 0.0);
      CHECK(r <= 1.0 + 1e-12);
      CHECK(r == rouge_l(cands[id], shuffled[id]));
    }
  }
}

TEST_CASE("adding a reference never lowers clipped precision") {
  // Full BLEU can drop when the new reference changes the closest length (brevity
  // penalty), so the score itself is compared only when that length is unchanged.
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 500; ++trial) {
    auto sc = oracle::random_small_corpus(gen, false);
    const auto& cand = sc.cands.begin()->second;
    auto refs = sc.refs.begin()->second;
    const auto before = bleu(cand, refs);
    auto extra = oracle::random_small_corpus(gen, false).refs.begin()->second.front();
    auto more = refs;
    more.push_back(extra);
    const auto after = bleu(cand, more);
    const auto closest = [&](const std::vector<TokenSeq>& rs) {
      std::size_t best = rs[0].size();
      for (auto& r : rs) {
        const auto d = [&](std::size_t l) { return l > cand.size() ? l - cand.size() : cand.size() - l; };
        if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
      }
      return best;
    };
    if (closest(refs) == closest(more)) {
      for (int n = 0; n < 4; ++n) CHECK(after[n] >= before[n] - 1e-12);
    }
    // precision part: compare with the brevity penalty removed
    auto strip = [&](const std::array<double, 4>& b, std::size_t r) {
      const double c = static_cast<double>(cand.size());
      const double bp = c >= static_cast<double>(r) ? 1.0 : std::exp(1.0 - static_cast<double>(r) / c);
      std::array<double, 4> out{};
      for (int n = 0; n < 4; ++n) out[n] = b[n] / bp;
      return out;
    };
    const auto p0 = strip(before, closest(refs));
    const auto p1 = strip(after, closest(more));
    for (int n = 0; n < 4; ++n) CHECK(p1[n] >= p0[n] - 1e-12);
  }
}

TEST_CASE("evaluate aggregates and validates") {
  corpus::CaptionSet refs{{1, {"A dog on the mat.", "a dog on a mat"}},
                          {2, {"Two cats in a box.", "two cats inside a box"}},
                          {3, {"a red bus on the street", "a bus parked on a street"}}};
  std::map<ImageId, std::string> gen{{1, "a dog on the mat ."}, {2, "two cats in a box ."}, {3, "a bus on a street"}};
  const auto rep = evaluate(gen, refs, {1, 2, 3});
  REQUIRE(rep.count() == 3);
  double sum = 0;
  for (auto& s : rep.images) sum += s.cider;
  CHECK(rep.mean_cider == doctest::Approx(sum / 3));
  CHECK(rep.images[0].bleu[0] == doctest::Approx(1.0));
  CHECK(rep.to_csv().rfind("image_id,b1,b2,b3,b4,rouge_l,cider\n", 0) == 0);
  CHECK(nlohmann::json::parse(rep.to_json())["count"] == 3);

  CHECK_THROWS_AS(evaluate(gen, refs, {}), ValidationError);
  gen.erase(2);
  try {
    evaluate(gen, refs, {1, 2, 3});
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
}

TEST_CASE("identical corpus gives perfect scores") {
  corpus::CaptionSet refs{{1, {"a dog on the red mat"}}, {2, {"two cats in a box"}}, {3, {"people at the beach"}}};
  std::map<ImageId, std::string> gen{{1, "a dog on the red mat"}, {2, "two cats in a box"}, {3, "people at the beach"}};
  for (auto v : {CiderVariant::cider, CiderVariant::cider_d}) {
    const auto rep = evaluate(gen, refs, {1, 2, 3}, v);
    CHECK(std::fabs(rep.mean_cider - 10.0) <= 1e-9);
    CHECK(rep.mean_rouge_l == doctest::Approx(1.0));
    for (double b : rep.mean_bleu) CHECK(b == doctest::Approx(1.0));
    for (double b : rep.corpus_bleu) CHECK(b == doctest::Approx(1.0));
  }
}
