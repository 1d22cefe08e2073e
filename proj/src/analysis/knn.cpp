#include "boocap/analysis/knn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "boocap/error.hpp"

namespace boocap::analysis {

std::vector<Neighbor> knn(const std::vector<double>& query, const IndexedVectors& train, int k) {
  if (k <= 0) throw ConfigError("k must be positive");
  if (static_cast<std::size_t>(k) > train.size()) {
    throw ConfigError("k = " + std::to_string(k) + " exceeds the " + std::to_string(train.size()) +
                      " training images");
  }
  std::vector<std::pair<double, ImageId>> d;
  d.reserve(train.size());
  for (const auto& [id, v] : train) {
    if (v->size() != query.size()) {
      throw ValidationError("dimension mismatch: query has " + std::to_string(query.size()) + ", image " +
                            std::to_string(id) + " has " + std::to_string(v->size()));
    }
    double s = 0;
    for (std::size_t i = 0; i < query.size(); ++i) {
      const double diff = query[i] - (*v)[i];
      s += diff * diff;
    }
    d.emplace_back(s, id);
  }
  std::partial_sort(d.begin(), d.begin() + k, d.end());
  std::vector<Neighbor> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out.push_back({d[static_cast<std::size_t>(i)].second, std::sqrt(d[static_cast<std::size_t>(i)].first)});
  return out;
}

captioner::ReprMap project_all(const captioner::Params& params, const captioner::ReprMap& reprs,
                               const std::vector<ImageId>& ids) {
  captioner::ReprMap out;
  for (auto id : ids) {
    auto it = reprs.find(id);
    if (it == reprs.end()) throw ValidationError("no representation for image " + std::to_string(id));
    const auto x = captioner::project(params, *it->second);
    out.emplace(id, std::make_shared<const std::vector<double>>(x.data(), x.data() + x.size()));
  }
  return out;
}

namespace {

IndexedVectors index_of(const captioner::ReprMap& m, const std::vector<ImageId>& ids) {
  IndexedVectors out;
  out.reserve(ids.size());
  for (auto id : ids) {
    auto it = m.find(id);
    if (it == m.end()) throw ValidationError("no representation for image " + std::to_string(id));
    out.emplace_back(id, it->second.get());
  }
  return out;
}

SubsetScores score_subset(const std::string& name, const std::vector<ImageId>& ids,
                          const std::map<ImageId, metrics::TokenSeq>& caps,
                          const std::map<ImageId, std::vector<metrics::TokenSeq>>& refs,
                          const metrics::IdfTable& idf, metrics::CiderVariant variant) {
  const auto r = metrics::evaluate_tokens(caps, refs, ids, variant, &idf);
  SubsetScores s;
  s.name = name;
  s.count = r.count();
  s.bleu = r.mean_bleu;
  s.rouge_l = r.mean_rouge_l;
  s.cider = r.mean_cider;
  return s;
}

std::string join_neighbors(const std::vector<Neighbor>& ns, bool distances) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (i) out += ' ';
    if (distances) {
      std::snprintf(buf, sizeof buf, "%.17g", ns[i].distance);
      out += buf;
    } else {
      out += std::to_string(ns[i].image_id);
    }
  }
  return out;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

KnnReport knn_report(const Experiment& ex, const captioner::Checkpoint& ck, const captioner::ReprMap& reprs,
                     int k, KnnReferences refs_mode, metrics::CiderVariant variant, int jobs) {
  const auto& train_ids = ex.splits.train;
  const auto& test_ids = ex.splits.test;
  if (test_ids.empty()) throw ValidationError("knn needs a non-empty test split");

  const auto raw_train = index_of(reprs, train_ids);
  const auto projected = project_all(ck.params, reprs, [&] {
    auto all = train_ids;
    all.insert(all.end(), test_ids.begin(), test_ids.end());
    return all;
  }());
  const auto proj_train = index_of(projected, train_ids);

  std::map<ImageId, metrics::TokenSeq> train_caps;
  if (refs_mode == KnnReferences::generated) train_caps = caption_images(ck, reprs, train_ids, jobs);
  const auto test_caps = caption_images(ck, reprs, test_ids, jobs);

  KnnReport report;
  report.k = k;
  report.references = refs_mode;
  std::map<ImageId, std::vector<metrics::TokenSeq>> nn_refs;
  std::vector<ImageId> exact, not_exact;
  for (auto id : test_ids) {
    KnnEntry e;
    e.image_id = id;
    e.raw = knn(*reprs.at(id), raw_train, k);
    e.projected = knn(*projected.at(id), proj_train, k);
    e.exact = std::all_of(e.raw.begin(), e.raw.end(), [](const Neighbor& n) { return n.distance == 0.0; });
    e.caption = test_caps.at(id);
    for (const auto& n : e.raw) {
      if (refs_mode == KnnReferences::generated) {
        e.references.push_back(train_caps.at(n.image_id));
      } else if (auto c = ex.captions.find(n.image_id); c != ex.captions.end()) {
        for (const auto& cap : c->second) e.references.push_back(metrics::tokenize(cap));
      }
    }
    if (e.references.empty()) throw ValidationError("no neighbour captions for image " + std::to_string(id));
    nn_refs[id] = e.references;
    (e.exact ? exact : not_exact).push_back(id);
    report.entries.push_back(std::move(e));
  }

  // One table over every test image, so subset rows are comparable with "all".
  const metrics::IdfTable idf(nn_refs);
  report.subsets.push_back(score_subset("all", test_ids, test_caps, nn_refs, idf, variant));
  if (!exact.empty()) report.subsets.push_back(score_subset("exact", exact, test_caps, nn_refs, idf, variant));
  if (!not_exact.empty()) report.subsets.push_back(score_subset("not_exact", not_exact, test_caps, nn_refs, idf, variant));
  return report;
}

const SubsetScores* KnnReport::subset(const std::string& name) const {
  for (const auto& s : subsets) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::string KnnReport::to_csv() const {
  std::ostringstream os;
  os << "image_id,exact,raw_neighbors,raw_distances,projected_neighbors,projected_distances,caption\n";
  for (const auto& e : entries) {
    os << e.image_id << ',' << (e.exact ? 1 : 0) << ',' << join_neighbors(e.raw, false) << ','
       << join_neighbors(e.raw, true) << ',' << join_neighbors(e.projected, false) << ','
       << join_neighbors(e.projected, true) << ',' << csv_quote(metrics::join_tokens(e.caption)) << '\n';
  }
  return os.str();
}

std::string KnnReport::to_markdown() const {
  std::ostringstream os;
  os << "| subset | images | B1 | B2 | B3 | B4 | ROUGE-L | CIDEr |\n";
  os << "|---|---|---|---|---|---|---|---|\n";
  char buf[256];
  for (const auto& s : subsets) {
    std::snprintf(buf, sizeof buf, "| %s | %zu | %.3f | %.3f | %.3f | %.3f | %.3f | %.3f |\n", s.name.c_str(), s.count,
                  s.bleu[0], s.bleu[1], s.bleu[2], s.bleu[3], s.rouge_l, s.cider);
    os << buf;
  }
  return os.str();
}

}  // namespace boocap::analysis
