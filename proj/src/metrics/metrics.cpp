#include "boocap/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>

#include <json.hpp>

#include "boocap/error.hpp"

namespace boocap::metrics {

namespace {

constexpr double kRougeBeta = 1.2;
constexpr double kCiderSigma = 6.0;

NGram gram_at(const TokenSeq& tokens, std::size_t start, int n) {
  NGram g = tokens[start];
  for (int k = 1; k < n; ++k) {
    g.push_back(' ');
    g += tokens[start + static_cast<std::size_t>(k)];
  }
  return g;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

NGramProfile NGramProfile::of(const TokenSeq& tokens) {
  NGramProfile p;
  p.length = static_cast<int>(tokens.size());
  for (int n = 1; n <= kMaxN; ++n) {
    for (int i = 0; i + n <= p.length; ++i) ++p.counts[n - 1][gram_at(tokens, static_cast<std::size_t>(i), n)];
  }
  return p;
}

IdfTable::IdfTable(const std::map<ImageId, std::vector<TokenSeq>>& references) : documents_(references.size()) {
  for (const auto& [id, refs] : references) {
    std::array<std::set<NGram>, kMaxN> seen;
    for (const auto& r : refs) {
      const auto p = NGramProfile::of(r);
      for (int n = 0; n < kMaxN; ++n) {
        for (const auto& [g, c] : p.counts[n]) seen[n].insert(g);
      }
    }
    for (int n = 0; n < kMaxN; ++n) {
      for (const auto& g : seen[n]) ++df_[n][g];
    }
  }
}

double IdfTable::idf(int n, const NGram& gram) const {
  const auto& m = df_.at(static_cast<std::size_t>(n - 1));
  auto it = m.find(gram);
  const double df = it == m.end() ? 1.0 : std::max(1, it->second);
  return std::log(static_cast<double>(documents_) / df);
}

std::string_view to_string(CiderVariant v) { return v == CiderVariant::cider ? "cider" : "cider_d"; }

CiderVariant parse_cider_variant(std::string_view text) {
  if (text == "cider") return CiderVariant::cider;
  if (text == "cider_d" || text == "cider-d") return CiderVariant::cider_d;
  throw ConfigError("unknown CIDEr variant '" + std::string(text) + "'");
}

// --- BLEU ------------------------------------------------------------------------

namespace {

struct BleuStats {
  std::array<double, kMaxN> matched{};
  std::array<double, kMaxN> total{};
  double cand_len = 0;
  double ref_len = 0;
};

BleuStats bleu_stats(const TokenSeq& candidate, const std::vector<TokenSeq>& refs) {
  BleuStats s;
  s.cand_len = static_cast<double>(candidate.size());
  const auto cp = NGramProfile::of(candidate);
  std::vector<NGramProfile> rp;
  rp.reserve(refs.size());
  for (const auto& r : refs) rp.push_back(NGramProfile::of(r));

  // Closest reference length, ties to the shorter one.
  long best_diff = -1;
  long best_len = 0;
  for (const auto& r : refs) {
    const long len = static_cast<long>(r.size());
    const long diff = std::labs(len - static_cast<long>(candidate.size()));
    if (best_diff < 0 || diff < best_diff || (diff == best_diff && len < best_len)) {
      best_diff = diff;
      best_len = len;
    }
  }
  s.ref_len = static_cast<double>(best_len);

  for (int n = 0; n < kMaxN; ++n) {
    s.total[n] = cp.slots(n + 1);
    for (const auto& [g, c] : cp.counts[n]) {
      int max_ref = 0;
      for (const auto& p : rp) {
        auto it = p.counts[n].find(g);
        if (it != p.counts[n].end()) max_ref = std::max(max_ref, it->second);
      }
      s.matched[n] += std::min(c, max_ref);
    }
  }
  return s;
}

std::array<double, kMaxN> combine(const BleuStats& s) {
  std::array<double, kMaxN> out{};
  if (s.cand_len <= 0) return out;
  const double bp = s.cand_len >= s.ref_len ? 1.0 : std::exp(1.0 - s.ref_len / s.cand_len);
  double log_sum = 0;
  for (int n = 0; n < kMaxN; ++n) {
    if (s.total[n] <= 0 || s.matched[n] <= 0) {
      // A zero precision zeroes this and every higher order.
      break;
    }
    log_sum += std::log(s.matched[n] / s.total[n]);
    out[n] = bp * std::exp(log_sum / (n + 1));
  }
  return out;
}

}  // namespace

std::array<double, kMaxN> bleu(const TokenSeq& candidate, const std::vector<TokenSeq>& refs) {
  if (refs.empty()) throw ValidationError("BLEU needs at least one reference");
  return combine(bleu_stats(candidate, refs));
}

std::array<double, kMaxN> corpus_bleu(const std::map<ImageId, TokenSeq>& candidates,
                                      const std::map<ImageId, std::vector<TokenSeq>>& refs) {
  BleuStats sum;
  for (const auto& [id, cand] : candidates) {
    auto it = refs.find(id);
    if (it == refs.end() || it->second.empty()) {
      throw ValidationError("no references for image " + std::to_string(id));
    }
    const auto s = bleu_stats(cand, it->second);
    for (int n = 0; n < kMaxN; ++n) {
      sum.matched[n] += s.matched[n];
      sum.total[n] += s.total[n];
    }
    sum.cand_len += s.cand_len;
    sum.ref_len += s.ref_len;
  }
  return combine(sum);
}

// --- ROUGE-L -------------------------------------------------------------------------

namespace {

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

double rouge_l(const TokenSeq& candidate, const std::vector<TokenSeq>& refs) {
  double best = 0;
  for (const auto& r : refs) {
    const auto l = static_cast<double>(lcs_length(candidate, r));
    if (l == 0) continue;
    const double p = l / static_cast<double>(candidate.size());
    const double rec = l / static_cast<double>(r.size());
    const double b2 = kRougeBeta * kRougeBeta;
    best = std::max(best, (1 + b2) * p * rec / (rec + b2 * p));
  }
  return best;
}

// --- CIDEr ---------------------------------------------------------------------------

namespace {

struct TfIdf {
  std::array<std::map<NGram, double>, kMaxN> vec;
  std::array<double, kMaxN> norm{};
  int length = 0;
};

TfIdf tfidf(const TokenSeq& tokens, const IdfTable& idf) {
  TfIdf out;
  const auto p = NGramProfile::of(tokens);
  out.length = p.length;
  for (int n = 0; n < kMaxN; ++n) {
    double sq = 0;
    for (const auto& [g, c] : p.counts[n]) {
      const double w = c * idf.idf(n + 1, g);
      out.vec[n].emplace(g, w);
      sq += w * w;
    }
    out.norm[n] = std::sqrt(sq);
  }
  return out;
}

double similarity(const TfIdf& c, const TfIdf& r, int n, CiderVariant variant) {
  if (c.norm[n] == 0 || r.norm[n] == 0) return 0;
  double dot = 0;
  for (const auto& [g, w] : c.vec[n]) {
    auto it = r.vec[n].find(g);
    if (it == r.vec[n].end()) continue;
    dot += variant == CiderVariant::cider_d ? std::min(w, it->second) * it->second : w * it->second;
  }
  double sim = dot / (c.norm[n] * r.norm[n]);
  if (variant == CiderVariant::cider_d) {
    const double delta = c.length - r.length;
    sim *= std::exp(-(delta * delta) / (2 * kCiderSigma * kCiderSigma));
  }
  return sim;
}

}  // namespace

double cider_image(const TokenSeq& candidate, const std::vector<TokenSeq>& refs, const IdfTable& idf,
                   CiderVariant variant) {
  if (refs.empty()) throw ValidationError("CIDEr needs at least one reference");
  const auto c = tfidf(candidate, idf);
  std::array<double, kMaxN> per_n{};
  for (const auto& ref : refs) {
    const auto r = tfidf(ref, idf);
    for (int n = 0; n < kMaxN; ++n) per_n[n] += similarity(c, r, n, variant);
  }
  double total = 0;
  for (int n = 0; n < kMaxN; ++n) total += per_n[n] / static_cast<double>(refs.size());
  return 10.0 * total / kMaxN;
}

CiderResult cider(const std::map<ImageId, TokenSeq>& candidates,
                  const std::map<ImageId, std::vector<TokenSeq>>& refs, CiderVariant variant) {
  const IdfTable idf(refs);
  CiderResult out;
  for (const auto& [id, r] : refs) {
    if (r.empty()) throw ValidationError("no references for image " + std::to_string(id));
    auto it = candidates.find(id);
    if (it == candidates.end()) throw ValidationError("no candidate for image " + std::to_string(id));
    out.per_image[id] = cider_image(it->second, r, idf, variant);
  }
  for (const auto& [id, c] : candidates) {
    if (!refs.contains(id)) throw ValidationError("no references for image " + std::to_string(id));
  }
  double sum = 0;
  for (const auto& [id, s] : out.per_image) sum += s;
  out.mean = out.per_image.empty() ? 0 : sum / static_cast<double>(out.per_image.size());
  return out;
}

// --- reports ---------------------------------------------------------------------------

EvalReport evaluate_tokens(const std::map<ImageId, TokenSeq>& generated,
                           const std::map<ImageId, std::vector<TokenSeq>>& references,
                           const std::vector<ImageId>& ids, CiderVariant variant, const IdfTable* idf) {
  if (ids.empty()) throw ValidationError("no images to evaluate");
  std::vector<ImageId> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ValidationError("duplicate image ids in evaluation set");
  }
  std::string missing;
  std::map<ImageId, TokenSeq> cands;
  std::map<ImageId, std::vector<TokenSeq>> refs;
  for (ImageId id : sorted) {
    auto g = generated.find(id);
    if (g == generated.end()) {
      missing += (missing.empty() ? "" : ",") + std::to_string(id);
      continue;
    }
    auto r = references.find(id);
    if (r == references.end() || r->second.empty()) {
      throw ValidationError("no references for image " + std::to_string(id));
    }
    cands.emplace(id, g->second);
    refs.emplace(id, r->second);
  }
  if (!missing.empty()) throw ValidationError("missing generated captions for images " + missing);

  const IdfTable own = idf ? IdfTable() : IdfTable(refs);
  const IdfTable& table = idf ? *idf : own;

  EvalReport rep;
  rep.variant = variant;
  for (ImageId id : sorted) {
    ImageScores s;
    s.image_id = id;
    s.bleu = bleu(cands[id], refs[id]);
    s.rouge_l = rouge_l(cands[id], refs[id]);
    s.cider = cider_image(cands[id], refs[id], table, variant);
    rep.images.push_back(s);
  }
  const auto n = static_cast<double>(rep.images.size());
  for (const auto& s : rep.images) {
    for (int k = 0; k < kMaxN; ++k) rep.mean_bleu[k] += s.bleu[k];
    rep.mean_rouge_l += s.rouge_l;
    rep.mean_cider += s.cider;
  }
  for (int k = 0; k < kMaxN; ++k) rep.mean_bleu[k] /= n;
  rep.mean_rouge_l /= n;
  rep.mean_cider /= n;
  rep.corpus_bleu = corpus_bleu(cands, refs);
  return rep;
}

EvalReport evaluate(const std::map<ImageId, std::string>& generated, const corpus::CaptionSet& references,
                    const std::vector<ImageId>& ids, CiderVariant variant) {
  std::map<ImageId, TokenSeq> cands;
  std::map<ImageId, std::vector<TokenSeq>> refs;
  for (ImageId id : ids) {
    if (auto g = generated.find(id); g != generated.end()) cands[id] = tokenize(g->second);
    if (auto r = references.find(id); r != references.end()) {
      auto& out = refs[id];
      for (const auto& c : r->second) out.push_back(tokenize(c));
    }
  }
  return evaluate_tokens(cands, refs, ids, variant);
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["variant"] = std::string(metrics::to_string(variant));
  j["count"] = images.size();
  nlohmann::ordered_json mean;
  for (int k = 0; k < kMaxN; ++k) mean["b" + std::to_string(k + 1)] = mean_bleu[k];
  mean["rouge_l"] = mean_rouge_l;
  mean["cider"] = mean_cider;
  j["mean"] = mean;
  nlohmann::ordered_json corpus;
  for (int k = 0; k < kMaxN; ++k) corpus["b" + std::to_string(k + 1)] = corpus_bleu[k];
  j["corpus_bleu"] = corpus;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& s : images) {
    nlohmann::ordered_json r;
    r["image_id"] = s.image_id;
    for (int k = 0; k < kMaxN; ++k) r["b" + std::to_string(k + 1)] = s.bleu[k];
    r["rouge_l"] = s.rouge_l;
    r["cider"] = s.cider;
    rows.push_back(r);
  }
  j["images"] = rows;
  return j.dump(2) + "\n";
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "image_id,b1,b2,b3,b4,rouge_l,cider\n";
  for (const auto& s : images) {
    out << s.image_id;
    for (double b : s.bleu) out << ',' << fmt(b);
    out << ',' << fmt(s.rouge_l) << ',' << fmt(s.cider) << '\n';
  }
  return out.str();
}

}  // namespace boocap::metrics
