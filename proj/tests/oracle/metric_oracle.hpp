#pragma once
// Brute-force caption metrics for equivalence tests. Vectors are dense over the
// sorted universe of every n-gram in the corpus; counts are linear scans.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace oracle {

using Tokens = std::vector<std::string>;
using Gram = std::vector<std::string>;

inline std::vector<Gram> grams(const Tokens& t, int n) {
  std::vector<Gram> out;
  for (int i = 0; i + n <= static_cast<int>(t.size()); ++i) out.emplace_back(t.begin() + i, t.begin() + i + n);
  return out;
}

inline int occurrences(const std::vector<Gram>& seq, const Gram& g) {
  return static_cast<int>(std::count(seq.begin(), seq.end(), g));
}

inline std::vector<double> bleu(const Tokens& cand, const std::vector<Tokens>& refs) {
  std::vector<double> out(4, 0.0);
  const double c = static_cast<double>(cand.size());
  if (cand.empty()) return out;
  double r = -1;
  double best = 1e300;
  for (const auto& ref : refs) {
    const double d = std::fabs(static_cast<double>(ref.size()) - c);
    if (d < best || (d == best && static_cast<double>(ref.size()) < r)) {
      best = d;
      r = static_cast<double>(ref.size());
    }
  }
  const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
  std::vector<double> prec;
  for (int n = 1; n <= 4; ++n) {
    const auto cg = grams(cand, n);
    if (cg.empty()) {
      prec.push_back(0);
      continue;
    }
    std::vector<Gram> uniq = cg;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    int clipped = 0;
    for (const auto& g : uniq) {
      int m = 0;
      for (const auto& ref : refs) m = std::max(m, occurrences(grams(ref, n), g));
      clipped += std::min(occurrences(cg, g), m);
    }
    prec.push_back(static_cast<double>(clipped) / static_cast<double>(cg.size()));
  }
  for (int n = 1; n <= 4; ++n) {
    double prod = 1;
    bool zero = false;
    for (int k = 0; k < n; ++k) {
      if (prec[k] == 0) zero = true;
      prod *= prec[k];
    }
    out[n - 1] = zero ? 0.0 : bp * std::pow(prod, 1.0 / n);
  }
  return out;
}

inline int lcs(const Tokens& a, const Tokens& b) {
  std::map<std::pair<std::size_t, std::size_t>, int> memo;
  std::function<int(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> int {
    if (i == a.size() || j == b.size()) return 0;
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    int v = a[i] == b[j] ? 1 + go(i + 1, j + 1) : std::max(go(i + 1, j), go(i, j + 1));
    memo[key] = v;
    return v;
  };
  return go(0, 0);
}

inline double rouge_l(const Tokens& cand, const std::vector<Tokens>& refs) {
  double best = 0;
  for (const auto& ref : refs) {
    const int l = lcs(cand, ref);
    if (l == 0) continue;
    const double p = static_cast<double>(l) / cand.size();
    const double r = static_cast<double>(l) / ref.size();
    best = std::max(best, (1 + 1.44) * p * r / (r + 1.44 * p));
  }
  return best;
}

/// Returns per-image scores in the iteration order of `cands`.
inline std::map<long, double> cider(const std::map<long, Tokens>& cands,
                                    const std::map<long, std::vector<Tokens>>& refs, bool cider_d) {
  std::map<long, double> out;
  const double docs = static_cast<double>(refs.size());
  for (const auto& [id, cand] : cands) {
    double total = 0;
    for (int n = 1; n <= 4; ++n) {
      std::vector<Gram> universe;
      for (const auto& [j, c] : cands) {
        for (auto& g : grams(c, n)) universe.push_back(g);
      }
      for (const auto& [j, rs] : refs) {
        for (const auto& r : rs) {
          for (auto& g : grams(r, n)) universe.push_back(g);
        }
      }
      std::sort(universe.begin(), universe.end());
      universe.erase(std::unique(universe.begin(), universe.end()), universe.end());
      std::vector<double> idf;
      for (const auto& g : universe) {
        int df = 0;
        for (const auto& [j, rs] : refs) {
          bool hit = false;
          for (const auto& r : rs) hit = hit || occurrences(grams(r, n), g) > 0;
          df += hit ? 1 : 0;
        }
        idf.push_back(std::log(docs / std::max(df, 1)));
      }
      auto vec = [&](const Tokens& t) {
        const auto gs = grams(t, n);
        std::vector<double> v;
        for (std::size_t k = 0; k < universe.size(); ++k) v.push_back(occurrences(gs, universe[k]) * idf[k]);
        return v;
      };
      auto norm = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x * x;
        return std::sqrt(s);
      };
      const auto vc = vec(cand);
      const double nc = norm(vc);
      double acc = 0;
      const auto& rs = refs.at(id);
      for (const auto& r : rs) {
        const auto vr = vec(r);
        const double nr = norm(vr);
        if (nc == 0 || nr == 0) continue;
        double dot = 0;
        for (std::size_t k = 0; k < vc.size(); ++k) dot += cider_d ? std::min(vc[k], vr[k]) * vr[k] : vc[k] * vr[k];
        double sim = dot / (nc * nr);
        if (cider_d) {
          const double delta = static_cast<double>(cand.size()) - static_cast<double>(r.size());
          sim *= std::exp(-delta * delta / 72.0);
        }
        acc += sim;
      }
      total += acc / static_cast<double>(rs.size());
    }
    out[id] = 10.0 * total / 4.0;
  }
  return out;
}

}  // namespace oracle
