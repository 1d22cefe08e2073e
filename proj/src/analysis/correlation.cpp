#include "boocap/analysis/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

#include <boost/math/distributions/students_t.hpp>

#include "boocap/error.hpp"

namespace boocap::analysis {

namespace {

void check_inputs(const std::vector<double>& xs, const std::vector<double>& ys, const char* what) {
  if (xs.size() != ys.size()) {
    throw ValidationError(std::string(what) + ": series lengths differ (" + std::to_string(xs.size()) + " vs " +
                          std::to_string(ys.size()) + ")");
  }
  if (xs.size() < 3) throw ValidationError(std::string(what) + ": needs at least 3 pairs");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
      throw ValidationError(std::string(what) + ": non-finite value at index " + std::to_string(i));
    }
  }
  auto constant = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
  };
  if (constant(xs) || constant(ys)) throw ValidationError(std::string(what) + ": undefined for a constant series");
}

// Sum over groups of equal adjacent values of t(t-1)/2, for a sorted range.
template <typename Eq>
std::int64_t tied_pairs(std::size_t n, Eq eq) {
  std::int64_t pairs = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && eq(i, j)) ++j;
    const auto t = static_cast<std::int64_t>(j - i);
    pairs += t * (t - 1) / 2;
    i = j;
  }
  return pairs;
}

// Counts strict inversions while merge-sorting `v`.
std::int64_t sort_count_inversions(std::vector<double>& v) {
  std::vector<double> buf(v.size());
  std::int64_t inversions = 0;
  for (std::size_t width = 1; width < v.size(); width *= 2) {
    for (std::size_t lo = 0; lo < v.size(); lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, v.size());
      const std::size_t hi = std::min(lo + 2 * width, v.size());
      std::size_t a = lo, b = mid, k = lo;
      while (a < mid && b < hi) {
        if (v[a] <= v[b]) {
          buf[k++] = v[a++];
        } else {
          inversions += static_cast<std::int64_t>(mid - a);
          buf[k++] = v[b++];
        }
      }
      while (a < mid) buf[k++] = v[a++];
      while (b < hi) buf[k++] = v[b++];
    }
    v.swap(buf);
  }
  return inversions;
}

// Sum of t(t-1)(2t+5), t(t-1) and t(t-1)(t-2) over tie groups of a sorted vector.
struct TieSums {
  double v = 0, t1 = 0, t2 = 0;
};

TieSums tie_sums(const std::vector<double>& sorted) {
  TieSums s;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    s.v += t * (t - 1) * (2 * t + 5);
    s.t1 += t * (t - 1);
    s.t2 += t * (t - 1) * (t - 2);
    i = j;
  }
  return s;
}

}  // namespace

std::vector<double> midranks(const std::vector<double>& xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && xs[order[j]] == xs[order[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

Correlation spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  check_inputs(xs, ys, "spearman");
  const auto rx = midranks(xs);
  const auto ry = midranks(ys);
  const double n = static_cast<double>(xs.size());
  const double mean = (n + 1) / 2.0;  // mid-ranks always average to (n+1)/2
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double a = rx[i] - mean;
    const double b = ry[i] - mean;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  Correlation out;
  out.n = xs.size();
  out.coefficient = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = n - 2;
  const double r2 = out.coefficient * out.coefficient;
  if (r2 >= 1.0) {
    out.p_value = 0.0;
  } else {
    const double t = std::abs(out.coefficient) * std::sqrt(df / (1 - r2));
    boost::math::students_t dist(df);
    out.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, t)));
  }
  return out;
}

Correlation kendall(const std::vector<double>& xs, const std::vector<double>& ys) {
  check_inputs(xs, ys, "kendall");
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return xs[a] != xs[b] ? xs[a] < xs[b] : ys[a] < ys[b];
  });
  std::vector<double> sx(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    sx[i] = xs[order[i]];
    y[i] = ys[order[i]];
  }
  const std::int64_t n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t n1 = tied_pairs(n, [&](std::size_t i, std::size_t j) { return sx[j] == sx[i]; });
  const std::int64_t n3 =
      tied_pairs(n, [&](std::size_t i, std::size_t j) { return sx[j] == sx[i] && y[j] == y[i]; });
  const std::int64_t discordant = sort_count_inversions(y);
  const std::int64_t n2 = tied_pairs(n, [&](std::size_t i, std::size_t j) { return y[j] == y[i]; });
  const std::int64_t s = n0 - n1 - n2 + n3 - 2 * discordant;  // concordant - discordant

  Correlation out;
  out.n = n;
  out.coefficient =
      std::clamp(static_cast<double>(s) / std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2)),
                 -1.0, 1.0);

  const auto tx = tie_sums(sx);
  const auto ty = tie_sums(y);
  const double nd = static_cast<double>(n);
  const double var = (nd * (nd - 1) * (2 * nd + 5) - tx.v - ty.v) / 18.0 +
                     tx.t1 * ty.t1 / (2 * nd * (nd - 1)) +
                     tx.t2 * ty.t2 / (9 * nd * (nd - 1) * (nd - 2));
  const double z = std::max(std::abs(static_cast<double>(s)) - 1.0, 0.0) / std::sqrt(var);
  out.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return out;
}

}  // namespace boocap::analysis
