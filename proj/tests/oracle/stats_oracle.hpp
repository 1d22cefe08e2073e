#pragma once
// Definitional rank correlations: ranks by counting, Kendall by enumerating pairs.

#include <cmath>
#include <vector>

namespace oracle {

inline std::vector<double> midranks(const std::vector<double>& xs) {
  std::vector<double> r;
  for (double x : xs) {
    int less = 0, equal = 0;
    for (double y : xs) {
      less += y < x;
      equal += y == x;
    }
    r.push_back(less + (equal + 1) / 2.0);
  }
  return r;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(midranks(x), midranks(y));
}

inline double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  long conc = 0, disc = 0, tx = 0, ty = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx == 0 && dy == 0) continue;
      if (dx == 0) {
        ++tx;
      } else if (dy == 0) {
        ++ty;
      } else if ((dx > 0) == (dy > 0)) {
        ++conc;
      } else {
        ++disc;
      }
    }
  }
  return (conc - disc) / std::sqrt(static_cast<double>(conc + disc + tx) * static_cast<double>(conc + disc + ty));
}

}  // namespace oracle
