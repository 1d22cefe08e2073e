#include "boocap/analysis/sweeps.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "boocap/error.hpp"

namespace boocap::analysis {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double test_cider(const Experiment& ex, const repr::ReprSpec& spec, const repr::SchemaPtr& schema,
                  const TrainSettings& settings, metrics::CiderVariant variant) {
  const auto reprs = build_reprs(ex, spec, schema);
  const auto ck = train_model(ex, reprs, schema, settings);
  const auto caps = caption_images(ck, reprs, ex.splits.test, settings.jobs);
  return evaluate_captions(ex, caps, ex.splits.test, variant).mean_cider;
}

// Runs f(i) for i in [0, n) on up to `jobs` threads; rethrows the first failure.
template <typename F>
void parallel_for(std::size_t n, int jobs, F f) {
  const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

double baseline_cider(const Experiment& ex, const repr::ReprSpec& spec, const TrainSettings& settings,
                      metrics::CiderVariant variant) {
  return test_cider(ex, spec, spec.schema(ex.categories), settings, variant);
}

AblationReport ablation_sweep(const Experiment& ex, const repr::ReprSpec& spec, const TrainSettings& settings,
                              double baseline, metrics::CiderVariant variant, const std::vector<int>& category_ids,
                              const std::function<void(const AblationRow&)>& progress) {
  std::vector<int> ids = category_ids;
  if (ids.empty()) {
    for (const auto& c : ex.categories->entries()) ids.push_back(c.id);
  }
  AblationReport report;
  report.baseline_cider = baseline;
  report.rows.resize(ids.size());
  std::mutex progress_mutex;
  TrainSettings inner = settings;
  inner.jobs = 1;
  inner.on_epoch = nullptr;
  parallel_for(ids.size(), settings.jobs, [&](std::size_t i) {
    const auto pos = ex.categories->position_of(ids[i]);
    AblationRow row;
    row.category_id = ids[i];
    row.name = (*ex.categories)[pos].name;
    row.cider = test_cider(ex, spec, spec.schema(ex.categories, {ids[i]}), inner, variant);
    row.delta = row.cider - baseline;
    report.rows[i] = row;
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress(row);
    }
  });
  return report;
}

std::string AblationReport::to_csv() const {
  std::ostringstream os;
  os << "category_id,name,cider,delta\n";
  for (const auto& r : rows) os << r.category_id << ',' << r.name << ',' << fmt(r.cider) << ',' << fmt(r.delta) << '\n';
  return os.str();
}

std::vector<CorrelationRow> correlate_ablation(const AblationReport& report, const CategoryStats& stats) {
  std::vector<double> drop, fv, pm;
  for (const auto& r : report.rows) {
    const CategoryStat* st = nullptr;
    for (const auto& s : stats.rows) {
      if (s.category_id == r.category_id) st = &s;
    }
    if (!st) throw ValidationError("no statistics for category " + std::to_string(r.category_id));
    if (!st->p_mention) continue;  // never depicted in training
    drop.push_back(report.baseline_cider - r.cider);
    fv.push_back(static_cast<double>(st->depicted));
    pm.push_back(*st->p_mention);
  }
  return {{"f_v", spearman(fv, drop), kendall(fv, drop)},
          {"p_t_given_v", spearman(pm, drop), kendall(pm, drop)}};
}

std::string correlation_csv(const std::vector<CorrelationRow>& rows) {
  std::ostringstream os;
  os << "statistic,n,spearman_rho,spearman_p,kendall_tau,kendall_p\n";
  for (const auto& r : rows) {
    os << r.statistic << ',' << r.spearman.n << ',' << fmt(r.spearman.coefficient) << ',' << fmt(r.spearman.p_value)
       << ',' << fmt(r.kendall.coefficient) << ',' << fmt(r.kendall.p_value) << '\n';
  }
  return os.str();
}

std::string correlation_markdown(const std::vector<CorrelationRow>& rows) {
  std::ostringstream os;
  os << "| | f(v_c) | p(t_c\\|v_c) |\n|---|---|---|\n";
  char buf[128];
  auto cell = [&](const Correlation& c) {
    std::snprintf(buf, sizeof buf, "%.3f (p=%.3f)", c.coefficient, c.p_value);
    return std::string(buf);
  };
  const CorrelationRow* f = nullptr;
  const CorrelationRow* p = nullptr;
  for (const auto& r : rows) (r.statistic == "f_v" ? f : p) = &r;
  if (f && p) {
    os << "| Spearman rho | " << cell(f->spearman) << " | " << cell(p->spearman) << " |\n";
    os << "| Kendall tau | " << cell(f->kendall) << " | " << cell(p->kendall) << " |\n";
  }
  return os.str();
}

std::vector<MaskSweepRow> mask_sweep(const Experiment& ex, const captioner::Checkpoint& ck,
                                     const std::vector<repr::MaskHeuristic>& heuristics,
                                     const std::vector<repr::Retention>& retentions,
                                     const std::vector<std::uint64_t>& seeds, metrics::CiderVariant variant,
                                     int jobs) {
  if (!ck.schema || ck.schema->kind != repr::ReprKind::frequency) {
    throw ConfigError("mask sweep needs a checkpoint trained on the frequency representation");
  }
  if (seeds.empty()) throw ConfigError("mask sweep needs at least one seed");
  const auto& ids = ex.splits.test;
  std::map<ImageId, repr::ReprVector> freq;
  for (auto id : ids) freq.emplace(id, repr::frequency_vector(ex.scene(id), ck.schema));

  auto score = [&](repr::MaskHeuristic h, repr::Retention r, std::uint64_t seed) {
    captioner::ReprMap masked;
    for (auto id : ids) {
      masked.emplace(id, std::make_shared<const std::vector<double>>(
                             repr::mask_vector(ex.scene(id), freq.at(id), h, r, seed).values));
    }
    return evaluate_captions(ex, caption_images(ck, masked, ids, jobs), ids, variant).mean_cider;
  };

  std::vector<MaskSweepRow> rows;
  for (auto h : heuristics) {
    for (const auto& r : retentions) {
      // Only the random heuristic reads the seed.
      const double fixed = h == repr::MaskHeuristic::random ? 0.0 : score(h, r, seeds.front());
      for (auto seed : seeds) {
        rows.push_back({h, r, seed, h == repr::MaskHeuristic::random ? score(h, r, seed) : fixed});
      }
    }
  }
  return rows;
}

std::string mask_sweep_csv(const std::vector<MaskSweepRow>& rows) {
  std::ostringstream os;
  os << "heuristic,retention,seed,cider\n";
  for (const auto& r : rows) {
    os << repr::to_string(r.heuristic) << ',' << r.retention.label() << ',' << r.seed << ',' << fmt(r.cider) << '\n';
  }
  return os.str();
}

}  // namespace boocap::analysis
