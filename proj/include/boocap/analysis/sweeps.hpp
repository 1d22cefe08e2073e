#pragma once

#include <functional>
#include <string>
#include <vector>

#include "boocap/analysis/correlation.hpp"
#include "boocap/analysis/experiment.hpp"
#include "boocap/analysis/stats.hpp"

namespace boocap::analysis {

struct AblationRow {
  int category_id = 0;
  std::string name;
  double cider = 0;  // test CIDEr without the category
  double delta = 0;  // cider - baseline
};

struct AblationReport {
  double baseline_cider = 0;
  std::vector<AblationRow> rows;

  /// `category_id,name,cider,delta`
  std::string to_csv() const;
};

/// Test CIDEr of a model trained with `spec` (no ablation).
double baseline_cider(const Experiment& ex, const repr::ReprSpec& spec, const TrainSettings& settings,
                      metrics::CiderVariant variant);

/// Deletes each category in turn (all categories when `category_ids` is empty),
/// retrains with identical settings and records the change in test CIDEr.
/// Categories run on `settings.jobs` threads, each training single-threaded.
AblationReport ablation_sweep(const Experiment& ex, const repr::ReprSpec& spec, const TrainSettings& settings,
                              double baseline, metrics::CiderVariant variant,
                              const std::vector<int>& category_ids = {},
                              const std::function<void(const AblationRow&)>& progress = {});

struct CorrelationRow {
  std::string statistic;  // f_v or p_t_given_v
  Correlation spearman;
  Correlation kendall;
};

/// Correlates the CIDEr drop (baseline - ablated) with f(v_c) and p(t_c|v_c) over
/// the categories that are depicted in training.
std::vector<CorrelationRow> correlate_ablation(const AblationReport& report, const CategoryStats& stats);
std::string correlation_csv(const std::vector<CorrelationRow>& rows);
std::string correlation_markdown(const std::vector<CorrelationRow>& rows);

struct MaskSweepRow {
  repr::MaskHeuristic heuristic = repr::MaskHeuristic::random;
  repr::Retention retention;
  std::uint64_t seed = 0;
  double cider = 0;
};

/// Evaluates a frequency-trained checkpoint on masked test representations.
std::vector<MaskSweepRow> mask_sweep(const Experiment& ex, const captioner::Checkpoint& ck,
                                     const std::vector<repr::MaskHeuristic>& heuristics,
                                     const std::vector<repr::Retention>& retentions,
                                     const std::vector<std::uint64_t>& seeds, metrics::CiderVariant variant,
                                     int jobs = 1);
/// `heuristic,retention,seed,cider`
std::string mask_sweep_csv(const std::vector<MaskSweepRow>& rows);

}  // namespace boocap::analysis
