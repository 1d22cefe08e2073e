#pragma once

#include <optional>
#include <string>
#include <vector>

#include "boocap/analysis/experiment.hpp"

namespace boocap::analysis {

struct Neighbor {
  ImageId image_id = 0;
  double distance = 0;
};

using IndexedVectors = std::vector<std::pair<ImageId, const std::vector<double>*>>;

/// k nearest by Euclidean distance; ties by ascending image id.
std::vector<Neighbor> knn(const std::vector<double>& query, const IndexedVectors& train, int k);

/// x = ELU(W v) for every vector, for neighbour search in the projection space.
captioner::ReprMap project_all(const captioner::Params& params, const captioner::ReprMap& reprs,
                               const std::vector<ImageId>& ids);

enum class KnnReferences { generated, ground_truth };

struct KnnEntry {
  ImageId image_id = 0;
  std::vector<Neighbor> raw;
  std::vector<Neighbor> projected;
  bool exact = false;  // all k raw distances are zero
  metrics::TokenSeq caption;
  std::vector<metrics::TokenSeq> references;  // neighbours' captions
};

struct SubsetScores {
  std::string name;  // all, exact, not_exact
  std::size_t count = 0;
  std::array<double, metrics::kMaxN> bleu{};
  double rouge_l = 0;
  double cider = 0;
};

struct KnnReport {
  int k = 5;
  KnnReferences references = KnnReferences::generated;
  std::vector<KnnEntry> entries;
  /// Always "all"; "exact" and "not_exact" only when non-empty.
  std::vector<SubsetScores> subsets;

  const SubsetScores* subset(const std::string& name) const;
  /// `image_id,exact,raw_neighbors,raw_distances,projected_neighbors,projected_distances,caption`
  std::string to_csv() const;
  std::string to_markdown() const;
};

/// Captions every training and test image with the checkpoint, finds the k raw and
/// projected neighbours of each test image among the training images, and scores
/// each test caption against its raw neighbours' captions. One idf table built from
/// the neighbour references of all test images serves every subset.
KnnReport knn_report(const Experiment& ex, const captioner::Checkpoint& ck, const captioner::ReprMap& reprs,
                     int k = 5, KnnReferences refs = KnnReferences::generated,
                     metrics::CiderVariant variant = metrics::CiderVariant::cider_d, int jobs = 1);

}  // namespace boocap::analysis
