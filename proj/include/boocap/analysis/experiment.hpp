#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "boocap/captioner/trainer.hpp"
#include "boocap/corpus/corpus.hpp"
#include "boocap/corpus/vocabulary.hpp"
#include "boocap/metrics/metrics.hpp"
#include "boocap/repr/repr.hpp"

namespace boocap::analysis {

using corpus::ImageId;

/// A corpus split for one experiment, with the vocabulary of its training captions.
struct Experiment {
  std::shared_ptr<const corpus::CategoryTable> categories;
  std::vector<corpus::Scene> scenes;
  corpus::CaptionSet captions;
  corpus::Splits splits;
  corpus::Vocabulary vocab;

  /// Validates the splits against the scenes and builds the vocabulary.
  static Experiment make(corpus::CategoryTable categories, std::vector<corpus::Scene> scenes,
                         corpus::CaptionSet captions, corpus::Splits splits, int vocab_threshold);

  const corpus::Scene& scene(ImageId id) const;

 private:
  std::map<ImageId, std::size_t> index_;
};

/// Representations of every scene under `schema`.
captioner::ReprMap build_reprs(const Experiment& ex, const repr::ReprSpec& spec, const repr::SchemaPtr& schema);

enum class TrainMode { fixed, grid };

struct TrainSettings {
  captioner::HyperParams hp;
  TrainMode mode = TrainMode::fixed;
  captioner::GridSpec grid;
  int jobs = 1;
  std::function<void(const captioner::EpochRecord&)> on_epoch;
};

/// Trains on the train split, selecting on the val split. "fixed" trains `hp` as
/// given, "grid" searches `grid` around it.
captioner::Checkpoint train_model(const Experiment& ex, const captioner::ReprMap& reprs,
                                  const repr::SchemaPtr& schema, const TrainSettings& settings);

/// Greedy captions for `ids`.
std::map<ImageId, metrics::TokenSeq> caption_images(const captioner::Checkpoint& ck, const captioner::ReprMap& reprs,
                                                    const std::vector<ImageId>& ids, int jobs = 1);

/// Scores captions against the experiment's references of `ids`.
metrics::EvalReport evaluate_captions(const Experiment& ex, const std::map<ImageId, metrics::TokenSeq>& captions,
                                      const std::vector<ImageId>& ids, metrics::CiderVariant variant);

}  // namespace boocap::analysis
