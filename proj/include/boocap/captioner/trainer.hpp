#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "boocap/captioner/model.hpp"
#include "boocap/corpus/vocabulary.hpp"

namespace boocap::captioner {

using ReprMap = std::map<corpus::ImageId, std::shared_ptr<const std::vector<double>>>;

struct AdamState {
  long step = 0;
  Params m;
  Params v;

  bool operator==(const AdamState& o) const { return step == o.step && m == o.m && v == o.v; }
};

AdamState adam_init(const Params& p);
/// One bias-corrected Adam update; bumps the parameter revision.
void adam_update(Params& p, const Grads& g, AdamState& state, const HyperParams& hp);
/// Scales g to global norm `max_norm` when it is larger; returns the norm before.
double clip_global_norm(Grads& g, double max_norm);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;  // nats per predicted token, with dropout
  double val_loss = 0;    // nats per predicted token, no dropout; NaN without val captions
  double val_cider = 0;   // NaN without a validation set

  bool operator==(const EpochRecord&) const = default;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;  // 0 = initial parameters

  std::string to_json() const;
  static TrainLog from_json(std::string_view json);
  /// `epoch,split,loss,cider`
  std::string to_csv() const;
  bool operator==(const TrainLog& o) const;
};

struct Checkpoint {
  HyperParams hp;
  corpus::Vocabulary vocab;
  repr::SchemaPtr schema;
  Params params;
  AdamState adam;
  TrainLog log;
};

struct ValidationSet {
  std::vector<corpus::ImageId> ids;
  std::vector<std::shared_ptr<const std::vector<double>>> reprs;  // parallel to ids
  std::map<corpus::ImageId, std::vector<metrics::TokenSeq>> refs;
  std::vector<TrainExample> examples;  // for the validation loss

  bool empty() const { return ids.empty(); }
};

/// One example per (image, caption) in `ids` order. Images without a representation
/// raise ValidationError.
std::vector<TrainExample> make_examples(const ReprMap& reprs, const corpus::CaptionSet& captions,
                                        const std::vector<corpus::ImageId>& ids, const corpus::Vocabulary& vocab);
ValidationSet make_validation(const ReprMap& reprs, const corpus::CaptionSet& captions,
                              const std::vector<corpus::ImageId>& ids, const corpus::Vocabulary& vocab);

struct TrainOptions {
  int jobs = 1;
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Minibatch Adam for hp.max_epochs with seeded per-epoch shuffling. Returns the
/// epoch with the best validation CIDEr (ties keep the earlier epoch); without a
/// validation set the last epoch wins.
Checkpoint train(const std::vector<TrainExample>& data, const HyperParams& hp, const ValidationSet& val,
                 const corpus::Vocabulary& vocab, repr::SchemaPtr schema, const TrainOptions& options = {});

struct GridRun {
  HyperParams hp;
  double val_cider = 0;
  int best_epoch = 0;
};

struct GridResult {
  Checkpoint best;
  std::vector<GridRun> runs;
  std::size_t best_index = 0;
};

/// Trains every grid point and keeps the argmax of validation CIDEr (first wins ties).
GridResult train_grid(const std::vector<TrainExample>& data, const HyperParams& base, const GridSpec& grid,
                      const ValidationSet& val, const corpus::Vocabulary& vocab, repr::SchemaPtr schema,
                      const TrainOptions& options = {});

/// Mean teacher-forced loss per predicted token, no dropout.
double mean_token_loss(const Params& params, const HyperParams& hp, const std::vector<TrainExample>& data);

/// Validation CIDEr of the current parameters.
double validation_cider(const Params& params, const HyperParams& hp, const ValidationSet& val,
                        const corpus::Vocabulary& vocab, int jobs = 1);

std::vector<metrics::TokenSeq> decode_captions(const Checkpoint& ckpt,
                                               const std::vector<const std::vector<double>*>& vectors,
                                               int jobs = 1);

}  // namespace boocap::captioner
