#include "boocap/analysis/experiment.hpp"

#include "boocap/error.hpp"

namespace boocap::analysis {

Experiment Experiment::make(corpus::CategoryTable categories, std::vector<corpus::Scene> scenes,
                            corpus::CaptionSet captions, corpus::Splits splits, int vocab_threshold) {
  Experiment ex;
  ex.categories = std::make_shared<const corpus::CategoryTable>(std::move(categories));
  ex.scenes = std::move(scenes);
  for (std::size_t i = 0; i < ex.scenes.size(); ++i) {
    if (!ex.index_.emplace(ex.scenes[i].image_id, i).second)
      throw ValidationError("duplicate scene for image " + std::to_string(ex.scenes[i].image_id));
  }
  corpus::validate_splits(splits);
  for (const auto* part : {&splits.train, &splits.val, &splits.test}) {
    for (auto id : *part) {
      if (!ex.index_.contains(id)) throw ValidationError("split lists unknown image " + std::to_string(id));
    }
  }
  ex.captions = std::move(captions);
  ex.splits = std::move(splits);
  ex.vocab = corpus::build_vocabulary(ex.captions, ex.splits.train, vocab_threshold);
  return ex;
}

const corpus::Scene& Experiment::scene(ImageId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw ValidationError("no scene for image " + std::to_string(id));
  return scenes[it->second];
}

captioner::ReprMap build_reprs(const Experiment& ex, const repr::ReprSpec& spec, const repr::SchemaPtr& schema) {
  captioner::ReprMap out;
  for (const auto& s : ex.scenes) {
    out.emplace(s.image_id, std::make_shared<const std::vector<double>>(spec.build(s, schema).values));
  }
  return out;
}

captioner::Checkpoint train_model(const Experiment& ex, const captioner::ReprMap& reprs,
                                  const repr::SchemaPtr& schema, const TrainSettings& settings) {
  const auto data = captioner::make_examples(reprs, ex.captions, ex.splits.train, ex.vocab);
  const auto val = captioner::make_validation(reprs, ex.captions, ex.splits.val, ex.vocab);
  captioner::TrainOptions opts{settings.jobs, settings.on_epoch};
  if (settings.mode == TrainMode::grid) {
    return captioner::train_grid(data, settings.hp, settings.grid, val, ex.vocab, schema, opts).best;
  }
  return captioner::train(data, settings.hp, val, ex.vocab, schema, opts);
}

std::map<ImageId, metrics::TokenSeq> caption_images(const captioner::Checkpoint& ck, const captioner::ReprMap& reprs,
                                                    const std::vector<ImageId>& ids, int jobs) {
  std::vector<const std::vector<double>*> vecs;
  vecs.reserve(ids.size());
  for (auto id : ids) {
    auto it = reprs.find(id);
    if (it == reprs.end()) throw ValidationError("no representation for image " + std::to_string(id));
    vecs.push_back(it->second.get());
  }
  const auto caps = captioner::decode_captions(ck, vecs, jobs);
  std::map<ImageId, metrics::TokenSeq> out;
  for (std::size_t i = 0; i < ids.size(); ++i) out[ids[i]] = caps[i];
  return out;
}

metrics::EvalReport evaluate_captions(const Experiment& ex, const std::map<ImageId, metrics::TokenSeq>& captions,
                                      const std::vector<ImageId>& ids, metrics::CiderVariant variant) {
  std::map<ImageId, std::vector<metrics::TokenSeq>> refs;
  for (auto id : ids) {
    auto it = ex.captions.find(id);
    if (it == ex.captions.end()) continue;
    auto& r = refs[id];
    for (const auto& c : it->second) r.push_back(metrics::tokenize(c));
  }
  return metrics::evaluate_tokens(captions, refs, ids, variant);
}

}  // namespace boocap::analysis
