#include "boocap/captioner/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "boocap/error.hpp"
#include "boocap/rng.hpp"

namespace boocap::captioner {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

void add_into(Params& acc, const Params& g) {
  auto a = acc.tensors();
  const auto b = g.tensors();
  for (std::size_t k = 0; k < a.size(); ++k) *a[k].second += *b[k].second;
}

/// Pairwise sum in a fixed shape: (0+1)+(2+3)+...
Grads tree_sum(std::vector<Grads> parts) {
  while (parts.size() > 1) {
    std::vector<Grads> next;
    for (std::size_t k = 0; k + 1 < parts.size(); k += 2) {
      add_into(parts[k], parts[k + 1]);
      next.push_back(std::move(parts[k]));
    }
    if (parts.size() % 2 == 1) next.push_back(std::move(parts.back()));
    parts = std::move(next);
  }
  return std::move(parts.front());
}

template <class F>
void run_parallel(std::size_t n, int jobs, F&& body) {
  const auto workers = static_cast<std::size_t>(std::max(1, std::min<int>(jobs, static_cast<int>(n))));
  if (workers <= 1) {
    for (std::size_t k = 0; k < n; ++k) body(k);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k = w; k < n; k += workers) body(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string fmt(double x) {
  if (std::isnan(x)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

// --- optimizer --------------------------------------------------------------------

AdamState adam_init(const Params& p) {
  AdamState s;
  s.m = p.zeros_like();
  s.v = p.zeros_like();
  return s;
}

void adam_update(Params& p, const Grads& g, AdamState& state, const HyperParams& hp) {
  ++state.step;
  const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.step));
  auto pt = p.tensors();
  const auto gt = g.tensors();
  auto mt = state.m.tensors();
  auto vt = state.v.tensors();
  for (std::size_t k = 0; k < pt.size(); ++k) {
    auto m = mt[k].second->array();
    auto v = vt[k].second->array();
    const auto grad = gt[k].second->array();
    m = hp.beta1 * m + (1.0 - hp.beta1) * grad;
    v = hp.beta2 * v + (1.0 - hp.beta2) * grad * grad;
    pt[k].second->array() -= hp.learning_rate * (m / c1) / ((v / c2).sqrt() + hp.adam_eps);
  }
  p.touch();
}

double clip_global_norm(Grads& g, double max_norm) {
  const double norm = std::sqrt(squared_norm(g));
  if (!std::isfinite(norm)) throw NumericError("non-finite gradient norm");
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& [name, m] : g.tensors()) *m *= scale;
  }
  return norm;
}

// --- logs -----------------------------------------------------------------------------

std::string TrainLog::to_json() const {
  nlohmann::ordered_json j;
  j["best_epoch"] = best_epoch;
  auto rows = nlohmann::ordered_json::array();
  auto num = [](double x) { return std::isnan(x) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(x); };
  for (const auto& e : epochs) {
    rows.push_back({{"epoch", e.epoch}, {"train_loss", num(e.train_loss)}, {"val_loss", num(e.val_loss)},
                    {"val_cider", num(e.val_cider)}});
  }
  j["epochs"] = rows;
  return j.dump();
}

TrainLog TrainLog::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text.begin(), text.end());
    TrainLog log;
    log.best_epoch = j.at("best_epoch");
    auto num = [](const nlohmann::json& v) { return v.is_null() ? kNaN : v.get<double>(); };
    for (const auto& r : j.at("epochs")) {
      log.epochs.push_back({r.at("epoch").get<int>(), num(r.at("train_loss")), num(r.at("val_loss")),
                            num(r.at("val_cider"))});
    }
    return log;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed training log: ") + e.what());
  }
}

std::string TrainLog::to_csv() const {
  std::ostringstream out;
  out << "epoch,split,loss,cider\n";
  for (const auto& e : epochs) {
    out << e.epoch << ",train," << fmt(e.train_loss) << ",\n";
    out << e.epoch << ",val," << fmt(e.val_loss) << ',' << fmt(e.val_cider) << '\n';
  }
  return out.str();
}

bool TrainLog::operator==(const TrainLog& o) const {
  if (best_epoch != o.best_epoch || epochs.size() != o.epochs.size()) return false;
  for (std::size_t k = 0; k < epochs.size(); ++k) {
    const auto& a = epochs[k];
    const auto& b = o.epochs[k];
    if (a.epoch != b.epoch || !same(a.train_loss, b.train_loss) || !same(a.val_loss, b.val_loss) ||
        !same(a.val_cider, b.val_cider)) {
      return false;
    }
  }
  return true;
}

// --- datasets -------------------------------------------------------------------------

std::vector<TrainExample> make_examples(const ReprMap& reprs, const corpus::CaptionSet& captions,
                                        const std::vector<corpus::ImageId>& ids, const corpus::Vocabulary& vocab) {
  std::vector<TrainExample> out;
  for (auto id : ids) {
    auto r = reprs.find(id);
    if (r == reprs.end()) throw ValidationError("no representation for image " + std::to_string(id));
    auto c = captions.find(id);
    if (c == captions.end()) continue;
    for (const auto& cap : c->second) out.push_back({id, r->second, vocab.encode(cap)});
  }
  return out;
}

ValidationSet make_validation(const ReprMap& reprs, const corpus::CaptionSet& captions,
                              const std::vector<corpus::ImageId>& ids, const corpus::Vocabulary& vocab) {
  ValidationSet val;
  for (auto id : ids) {
    auto r = reprs.find(id);
    if (r == reprs.end()) throw ValidationError("no representation for image " + std::to_string(id));
    auto c = captions.find(id);
    if (c == captions.end() || c->second.empty()) throw ValidationError("no references for image " + std::to_string(id));
    val.ids.push_back(id);
    val.reprs.push_back(r->second);
    for (const auto& cap : c->second) val.refs[id].push_back(metrics::tokenize(cap));
  }
  val.examples = make_examples(reprs, captions, ids, vocab);
  return val;
}

// --- evaluation helpers ---------------------------------------------------------------------

double mean_token_loss(const Params& params, const HyperParams& hp, const std::vector<TrainExample>& data) {
  if (data.empty()) return kNaN;
  double loss = 0;
  long tokens = 0;
  const auto chunk = static_cast<std::size_t>(hp.chunk_size);
  for (std::size_t start = 0; start < data.size(); start += chunk) {
    std::vector<const TrainExample*> batch;
    for (std::size_t k = start; k < std::min(data.size(), start + chunk); ++k) batch.push_back(&data[k]);
    const auto c = forward_batch(params, hp, batch, {});
    loss += c.loss;
    tokens += c.tokens;
  }
  return loss / static_cast<double>(tokens);
}

double validation_cider(const Params& params, const HyperParams& hp, const ValidationSet& val,
                        const corpus::Vocabulary& vocab, int jobs) {
  if (val.empty()) return kNaN;
  std::vector<const std::vector<double>*> vecs;
  for (const auto& r : val.reprs) vecs.push_back(r.get());
  const auto decoded = greedy_decode_all(params, hp, vecs, hp.max_decode_len, jobs);
  std::map<corpus::ImageId, metrics::TokenSeq> cands;
  for (std::size_t k = 0; k < val.ids.size(); ++k) cands[val.ids[k]] = vocab.decode(decoded[k]);
  return metrics::cider(cands, val.refs, hp.selection_metric).mean;
}

std::vector<metrics::TokenSeq> decode_captions(const Checkpoint& ckpt,
                                               const std::vector<const std::vector<double>*>& vectors, int jobs) {
  const auto ids = greedy_decode_all(ckpt.params, ckpt.hp, vectors, ckpt.hp.max_decode_len, jobs);
  std::vector<metrics::TokenSeq> out;
  out.reserve(ids.size());
  for (const auto& seq : ids) out.push_back(ckpt.vocab.decode(seq));
  return out;
}

// --- training -------------------------------------------------------------------------

Checkpoint train(const std::vector<TrainExample>& data, const HyperParams& hp, const ValidationSet& val,
                 const corpus::Vocabulary& vocab, repr::SchemaPtr schema, const TrainOptions& options) {
  hp.validate();
  if (data.empty()) throw ValidationError("no training examples");
  if (!schema) throw ConfigError("training needs a representation schema");

  Checkpoint ck;
  ck.hp = hp;
  ck.vocab = vocab;
  ck.schema = schema;
  ck.params = init_params(hp, *schema, vocab.size());
  ck.adam = adam_init(ck.params);

  Params best_params = ck.params;
  AdamState best_adam = ck.adam;
  double best_cider = -std::numeric_limits<double>::infinity();
  int best_epoch = 0;

  std::vector<std::size_t> order(data.size());
  const auto batch_size = static_cast<std::size_t>(hp.batch_size);
  const auto chunk_size = static_cast<std::size_t>(hp.chunk_size);
  long global_step = 0;

  for (int epoch = 1; epoch <= hp.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(hp.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double epoch_loss = 0;
    long epoch_tokens = 0;
    int batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size, ++batch_index, ++global_step) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      const std::size_t chunks = (end - start + chunk_size - 1) / chunk_size;
      std::vector<Grads> grads(chunks);
      std::vector<double> losses(chunks, 0.0);
      std::vector<long> tokens(chunks, 0);
      const auto step_seed = derive_seed(hp.seed, "dropout", static_cast<std::uint64_t>(global_step));
      try {
        run_parallel(chunks, options.jobs, [&](std::size_t k) {
          std::vector<const TrainExample*> batch;
          for (std::size_t q = start + k * chunk_size; q < std::min(end, start + (k + 1) * chunk_size); ++q) {
            batch.push_back(&data[order[q]]);
          }
          const DropoutPlan drop{hp.dropout, derive_seed(step_seed, "chunk", k)};
          const auto cache = forward_batch(ck.params, hp, batch, drop);
          grads[k] = backward(ck.params, cache);
          losses[k] = cache.loss;
          tokens[k] = cache.tokens;
        });
      } catch (const NumericError& e) {
        throw NumericError("divergence at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index) + ": " + e.what());
      }
      Grads g = tree_sum(std::move(grads));
      for (auto& [name, m] : g.tensors()) *m /= static_cast<double>(end - start);
      try {
        clip_global_norm(g, hp.clip_norm);
      } catch (const NumericError& e) {
        throw NumericError("divergence at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index) + ": " + e.what());
      }
      adam_update(ck.params, g, ck.adam, hp);
      for (std::size_t k = 0; k < chunks; ++k) {
        epoch_loss += losses[k];
        epoch_tokens += tokens[k];
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(epoch_tokens);
    if (!std::isfinite(rec.train_loss)) {
      throw NumericError("divergence at epoch " + std::to_string(epoch) + ": non-finite training loss");
    }
    rec.val_loss = mean_token_loss(ck.params, hp, val.examples);
    rec.val_cider = validation_cider(ck.params, hp, val, vocab, options.jobs);
    ck.log.epochs.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);

    const bool better = val.empty() ? true : rec.val_cider > best_cider;
    if (better) {
      best_cider = val.empty() ? best_cider : rec.val_cider;
      best_epoch = epoch;
      best_params = ck.params;
      best_adam = ck.adam;
    }
  }
  ck.params = std::move(best_params);
  ck.adam = std::move(best_adam);
  ck.log.best_epoch = best_epoch;
  return ck;
}

GridResult train_grid(const std::vector<TrainExample>& data, const HyperParams& base, const GridSpec& grid,
                      const ValidationSet& val, const corpus::Vocabulary& vocab, repr::SchemaPtr schema,
                      const TrainOptions& options) {
  GridResult out;
  double best = -std::numeric_limits<double>::infinity();
  bool have = false;
  for (const auto& hp : grid.expand(base)) {
    auto ck = train(data, hp, val, vocab, schema, options);
    GridRun run{hp, kNaN, ck.log.best_epoch};
    if (ck.log.best_epoch > 0) run.val_cider = ck.log.epochs[static_cast<std::size_t>(ck.log.best_epoch - 1)].val_cider;
    const double score = std::isnan(run.val_cider) ? -std::numeric_limits<double>::infinity() : run.val_cider;
    out.runs.push_back(run);
    if (!have || score > best) {
      have = true;
      best = score;
      out.best_index = out.runs.size() - 1;
      out.best = std::move(ck);
    }
  }
  return out;
}

}  // namespace boocap::captioner
