#include "boocap/captioner/hyperparams.hpp"

#include <json.hpp>

#include "boocap/error.hpp"

namespace boocap::captioner {

std::string_view to_string(Conditioning c) {
  return c == Conditioning::hidden_init ? "hidden_init" : "first_input";
}

Conditioning parse_conditioning(std::string_view text) {
  if (text == "hidden_init") return Conditioning::hidden_init;
  if (text == "first_input") return Conditioning::first_input;
  throw ConfigError("unknown conditioning '" + std::string(text) + "'");
}

void HyperParams::validate() const {
  auto positive = [](const char* name, double v) {
    if (!(v > 0)) throw ConfigError(std::string(name) + " must be positive");
  };
  positive("embed_dim", embed_dim);
  positive("hidden_dim", hidden_dim);
  positive("layers", layers);
  positive("batch_size", batch_size);
  positive("learning_rate", learning_rate);
  positive("vocab_threshold", vocab_threshold);
  positive("adam_eps", adam_eps);
  positive("clip_norm", clip_norm);
  positive("init_scale", init_scale);
  positive("chunk_size", chunk_size);
  if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
  if (max_decode_len < 0) throw ConfigError("max_decode_len must be >= 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
}

int HyperParams::projection_dim() const {
  return conditioning == Conditioning::hidden_init ? hidden_dim : embed_dim;
}

std::string HyperParams::to_json() const {
  nlohmann::ordered_json j;
  j["embed_dim"] = embed_dim;
  j["hidden_dim"] = hidden_dim;
  j["layers"] = layers;
  j["max_epochs"] = max_epochs;
  j["batch_size"] = batch_size;
  j["dropout"] = dropout;
  j["learning_rate"] = learning_rate;
  j["vocab_threshold"] = vocab_threshold;
  j["beta1"] = beta1;
  j["beta2"] = beta2;
  j["adam_eps"] = adam_eps;
  j["clip_norm"] = clip_norm;
  j["init_scale"] = init_scale;
  j["seed"] = seed;
  j["max_decode_len"] = max_decode_len;
  j["conditioning"] = std::string(captioner::to_string(conditioning));
  j["chunk_size"] = chunk_size;
  j["selection_metric"] = std::string(metrics::to_string(selection_metric));
  return j.dump();
}

HyperParams HyperParams::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text.begin(), text.end());
    HyperParams hp;
    hp.embed_dim = j.at("embed_dim");
    hp.hidden_dim = j.at("hidden_dim");
    hp.layers = j.at("layers");
    hp.max_epochs = j.at("max_epochs");
    hp.batch_size = j.at("batch_size");
    hp.dropout = j.at("dropout");
    hp.learning_rate = j.at("learning_rate");
    hp.vocab_threshold = j.at("vocab_threshold");
    hp.beta1 = j.at("beta1");
    hp.beta2 = j.at("beta2");
    hp.adam_eps = j.at("adam_eps");
    hp.clip_norm = j.at("clip_norm");
    hp.init_scale = j.at("init_scale");
    hp.seed = j.at("seed");
    hp.max_decode_len = j.at("max_decode_len");
    hp.conditioning = parse_conditioning(j.at("conditioning").get<std::string>());
    hp.chunk_size = j.at("chunk_size");
    hp.selection_metric = metrics::parse_cider_variant(j.at("selection_metric").get<std::string>());
    return hp;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed hyperparameters: ") + e.what(), e.byte);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed hyperparameters: ") + e.what());
  }
}

std::vector<HyperParams> GridSpec::expand(const HyperParams& base) const {
  if (batch_sizes.empty() || dropouts.empty() || learning_rates.empty()) {
    throw ConfigError("hyperparameter grid has an empty axis");
  }
  std::vector<HyperParams> out;
  for (int b : batch_sizes) {
    for (double d : dropouts) {
      for (double lr : learning_rates) {
        HyperParams hp = base;
        hp.batch_size = b;
        hp.dropout = d;
        hp.learning_rate = lr;
        out.push_back(hp);
      }
    }
  }
  return out;
}

HyperParams GridSpec::first(const HyperParams& base) const { return expand(base).front(); }

}  // namespace boocap::captioner
