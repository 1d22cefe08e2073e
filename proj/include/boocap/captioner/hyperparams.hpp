#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "boocap/metrics/metrics.hpp"

namespace boocap::captioner {

/// How the projected representation x enters the LSTM.
enum class Conditioning {
  hidden_init,  // h0 = x on every layer, c0 = 0, BOS is the first input
  first_input,  // x is fed as an extra input step before BOS, without a loss term
};

std::string_view to_string(Conditioning c);
Conditioning parse_conditioning(std::string_view text);

struct HyperParams {
  int embed_dim = 128;
  int hidden_dim = 256;
  int layers = 2;
  int max_epochs = 50;
  int batch_size = 50;
  double dropout = 0.2;
  double learning_rate = 1e-4;
  int vocab_threshold = 2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 5.0;
  double init_scale = 0.08;
  std::uint64_t seed = 1;
  int max_decode_len = 20;
  Conditioning conditioning = Conditioning::hidden_init;
  /// Examples per gradient chunk. Chunk gradients are summed in a fixed tree, so
  /// results do not depend on the worker count.
  int chunk_size = 16;
  metrics::CiderVariant selection_metric = metrics::CiderVariant::cider_d;

  /// Throws ConfigError on non-positive sizes or dropout outside [0, 1).
  void validate() const;
  /// Width of x: hidden_dim for hidden_init, embed_dim for first_input.
  int projection_dim() const;

  std::string to_json() const;
  static HyperParams from_json(std::string_view json);

  bool operator==(const HyperParams&) const = default;
};

/// Candidate values searched in grid mode. "Fixed" mode uses the first value of each.
struct GridSpec {
  std::vector<int> batch_sizes{50, 100};
  std::vector<double> dropouts{0.2, 0.7};
  std::vector<double> learning_rates{1e-4, 4e-4};

  /// Every combination, batch size outermost and learning rate innermost.
  std::vector<HyperParams> expand(const HyperParams& base) const;
  HyperParams first(const HyperParams& base) const;
};

}  // namespace boocap::captioner
