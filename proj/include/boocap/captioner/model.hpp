#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "boocap/captioner/hyperparams.hpp"
#include "boocap/repr/repr.hpp"

namespace boocap::captioner {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Trainable tensors. Gate rows of the LSTM weights are ordered i, f, g, o.
struct Params {
  Matrix proj;                // n x d
  Matrix embed;               // e x V, one column per token
  std::vector<Matrix> w_in;   // 4H x (e or H)
  std::vector<Matrix> w_rec;  // 4H x H
  std::vector<Matrix> bias;   // 4H x 1
  Matrix w_out;               // V x H
  Matrix b_out;               // V x 1

  int repr_dim() const { return static_cast<int>(proj.cols()); }
  int vocab_size() const { return static_cast<int>(embed.cols()); }
  int hidden_dim() const { return static_cast<int>(w_rec.at(0).cols()); }
  int layers() const { return static_cast<int>(w_rec.size()); }

  /// Named tensors in a fixed order (proj, embed, per layer w_in/w_rec/bias, w_out, b_out).
  std::vector<std::pair<std::string, Matrix*>> tensors();
  std::vector<std::pair<std::string, const Matrix*>> tensors() const;

  /// Changes on every mutation through the trainer; caches remember it.
  std::uint64_t revision() const { return revision_; }
  void touch();

  /// Same shapes, all zeros.
  Params zeros_like() const;
  bool operator==(const Params& other) const;

 private:
  std::uint64_t revision_ = 0;
};

/// Gradients share the layout of the parameters.
using Grads = Params;

/// Uniform(-scale, scale) init. Column j of the projection is drawn from a stream
/// keyed by the schema coordinate, so deleting a coordinate leaves the other
/// columns untouched.
Params init_params(const HyperParams& hp, const repr::ReprSchema& schema, int vocab_size);

double elu(double z);

/// x = ELU(W v). Zero entries of v are skipped, in column order.
Vector project(const Params& params, const std::vector<double>& v);

struct TrainExample {
  corpus::ImageId image_id = 0;
  std::shared_ptr<const std::vector<double>> repr;
  std::vector<int> tokens;  // BOS ... EOS
};

/// Dropout on the non-recurrent connections (embedding -> layer 1, between layers,
/// last layer -> output). Masks are drawn from `seed`.
struct DropoutPlan {
  double rate = 0.0;
  std::uint64_t seed = 0;
};

/// Everything the backward pass needs. Tied to the parameter revision it was
/// computed with.
struct ForwardCache {
  std::uint64_t revision = 0;
  const Params* params = nullptr;
  int batch = 0;
  int steps = 0;  // teacher-forced steps (longest caption length - 1)
  bool first_input = false;
  std::vector<const TrainExample*> examples;
  std::vector<std::vector<int>> inputs;   // [t][b]
  std::vector<std::vector<int>> targets;  // [t][b], -1 for padding
  Matrix z;                               // n x B pre-activation of the projection
  Matrix x;                               // n x B
  // per step (offset by one when first_input) and layer
  std::vector<std::vector<Matrix>> a, h_prev, c_prev, i, f, g, o, c, tanh_c, h;
  std::vector<std::vector<Matrix>> drop;  // masks per step and layer input, plus output
  std::vector<Matrix> drop_out;
  std::vector<Matrix> probs;              // V x B per teacher-forced step
  std::vector<double> example_loss;
  double loss = 0;  // sum over examples of per-example summed loss
  int tokens = 0;   // number of predicted tokens
};

/// Summed negative log-likelihood of a batch under teacher forcing.
ForwardCache forward_batch(const Params& params, const HyperParams& hp,
                           const std::vector<const TrainExample*>& batch, const DropoutPlan& dropout);
/// Single example form.
ForwardCache forward_loss(const Params& params, const HyperParams& hp, const TrainExample& example,
                          const DropoutPlan& dropout = {});

/// Gradient of cache.loss w.r.t. every tensor. Throws Error when the parameters
/// changed after the forward pass.
Grads backward(const Params& params, const ForwardCache& cache);

/// Greedy argmax decoding from BOS; ties go to the lowest id; PAD, BOS and UNK are
/// never emitted. Returns the ids before EOS. `step_probs` (optional) receives
/// the softmax of every step before masking.
std::vector<int> greedy_decode(const Params& params, const HyperParams& hp, const std::vector<double>& v,
                               int max_len, std::vector<Vector>* step_probs = nullptr);

/// Decodes many vectors, optionally on `jobs` threads. Output order follows input.
std::vector<std::vector<int>> greedy_decode_all(const Params& params, const HyperParams& hp,
                                                const std::vector<const std::vector<double>*>& vectors,
                                                int max_len, int jobs = 1);

/// Sum of squares over all tensors, accumulated sequentially in tensor order.
double squared_norm(const Params& p);

}  // namespace boocap::captioner
