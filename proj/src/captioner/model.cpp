#include "boocap/captioner/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "boocap/corpus/vocabulary.hpp"
#include "boocap/error.hpp"
#include "boocap/rng.hpp"

namespace boocap::captioner {

using corpus::Vocabulary;

namespace {

std::atomic<std::uint64_t> g_revision{0};

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void fill_uniform(Matrix& m, std::uint64_t seed, double scale) {
  Rng rng(seed);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-scale, scale);
  }
}

/// z += W v over the nonzero entries of v, column by column.
void project_into(const Matrix& w, const std::vector<double>& v, double* z) {
  const auto n = w.rows();
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double vj = v[j];
    if (vj == 0.0) continue;
    const double* col = w.data() + static_cast<Eigen::Index>(j) * n;
    for (Eigen::Index r = 0; r < n; ++r) z[r] += col[r] * vj;
  }
}

Matrix dropout_mask(Rng& rng, Eigen::Index rows, Eigen::Index cols, double rate) {
  Matrix m(rows, cols);
  const double keep = 1.0 / (1.0 - rate);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform() < rate ? 0.0 : keep;
  }
  return m;
}

}  // namespace

std::vector<std::pair<std::string, Matrix*>> Params::tensors() {
  std::vector<std::pair<std::string, Matrix*>> out{{"proj", &proj}, {"embed", &embed}};
  for (std::size_t l = 0; l < w_in.size(); ++l) {
    const auto s = std::to_string(l);
    out.emplace_back("w_in." + s, &w_in[l]);
    out.emplace_back("w_rec." + s, &w_rec[l]);
    out.emplace_back("bias." + s, &bias[l]);
  }
  out.emplace_back("w_out", &w_out);
  out.emplace_back("b_out", &b_out);
  return out;
}

std::vector<std::pair<std::string, const Matrix*>> Params::tensors() const {
  auto mut = const_cast<Params*>(this)->tensors();
  std::vector<std::pair<std::string, const Matrix*>> out;
  for (auto& [name, m] : mut) out.emplace_back(name, m);
  return out;
}

void Params::touch() { revision_ = ++g_revision; }

Params Params::zeros_like() const {
  Params z;
  z.proj = Matrix::Zero(proj.rows(), proj.cols());
  z.embed = Matrix::Zero(embed.rows(), embed.cols());
  for (std::size_t l = 0; l < w_in.size(); ++l) {
    z.w_in.push_back(Matrix::Zero(w_in[l].rows(), w_in[l].cols()));
    z.w_rec.push_back(Matrix::Zero(w_rec[l].rows(), w_rec[l].cols()));
    z.bias.push_back(Matrix::Zero(bias[l].rows(), bias[l].cols()));
  }
  z.w_out = Matrix::Zero(w_out.rows(), w_out.cols());
  z.b_out = Matrix::Zero(b_out.rows(), b_out.cols());
  z.touch();
  return z;
}

bool Params::operator==(const Params& other) const {
  const auto a = tensors();
  const auto b = other.tensors();
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].second->rows() != b[k].second->rows() || a[k].second->cols() != b[k].second->cols()) return false;
    if (*a[k].second != *b[k].second) return false;
  }
  return true;
}

Params init_params(const HyperParams& hp, const repr::ReprSchema& schema, int vocab_size) {
  hp.validate();
  if (vocab_size <= Vocabulary::kNumSpecials) throw ConfigError("vocabulary has no words");
  const int n = hp.projection_dim();
  const int H = hp.hidden_dim;
  const int e = hp.embed_dim;
  const double s = hp.init_scale;

  Params p;
  const auto coords = schema.coordinates();
  p.proj.resize(n, static_cast<Eigen::Index>(coords.size()));
  for (std::size_t j = 0; j < coords.size(); ++j) {
    Rng rng(derive_seed(hp.seed, "init/proj/" + coords[j].key));
    for (int r = 0; r < n; ++r) p.proj(r, static_cast<Eigen::Index>(j)) = rng.uniform(-s, s);
  }
  p.embed.resize(e, vocab_size);
  fill_uniform(p.embed, derive_seed(hp.seed, "init/embed"), s);
  for (int l = 0; l < hp.layers; ++l) {
    const auto idx = static_cast<std::uint64_t>(l);
    p.w_in.emplace_back(4 * H, l == 0 ? e : H);
    fill_uniform(p.w_in.back(), derive_seed(hp.seed, "init/w_in", idx), s);
    p.w_rec.emplace_back(4 * H, H);
    fill_uniform(p.w_rec.back(), derive_seed(hp.seed, "init/w_rec", idx), s);
    p.bias.emplace_back(4 * H, 1);
    fill_uniform(p.bias.back(), derive_seed(hp.seed, "init/bias", idx), s);
  }
  p.w_out.resize(vocab_size, H);
  fill_uniform(p.w_out, derive_seed(hp.seed, "init/w_out"), s);
  p.b_out.resize(vocab_size, 1);
  fill_uniform(p.b_out, derive_seed(hp.seed, "init/b_out"), s);
  p.touch();
  return p;
}

double elu(double z) { return z >= 0 ? z : std::expm1(z); }

Vector project(const Params& params, const std::vector<double>& v) {
  if (static_cast<Eigen::Index>(v.size()) != params.proj.cols()) {
    throw ValidationError("representation has " + std::to_string(v.size()) + " dims, model expects " +
                          std::to_string(params.proj.cols()));
  }
  Vector z = Vector::Zero(params.proj.rows());
  project_into(params.proj, v, z.data());
  for (Eigen::Index r = 0; r < z.size(); ++r) z[r] = elu(z[r]);
  return z;
}

// --- teacher-forced forward --------------------------------------------------------

ForwardCache forward_batch(const Params& params, const HyperParams& hp,
                           const std::vector<const TrainExample*>& batch, const DropoutPlan& dropout) {
  if (batch.empty()) throw ConfigError("empty batch");
  const int B = static_cast<int>(batch.size());
  const int L = params.layers();
  const int H = params.hidden_dim();
  const int V = params.vocab_size();
  const auto n = params.proj.rows();

  ForwardCache c;
  c.revision = params.revision();
  c.params = &params;
  c.batch = B;
  c.examples = batch;
  c.first_input = hp.conditioning == Conditioning::first_input;
  if (!c.first_input && n != H) throw ConfigError("hidden_init needs the projection width to equal hidden_dim");
  if (c.first_input && n != params.embed.rows()) throw ConfigError("first_input needs projection width = embed_dim");

  std::size_t longest = 0;
  for (const auto* ex : batch) {
    if (ex->tokens.size() < 2) throw ValidationError("caption of image " + std::to_string(ex->image_id) + " lacks BOS/EOS");
    for (int t : ex->tokens) {
      if (t < 0 || t >= V) throw ValidationError("token id out of range for image " + std::to_string(ex->image_id));
    }
    longest = std::max(longest, ex->tokens.size());
  }
  c.steps = static_cast<int>(longest) - 1;
  c.inputs.assign(c.steps, std::vector<int>(B, Vocabulary::kPad));
  c.targets.assign(c.steps, std::vector<int>(B, -1));
  for (int b = 0; b < B; ++b) {
    const auto& tok = batch[b]->tokens;
    for (int t = 0; t + 1 < static_cast<int>(tok.size()); ++t) {
      c.inputs[t][b] = tok[t];
      c.targets[t][b] = tok[t + 1];
      ++c.tokens;
    }
  }

  c.z = Matrix::Zero(n, B);
  for (int b = 0; b < B; ++b) {
    const auto& v = *batch[b]->repr;
    if (static_cast<Eigen::Index>(v.size()) != params.proj.cols()) {
      throw ValidationError("representation of image " + std::to_string(batch[b]->image_id) +
                            " does not match the model width");
    }
    project_into(params.proj, v, c.z.col(b).data());
  }
  c.x = c.z.unaryExpr([](double z) { return elu(z); });

  const int offset = c.first_input ? 1 : 0;
  const int S = c.steps + offset;
  auto alloc = [&](std::vector<std::vector<Matrix>>& v) { v.assign(S, std::vector<Matrix>(L)); };
  alloc(c.a);
  alloc(c.h_prev);
  alloc(c.c_prev);
  alloc(c.i);
  alloc(c.f);
  alloc(c.g);
  alloc(c.o);
  alloc(c.c);
  alloc(c.tanh_c);
  alloc(c.h);
  alloc(c.drop);
  c.drop_out.assign(c.steps, Matrix());
  c.probs.assign(c.steps, Matrix());
  c.example_loss.assign(B, 0.0);

  Rng rng(dropout.seed);
  const bool use_drop = dropout.rate > 0.0;

  for (int s = 0; s < S; ++s) {
    const int t = s - offset;
    Matrix input;
    if (t < 0) {
      input = c.x;
    } else {
      input.resize(params.embed.rows(), B);
      for (int b = 0; b < B; ++b) input.col(b) = params.embed.col(c.inputs[t][b]);
      if (use_drop) {
        c.drop[s][0] = dropout_mask(rng, input.rows(), B, dropout.rate);
        input.array() *= c.drop[s][0].array();
      }
    }
    for (int l = 0; l < L; ++l) {
      if (l > 0) {
        input = c.h[s][l - 1];
        if (use_drop && t >= 0) {
          c.drop[s][l] = dropout_mask(rng, H, B, dropout.rate);
          input.array() *= c.drop[s][l].array();
        }
      }
      if (s == 0) {
        c.h_prev[s][l] = c.first_input ? Matrix::Zero(H, B) : c.x;
        c.c_prev[s][l] = Matrix::Zero(H, B);
      } else {
        c.h_prev[s][l] = c.h[s - 1][l];
        c.c_prev[s][l] = c.c[s - 1][l];
      }
      Matrix gates = params.w_in[l] * input + params.w_rec[l] * c.h_prev[s][l];
      gates.colwise() += params.bias[l].col(0);
      c.i[s][l] = gates.topRows(H).unaryExpr([](double v) { return sigmoid(v); });
      c.f[s][l] = gates.middleRows(H, H).unaryExpr([](double v) { return sigmoid(v); });
      c.g[s][l] = gates.middleRows(2 * H, H).array().tanh().matrix();
      c.o[s][l] = gates.bottomRows(H).unaryExpr([](double v) { return sigmoid(v); });
      c.c[s][l] = (c.f[s][l].array() * c.c_prev[s][l].array() + c.i[s][l].array() * c.g[s][l].array()).matrix();
      c.tanh_c[s][l] = c.c[s][l].array().tanh().matrix();
      c.h[s][l] = (c.o[s][l].array() * c.tanh_c[s][l].array()).matrix();
      c.a[s][l] = std::move(input);
    }
    if (t < 0) continue;

    Matrix top = c.h[s][L - 1];
    if (use_drop) {
      c.drop_out[t] = dropout_mask(rng, H, B, dropout.rate);
      top.array() *= c.drop_out[t].array();
    }
    Matrix logits = params.w_out * top;
    logits.colwise() += params.b_out.col(0);
    Matrix& p = c.probs[t];
    p.resize(V, B);
    for (int b = 0; b < B; ++b) {
      const double m = logits.col(b).maxCoeff();
      double sum = 0;
      for (int k = 0; k < V; ++k) {
        p(k, b) = std::exp(logits(k, b) - m);
        sum += p(k, b);
      }
      p.col(b) /= sum;
      const int target = c.targets[t][b];
      if (target < 0) continue;
      const double nll = -(logits(target, b) - m - std::log(sum));
      if (!std::isfinite(nll)) throw NumericError("non-finite loss at time step " + std::to_string(t));
      c.example_loss[b] += nll;
    }
  }
  for (double l : c.example_loss) c.loss += l;
  if (!std::isfinite(c.loss)) throw NumericError("non-finite loss");
  return c;
}

ForwardCache forward_loss(const Params& params, const HyperParams& hp, const TrainExample& example,
                          const DropoutPlan& dropout) {
  return forward_batch(params, hp, {&example}, dropout);
}

// --- backward -------------------------------------------------------------------------

Grads backward(const Params& params, const ForwardCache& c) {
  if (c.params != &params || c.revision != params.revision()) {
    throw Error("stale forward cache: parameters changed since the forward pass");
  }
  const int B = c.batch;
  const int L = params.layers();
  const int H = params.hidden_dim();
  const int offset = c.first_input ? 1 : 0;
  const int S = c.steps + offset;

  Grads g = params.zeros_like();
  std::vector<Matrix> dh_next(L, Matrix::Zero(H, B));
  std::vector<Matrix> dc_next(L, Matrix::Zero(H, B));
  Matrix dx = Matrix::Zero(c.x.rows(), B);

  for (int s = S - 1; s >= 0; --s) {
    const int t = s - offset;
    Matrix from_above;
    if (t >= 0) {
      Matrix dlogits = c.probs[t];
      for (int b = 0; b < B; ++b) {
        const int target = c.targets[t][b];
        if (target < 0) {
          dlogits.col(b).setZero();
        } else {
          dlogits(target, b) -= 1.0;
        }
      }
      Matrix top = c.h[s][L - 1];
      if (c.drop_out[t].size() > 0) top.array() *= c.drop_out[t].array();
      g.w_out.noalias() += dlogits * top.transpose();
      g.b_out.col(0) += dlogits.rowwise().sum();
      from_above = params.w_out.transpose() * dlogits;
      if (c.drop_out[t].size() > 0) from_above.array() *= c.drop_out[t].array();
    } else {
      from_above = Matrix::Zero(H, B);
    }

    for (int l = L - 1; l >= 0; --l) {
      const Matrix dh = dh_next[l] + from_above;
      const auto& o = c.o[s][l].array();
      const auto& i = c.i[s][l].array();
      const auto& f = c.f[s][l].array();
      const auto& gg = c.g[s][l].array();
      const auto& tc = c.tanh_c[s][l].array();
      const Matrix dc = (dc_next[l].array() + dh.array() * o * (1.0 - tc * tc)).matrix();

      Matrix dgates(4 * H, B);
      dgates.topRows(H) = (dc.array() * gg * i * (1.0 - i)).matrix();
      dgates.middleRows(H, H) = (dc.array() * c.c_prev[s][l].array() * f * (1.0 - f)).matrix();
      dgates.middleRows(2 * H, H) = (dc.array() * i * (1.0 - gg * gg)).matrix();
      dgates.bottomRows(H) = (dh.array() * tc * o * (1.0 - o)).matrix();

      g.w_in[l].noalias() += dgates * c.a[s][l].transpose();
      g.w_rec[l].noalias() += dgates * c.h_prev[s][l].transpose();
      g.bias[l].col(0) += dgates.rowwise().sum();

      Matrix da = params.w_in[l].transpose() * dgates;
      dh_next[l] = params.w_rec[l].transpose() * dgates;
      dc_next[l] = (dc.array() * f).matrix();

      if (l > 0) {
        if (c.drop[s][l].size() > 0) da.array() *= c.drop[s][l].array();
        from_above = std::move(da);
      } else if (t < 0) {
        dx += da;
      } else {
        if (c.drop[s][0].size() > 0) da.array() *= c.drop[s][0].array();
        for (int b = 0; b < B; ++b) g.embed.col(c.inputs[t][b]) += da.col(b);
      }
    }
  }
  if (!c.first_input) {
    for (int l = 0; l < L; ++l) dx += dh_next[l];
  }

  // through the ELU and the projection, skipping zero inputs as the forward pass did
  const auto n = params.proj.rows();
  for (int b = 0; b < B; ++b) {
    Vector dz(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const double z = c.z(r, b);
      dz[r] = dx(r, b) * (z >= 0 ? 1.0 : std::exp(z));
    }
    const auto& v = *c.examples[b]->repr;
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double vj = v[j];
      if (vj == 0.0) continue;
      double* col = g.proj.data() + static_cast<Eigen::Index>(j) * n;
      for (Eigen::Index r = 0; r < n; ++r) col[r] += dz[r] * vj;
    }
  }
  return g;
}

// --- decoding -------------------------------------------------------------------------

std::vector<int> greedy_decode(const Params& params, const HyperParams& hp, const std::vector<double>& v,
                               int max_len, std::vector<Vector>* step_probs) {
  const int L = params.layers();
  const int H = params.hidden_dim();
  const int V = params.vocab_size();
  const Vector x = project(params, v);
  const bool first_input = hp.conditioning == Conditioning::first_input;

  std::vector<Vector> h(L), cell(L, Vector::Zero(H));
  for (int l = 0; l < L; ++l) h[l] = first_input ? Vector::Zero(H) : x;

  auto step = [&](const Vector& in) {
    Vector input = in;
    for (int l = 0; l < L; ++l) {
      Vector gates = params.w_in[l] * input + params.w_rec[l] * h[l] + params.bias[l].col(0);
      for (int r = 0; r < H; ++r) {
        const double ig = sigmoid(gates[r]);
        const double fg = sigmoid(gates[H + r]);
        const double gg = std::tanh(gates[2 * H + r]);
        const double og = sigmoid(gates[3 * H + r]);
        cell[l][r] = fg * cell[l][r] + ig * gg;
        h[l][r] = og * std::tanh(cell[l][r]);
      }
      input = h[l];
    }
  };

  std::vector<int> out;
  if (max_len <= 0) return out;
  if (first_input) step(x);
  int token = Vocabulary::kBos;
  for (int k = 0; k < max_len; ++k) {
    step(params.embed.col(token));
    Vector logits = params.w_out * h[L - 1] + params.b_out.col(0);
    if (step_probs) {
      const double m = logits.maxCoeff();
      Vector p = (logits.array() - m).exp().matrix();
      p /= p.sum();
      step_probs->push_back(std::move(p));
    }
    int best = -1;
    double best_logit = -std::numeric_limits<double>::infinity();
    for (int id = 0; id < V; ++id) {
      if (id == Vocabulary::kPad || id == Vocabulary::kBos || id == Vocabulary::kUnk) continue;
      if (best < 0 || logits[id] > best_logit) {
        best = id;
        best_logit = logits[id];
      }
    }
    if (!std::isfinite(best_logit)) throw NumericError("non-finite logits while decoding");
    if (best == Vocabulary::kEos) break;
    out.push_back(best);
    token = best;
  }
  return out;
}

std::vector<std::vector<int>> greedy_decode_all(const Params& params, const HyperParams& hp,
                                                const std::vector<const std::vector<double>*>& vectors,
                                                int max_len, int jobs) {
  std::vector<std::vector<int>> out(vectors.size());
  const auto n = vectors.size();
  const auto workers = static_cast<std::size_t>(std::max(1, std::min<int>(jobs, static_cast<int>(n))));
  if (workers <= 1) {
    for (std::size_t k = 0; k < n; ++k) out[k] = greedy_decode(params, hp, *vectors[k], max_len);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k = w; k < n; k += workers) out[k] = greedy_decode(params, hp, *vectors[k], max_len);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

double squared_norm(const Params& p) {
  double s = 0;
  for (const auto& [name, m] : p.tensors()) {
    const double* d = m->data();
    for (Eigen::Index k = 0; k < m->size(); ++k) s += d[k] * d[k];
  }
  return s;
}

}  // namespace boocap::captioner
