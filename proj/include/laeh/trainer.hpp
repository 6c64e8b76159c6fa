// Alternating optimization: per epoch, SGD steps for the image net, text
// net, transform net, D1/D2, and C, the closed-form sign update for B,
// then an attribute-matrix refresh from the new label embeddings.
#pragma once

#include <chrono>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "laeh/dataset.hpp"
#include "laeh/matrix.hpp"
#include "laeh/model.hpp"
#include "laeh/net.hpp"
#include "laeh/objective.hpp"
#include "laeh/split.hpp"

namespace laeh {

struct TrainConfig {
  LossWeights weights;
  std::size_t code_length = 64;
  std::size_t feature_dim = 128;
  std::vector<std::size_t> hidden_sizes = {512, 512};
  double learning_rate = 0.01;
  double lr_decay = 0.98;          // multiplicative, per epoch
  std::size_t epochs = 30;
  std::size_t batch_size = 0;      // 0 = full batch
  std::uint64_t seed = 0;
  std::size_t inner_iters = 1;     // gradient passes per parameter block
  bool scale_attr_by_c = false;    // 1/c scaling of the inner-product matrix
  bool normalize_text = false;
  double clip_norm = 10.0;         // global-norm gradient clip per block

  void validate() const {
    weights.validate();
    if (learning_rate < 0.0)
      throw std::invalid_argument("train config: negative learning rate");
    if (epochs < 1) throw std::invalid_argument("train config: epochs < 1");
    if (code_length < 1)
      throw std::invalid_argument("train config: code length < 1");
    if (inner_iters < 1)
      throw std::invalid_argument("train config: inner_iters < 1");
  }
};

struct EpochLog {
  LossBreakdown loss;
  std::size_t b_flips = 0;
  double seconds = 0.0;
  std::size_t clip_events = 0;
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  std::vector<std::string> step_order;  // one cycle, identical every epoch

  /// CSV lines: epoch, j1, j3, j_attr, total, b_flips, seconds.
  std::string to_csv() const {
    std::string out = "epoch,j1,j3,j_attr,total,b_flips,seconds\n";
    for (std::size_t e = 0; e < epochs.size(); ++e) {
      const EpochLog& el = epochs[e];
      out += std::to_string(e + 1) + "," + detail::format_double(el.loss.j1) +
             "," + detail::format_double(el.loss.j3) + "," +
             detail::format_double(el.loss.j_attr) + "," +
             detail::format_double(el.loss.total) + "," +
             std::to_string(el.b_flips) + "," +
             detail::format_double(el.seconds) + "\n";
    }
    return out;
  }
};

/// Exact minimizer of sum_m alpha_m |B - Pm Fm|^2 over B in {-1,+1}:
/// sign(alpha1 P1 F1 + alpha2 P2 F2), ties resolved to +1.
inline DenseMatrix update_b(const DenseMatrix& p1, const DenseMatrix& p2,
                            const DenseMatrix& f1, const DenseMatrix& f2,
                            const LossWeights& w) {
  DenseMatrix arg = w.alpha1 * matmul(p1, f1);
  arg += w.alpha2 * matmul(p2, f2);
  return sign_matrix(arg);
}

/// p <- p - lr * g, entrywise.
inline void sgd_step(DenseMatrix& params, const DenseMatrix& grads,
                     double lr) {
  if (params.rows() != grads.rows() || params.cols() != grads.cols())
    throw std::invalid_argument("sgd_step: shape mismatch " +
                                shape_of(params) + " vs " + shape_of(grads));
  if (!grads.all_finite())
    throw std::runtime_error("sgd_step: non-finite gradient");
  const double* g = grads.data();
  double* p = params.data();
  for (std::size_t i = 0; i < params.size(); ++i) p[i] -= lr * g[i];
}

/// Cosine matrix of the transform net's embeddings over the training pool.
inline AttributeSimilarity refresh_attribute_matrix(
    const LaehModel& model, const PairedDataset& dataset,
    const ZeroShotSplit& split) {
  const DenseMatrix v_train = dataset.semantics_for(split.train_idx);
  const NetCache cache = model.transform_net.forward(v_train);
  return attribute_similarity(cache.output());
}

namespace detail {

inline double grad_sq_norm(const NetGradients& g) {
  double s = 0.0;
  for (const DenseMatrix& m : g.weights) s += frobenius_sq(m);
  for (const DenseMatrix& m : g.biases) s += frobenius_sq(m);
  return s;
}

/// Scales gradients in place so the global norm is at most clip_norm.
/// Returns true when clipping activated.
inline bool clip_global_norm(NetGradients& g, double clip_norm) {
  const double norm = std::sqrt(grad_sq_norm(g));
  if (norm <= clip_norm || norm == 0.0) return false;
  const double scale = clip_norm / norm;
  for (DenseMatrix& m : g.weights) m *= scale;
  for (DenseMatrix& m : g.biases) m *= scale;
  return true;
}

inline bool clip_global_norm(DenseMatrix& g, double clip_norm) {
  const double norm = std::sqrt(frobenius_sq(g));
  if (norm <= clip_norm || norm == 0.0) return false;
  g *= clip_norm / norm;
  return true;
}

inline void apply_net_grads(FeedForwardNet& net, const NetGradients& g,
                            double lr) {
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    sgd_step(net.layers()[l].weight, g.weights[l], lr);
    sgd_step(net.layers()[l].bias, g.biases[l], lr);
  }
}

/// Pair-index submatrix (rows and columns gathered together).
inline DenseMatrix gather_pairs(const DenseMatrix& m,
                                const std::vector<std::size_t>& idx) {
  DenseMatrix out(idx.size(), idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j)
      out(i, j) = m(idx[i], idx[j]);
  return out;
}

}  // namespace detail

/// Runs the full alternating loop on the split's training pool and
/// returns the trained model with its per-epoch log. Deterministic for a
/// fixed (dataset, split, config) triple.
///
/// Within each epoch the step order is: theta_x, theta_y, theta_l, D1, D2,
/// C, B, A-refresh. Features of nets that a step holds fixed are computed
/// once per block rather than once per gradient pass; the alternating
/// semantics are unchanged because those features cannot move while their
/// nets are frozen.
inline std::pair<LaehModel, TrainLog> train(const PairedDataset& dataset,
                                            const ZeroShotSplit& split,
                                            const TrainConfig& config) {
  config.validate();
  if (split.train_idx.empty())
    throw std::invalid_argument("train: empty training pool");
  split.validate(dataset.labels);

  const std::vector<std::size_t>& train_idx = split.train_idx;
  const std::size_t n = train_idx.size();
  const DenseMatrix x1 = dataset.x1.gather_cols(train_idx);
  const DenseMatrix x2_raw = dataset.x2.gather_cols(train_idx);
  const DenseMatrix v_train = dataset.semantics_for(train_idx);
  const SimilarityMatrix s = build_similarity(dataset.labels_for(train_idx));

  SeededRng rng = SeededRng(config.seed).derive("init");
  LaehModel model = init_model(dataset.x1.rows(), dataset.x2.rows(),
                               dataset.semantic_vectors.rows(),
                               config.feature_dim, config.code_length,
                               config.hidden_sizes, n, rng,
                               config.normalize_text);
  const DenseMatrix x2 =
      model.normalize_text ? l2_normalize_cols(x2_raw) : x2_raw;

  const double attr_scale =
      config.scale_attr_by_c ? 1.0 / static_cast<double>(config.code_length)
                             : 1.0;

  AttributeSimilarity attr = refresh_attribute_matrix(model, dataset, split);

  TrainLog log;
  log.step_order = {"theta_x", "theta_y", "theta_l", "d1",
                    "d2",      "c",       "b",       "refresh_a"};

  double lr = config.learning_rate;
  SeededRng batch_rng = SeededRng(config.seed).derive("batch");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  auto forward_full = [&](const FeedForwardNet& net,
                          const DenseMatrix& input) {
    return net.forward(input).output();
  };

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochLog el;

    // Minibatch slices of the training pool; one full-pool slice when
    // batch_size is 0.
    std::vector<std::vector<std::size_t>> batches;
    if (config.batch_size == 0 || config.batch_size >= n) {
      batches.push_back(order);
    } else {
      batch_rng.shuffle(order);
      for (std::size_t start = 0; start < n; start += config.batch_size) {
        const std::size_t end = std::min(start + config.batch_size, n);
        batches.emplace_back(order.begin() + start, order.begin() + end);
      }
    }
    const bool full_batch = batches.size() == 1 && config.batch_size == 0;

    auto check_finite = [&](double value, const char* step) {
      if (!std::isfinite(value))
        throw std::runtime_error("train: non-finite loss at epoch " +
                                 std::to_string(epoch + 1) + ", step " + step);
    };

    // (1)-(2) Net blocks. For each block, features of the two frozen nets
    // are fixed for the whole block; only the trained net is re-run per
    // gradient pass.
    struct NetBlock {
      const char* name;
      int which;  // 0 = image, 1 = text, 2 = transform
    };
    for (const NetBlock block :
         {NetBlock{"theta_x", 0}, NetBlock{"theta_y", 1},
          NetBlock{"theta_l", 2}}) {
      FeedForwardNet& net = block.which == 0   ? model.image_net
                            : block.which == 1 ? model.text_net
                                               : model.transform_net;
      const DenseMatrix& net_input =
          block.which == 0 ? x1 : block.which == 1 ? x2 : v_train;
      const DenseMatrix static_f1 =
          block.which == 0 ? DenseMatrix() : forward_full(model.image_net, x1);
      const DenseMatrix static_f2 =
          block.which == 1 ? DenseMatrix() : forward_full(model.text_net, x2);
      const DenseMatrix static_fl =
          block.which == 2 ? DenseMatrix()
                           : forward_full(model.transform_net, v_train);

      const auto [p1, p2] = hash_functions(model);
      for (std::size_t it = 0; it < config.inner_iters; ++it) {
        for (const auto& cols : batches) {
          const NetCache cache = net.forward(net_input.gather_cols(cols));
          const DenseMatrix& fresh = cache.output();
          const DenseMatrix f1 =
              block.which == 0 ? fresh : static_f1.gather_cols(cols);
          const DenseMatrix f2 =
              block.which == 1 ? fresh : static_f2.gather_cols(cols);
          const DenseMatrix fl =
              block.which == 2 ? fresh : static_fl.gather_cols(cols);
          const SimilarityMatrix s_b{full_batch ? s.s
                                                : detail::gather_pairs(s.s, cols)};
          const AttributeSimilarity a_b{
              full_batch ? attr.a : detail::gather_pairs(attr.a, cols)};
          const FeatureGradients fg = grad_features(
              f1, f2, fl, model.codes.gather_cols(cols), p1, p2, s_b, a_b,
              config.weights, attr_scale);
          const DenseMatrix& upstream =
              block.which == 0 ? fg.f1 : block.which == 1 ? fg.f2 : fg.fl;
          check_finite(frobenius_sq(upstream), block.name);
          NetGradients ng = net.backward(cache, upstream);
          if (detail::clip_global_norm(ng, config.clip_norm)) ++el.clip_events;
          detail::apply_net_grads(net, ng, lr);
        }
      }
    }

    // (3) D1, D2 and (4) C. All three nets are frozen from here to the end
    // of the epoch, so their features are computed once.
    const DenseMatrix f1_full = forward_full(model.image_net, x1);
    const DenseMatrix f2_full = forward_full(model.text_net, x2);
    for (const char* step : {"d1", "d2", "c"}) {
      for (std::size_t it = 0; it < config.inner_iters; ++it) {
        for (const auto& cols : batches) {
          const DenseMatrix f1 =
              full_batch ? f1_full : f1_full.gather_cols(cols);
          const DenseMatrix f2 =
              full_batch ? f2_full : f2_full.gather_cols(cols);
          const AttributeSimilarity a_b{
              full_batch ? attr.a : detail::gather_pairs(attr.a, cols)};
          const auto [p1, p2] = hash_functions(model);
          ProjectionGradients pg = grad_projections(
              f1, f2, full_batch ? model.codes : model.codes.gather_cols(cols),
              p1, p2, a_b, config.weights, attr_scale);
          DenseMatrix& grad = step[0] == 'c' ? pg.c
                              : step[1] == '1' ? pg.d1
                                               : pg.d2;
          check_finite(frobenius_sq(grad), step);
          if (detail::clip_global_norm(grad, config.clip_norm))
            ++el.clip_events;
          DenseMatrix& target = step[0] == 'c' ? model.c_proj
                                : step[1] == '1' ? model.d1_proj
                                                 : model.d2_proj;
          sgd_step(target, grad, lr);
        }
      }
    }

    // (5) B: closed-form sign update over the full training pool.
    const DenseMatrix fl_full = forward_full(model.transform_net, v_train);
    {
      const auto [p1, p2] = hash_functions(model);
      DenseMatrix new_b = update_b(p1, p2, f1_full, f2_full, config.weights);
      for (std::size_t i = 0; i < new_b.size(); ++i)
        if (new_b.data()[i] != model.codes.data()[i]) ++el.b_flips;
      model.codes = std::move(new_b);

      el.loss = total_loss(f1_full, f2_full, fl_full, model.codes, p1, p2, s,
                           attr, config.weights, attr_scale);
      check_finite(el.loss.total, "b");
    }

    // (6) Refresh A from the updated transform net (same embeddings that
    // were just computed).
    attr = attribute_similarity(fl_full);

    lr *= config.lr_decay;
    el.seconds = std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
    log.epochs.push_back(std::move(el));
  }

  return {std::move(model), std::move(log)};
}

}  // namespace laeh
