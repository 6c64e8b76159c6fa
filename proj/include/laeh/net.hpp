// Multilayer feed-forward encoder: dense layers with ReLU hidden
// activations and an identity output layer, forward caching, and manual
// backpropagation. ReLU's subgradient at 0 is taken as 0.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "laeh/matrix.hpp"

namespace laeh {

enum class Activation { kRelu, kIdentity };

inline std::string activation_name(Activation a) {
  return a == Activation::kRelu ? "relu" : "identity";
}

inline Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

struct DenseLayer {
  DenseMatrix weight;  // out x in
  DenseMatrix bias;    // out x 1
  Activation activation = Activation::kIdentity;
};

/// Per-layer pre-activations and activations from one forward pass;
/// activations[0] is the input batch.
struct NetCache {
  std::vector<DenseMatrix> pre_activations;
  std::vector<DenseMatrix> activations;

  const DenseMatrix& output() const { return activations.back(); }
};

struct NetGradients {
  std::vector<DenseMatrix> weights;
  std::vector<DenseMatrix> biases;
};

class FeedForwardNet {
 public:
  FeedForwardNet() = default;

  /// Layer sizes: input_dim -> hidden... -> output_dim, ReLU on hidden
  /// layers, identity at the output. Weights ~ U(-1/sqrt(fan_in),
  /// 1/sqrt(fan_in)), biases zero.
  FeedForwardNet(std::size_t input_dim,
                 const std::vector<std::size_t>& hidden_sizes,
                 std::size_t output_dim, SeededRng& rng) {
    std::vector<std::size_t> dims;
    dims.push_back(input_dim);
    for (std::size_t h : hidden_sizes) dims.push_back(h);
    dims.push_back(output_dim);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      const double scale = 1.0 / std::sqrt(static_cast<double>(dims[l]));
      DenseLayer layer;
      layer.weight = rng.uniform_matrix(dims[l + 1], dims[l], -scale, scale);
      layer.bias = DenseMatrix(dims[l + 1], 1);
      layer.activation = l + 2 < dims.size() ? Activation::kRelu
                                             : Activation::kIdentity;
      layers_.push_back(std::move(layer));
    }
  }

  std::size_t input_dim() const { return layers_.front().weight.cols(); }
  std::size_t output_dim() const { return layers_.back().weight.rows(); }
  std::size_t n_layers() const { return layers_.size(); }

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  NetCache forward(const DenseMatrix& input) const {
    if (input.rows() != input_dim())
      throw std::invalid_argument("net forward: input dim " +
                                  std::to_string(input.rows()) +
                                  " does not match net input " +
                                  std::to_string(input_dim()));
    NetCache cache;
    cache.activations.push_back(input);
    for (const DenseLayer& layer : layers_) {
      DenseMatrix z = matmul(layer.weight, cache.activations.back());
      for (std::size_t r = 0; r < z.rows(); ++r) {
        const double b = layer.bias(r, 0);
        double* row = z.row_ptr(r);
        for (std::size_t c = 0; c < z.cols(); ++c) row[c] += b;
      }
      DenseMatrix a = z;
      if (layer.activation == Activation::kRelu) {
        double* p = a.data();
        for (std::size_t i = 0; i < a.size(); ++i)
          if (p[i] < 0.0) p[i] = 0.0;
      }
      cache.pre_activations.push_back(std::move(z));
      cache.activations.push_back(std::move(a));
    }
    return cache;
  }

  /// Exact weight/bias gradients given the loss gradient with respect to
  /// the net output. Input gradients are not produced; raw features are
  /// data, not parameters.
  NetGradients backward(const NetCache& cache,
                        const DenseMatrix& grad_wrt_output) const {
    const DenseMatrix& out = cache.output();
    if (grad_wrt_output.rows() != out.rows() ||
        grad_wrt_output.cols() != out.cols())
      throw std::invalid_argument("net backward: upstream gradient shape " +
                                  shape_of(grad_wrt_output) +
                                  " does not match output " + shape_of(out));
    NetGradients grads;
    grads.weights.resize(layers_.size());
    grads.biases.resize(layers_.size());

    DenseMatrix delta = grad_wrt_output;
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const DenseLayer& layer = layers_[l];
      if (layer.activation == Activation::kRelu) {
        const DenseMatrix& z = cache.pre_activations[l];
        double* d = delta.data();
        const double* zp = z.data();
        for (std::size_t i = 0; i < delta.size(); ++i)
          if (zp[i] <= 0.0) d[i] = 0.0;
      }
      grads.weights[l] = matmul(delta, transpose(cache.activations[l]));
      DenseMatrix db(layer.bias.rows(), 1);
      for (std::size_t r = 0; r < delta.rows(); ++r) {
        double s = 0.0;
        const double* row = delta.row_ptr(r);
        for (std::size_t c = 0; c < delta.cols(); ++c) s += row[c];
        db(r, 0) = s;
      }
      grads.biases[l] = std::move(db);
      if (l > 0) delta = matmul(transpose(layer.weight), delta);
    }
    return grads;
  }

 private:
  std::vector<DenseLayer> layers_;
};

}  // namespace laeh
