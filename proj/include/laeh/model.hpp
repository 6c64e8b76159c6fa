// All learnable state: the two modality encoders, the label transform
// network, the common/individual projections C, D1, D2, and the binary
// code matrix B, plus checkpoint serialization.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "laeh/io.hpp"
#include "laeh/matrix.hpp"
#include "laeh/net.hpp"

namespace laeh {

struct LaehModel {
  FeedForwardNet image_net;      // d1 -> d
  FeedForwardNet text_net;       // d2 -> d
  FeedForwardNet transform_net;  // v -> d
  DenseMatrix c_proj;            // c x d, shared component
  DenseMatrix d1_proj;           // c x d, image-side component
  DenseMatrix d2_proj;           // c x d, text-side component
  DenseMatrix codes;             // c x n_train, entries in {-1,+1}
  bool normalize_text = false;   // optional per-column L2 norm on raw text
  std::uint64_t init_seed = 0;   // seed the parameters were drawn from

  std::size_t feature_dim() const { return image_net.output_dim(); }
  std::size_t code_length() const { return c_proj.rows(); }
};

/// Features for one batch: F1, F2, Fl (each d x batch) together with the
/// per-net caches backpropagation needs.
struct ForwardCache {
  NetCache image;
  NetCache text;
  NetCache transform;

  const DenseMatrix& f1() const { return image.output(); }
  const DenseMatrix& f2() const { return text.output(); }
  const DenseMatrix& fl() const { return transform.output(); }
};

inline DenseMatrix l2_normalize_cols(const DenseMatrix& m) {
  DenseMatrix out = m;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double ss = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) ss += m(r, c) * m(r, c);
    if (ss > 0.0) {
      const double inv = 1.0 / std::sqrt(ss);
      for (std::size_t r = 0; r < m.rows(); ++r) out(r, c) *= inv;
    }
  }
  return out;
}

/// Fresh model. Net weights are fan-in-scaled uniforms with zero biases,
/// projections are small uniforms (scale 0.01), and B starts as the sign
/// of a Gaussian draw with one column per training instance.
inline LaehModel init_model(std::size_t d1, std::size_t d2, std::size_t v,
                            std::size_t d, std::size_t c,
                            const std::vector<std::size_t>& hidden_sizes,
                            std::size_t n_train, SeededRng& rng,
                            bool normalize_text = false) {
  if (d1 == 0 || d2 == 0 || v == 0 || d == 0 || c == 0)
    throw std::invalid_argument("init_model: all dimensions must be positive");
  LaehModel model;
  model.image_net = FeedForwardNet(d1, hidden_sizes, d, rng);
  model.text_net = FeedForwardNet(d2, hidden_sizes, d, rng);
  model.transform_net = FeedForwardNet(v, hidden_sizes, d, rng);
  model.c_proj = rng.uniform_matrix(c, d, -0.01, 0.01);
  model.d1_proj = rng.uniform_matrix(c, d, -0.01, 0.01);
  model.d2_proj = rng.uniform_matrix(c, d, -0.01, 0.01);
  model.codes = sign_matrix(rng.gaussian_matrix(c, n_train));
  model.normalize_text = normalize_text;
  model.init_seed = rng.seed();
  return model;
}

inline ForwardCache forward_features(const LaehModel& model,
                                     const DenseMatrix& x1_batch,
                                     const DenseMatrix& x2_batch,
                                     const DenseMatrix& v_batch) {
  if (x1_batch.cols() != x2_batch.cols() || x1_batch.cols() != v_batch.cols())
    throw std::invalid_argument(
        "forward_features: batch column counts disagree (" +
        shape_of(x1_batch) + ", " + shape_of(x2_batch) + ", " +
        shape_of(v_batch) + ")");
  ForwardCache cache;
  cache.image = model.image_net.forward(x1_batch);
  cache.text = model.text_net.forward(
      model.normalize_text ? l2_normalize_cols(x2_batch) : x2_batch);
  cache.transform = model.transform_net.forward(v_batch);
  return cache;
}

/// P1 = C + D1, P2 = C + D2.
inline std::pair<DenseMatrix, DenseMatrix> hash_functions(
    const LaehModel& model) {
  return {model.c_proj + model.d1_proj, model.c_proj + model.d2_proj};
}

/// Hash raw feature columns of one modality: sign((C + Dm) * net_m(X)).
inline DenseMatrix encode(const LaehModel& model,
                          const DenseMatrix& raw_features, int modality) {
  if (modality != 1 && modality != 2)
    throw std::invalid_argument("encode: modality must be 1 or 2, got " +
                                std::to_string(modality));
  const auto [p1, p2] = hash_functions(model);
  if (modality == 1) {
    NetCache cache = model.image_net.forward(raw_features);
    return sign_matrix(matmul(p1, cache.output()));
  }
  const DenseMatrix& input =
      model.normalize_text ? l2_normalize_cols(raw_features) : raw_features;
  NetCache cache = model.text_net.forward(input);
  return sign_matrix(matmul(p2, cache.output()));
}

namespace detail {

inline void save_net(const FeedForwardNet& net, const std::string& dir,
                     const std::string& prefix, KeyValueFile& manifest) {
  std::string acts;
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    const DenseLayer& layer = net.layers()[l];
    save_matrix(layer.weight,
                dir + "/" + prefix + "_w" + std::to_string(l) + ".mat");
    save_matrix(layer.bias,
                dir + "/" + prefix + "_b" + std::to_string(l) + ".mat");
    if (l) acts += ",";
    acts += activation_name(layer.activation);
  }
  manifest.set(prefix + "_layers", std::to_string(net.n_layers()));
  manifest.set(prefix + "_activations", acts);
}

inline FeedForwardNet load_net(const std::string& dir,
                               const std::string& prefix,
                               const KeyValueFile& manifest) {
  const std::size_t n_layers =
      static_cast<std::size_t>(manifest.get_long(prefix + "_layers"));
  std::vector<std::string> act_names;
  {
    std::istringstream ss(manifest.get(prefix + "_activations"));
    std::string tok;
    while (std::getline(ss, tok, ',')) act_names.push_back(tok);
  }
  if (act_names.size() != n_layers)
    throw IoError("checkpoint: " + prefix + " activation list length " +
                  std::to_string(act_names.size()) + " != layer count " +
                  std::to_string(n_layers));
  FeedForwardNet net;
  for (std::size_t l = 0; l < n_layers; ++l) {
    DenseLayer layer;
    layer.weight =
        load_matrix(dir + "/" + prefix + "_w" + std::to_string(l) + ".mat");
    layer.bias =
        load_matrix(dir + "/" + prefix + "_b" + std::to_string(l) + ".mat");
    layer.activation = activation_from_name(act_names[l]);
    net.layers().push_back(std::move(layer));
  }
  return net;
}

}  // namespace detail

/// Checkpoint directory: one matrix file per parameter plus a key=value
/// manifest. load(save(model)) is bit-exact.
inline void save_model(const LaehModel& model, const std::string& dir) {
  KeyValueFile manifest;
  manifest.set("d1", std::to_string(model.image_net.input_dim()));
  manifest.set("d2", std::to_string(model.text_net.input_dim()));
  manifest.set("v", std::to_string(model.transform_net.input_dim()));
  manifest.set("d", std::to_string(model.feature_dim()));
  manifest.set("c", std::to_string(model.code_length()));
  manifest.set("n_train", std::to_string(model.codes.cols()));
  manifest.set("normalize_text", model.normalize_text ? "1" : "0");
  manifest.set("init_seed", std::to_string(model.init_seed));
  detail::save_net(model.image_net, dir, "image_net", manifest);
  detail::save_net(model.text_net, dir, "text_net", manifest);
  detail::save_net(model.transform_net, dir, "transform_net", manifest);
  save_matrix(model.c_proj, dir + "/c_proj.mat");
  save_matrix(model.d1_proj, dir + "/d1_proj.mat");
  save_matrix(model.d2_proj, dir + "/d2_proj.mat");
  save_matrix(model.codes, dir + "/codes.mat");
  manifest.save(dir + "/model.manifest");
}

inline LaehModel load_model(const std::string& dir) {
  const KeyValueFile manifest = KeyValueFile::load(dir + "/model.manifest");
  LaehModel model;
  model.image_net = detail::load_net(dir, "image_net", manifest);
  model.text_net = detail::load_net(dir, "text_net", manifest);
  model.transform_net = detail::load_net(dir, "transform_net", manifest);
  model.c_proj = load_matrix(dir + "/c_proj.mat");
  model.d1_proj = load_matrix(dir + "/d1_proj.mat");
  model.d2_proj = load_matrix(dir + "/d2_proj.mat");
  model.codes = load_matrix(dir + "/codes.mat");
  model.normalize_text = manifest.get_or("normalize_text", "0") == "1";
  model.init_seed = static_cast<std::uint64_t>(
      std::stoull(manifest.get_or("init_seed", "0")));
  return model;
}

}  // namespace laeh
