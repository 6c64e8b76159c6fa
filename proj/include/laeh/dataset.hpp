// Paired two-modality dataset model, label similarity, the synthetic
// generator used in place of the public benchmark corpora, and dataset
// manifest I/O.
#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "laeh/io.hpp"
#include "laeh/matrix.hpp"

namespace laeh {

/// Aligned two-modality features with single-label class assignments and
/// one semantic vector per class. Instances are columns throughout.
struct PairedDataset {
  DenseMatrix x1;                // d1 x n
  DenseMatrix x2;                // d2 x n
  std::vector<int> labels;       // n entries in [0, K)
  std::vector<std::string> class_names;  // optional, K entries when present
  DenseMatrix semantic_vectors;  // v x K, one column per class

  std::size_t n_instances() const { return labels.size(); }
  std::size_t n_classes() const { return semantic_vectors.cols(); }

  void validate() const {
    const std::size_t n = labels.size();
    if (x1.cols() != n || x2.cols() != n)
      throw std::invalid_argument(
          "dataset: modality column counts disagree with label count (x1 " +
          shape_of(x1) + ", x2 " + shape_of(x2) + ", labels " +
          std::to_string(n) + ")");
    const std::size_t k = semantic_vectors.cols();
    for (std::size_t i = 0; i < n; ++i)
      if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k)
        throw std::invalid_argument("dataset: label " +
                                    std::to_string(labels[i]) +
                                    " out of range for " + std::to_string(k) +
                                    " classes (instance " + std::to_string(i) +
                                    ")");
    if (!class_names.empty() && class_names.size() != k)
      throw std::invalid_argument("dataset: class name count mismatch");
    for (std::size_t c = 0; c < k; ++c) {
      bool all_zero = true;
      for (std::size_t r = 0; r < semantic_vectors.rows() && all_zero; ++r)
        if (semantic_vectors(r, c) != 0.0) all_zero = false;
      if (all_zero)
        throw std::invalid_argument("dataset: semantic vector for class " +
                                    std::to_string(c) + " is all-zero");
    }
  }

  /// Per-instance semantic matrix (v x |idx|): column-gather of the
  /// per-class vectors through the label assignments.
  DenseMatrix semantics_for(const std::vector<std::size_t>& idx) const {
    DenseMatrix out(semantic_vectors.rows(), idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const std::size_t cls = static_cast<std::size_t>(labels[idx[j]]);
      for (std::size_t r = 0; r < semantic_vectors.rows(); ++r)
        out(r, j) = semantic_vectors(r, cls);
    }
    return out;
  }

  std::vector<int> labels_for(const std::vector<std::size_t>& idx) const {
    std::vector<int> out(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) out[j] = labels[idx[j]];
    return out;
  }
};

/// n x n binary matrix with s_ij = 1 iff labels i and j are equal.
struct SimilarityMatrix {
  DenseMatrix s;
};

inline SimilarityMatrix build_similarity(const std::vector<int>& labels) {
  if (labels.empty())
    throw std::invalid_argument("build_similarity: empty label list");
  const std::size_t n = labels.size();
  SimilarityMatrix sim{DenseMatrix(n, n)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      sim.s(i, j) = labels[i] == labels[j] ? 1.0 : 0.0;
  return sim;
}

/// Desk-scale synthetic stand-in for the benchmark datasets. Class
/// prototypes are unit Gaussians in R^v; each modality applies a fixed
/// random affine map to the instance's prototype plus feature noise, and
/// modality 1 additionally passes through tanh. The prototypes double as
/// the semantic vectors, so same-class instances share attribute structure.
inline PairedDataset synth_dataset(std::size_t k_classes,
                                   std::size_t per_class, std::size_t d1,
                                   std::size_t d2, std::size_t v,
                                   double noise_sigma, SeededRng& rng) {
  if (k_classes == 0 || per_class == 0 || d1 == 0 || d2 == 0 || v == 0)
    throw std::invalid_argument("synth_dataset: all counts must be positive");

  DenseMatrix prototypes = rng.gaussian_matrix(v, k_classes);
  // A zero prototype column would break downstream cosines; regenerate the
  // (measure-zero) offender.
  for (std::size_t c = 0; c < k_classes; ++c) {
    bool all_zero = true;
    for (std::size_t r = 0; r < v && all_zero; ++r)
      if (prototypes(r, c) != 0.0) all_zero = false;
    while (all_zero) {
      for (std::size_t r = 0; r < v; ++r) {
        prototypes(r, c) = rng.gaussian();
        if (prototypes(r, c) != 0.0) all_zero = false;
      }
    }
  }

  const double map_scale = 1.0 / std::sqrt(static_cast<double>(v));
  DenseMatrix w1 = rng.gaussian_matrix(d1, v, map_scale);
  DenseMatrix b1 = rng.gaussian_matrix(d1, 1, 0.1);
  DenseMatrix w2 = rng.gaussian_matrix(d2, v, map_scale);
  DenseMatrix b2 = rng.gaussian_matrix(d2, 1, 0.1);

  const std::size_t n = k_classes * per_class;
  PairedDataset ds;
  ds.x1 = DenseMatrix(d1, n);
  ds.x2 = DenseMatrix(d2, n);
  ds.labels.resize(n);
  ds.semantic_vectors = prototypes;

  DenseMatrix class_feat1 = matmul(w1, prototypes);  // d1 x K
  DenseMatrix class_feat2 = matmul(w2, prototypes);  // d2 x K

  std::size_t col = 0;
  for (std::size_t k = 0; k < k_classes; ++k) {
    for (std::size_t i = 0; i < per_class; ++i, ++col) {
      ds.labels[col] = static_cast<int>(k);
      for (std::size_t r = 0; r < d1; ++r) {
        const double raw = class_feat1(r, k) + b1(r, 0) +
                           noise_sigma * rng.gaussian();
        ds.x1(r, col) = std::tanh(raw);
      }
      for (std::size_t r = 0; r < d2; ++r)
        ds.x2(r, col) =
            class_feat2(r, k) + b2(r, 0) + noise_sigma * rng.gaussian();
    }
  }
  ds.validate();
  return ds;
}

/// Writes x1/x2/semantics matrices, the label list, optional class names,
/// and a manifest referencing them. Returns the manifest path.
inline std::string save_dataset(const PairedDataset& ds,
                                const std::string& dir) {
  save_matrix(ds.x1, dir + "/x1.mat");
  save_matrix(ds.x2, dir + "/x2.mat");
  save_labels(ds.labels, dir + "/labels.txt");
  save_matrix(ds.semantic_vectors, dir + "/semantics.mat");
  KeyValueFile manifest;
  manifest.set("x1", "x1.mat");
  manifest.set("x2", "x2.mat");
  manifest.set("labels", "labels.txt");
  manifest.set("semantics", "semantics.mat");
  if (!ds.class_names.empty()) {
    std::ofstream names(dir + "/names.txt", std::ios::binary);
    if (!names) throw IoError("cannot open for writing: " + dir + "/names.txt");
    for (const auto& nm : ds.class_names) names << nm << "\n";
    manifest.set("names", "names.txt");
  }
  const std::string manifest_path = dir + "/dataset.manifest";
  manifest.save(manifest_path);
  return manifest_path;
}

inline PairedDataset load_dataset(const std::string& manifest_path) {
  const KeyValueFile manifest = KeyValueFile::load(manifest_path);
  const std::string dir = dirname_of(manifest_path);
  PairedDataset ds;
  ds.x1 = load_matrix(join_path(dir, manifest.get("x1")));
  ds.x2 = load_matrix(join_path(dir, manifest.get("x2")));
  ds.labels = load_labels(join_path(dir, manifest.get("labels")));
  ds.semantic_vectors = load_matrix(join_path(dir, manifest.get("semantics")));
  if (manifest.has("names")) {
    std::ifstream names(join_path(dir, manifest.get("names")),
                        std::ios::binary);
    if (!names)
      throw IoError("cannot open: " + join_path(dir, manifest.get("names")));
    std::string line;
    while (std::getline(names, line))
      if (!line.empty()) ds.class_names.push_back(line);
  }
  ds.validate();
  return ds;
}

}  // namespace laeh
