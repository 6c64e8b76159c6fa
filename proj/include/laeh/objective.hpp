// The training objective and its exact analytic gradients.
//
// With features F1, F2, label embeddings Fl, codes B, projections
// P1 = C + D1 and P2 = C + D2, similarity S and attribute similarity A:
//
//   J  =  sum_m sum_ij [ softplus(Phi^m_ij) - s_ij * Phi^m_ij ]
//       + alpha1 |B - P1 F1|_F^2 + alpha2 |B - P2 F2|_F^2
//       + beta | gamma (P1 F1)^T (P2 F2) - A |_F^2
//
// where Phi^m = (F^m)^T Fl and gamma is an optional 1/c scaling of the
// inner-product matrix (default 1). Gradients are derived from this
// expression and validated against central finite differences.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "laeh/dataset.hpp"
#include "laeh/matrix.hpp"

namespace laeh {

struct LossWeights {
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double beta = 1.0;

  void validate() const {
    if (alpha1 < 0.0 || alpha2 < 0.0 || beta < 0.0)
      throw std::invalid_argument("loss weights must be nonnegative");
  }
};

/// Cosine similarity between label embedding columns; n x n, diagonal 1.
struct AttributeSimilarity {
  DenseMatrix a;
};

struct LossBreakdown {
  double j1 = 0.0;
  double j3 = 0.0;
  double j_attr = 0.0;
  double total = 0.0;
};

inline AttributeSimilarity attribute_similarity(const DenseMatrix& f_label) {
  const std::size_t n = f_label.cols();
  std::vector<double> norms(n);
  for (std::size_t j = 0; j < n; ++j) {
    double ss = 0.0;
    for (std::size_t r = 0; r < f_label.rows(); ++r)
      ss += f_label(r, j) * f_label(r, j);
    if (ss == 0.0)
      throw std::invalid_argument(
          "attribute_similarity: zero embedding column " + std::to_string(j));
    norms[j] = std::sqrt(ss);
  }
  DenseMatrix gram = matmul(transpose(f_label), f_label);
  AttributeSimilarity out{DenseMatrix(n, n)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double v = gram(i, j) / (norms[i] * norms[j]);
      if (v > 1.0) v = 1.0;
      if (v < -1.0) v = -1.0;
      out.a(i, j) = v;
    }
  return out;
}

namespace detail {

inline void require_shape(const DenseMatrix& m, std::size_t rows,
                          std::size_t cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols)
    throw std::invalid_argument(std::string(what) + ": expected " +
                                std::to_string(rows) + "x" +
                                std::to_string(cols) + ", got " + shape_of(m));
}

}  // namespace detail

/// Pairwise likelihood loss over both modalities. Every per-pair term
/// softplus(Phi) - s*Phi is nonnegative for s in {0,1}.
inline double loss_j1(const DenseMatrix& f1, const DenseMatrix& f2,
                      const DenseMatrix& f_label, const SimilarityMatrix& s) {
  const std::size_t d = f_label.rows();
  const std::size_t n = f_label.cols();
  detail::require_shape(f1, d, n, "loss_j1: F1");
  detail::require_shape(f2, d, n, "loss_j1: F2");
  detail::require_shape(s.s, n, n, "loss_j1: S");
  double total = 0.0;
  for (const DenseMatrix* fm : {&f1, &f2}) {
    const DenseMatrix phi = matmul(transpose(*fm), f_label);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        total += softplus(phi(i, j)) - s.s(i, j) * phi(i, j);
  }
  return total;
}

/// Hash approximation loss: alpha1 |B - P1 F1|^2 + alpha2 |B - P2 F2|^2.
inline double loss_j3(const DenseMatrix& b, const DenseMatrix& p1,
                      const DenseMatrix& p2, const DenseMatrix& f1,
                      const DenseMatrix& f2, const LossWeights& w) {
  const DenseMatrix u = matmul(p1, f1);
  const DenseMatrix v = matmul(p2, f2);
  detail::require_shape(b, u.rows(), u.cols(), "loss_j3: B vs P1*F1");
  detail::require_shape(b, v.rows(), v.cols(), "loss_j3: B vs P2*F2");
  return w.alpha1 * frobenius_sq(b - u) + w.alpha2 * frobenius_sq(b - v);
}

/// Attribute similarity loss: beta | gamma (P1 F1)^T (P2 F2) - A |^2.
inline double loss_attr(const DenseMatrix& p1, const DenseMatrix& p2,
                        const DenseMatrix& f1, const DenseMatrix& f2,
                        const AttributeSimilarity& a, double beta,
                        double attr_scale = 1.0) {
  const DenseMatrix u = matmul(p1, f1);
  const DenseMatrix v = matmul(p2, f2);
  DenseMatrix r = matmul(transpose(u), v);
  r *= attr_scale;
  detail::require_shape(a.a, r.rows(), r.cols(), "loss_attr: A");
  r -= a.a;
  return beta * frobenius_sq(r);
}

/// The paper's direct hash-learning loss |(1/c) B^T B - A|^2. Reported as
/// a diagnostic only; the relaxed attribute term is what gets optimized.
inline double loss_j2_diagnostic(const DenseMatrix& b,
                                 const AttributeSimilarity& a) {
  const double inv_c = 1.0 / static_cast<double>(b.rows());
  DenseMatrix g = matmul(transpose(b), b);
  g *= inv_c;
  detail::require_shape(a.a, g.rows(), g.cols(), "loss_j2: A");
  g -= a.a;
  return frobenius_sq(g);
}

inline LossBreakdown total_loss(const DenseMatrix& f1, const DenseMatrix& f2,
                                const DenseMatrix& f_label,
                                const DenseMatrix& b, const DenseMatrix& p1,
                                const DenseMatrix& p2,
                                const SimilarityMatrix& s,
                                const AttributeSimilarity& a,
                                const LossWeights& w, double attr_scale = 1.0) {
  LossBreakdown out;
  out.j1 = loss_j1(f1, f2, f_label, s);
  out.j3 = loss_j3(b, p1, p2, f1, f2, w);
  out.j_attr = loss_attr(p1, p2, f1, f2, a, w.beta, attr_scale);
  out.total = out.j1 + out.j3 + out.j_attr;
  return out;
}

struct FeatureGradients {
  DenseMatrix f1;
  DenseMatrix f2;
  DenseMatrix fl;
};

struct ProjectionGradients {
  DenseMatrix c;
  DenseMatrix d1;
  DenseMatrix d2;
};

/// dJ/dF1, dJ/dF2, dJ/dFl with A held fixed. The likelihood part uses
/// G^m = sigmoid(Phi^m) - S; the quadratic parts follow from the
/// Frobenius terms of the objective.
inline FeatureGradients grad_features(const DenseMatrix& f1,
                                      const DenseMatrix& f2,
                                      const DenseMatrix& f_label,
                                      const DenseMatrix& b,
                                      const DenseMatrix& p1,
                                      const DenseMatrix& p2,
                                      const SimilarityMatrix& s,
                                      const AttributeSimilarity& a,
                                      const LossWeights& w,
                                      double attr_scale = 1.0) {
  const std::size_t d = f_label.rows();
  const std::size_t n = f_label.cols();
  detail::require_shape(f1, d, n, "grad_features: F1");
  detail::require_shape(f2, d, n, "grad_features: F2");
  detail::require_shape(s.s, n, n, "grad_features: S");
  detail::require_shape(a.a, n, n, "grad_features: A");

  auto likelihood_residual = [&](const DenseMatrix& fm) {
    DenseMatrix g = matmul(transpose(fm), f_label);
    for (std::size_t i = 0; i < g.size(); ++i)
      g.data()[i] = sigmoid(g.data()[i]) - s.s.data()[i];
    return g;
  };
  const DenseMatrix g1 = likelihood_residual(f1);
  const DenseMatrix g2 = likelihood_residual(f2);

  const DenseMatrix u = matmul(p1, f1);
  const DenseMatrix v = matmul(p2, f2);
  DenseMatrix r = matmul(transpose(u), v);
  r *= attr_scale;
  r -= a.a;

  const double j3_coeff1 = -2.0 * w.alpha1;
  const double j3_coeff2 = -2.0 * w.alpha2;
  const double attr_coeff = 2.0 * w.beta * attr_scale;

  FeatureGradients out;
  out.f1 = matmul(f_label, transpose(g1)) +
           j3_coeff1 * matmul(transpose(p1), b - u) +
           attr_coeff * matmul(transpose(p1), matmul(v, transpose(r)));
  out.f2 = matmul(f_label, transpose(g2)) +
           j3_coeff2 * matmul(transpose(p2), b - v) +
           attr_coeff * matmul(transpose(p2), matmul(u, r));
  out.fl = matmul(f1, g1) + matmul(f2, g2);
  return out;
}

/// dJ/dC, dJ/dD1, dJ/dD2 with A held fixed. C accumulates both modality
/// contributions since it appears in both hash functions.
inline ProjectionGradients grad_projections(const DenseMatrix& f1,
                                            const DenseMatrix& f2,
                                            const DenseMatrix& b,
                                            const DenseMatrix& p1,
                                            const DenseMatrix& p2,
                                            const AttributeSimilarity& a,
                                            const LossWeights& w,
                                            double attr_scale = 1.0) {
  const DenseMatrix u = matmul(p1, f1);
  const DenseMatrix v = matmul(p2, f2);
  detail::require_shape(b, u.rows(), u.cols(), "grad_projections: B");
  DenseMatrix r = matmul(transpose(u), v);
  r *= attr_scale;
  detail::require_shape(a.a, r.rows(), r.cols(), "grad_projections: A");
  r -= a.a;

  const double attr_coeff = 2.0 * w.beta * attr_scale;
  DenseMatrix lhs1 = (-2.0 * w.alpha1) * (b - u) +
                     attr_coeff * matmul(v, transpose(r));
  DenseMatrix lhs2 = (-2.0 * w.alpha2) * (b - v) + attr_coeff * matmul(u, r);

  ProjectionGradients out;
  out.d1 = matmul(lhs1, transpose(f1));
  out.d2 = matmul(lhs2, transpose(f2));
  out.c = out.d1 + out.d2;
  return out;
}

/// Central-difference gradient audit. Perturbs each scalar in place by
/// +/- h, compares (L(p+h) - L(p-h)) / 2h against the analytic value, and
/// returns the worst relative error with denominators floored at 1e-8.
inline double finite_diff_check(const std::function<double()>& loss_fn,
                                const std::vector<double*>& params,
                                const std::vector<double>& analytic,
                                double h) {
  if (params.size() != analytic.size())
    throw std::invalid_argument(
        "finite_diff_check: parameter/gradient count mismatch");
  if (h < 1e-7 || h > 1e-3)
    throw std::invalid_argument("finite_diff_check: h out of [1e-7, 1e-3]");
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i];
    const double saved = *p;
    *p = saved + h;
    const double up = loss_fn();
    *p = saved - h;
    const double down = loss_fn();
    *p = saved;
    const double fd = (up - down) / (2.0 * h);
    const double g = analytic[i];
    const double denom = std::max({std::abs(fd), std::abs(g), 1e-8});
    worst = std::max(worst, std::abs(fd - g) / denom);
  }
  return worst;
}

}  // namespace laeh
