#pragma once

#include "ald/fields.hpp"
#include "ald/types.hpp"

#include <functional>
#include <memory>

namespace ald {

/// Lorentzian metric field with signature (+,-,...,-). Evaluations are
/// verified lazily (symmetry to 1e-14, eigenvalue signs) the first time a
/// point is seen; the per-point check cache is guarded, so concurrent use is
/// safe. Preset metrics carry analytic derivatives; user metrics without one
/// fall back to 4th-order central differences with step h = 1e-5 (1 + |x|).
class MetricField {
 public:
  using Evaluator = std::function<Mat(const Vec&)>;
  /// D(k, i, j) = d_k eta_ij
  using Derivative = std::function<Tensor3(const Vec&)>;

  MetricField(int dim, Evaluator value, Derivative derivative = nullptr,
              bool constant_in_x = false);

  static MetricField minkowski(int dim);

  int dim() const { return n_; }
  bool constant() const { return constant_; }

  Mat value(const Vec& x) const;
  Tensor3 derivative(const Vec& x) const;
  Mat inverse(const Vec& x) const;

  double inner(const Vec& x, const Vec& a, const Vec& b) const;

 private:
  struct CheckCache;
  int n_;
  Evaluator value_;
  Derivative derivative_;
  bool constant_;
  std::shared_ptr<CheckCache> checks_;

  void verify(const Mat& g, const Vec& x) const;
};

/// Levi-Civita coefficients 1/2 eta^il (d_j eta_lk + d_k eta_lj - d_l eta_jk).
Tensor3 christoffel_at(const MetricField& metric, const Vec& x);

/// Positive-definite metric on one tangent space.
class RiemannianMetric {
 public:
  explicit RiemannianMetric(Mat g);

  const Mat& matrix() const { return g_; }
  int dim() const { return static_cast<int>(g_.rows()); }

  double norm(const Vec& v) const;
  double inner(const Vec& a, const Vec& b) const { return a.dot(g_ * b); }
  /// Flat chord distance on the tangent space.
  double distance(const Vec& a, const Vec& b) const { return norm(a - b); }

  const Mat& sqrt() const;
  const Mat& inv_sqrt() const;

 private:
  Mat g_;
  mutable Mat sqrt_, inv_sqrt_;
  mutable bool have_sqrt_ = false;
  void make_sqrt() const;
};

/// eta_bar(X,Y) = -eta(X,Y) + 2 eta(X,U) eta(Y,U) for unit timelike U.
RiemannianMetric eta_bar_at(const MetricField& metric, const Vec& U, const Vec& x);

double eta_bar_norm(const RiemannianMetric& g, const Vec& v);

/// sup_{v != 0} |A v|_g / |v|_g, the largest singular value of
/// G^{1/2} A G^{-1/2}.
double operator_norm(const RiemannianMetric& g, const Mat& A);

/// F_A(x,y) = sqrt(|eta(y,y)|) + A_i y^i, both signature branches.
double randers_function(const MetricField& metric, const Potential& A, const Vec& x,
                        const Vec& y);

}  // namespace ald
