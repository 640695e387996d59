#include "ald/connection.hpp"

#include <cmath>

namespace ald {

namespace {

double admissible_norm(const MetricField& metric, const Vec& x, const Vec& y) {
  const double s = metric.inner(x, y, y);
  if (s < kAdmissibleMargin)
    throw AdmissibilityError("tangent vector outside the admissible set: eta(y,y) = " +
                             std::to_string(s));
  return s;
}

}  // namespace

Mat mixed_faraday(const MetricField& metric, const Mat& F_cov, const Vec& x) {
  return metric.inverse(x) * F_cov;
}

Vec spray_at(const MetricField& metric, const Mat& F_cov, const Vec& x, const Vec& y) {
  const double s = admissible_norm(metric, x, y);
  const Tensor3 gamma = christoffel_at(metric, x);
  const Mat Fm = mixed_faraday(metric, F_cov, x);
  return gamma.contract(y, y) + std::sqrt(s) * (Fm * y);
}

Mat nonlinear_connection(const MetricField& metric, const Mat& F_cov, const Vec& x,
                         const Vec& y) {
  const int n = metric.dim();
  const double s = admissible_norm(metric, x, y);
  const double rs = std::sqrt(s);
  const Tensor3 gamma = christoffel_at(metric, x);
  const Mat Fm = mixed_faraday(metric, F_cov, x);
  const Vec yl = metric.value(x) * y;  // y_k
  const Vec Fy = Fm * y;
  Mat N(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      double g = 0.0;
      for (int l = 0; l < n; ++l) g += gamma(i, k, l) * y[l];
      N(i, k) = g + 0.5 * rs * Fm(i, k) + 0.5 * Fy[i] * yl[k] / rs;
    }
  return N;
}

Tensor3 lorentz_gamma(const MetricField& metric, const Mat& F_cov, const Vec& x,
                      const Vec& y) {
  const int n = metric.dim();
  const double s = admissible_norm(metric, x, y);
  const double rs = std::sqrt(s);
  const Mat eta = metric.value(x);
  const Mat Fm = mixed_faraday(metric, F_cov, x);
  const Vec yl = eta * y;
  const Vec Fy = Fm * y;
  Tensor3 out = christoffel_at(metric, x);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        out(i, j, k) += (Fm(i, j) * yl[k] + Fm(i, k) * yl[j]) / (2.0 * rs) +
                        Fy[i] / (2.0 * rs) * (eta(j, k) - yl[j] * yl[k] / s);
  return out;
}

LTDecomposition decompose_LT(const MetricField& metric, const Mat& F_cov, const Vec& x,
                             const Vec& y) {
  const int n = metric.dim();
  const double s = admissible_norm(metric, x, y);
  const double rs = std::sqrt(s);
  const Mat eta = metric.value(x);
  const Mat Fm = mixed_faraday(metric, F_cov, x);
  const Vec yl = eta * y;
  const Vec Fy = Fm * y;
  LTDecomposition d{Tensor3(n), Tensor3(n)};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        d.L(i, j, k) = (Fm(i, j) * yl[k] + Fm(i, k) * yl[j]) / (2.0 * rs);
        d.T(i, j, k) = Fy[i] / (2.0 * rs) * (eta(j, k) - yl[j] * yl[k] / s);
      }
  return d;
}

Tensor3 tilde_gamma(const MetricField& metric, const Mat& F_cov, const Vec& x,
                    const Vec& y) {
  Tensor3 out = christoffel_at(metric, x);
  out += decompose_LT(metric, F_cov, x, y).L;
  return out;
}

ConnectionField christoffel_field(const MetricField& metric) {
  return ConnectionField(
      [metric](const Vec& x, const Vec&) { return christoffel_at(metric, x); },
      /*affine=*/true, "levi-civita");
}

ConnectionField lorentz_field(const MetricField& metric, FaradayField F) {
  return ConnectionField(
      [metric, F](const Vec& x, const Vec& y) { return lorentz_gamma(metric, F(x), x, y); },
      /*affine=*/false, "lorentz");
}

ConnectionField tilde_field(const MetricField& metric, FaradayField F) {
  return ConnectionField(
      [metric, F](const Vec& x, const Vec& y) { return tilde_gamma(metric, F(x), x, y); },
      /*affine=*/false, "lorentz-tilde");
}

}  // namespace ald
