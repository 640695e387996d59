#pragma once

#include "ald/fields.hpp"
#include "ald/metric.hpp"
#include "ald/types.hpp"

#include <functional>
#include <string>

namespace ald {

/// Velocity-dependent coefficients reject eta(y,y) below this margin instead
/// of exactly <= 0, to avoid catastrophic cancellation near the cone.
inline constexpr double kAdmissibleMargin = 1e-12;

/// F^i_j = eta^{ik} F_kj at x.
Mat mixed_faraday(const MetricField& metric, const Mat& F_cov, const Vec& x);

/// Rank-3 coefficients at a point, tagged affine (y-independent) or not.
struct ConnectionCoefficients {
  Tensor3 gamma;
  bool affine = false;
};

/// Spray G^i(x,y) = etaGamma^i_jk y^j y^k + F^i_k y^k sqrt(eta(y,y)).
/// The autoparallel ODE is x'' + G(x, x') = 0. Degree-2 positively
/// homogeneous in y. Throws AdmissibilityError for eta(y,y) < margin.
Vec spray_at(const MetricField& metric, const Mat& F_cov, const Vec& x, const Vec& y);

/// N^i_k = 1/2 dG^i/dy^k (analytic); satisfies y^k N^i_k = G^i.
Mat nonlinear_connection(const MetricField& metric, const Mat& F_cov, const Vec& x,
                         const Vec& y);

/// Coefficients of the velocity-dependent linear connection:
/// etaGamma + L + T with
///   L^i_jk = (F^i_j y_k + F^i_k y_j) / (2 sqrt(eta(y,y)))
///   T^i_jk = F^i_m y^m / (2 sqrt(eta(y,y))) (eta_jk - y_j y_k / eta(y,y)).
Tensor3 lorentz_gamma(const MetricField& metric, const Mat& F_cov, const Vec& x,
                      const Vec& y);

struct LTDecomposition {
  Tensor3 L;
  Tensor3 T;
};

LTDecomposition decompose_LT(const MetricField& metric, const Mat& F_cov, const Vec& x,
                             const Vec& y);

/// The T-free variant etaGamma + L; along unit-velocity curves its
/// autoparallels coincide with the full Lorentz dynamics.
Tensor3 tilde_gamma(const MetricField& metric, const Mat& F_cov, const Vec& x,
                    const Vec& y);

/// A connection coefficient field; affine fields ignore y.
class ConnectionField {
 public:
  using Fn = std::function<Tensor3(const Vec& x, const Vec& y)>;

  ConnectionField() = default;
  ConnectionField(Fn fn, bool affine, std::string label = "")
      : fn_(std::move(fn)), affine_(affine), label_(std::move(label)) {}

  Tensor3 at(const Vec& x, const Vec& y) const { return fn_(x, y); }
  bool affine() const { return affine_; }
  const std::string& label() const { return label_; }
  explicit operator bool() const { return static_cast<bool>(fn_); }

 private:
  Fn fn_;
  bool affine_ = false;
  std::string label_;
};

ConnectionField christoffel_field(const MetricField& metric);
ConnectionField lorentz_field(const MetricField& metric, FaradayField F);
ConnectionField tilde_field(const MetricField& metric, FaradayField F);

}  // namespace ald
