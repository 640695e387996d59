#pragma once

#include "ald/types.hpp"

#include <functional>
#include <string>

namespace ald {

/// Scalar function on spacetime with optional analytic gradient/Hessian.
/// Missing derivatives fall back to 4th-order central differences with
/// step h = 1e-5 (1 + |x|). The Hessian is symmetrized, so gauge transforms
/// built from it leave the Faraday tensor exactly invariant.
class ScalarField {
 public:
  using Value = std::function<double(const Vec&)>;
  using Gradient = std::function<Vec(const Vec&)>;
  using Hessian = std::function<Mat(const Vec&)>;

  ScalarField(Value value, Gradient gradient = nullptr, Hessian hessian = nullptr);

  double value(const Vec& x) const { return value_(x); }
  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x) const;

 private:
  Value value_;
  Gradient gradient_;
  Hessian hessian_;
};

/// Electromagnetic potential 1-form A_i(x), charge-to-mass ratio absorbed.
class Potential {
 public:
  using Evaluator = std::function<Vec(const Vec&)>;
  /// J(i, j) = d_i A_j
  using Jacobian = std::function<Mat(const Vec&)>;

  Potential() = default;
  Potential(int dim, Evaluator value, Jacobian jacobian = nullptr);

  static Potential zero(int dim);

  int dim() const { return n_; }
  Vec value(const Vec& x) const { return value_(x); }
  Mat jacobian(const Vec& x) const;

 private:
  int n_ = 0;
  Evaluator value_;
  Jacobian jacobian_;
};

/// F_ij = d_i A_j - d_j A_i. Antisymmetric by construction.
Mat faraday_at(const Potential& A, const Vec& x);

/// A -> A + d(lambda).
Potential gauge_transform(const Potential& A, const ScalarField& lambda);

/// Covariant Faraday tensor as a field x -> F_ij(x).
using FaradayField = std::function<Mat(const Vec&)>;

struct FieldParams {
  double E0 = 1.0;
  double B0 = 1.0;
  double gradient = 1.0;
  int axis = 3;  // magnetic axis for uniform_B / crossed_EB
};

struct PresetField {
  std::string name;
  Potential potential;
  FaradayField faraday;  // closed form, used to cross-check faraday_at
};

/// name in {null, uniform_E, uniform_B, crossed_EB, quadrupole}.
PresetField preset_field(const std::string& name, const FieldParams& params, int dim);

}  // namespace ald
