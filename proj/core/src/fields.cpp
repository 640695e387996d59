#include "ald/fields.hpp"

#include <cmath>

namespace ald {

namespace {
double fd_step(const Vec& x) { return 1e-5 * (1.0 + x.norm()); }
}  // namespace

ScalarField::ScalarField(Value value, Gradient gradient, Hessian hessian)
    : value_(std::move(value)), gradient_(std::move(gradient)), hessian_(std::move(hessian)) {}

Vec ScalarField::gradient(const Vec& x) const {
  if (gradient_) return gradient_(x);
  const double h = fd_step(x);
  const int n = static_cast<int>(x.size());
  Vec g(n);
  for (int k = 0; k < n; ++k) {
    Vec xp = x, xm = x, xp2 = x, xm2 = x;
    xp[k] += h;
    xm[k] -= h;
    xp2[k] += 2 * h;
    xm2[k] -= 2 * h;
    g[k] = (8.0 * (value_(xp) - value_(xm)) - (value_(xp2) - value_(xm2))) / (12.0 * h);
  }
  return g;
}

Mat ScalarField::hessian(const Vec& x) const {
  if (hessian_) {
    Mat H = hessian_(x);
    return 0.5 * (H + H.transpose());
  }
  const double h = fd_step(x);
  const int n = static_cast<int>(x.size());
  Mat H(n, n);
  for (int k = 0; k < n; ++k) {
    Vec xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    H.col(k) = (gradient(xp) - gradient(xm)) / (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

Potential::Potential(int dim, Evaluator value, Jacobian jacobian)
    : n_(dim), value_(std::move(value)), jacobian_(std::move(jacobian)) {}

Potential Potential::zero(int dim) {
  return Potential(
      dim, [dim](const Vec&) { return Vec::Zero(dim); },
      [dim](const Vec&) { return Mat::Zero(dim, dim); });
}

Mat Potential::jacobian(const Vec& x) const {
  if (jacobian_) return jacobian_(x);
  const double h = fd_step(x);
  Mat J(n_, n_);
  for (int i = 0; i < n_; ++i) {
    Vec xp = x, xm = x, xp2 = x, xm2 = x;
    xp[i] += h;
    xm[i] -= h;
    xp2[i] += 2 * h;
    xm2[i] -= 2 * h;
    J.row(i) =
        ((8.0 * (value_(xp) - value_(xm)) - (value_(xp2) - value_(xm2))) / (12.0 * h))
            .transpose();
  }
  return J;
}

Mat faraday_at(const Potential& A, const Vec& x) {
  const Mat J = A.jacobian(x);
  return J - J.transpose();
}

Potential gauge_transform(const Potential& A, const ScalarField& lambda) {
  const int n = A.dim();
  auto value = [A, lambda](const Vec& x) -> Vec { return A.value(x) + lambda.gradient(x); };
  auto jac = [A, lambda](const Vec& x) -> Mat {
    // Hessian is symmetrized, so the exterior derivative is untouched exactly.
    return A.jacobian(x) + lambda.hessian(x);
  };
  return Potential(n, value, jac);
}

PresetField preset_field(const std::string& name, const FieldParams& p, int dim) {
  const int n = dim;
  if (n < 2) throw ConfigError("preset_field: dimension must be >= 2");

  auto zero_F = [n](const Vec&) { return Mat::Zero(n, n); };

  if (name == "null") {
    return PresetField{name, Potential::zero(n), zero_F};
  }

  if (name == "uniform_E") {
    const double E0 = p.E0;
    auto value = [n, E0](const Vec& x) {
      Vec A = Vec::Zero(n);
      A[0] = -E0 * x[1];
      return A;
    };
    auto jac = [n, E0](const Vec&) {
      Mat J = Mat::Zero(n, n);
      J(1, 0) = -E0;  // d_1 A_0
      return J;
    };
    auto F = [n, E0](const Vec&) {
      Mat F = Mat::Zero(n, n);
      F(0, 1) = E0;
      F(1, 0) = -E0;
      return F;
    };
    return PresetField{name, Potential(n, value, jac), F};
  }

  if (name == "uniform_B" || name == "crossed_EB") {
    if (n < 3) throw ConfigError(name + " requires dimension >= 3");
    // magnetic axis -> rotation plane (a, b)
    int a = 1, b = 2;
    if (p.axis == 1) {
      if (n < 4) throw ConfigError("axis = 1 requires dimension >= 4");
      a = 2;
      b = 3;
    } else if (p.axis == 2) {
      if (n < 4) throw ConfigError("axis = 2 requires dimension >= 4");
      a = 3;
      b = 1;
    } else if (p.axis != 3) {
      throw ConfigError("uniform_B: axis must be 1, 2 or 3");
    }
    const double B0 = p.B0;
    const double E0 = (name == "crossed_EB") ? p.E0 : 0.0;
    auto value = [n, a, b, B0, E0](const Vec& x) {
      Vec A = Vec::Zero(n);
      A[a] = -0.5 * B0 * x[b];
      A[b] = 0.5 * B0 * x[a];
      A[0] = -E0 * x[1];
      return A;
    };
    auto jac = [n, a, b, B0, E0](const Vec&) {
      Mat J = Mat::Zero(n, n);
      J(b, a) = -0.5 * B0;
      J(a, b) = 0.5 * B0;
      J(1, 0) = -E0;
      return J;
    };
    auto F = [n, a, b, B0, E0](const Vec&) {
      Mat F = Mat::Zero(n, n);
      F(a, b) = B0;
      F(b, a) = -B0;
      F(0, 1) += E0;
      F(1, 0) -= E0;
      return F;
    };
    return PresetField{name, Potential(n, value, jac), F};
  }

  if (name == "quadrupole") {
    if (n < 4) throw ConfigError("quadrupole requires dimension 4");
    const double g = p.gradient;
    auto value = [n, g](const Vec& x) {
      Vec A = Vec::Zero(n);
      A[3] = 0.5 * g * (x[1] * x[1] - x[2] * x[2]);
      return A;
    };
    auto jac = [n, g](const Vec& x) {
      Mat J = Mat::Zero(n, n);
      J(1, 3) = g * x[1];
      J(2, 3) = -g * x[2];
      return J;
    };
    auto F = [n, g](const Vec& x) {
      Mat F = Mat::Zero(n, n);
      F(1, 3) = g * x[1];
      F(3, 1) = -g * x[1];
      F(2, 3) = -g * x[2];
      F(3, 2) = g * x[2];
      return F;
    };
    return PresetField{name, Potential(n, value, jac), F};
  }

  throw ConfigError("unknown field preset '" + name + "'");
}

}  // namespace ald
