#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace ald {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A spacetime point with a tangent vector attached.
struct TangentState {
  Vec x;
  Vec y;
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class DegenerateMetricError : public Error {
 public:
  using Error::Error;
};

/// Thrown when a tangent vector is on or inside the null cone, where the
/// velocity-dependent connection coefficients are undefined.
class AdmissibilityError : public Error {
 public:
  using Error::Error;
};

class ConeProximityError : public AdmissibilityError {
 public:
  using AdmissibilityError::AdmissibilityError;
};

class IntegrationError : public Error {
 public:
  using Error::Error;
};

class EmptySupportError : public Error {
 public:
  using Error::Error;
};

/// Rank-3 coefficient array c^i_{jk} with a runtime dimension.
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int n) : n_(n), d_(Eigen::VectorXd::Zero(n * n * n)) {}

  int dim() const { return n_; }

  double& operator()(int i, int j, int k) { return d_[(i * n_ + j) * n_ + k]; }
  double operator()(int i, int j, int k) const { return d_[(i * n_ + j) * n_ + k]; }

  /// c^i_{jk} a^j b^k
  Vec contract(const Vec& a, const Vec& b) const {
    Vec out = Vec::Zero(n_);
    for (int i = 0; i < n_; ++i) {
      double s = 0.0;
      for (int j = 0; j < n_; ++j) {
        double sj = 0.0;
        for (int k = 0; k < n_; ++k) sj += (*this)(i, j, k) * b[k];
        s += a[j] * sj;
      }
      out[i] = s;
    }
    return out;
  }

  Tensor3& operator+=(const Tensor3& o) {
    d_ += o.d_;
    return *this;
  }
  Tensor3& operator-=(const Tensor3& o) {
    d_ -= o.d_;
    return *this;
  }
  Tensor3& operator*=(double s) {
    d_ *= s;
    return *this;
  }
  friend Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
  friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
  friend Tensor3 operator*(double s, Tensor3 a) { return a *= s; }

  double max_abs() const { return d_.size() ? d_.cwiseAbs().maxCoeff() : 0.0; }

  static double max_abs_diff(const Tensor3& a, const Tensor3& b) {
    return (a.d_ - b.d_).cwiseAbs().maxCoeff();
  }

  /// Largest |c^i_{jk} - c^i_{kj}| over all entries.
  double lower_asymmetry() const {
    double m = 0.0;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        for (int k = j + 1; k < n_; ++k)
          m = std::max(m, std::abs((*this)(i, j, k) - (*this)(i, k, j)));
    return m;
  }

  const Eigen::VectorXd& data() const { return d_; }
  Eigen::VectorXd& data() { return d_; }

 private:
  int n_ = 0;
  Eigen::VectorXd d_;
};

/// Compensated (Kahan) accumulator; used wherever a reduction must be
/// bitwise reproducible in a fixed order.
struct KahanSum {
  double s = 0.0;
  double c = 0.0;
  void add(double x) {
    double y = x - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  double value() const { return s; }
};

}  // namespace ald
