#include "ald/metric.hpp"

#include <cmath>
#include <cstring>
#include <mutex>
#include <unordered_set>

namespace ald {

namespace {

std::size_t hash_point(const Vec& x) {
  // FNV-1a over the raw coordinate bytes.
  std::size_t h = 1469598103934665603ull;
  for (int i = 0; i < x.size(); ++i) {
    unsigned char b[sizeof(double)];
    const double v = x[i];
    std::memcpy(b, &v, sizeof(double));
    for (unsigned char c : b) {
      h ^= c;
      h *= 1099511628211ull;
    }
  }
  return h;
}

double fd_step(const Vec& x) { return 1e-5 * (1.0 + x.norm()); }

}  // namespace

struct MetricField::CheckCache {
  std::mutex mu;
  std::unordered_set<std::size_t> seen;
  bool constant_checked = false;
  static constexpr std::size_t kMaxEntries = 4096;
};

MetricField::MetricField(int dim, Evaluator value, Derivative derivative,
                         bool constant_in_x)
    : n_(dim),
      value_(std::move(value)),
      derivative_(std::move(derivative)),
      constant_(constant_in_x),
      checks_(std::make_shared<CheckCache>()) {
  if (n_ < 2) throw PreconditionError("MetricField: dimension must be >= 2");
}

MetricField MetricField::minkowski(int dim) {
  Mat g = -Mat::Identity(dim, dim);
  g(0, 0) = 1.0;
  Tensor3 zero(dim);
  return MetricField(
      dim, [g](const Vec&) { return g; }, [zero](const Vec&) { return zero; },
      /*constant_in_x=*/true);
}

void MetricField::verify(const Mat& g, const Vec& x) const {
  const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-14 * scale)
    throw DegenerateMetricError("metric matrix is not symmetric at the queried point");
  Eigen::SelfAdjointEigenSolver<Mat> es(g);
  int positive = 0, negative = 0;
  for (int i = 0; i < n_; ++i) {
    if (es.eigenvalues()[i] > 0)
      ++positive;
    else if (es.eigenvalues()[i] < 0)
      ++negative;
  }
  if (positive != 1 || negative != n_ - 1)
    throw DegenerateMetricError("metric signature is not (+,-,...,-) at x = [" +
                                std::to_string(x.size() ? x[0] : 0.0) + ", ...]");
}

Mat MetricField::value(const Vec& x) const {
  Mat g = value_(x);
  auto& cache = *checks_;
  if (constant_) {
    if (!cache.constant_checked) {
      std::lock_guard<std::mutex> lock(cache.mu);
      if (!cache.constant_checked) {
        verify(g, x);
        cache.constant_checked = true;
      }
    }
    return g;
  }
  const std::size_t h = hash_point(x);
  bool need = false;
  {
    std::lock_guard<std::mutex> lock(cache.mu);
    if (!cache.seen.count(h)) {
      need = true;
      if (cache.seen.size() < CheckCache::kMaxEntries) cache.seen.insert(h);
    }
  }
  if (need) verify(g, x);
  return g;
}

Tensor3 MetricField::derivative(const Vec& x) const {
  if (derivative_) return derivative_(x);
  // 4th-order central differences of the evaluator.
  const double h = fd_step(x);
  Tensor3 d(n_);
  for (int k = 0; k < n_; ++k) {
    Vec xp = x, xm = x, xp2 = x, xm2 = x;
    xp[k] += h;
    xm[k] -= h;
    xp2[k] += 2 * h;
    xm2[k] -= 2 * h;
    const Mat gp = value_(xp), gm = value_(xm), gp2 = value_(xp2), gm2 = value_(xm2);
    const Mat dk = (8.0 * (gp - gm) - (gp2 - gm2)) / (12.0 * h);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) d(k, i, j) = dk(i, j);
  }
  return d;
}

Mat MetricField::inverse(const Vec& x) const {
  const Mat g = value(x);
  Eigen::FullPivLU<Mat> lu(g);
  if (!lu.isInvertible())
    throw DegenerateMetricError("metric matrix is singular at the queried point");
  return lu.inverse();
}

double MetricField::inner(const Vec& x, const Vec& a, const Vec& b) const {
  return a.dot(value(x) * b);
}

Tensor3 christoffel_at(const MetricField& metric, const Vec& x) {
  const int n = metric.dim();
  const Mat ginv = metric.inverse(x);
  const Tensor3 d = metric.derivative(x);  // d(k,i,j) = d_k eta_ij
  Tensor3 gamma(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int l = 0; l < n; ++l)
          s += ginv(i, l) * (d(j, l, k) + d(k, l, j) - d(l, j, k));
        gamma(i, j, k) = 0.5 * s;
      }
  return gamma;
}

RiemannianMetric::RiemannianMetric(Mat g) : g_(std::move(g)) {
  const double scale = std::max(1.0, g_.cwiseAbs().maxCoeff());
  if ((g_ - g_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw PreconditionError("RiemannianMetric: matrix is not symmetric");
  Eigen::LLT<Mat> llt(g_);
  if (llt.info() != Eigen::Success)
    throw PreconditionError("RiemannianMetric: matrix is not positive definite");
}

double RiemannianMetric::norm(const Vec& v) const {
  return std::sqrt(std::max(0.0, v.dot(g_ * v)));
}

void RiemannianMetric::make_sqrt() const {
  Eigen::SelfAdjointEigenSolver<Mat> es(g_);
  const Vec lam = es.eigenvalues();
  sqrt_ = es.eigenvectors() * lam.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  inv_sqrt_ = es.eigenvectors() * lam.cwiseSqrt().cwiseInverse().asDiagonal() *
              es.eigenvectors().transpose();
  have_sqrt_ = true;
}

const Mat& RiemannianMetric::sqrt() const {
  if (!have_sqrt_) make_sqrt();
  return sqrt_;
}

const Mat& RiemannianMetric::inv_sqrt() const {
  if (!have_sqrt_) make_sqrt();
  return inv_sqrt_;
}

RiemannianMetric eta_bar_at(const MetricField& metric, const Vec& U, const Vec& x) {
  const Mat g = metric.value(x);
  const double uu = U.dot(g * U);
  if (std::abs(uu - 1.0) > 1e-10)
    throw PreconditionError("eta_bar_at: U is not unit timelike (eta(U,U) = " +
                            std::to_string(uu) + ")");
  const Vec gu = g * U;
  return RiemannianMetric(-g + 2.0 * gu * gu.transpose());
}

double eta_bar_norm(const RiemannianMetric& g, const Vec& v) { return g.norm(v); }

double operator_norm(const RiemannianMetric& g, const Mat& A) {
  const Mat M = g.sqrt() * A * g.inv_sqrt();
  Eigen::JacobiSVD<Mat> svd(M);
  return svd.singularValues()[0];
}

double randers_function(const MetricField& metric, const Potential& A, const Vec& x,
                        const Vec& y) {
  const double s = metric.inner(x, y, y);
  return std::sqrt(std::abs(s)) + A.value(x).dot(y);
}

}  // namespace ald
