#include "ald/averaging.hpp"

#include "ald/random.hpp"

#include <cmath>

namespace ald {

Tensor3 averaged_gamma(const MetricField& metric, const Mat& F_cov, const MomentSet& moms,
                       const Vec& x) {
  const int n = metric.dim();
  const Mat eta = metric.value(x);
  const Mat Fm = mixed_faraday(metric, F_cov, x);
  const Vec m1l = eta * moms.m1;  // <y>_k
  const Vec Fmean = Fm * moms.m1;
  // q^m_{jk} = eta_js eta_kl <y^m y^s y^l>
  Tensor3 out = christoffel_at(metric, x);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double q = 0.0;
        for (int m = 0; m < n; ++m) {
          double qm = 0.0;
          for (int s = 0; s < n; ++s) {
            double ql = 0.0;
            for (int l = 0; l < n; ++l) ql += eta(k, l) * moms.m3(m, s, l);
            qm += eta(j, s) * ql;
          }
          q += Fm(i, m) * qm;
        }
        out(i, j, k) += 0.5 * (Fm(i, j) * m1l[k] + Fm(i, k) * m1l[j]) +
                        0.5 * (Fmean[i] * eta(j, k) - q);
      }
  return out;
}

Vec delta_tensor(const MomentSet& moms, const Vec& y) { return moms.m1 - y; }

CorrectionTensors correction_tensors(const MomentSet& moms, const Mat& eta, const Vec& y) {
  const int n = static_cast<int>(y.size());
  const Vec yl = eta * y;
  const Vec delta = moms.m1 - y;
  const double dy = delta.dot(yl);
  const double m1y = moms.m1.dot(yl);

  const Mat mu2 = moms.m2 - moms.m1 * moms.m1.transpose();
  const double mu2yy = yl.dot(mu2 * yl);
  const Vec mu2y = mu2 * yl;

  // mu3^{msl} y_s y_l with
  // mu3 = m3 - sym3(m1 (x) m2) + 2 m1 (x) m1 (x) m1
  Vec mu3yy(n);
  const double m2yy = yl.dot(moms.m2 * yl);
  const Vec m2y = moms.m2 * yl;
  for (int m = 0; m < n; ++m) {
    double m3yy = 0.0;
    for (int s = 0; s < n; ++s) {
      double acc = 0.0;
      for (int l = 0; l < n; ++l) acc += moms.m3(m, s, l) * yl[l];
      m3yy += yl[s] * acc;
    }
    mu3yy[m] = m3yy - moms.m1[m] * m2yy - 2.0 * m1y * m2y[m] + 2.0 * moms.m1[m] * m1y * m1y;
  }

  CorrectionTensors out;
  out.O2 = 0.5 * (moms.m1 * (dy * dy) + moms.m1 * mu2yy + 2.0 * m1y * mu2y);
  out.O3 = 0.5 * mu3yy;
  return out;
}

DifferenceReport connection_difference(const MetricField& metric, const Mat& F_cov,
                                       const MomentSet& moms, const Vec& x, const Vec& y) {
  const Mat eta = metric.value(x);
  const Mat Fm = mixed_faraday(metric, F_cov, x);
  const Vec yl = eta * y;

  DifferenceReport rep;
  const Tensor3 lg = lorentz_gamma(metric, F_cov, x, y);
  const Tensor3 ag = averaged_gamma(metric, F_cov, moms, x);
  rep.direct = (lg - ag).contract(y, y);

  const Vec delta = delta_tensor(moms, y);
  const double dy = delta.dot(yl);
  const CorrectionTensors corr = correction_tensors(moms, eta, y);
  rep.leading = (Fm * delta) * dy;
  rep.O2_term = Fm * corr.O2;
  rep.O3_term = Fm * corr.O3;
  rep.closed_form = rep.leading + rep.O2_term + rep.O3_term;
  rep.residual = (rep.closed_form - rep.direct).cwiseAbs().maxCoeff();
  return rep;
}

double connection_distance(const ConnectionField& A, const ConnectionField& B,
                           const MetricField& metric, const HyperboloidDistribution& dist,
                           const Vec& x, int samples, std::uint64_t seed) {
  if (samples < 1) throw PreconditionError("connection_distance: sample count must be >= 1");
  // Support sample with the prefix property: the distribution mean direction
  // first, then seeded draws from the distribution itself.
  std::vector<Vec> xs;
  xs.reserve(samples);
  const MomentSet m = moments(dist, metric, x);
  const double mm = metric.inner(x, m.m1, m.m1);
  xs.push_back(m.m1 / std::sqrt(mm));
  if (samples > 1) {
    const auto draws = sample_ensemble(dist, metric, x, samples - 1, seed);
    for (const Particle& p : draws) xs.push_back(p.y);
  }
  const Vec U = m.m1 / std::sqrt(mm);
  const RiemannianMetric gb = eta_bar_at(metric, U, x);
  double best = 0.0;
  for (const Vec& X : xs) {
    const Vec diff = (A.at(x, X) - B.at(x, X)).contract(X, X);
    const double denom = X.dot(gb.matrix() * X);
    best = std::max(best, gb.norm(diff) / denom);
  }
  return best;
}

ConnectionField convex_interpolate(const ConnectionField& A, const ConnectionField& B,
                                   double xi, double xi_max) {
  if (!(xi_max > 0.0)) throw PreconditionError("convex_interpolate: xi_max must be > 0");
  if (xi < 0.0 || xi > xi_max)
    throw PreconditionError("convex_interpolate: xi must lie in [0, xi_max]");
  const double wa = (xi_max - xi) / xi_max;
  const double wb = xi / xi_max;
  const bool affine = A.affine() && B.affine();
  return ConnectionField(
      [A, B, wa, wb](const Vec& x, const Vec& y) {
        return wa * A.at(x, y) + wb * B.at(x, y);
      },
      affine, "convex");
}

double distance_bound(double normF_etabar, double alpha, const BoundConstants& c) {
  const double a2 = alpha * alpha;
  return normF_etabar * c.C * a2 + 2.0 * c.C2 * c.C2 * a2 * (1.0 + c.B2 * alpha) +
         c.C3 * c.C3 * c.C3 * a2 * alpha * (1.0 + c.B3 * alpha);
}

double distance_bound(const MetricField& metric, const Mat& F_cov, const MomentSet& moms,
                      const Vec& x, const BoundConstants& c) {
  const double mm = metric.inner(x, moms.m1, moms.m1);
  const Vec U = moms.m1 / std::sqrt(mm);
  const RiemannianMetric gb = eta_bar_at(metric, U, x);
  const double nF = operator_norm(gb, mixed_faraday(metric, F_cov, x));
  return distance_bound(nF, moms.alpha, c);
}

ConnectionField averaged_field(const MetricField& metric, FaradayField F,
                               std::function<MomentSet(const Vec& x)> moments_at) {
  return ConnectionField(
      [metric, F, moments_at](const Vec& x, const Vec&) {
        return averaged_gamma(metric, F(x), moments_at(x), x);
      },
      /*affine=*/true, "averaged");
}

}  // namespace ald
