#include "ald/kinetics.hpp"

#include "ald/connection.hpp"
#include "ald/integrate.hpp"
#include "ald/quadrature.hpp"
#include "ald/random.hpp"

#include <algorithm>
#include <cmath>

namespace ald {

namespace {

int default_nodes(int dim) {
  if (dim == 2) return 64;
  if (dim == 3) return 32;
  return 24;
}

/// Callback-driven tensor grid over [-r, r]^d.
template <typename F>
void for_each_grid_node(int d, double r, const GaussLegendre& rule, F&& fn) {
  const int q = static_cast<int>(rule.nodes.size());
  std::vector<int> idx(d, 0);
  Vec u(d);
  while (true) {
    double w = 1.0;
    for (int a = 0; a < d; ++a) {
      u[a] = r * rule.nodes[idx[a]];
      w *= r * rule.weights[idx[a]];
    }
    fn(u, w);
    int a = d - 1;
    while (a >= 0 && ++idx[a] == q) idx[a--] = 0;
    if (a < 0) break;
  }
}

struct Accumulators {
  explicit Accumulators(int n)
      : n_(n), vol{}, m1(n), m2(n * n), m3(n * n * n) {}
  int n_;
  KahanSum vol;
  std::vector<KahanSum> m1, m2, m3;

  void add(const Vec& y, double w) {
    vol.add(w);
    for (int i = 0; i < n_; ++i) {
      m1[i].add(w * y[i]);
      for (int j = 0; j < n_; ++j) {
        m2[i * n_ + j].add(w * y[i] * y[j]);
        for (int k = 0; k < n_; ++k) m3[(i * n_ + j) * n_ + k].add(w * y[i] * y[j] * y[k]);
      }
    }
  }

  MomentSet finish() const {
    const double v = vol.value();
    if (!(v > 0.0)) throw EmptySupportError("distribution support has zero weighted volume");
    MomentSet m;
    m.vol = v;
    m.m1 = Vec(n_);
    m.m2 = Mat(n_, n_);
    m.m3 = Tensor3(n_);
    for (int i = 0; i < n_; ++i) {
      m.m1[i] = m1[i].value() / v;
      for (int j = 0; j < n_; ++j) {
        m.m2(i, j) = m2[i * n_ + j].value() / v;
        for (int k = 0; k < n_; ++k) m.m3(i, j, k) = m3[(i * n_ + j) * n_ + k].value() / v;
      }
    }
    return m;
  }
};

MomentSet dirac_moments(const Vec& V) {
  const int n = static_cast<int>(V.size());
  MomentSet m;
  m.vol = 1.0;
  m.m1 = V;
  m.m2 = V * V.transpose();
  m.m3 = Tensor3(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) m.m3(i, j, k) = V[i] * V[j] * V[k];
  m.alpha = 0.0;
  m.energy = V[0];
  return m;
}

/// Support nodes with weights above the density threshold, for alpha/energy.
struct SupportNodes {
  std::vector<Vec> points;
  double energy = 0.0;
};

void finish_diagnostics(MomentSet& m, const MetricField& metric, const Vec& x,
                        const SupportNodes& nodes) {
  const double mm = metric.inner(x, m.m1, m.m1);
  if (!(mm > 0.0))
    throw PreconditionError("mean velocity is not timelike; cannot build eta_bar");
  const Vec U = m.m1 / std::sqrt(mm);
  const RiemannianMetric gb = eta_bar_at(metric, U, x);
  m.alpha = point_set_diameter(nodes.points, gb);
  m.energy = nodes.energy;
}

}  // namespace

HyperboloidDistribution HyperboloidDistribution::dirac(Vec center) {
  HyperboloidDistribution d;
  d.kind_ = DistKind::Dirac;
  d.center_ = std::move(center);
  d.sigma_ = Vec::Zero(d.center_.size() - 1);
  return d;
}

HyperboloidDistribution HyperboloidDistribution::gaussian_bump(Vec center, Vec sigma,
                                                               double r_cut) {
  HyperboloidDistribution d;
  d.kind_ = DistKind::GaussianBump;
  d.center_ = std::move(center);
  d.sigma_ = std::move(sigma);
  if (d.sigma_.size() != d.center_.size() - 1)
    throw PreconditionError("gaussian_bump: sigma must have one entry per spatial axis");
  if (d.sigma_.minCoeff() <= 0.0)
    throw PreconditionError("gaussian_bump: sigma must be positive");
  d.r_cut_ = (r_cut > 0.0) ? r_cut : 4.0 * d.sigma_.maxCoeff();
  return d;
}

HyperboloidDistribution HyperboloidDistribution::uniform_ball(Vec center, double radius) {
  HyperboloidDistribution d;
  d.kind_ = DistKind::UniformBall;
  d.center_ = std::move(center);
  d.sigma_ = Vec::Constant(d.center_.size() - 1, radius);
  if (radius <= 0.0) throw PreconditionError("uniform_ball: radius must be positive");
  d.r_cut_ = radius;
  return d;
}

HyperboloidDistribution HyperboloidDistribution::ensemble(std::vector<Particle> particles) {
  if (particles.empty()) throw EmptySupportError("ensemble distribution with no particles");
  HyperboloidDistribution d;
  d.kind_ = DistKind::Ensemble;
  d.center_ = particles.front().y;
  d.sigma_ = Vec::Zero(d.center_.size() - 1);
  d.particles_ = std::move(particles);
  return d;
}

double HyperboloidDistribution::chart_density(const Vec& u) const {
  const double r = u.norm();
  if (r >= r_cut_) return 0.0;
  switch (kind_) {
    case DistKind::GaussianBump: {
      double q = 0.0;
      for (int a = 0; a < u.size(); ++a) q += (u[a] / sigma_[a]) * (u[a] / sigma_[a]);
      const double c = 1.0 - (r / r_cut_) * (r / r_cut_);
      return std::exp(-0.5 * q) * c * c;
    }
    case DistKind::UniformBall:
      return 1.0;
    default:
      return 0.0;
  }
}

Vec hyperboloid_lift(const MetricField& metric, const Vec& x, const Vec& ybar) {
  const int n = metric.dim();
  if (ybar.size() != n - 1)
    throw PreconditionError("hyperboloid_lift: expected n-1 spatial components");
  const Mat g = metric.value(x);
  // eta_00 (y0)^2 + 2 eta_0a y0 yb^a + eta_ab yb^a yb^b = 1
  const double A = g(0, 0);
  double B = 0.0, C = -1.0;
  for (int a = 1; a < n; ++a) {
    B += 2.0 * g(0, a) * ybar[a - 1];
    for (int b = 1; b < n; ++b) C += g(a, b) * ybar[a - 1] * ybar[b - 1];
  }
  const double disc = B * B - 4.0 * A * C;
  if (!(disc >= 0.0) || A == 0.0)
    throw PreconditionError("hyperboloid_lift: no real positive root at this point");
  const double y0 = (-B + std::sqrt(disc)) / (2.0 * A);
  if (!(y0 > 0.0))
    throw PreconditionError("hyperboloid_lift: no future-pointing root");
  Vec y(n);
  y[0] = y0;
  y.tail(n - 1) = ybar;
  return y;
}

double volume_density(const MetricField& metric, const Vec& x, const Vec& y) {
  if (!(y[0] > 0.0)) throw PreconditionError("volume_density: y^0 must be positive");
  const double det = metric.value(x).determinant();
  return std::sqrt(std::abs(det)) / y[0];
}

Mat orthonormal_frame(const MetricField& metric, const Vec& x, const Vec& timelike) {
  const int n = metric.dim();
  const Mat g = metric.value(x);
  const double tt = timelike.dot(g * timelike);
  if (!(tt > 0.0)) throw PreconditionError("orthonormal_frame: seed vector not timelike");
  Mat E(n, n);
  E.col(0) = timelike / std::sqrt(tt);
  int col = 1;
  for (int k = 0; k < n && col < n; ++k) {
    Vec v = Vec::Zero(n);
    v[k] = 1.0;
    // project out the previous frame vectors (timelike has signature +1)
    v -= (v.dot(g * E.col(0))) * E.col(0);
    for (int c = 1; c < col; ++c) v += (v.dot(g * E.col(c))) * E.col(c);
    const double vv = v.dot(g * v);
    if (vv > -1e-12) continue;  // degenerate direction, skip
    E.col(col++) = v / std::sqrt(-vv);
  }
  if (col != n) throw DegenerateMetricError("orthonormal_frame: could not complete frame");
  return E;
}

double point_set_diameter(std::span<const Vec> points, const RiemannianMetric& g) {
  if (points.size() < 2) return 0.0;
  const Mat& S = g.sqrt();
  const int n = g.dim();
  std::vector<Vec> z;
  z.reserve(points.size());
  for (const Vec& p : points) z.push_back(S * p);
  // candidate extremes along a fixed direction set
  std::vector<Vec> dirs;
  for (int i = 0; i < n; ++i) {
    Vec d = Vec::Zero(n);
    d[i] = 1.0;
    dirs.push_back(d);
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      Vec d = Vec::Zero(n);
      d[i] = d[j] = M_SQRT1_2;
      dirs.push_back(d);
      d[j] = -M_SQRT1_2;
      dirs.push_back(d);
    }
  Rng rng(0x9e3779b97f4a7c15ull);
  for (int k = 0; k < 16; ++k) {
    Vec d(n);
    for (int i = 0; i < n; ++i) d[i] = rng.normal();
    const double nn = d.norm();
    if (nn > 0) dirs.push_back(d / nn);
  }
  std::vector<std::size_t> candidates;
  for (const Vec& d : dirs) {
    std::size_t lo = 0, hi = 0;
    double plo = z[0].dot(d), phi = plo;
    for (std::size_t p = 1; p < z.size(); ++p) {
      const double proj = z[p].dot(d);
      if (proj < plo) {
        plo = proj;
        lo = p;
      }
      if (proj > phi) {
        phi = proj;
        hi = p;
      }
    }
    candidates.push_back(lo);
    candidates.push_back(hi);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  double best = 0.0;
  for (std::size_t a = 0; a < candidates.size(); ++a)
    for (std::size_t b = a + 1; b < candidates.size(); ++b)
      best = std::max(best, (z[candidates[a]] - z[candidates[b]]).norm());
  return best;
}

MomentSet moments(const HyperboloidDistribution& dist, const MetricField& metric,
                  const Vec& x, int nodes_per_axis) {
  const int n = metric.dim();
  if (dist.kind() == DistKind::Dirac) return dirac_moments(dist.center());

  if (dist.kind() == DistKind::Ensemble)
    return empirical_moments(metric, x, dist.particles());

  const int q = nodes_per_axis > 0 ? nodes_per_axis : default_nodes(n);
  const Mat frame = orthonormal_frame(metric, x, dist.center());
  const GaussLegendre& rule = gauss_legendre(q);
  Accumulators acc(n);
  SupportNodes support;
  double max_density = 0.0;

  std::vector<std::pair<Vec, double>> kept;  // (y, density)
  for_each_grid_node(n - 1, dist.r_cut(), rule, [&](const Vec& u, double w) {
    const double f = dist.chart_density(u);
    if (f <= 0.0) return;
    const double lift0 = std::sqrt(1.0 + u.squaredNorm());
    Vec y = frame.col(0) * lift0;
    for (int a = 0; a < n - 1; ++a) y += frame.col(a + 1) * u[a];
    const double wt = w * f / lift0;  // invariant fiber measure in the rest chart
    acc.add(y, wt);
    max_density = std::max(max_density, f);
    kept.emplace_back(std::move(y), f);
  });

  MomentSet m = acc.finish();
  const double threshold = 1e-12 * max_density;
  support.energy = std::numeric_limits<double>::infinity();
  for (auto& [y, f] : kept) {
    if (f <= threshold) continue;
    support.energy = std::min(support.energy, y[0]);
    support.points.push_back(std::move(y));
  }
  finish_diagnostics(m, metric, x, support);
  return m;
}

MomentSet empirical_moments(const MetricField& metric, const Vec& x,
                            std::span<const Particle> particles) {
  const int n = metric.dim();
  Accumulators acc(n);
  SupportNodes support;
  support.energy = std::numeric_limits<double>::infinity();
  for (const Particle& p : particles) {
    acc.add(p.y, p.weight);
    support.energy = std::min(support.energy, p.y[0]);
    support.points.push_back(p.y);
  }
  MomentSet m = acc.finish();
  finish_diagnostics(m, metric, x, support);
  return m;
}

double support_diameter(const HyperboloidDistribution& dist, const MetricField& metric,
                        const Vec& x, int nodes_per_axis) {
  if (dist.kind() == DistKind::Dirac) return 0.0;
  return moments(dist, metric, x, nodes_per_axis).alpha;
}

double energy(const HyperboloidDistribution& dist, const MetricField& metric, const Vec& x,
              int nodes_per_axis) {
  if (dist.kind() == DistKind::Dirac) return dist.center()[0];
  return moments(dist, metric, x, nodes_per_axis).energy;
}

std::vector<Particle> sample_ensemble(const HyperboloidDistribution& dist,
                                      const MetricField& metric, const Vec& x, int count,
                                      std::uint64_t seed) {
  if (count < 1) throw PreconditionError("sample_ensemble: count must be >= 1");
  const int n = metric.dim();
  std::vector<Particle> out;
  out.reserve(count);

  if (dist.kind() == DistKind::Dirac) {
    for (int i = 0; i < count; ++i) out.push_back({dist.center(), 1.0 / count});
    return out;
  }
  if (dist.kind() == DistKind::Ensemble) return dist.particles();

  const Mat frame = orthonormal_frame(metric, x, dist.center());
  Rng rng(seed);
  const int d = n - 1;
  while (static_cast<int>(out.size()) < count) {
    Vec u(d);
    if (dist.kind() == DistKind::GaussianBump) {
      for (int a = 0; a < d; ++a) u[a] = dist.sigma()[a] * rng.normal();
      const double r = u.norm();
      if (r >= dist.r_cut()) continue;
      const double c = 1.0 - (r / dist.r_cut()) * (r / dist.r_cut());
      if (rng.uniform() > c * c) continue;  // cutoff factor by rejection
    } else {  // uniform ball
      for (int a = 0; a < d; ++a) u[a] = rng.uniform(-dist.r_cut(), dist.r_cut());
      if (u.norm() >= dist.r_cut()) continue;
    }
    const double lift0 = std::sqrt(1.0 + u.squaredNorm());
    Vec y = frame.col(0) * lift0;
    for (int a = 0; a < d; ++a) y += frame.col(a + 1) * u[a];
    out.push_back({std::move(y), 1.0 / count});
  }
  return out;
}

std::vector<Particle> quadrature_particles(const HyperboloidDistribution& dist,
                                           const MetricField& metric, const Vec& x,
                                           int nodes_per_axis) {
  const int n = metric.dim();
  if (dist.kind() == DistKind::Dirac) return {{dist.center(), 1.0}};
  if (dist.kind() == DistKind::Ensemble) return dist.particles();

  const int q = nodes_per_axis > 0 ? nodes_per_axis : 8;
  const Mat frame = orthonormal_frame(metric, x, dist.center());
  const GaussLegendre& rule = gauss_legendre(q);
  std::vector<Particle> out;
  for_each_grid_node(n - 1, dist.r_cut(), rule, [&](const Vec& u, double w) {
    const double f = dist.chart_density(u);
    if (f <= 0.0) return;
    const double lift0 = std::sqrt(1.0 + u.squaredNorm());
    Vec y = frame.col(0) * lift0;
    for (int a = 0; a < n - 1; ++a) y += frame.col(a + 1) * u[a];
    out.push_back({std::move(y), w * f / lift0});
  });
  if (out.empty()) throw EmptySupportError("quadrature_particles: empty support");
  double total = 0.0;
  for (const Particle& p : out) total += p.weight;
  for (Particle& p : out) p.weight /= total;
  return out;
}

std::vector<ParticleState> transport_ensemble(std::span<const ParticleState> states,
                                              const MetricField& metric,
                                              const FaradayField& F, double dt_lab,
                                              double tol) {
  const int n = metric.dim();
  std::vector<ParticleState> out;
  out.reserve(states.size());
  OdeOptions opts;
  opts.rtol = opts.atol = tol;
  for (const ParticleState& s : states) {
    Vec z(2 * n);
    z.head(n) = s.x;
    z.tail(n) = s.y;
    auto rhs = [&](double, const Vec& zz) -> Vec {
      const Vec x = zz.head(n), y = zz.tail(n);
      const Vec acc = -spray_at(metric, F(x), x, y);
      Vec dz(2 * n);
      dz.head(n) = y / y[0];
      dz.tail(n) = acc / y[0];
      return dz;
    };
    integrate_ode(rhs, s.x[0], s.x[0] + dt_lab, z, opts);
    out.push_back({z.head(n), z.tail(n), s.weight});
  }
  return out;
}

}  // namespace ald
