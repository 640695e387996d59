#pragma once

#include "ald/fields.hpp"
#include "ald/metric.hpp"
#include "ald/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace ald {

/// A velocity sample on the fiber with a quadrature or statistical weight.
struct Particle {
  Vec y;
  double weight = 1.0;
};

/// A transported sample: spacetime position, velocity, weight.
struct ParticleState {
  Vec x;
  Vec y;
  double weight = 1.0;
};

enum class DistKind { Dirac, GaussianBump, UniformBall, Ensemble };

/// Compactly supported one-particle distribution on the unit hyperboloid.
/// The bump/ball kinds live in the orthonormal rest frame of the center
/// velocity V; sigma is per spatial axis in eta_bar units. The gaussian is
/// hard-truncated at r_cut (default 4 max sigma) and multiplied by the C^1
/// cutoff (1 - (r/r_cut)^2)^2 so the support is compact.
class HyperboloidDistribution {
 public:
  static HyperboloidDistribution dirac(Vec center);
  static HyperboloidDistribution gaussian_bump(Vec center, Vec sigma, double r_cut = 0.0);
  static HyperboloidDistribution uniform_ball(Vec center, double radius);
  static HyperboloidDistribution ensemble(std::vector<Particle> particles);

  DistKind kind() const { return kind_; }
  const Vec& center() const { return center_; }
  const Vec& sigma() const { return sigma_; }
  double r_cut() const { return r_cut_; }
  const std::vector<Particle>& particles() const { return particles_; }
  int dim() const { return static_cast<int>(center_.size()); }

  /// Density in the rest-frame chart (bump/ball kinds).
  double chart_density(const Vec& u) const;

 private:
  DistKind kind_ = DistKind::Dirac;
  Vec center_;
  Vec sigma_;
  double r_cut_ = 0.0;
  std::vector<Particle> particles_;
};

/// Solve eta(y,y) = 1, y^0 > 0 for the lab-frame temporal component given
/// the lab-frame spatial components.
Vec hyperboloid_lift(const MetricField& metric, const Vec& x, const Vec& ybar);

/// Fiber measure density sqrt(|det eta|) / y^0 in the lab spatial chart.
double volume_density(const MetricField& metric, const Vec& x, const Vec& y);

/// eta-orthonormal frame at x whose first column is the unit timelike vector
/// given; remaining columns are spacelike, eta(e_a, e_b) = -delta_ab.
Mat orthonormal_frame(const MetricField& metric, const Vec& x, const Vec& timelike);

/// Fiber-quadrature outputs at a point.
struct MomentSet {
  double vol = 0.0;  // weighted volume of the support
  Vec m1;            // <y^i>
  Mat m2;            // <y^i y^j> (diagnostic; the averaged connection does not use it)
  Tensor3 m3;        // <y^m y^s y^l>, totally symmetric
  double alpha = 0.0;   // support diameter in eta_bar units
  double energy = 0.0;  // inf y^0 over the support
};

/// Normalized fiber moments. nodes_per_axis = 0 picks the default
/// (64 for n = 2, 32 for n = 3, 24 otherwise). Dirac bypasses quadrature.
MomentSet moments(const HyperboloidDistribution& dist, const MetricField& metric,
                  const Vec& x, int nodes_per_axis = 0);

double support_diameter(const HyperboloidDistribution& dist, const MetricField& metric,
                        const Vec& x, int nodes_per_axis = 0);

double energy(const HyperboloidDistribution& dist, const MetricField& metric,
              const Vec& x, int nodes_per_axis = 0);

/// Deterministic sample of the distribution; all outputs are on the unit
/// hyperboloid. Same seed, same list.
std::vector<Particle> sample_ensemble(const HyperboloidDistribution& dist,
                                      const MetricField& metric, const Vec& x, int count,
                                      std::uint64_t seed);

/// Quadrature nodes of the distribution as a weighted particle list
/// (deterministic, noise-free alternative to sampling for transport).
std::vector<Particle> quadrature_particles(const HyperboloidDistribution& dist,
                                           const MetricField& metric, const Vec& x,
                                           int nodes_per_axis = 0);

/// Weighted moments of an explicit particle list (empirical moments of a
/// transported ensemble). Fixed-order compensated reduction.
MomentSet empirical_moments(const MetricField& metric, const Vec& x,
                            std::span<const Particle> particles);

/// Advance every particle under the Lorentz force by dt in lab time.
std::vector<ParticleState> transport_ensemble(std::span<const ParticleState> states,
                                              const MetricField& metric,
                                              const FaradayField& F, double dt_lab,
                                              double tol);

/// Max pairwise distance of a point set under a positive-definite metric;
/// direction-projection candidates refined by exact pairwise search
/// (converges to the diameter from below).
double point_set_diameter(std::span<const Vec> points, const RiemannianMetric& g);

}  // namespace ald
