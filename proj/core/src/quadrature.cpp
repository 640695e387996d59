#include "ald/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace ald {

namespace {

GaussLegendre compute_rule(int order) {
  GaussLegendre rule;
  rule.nodes = Vec::Zero(order);
  rule.weights = Vec::Zero(order);
  const int m = (order + 1) / 2;
  for (int k = 0; k < m; ++k) {
    // Chebyshev-based initial guess, then Newton on the recurrence.
    double x = std::cos(M_PI * (k + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= order; ++j) {
        const double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[k] = -x;
    rule.nodes[order - 1 - k] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.weights[k] = w;
    rule.weights[order - 1 - k] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  return rule;
}

}  // namespace

const GaussLegendre& gauss_legendre(int order) {
  if (order < 1) throw Error("gauss_legendre: order must be >= 1");
  static std::mutex mu;
  static std::map<int, GaussLegendre> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, compute_rule(order)).first;
  return it->second;
}

}  // namespace ald
