#pragma once

#include "ald/types.hpp"

namespace ald {

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
  Vec nodes;
  Vec weights;
};

/// Nodes by Newton iteration on the Legendre recurrence; cached per order.
/// Thread safe.
const GaussLegendre& gauss_legendre(int order);

}  // namespace ald
