#pragma once

#include "kldrl/state.hpp"

namespace kldrl {

// D(x||y) = sum_k sum_i x_i^k ln(x_i^k / y_i^k), with 0 ln 0 := 0.
// Requires y strictly interior; x may touch the boundary.
double kl_divergence(const SocialState& x, const SocialState& y);

// Gradient in the first argument: entry i of block k is ln(x_i^k / y_i^k).
// Both arguments must be interior.
PayoffVector kl_gradient(const SocialState& x, const SocialState& y);

struct ArgmaxResult {
  SocialState vertex;
  double value = 0.0;
};

// max_{z in X} z^T r over the product of simplices; attained at the vertex
// picking the best entry per block, ties broken to the lowest index.
ArgmaxResult linear_argmax(const PayoffVector& r);

// Floors every entry at eps and rescales each block back to unit mass without
// dragging floored entries below eps. Identity on states already above the floor.
SocialState interior_clamp(const SocialState& x, double eps = 1e-9);

}  // namespace kldrl
