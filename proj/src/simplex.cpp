#include "kldrl/simplex.hpp"

#include <cmath>
#include <stdexcept>

namespace kldrl {

double kl_divergence(const SocialState& x, const SocialState& y) {
  require_same_layout(x.layout, y.layout);
  if (!is_interior(y)) {
    throw std::domain_error("kl_divergence: second argument must be interior");
  }
  double sum = 0.0;
  for (int i = 0; i < x.values.size(); ++i) {
    const double xi = x.values[i];
    if (xi < 0.0) {
      throw std::domain_error("kl_divergence: negative entry in first argument");
    }
    if (xi > 0.0) {
      sum += xi * std::log(xi / y.values[i]);
    }
  }
  return sum;
}

PayoffVector kl_gradient(const SocialState& x, const SocialState& y) {
  require_same_layout(x.layout, y.layout);
  if (!is_interior(x) || !is_interior(y)) {
    throw std::domain_error("kl_gradient: both arguments must be interior");
  }
  Eigen::VectorXd g = (x.values.array() / y.values.array()).log().matrix();
  return {x.layout, std::move(g)};
}

ArgmaxResult linear_argmax(const PayoffVector& r) {
  if (!r.values.allFinite()) {
    throw std::invalid_argument("linear_argmax: non-finite payoff entries");
  }
  const auto& layout = r.layout;
  Eigen::VectorXd vertex = Eigen::VectorXd::Zero(layout.total());
  double value = 0.0;
  for (int k = 0; k < layout.populations(); ++k) {
    const int off = layout.offset(k);
    int best = 0;
    for (int i = 1; i < layout.count(k); ++i) {
      if (r.values[off + i] > r.values[off + best]) best = i;
    }
    vertex[off + best] = 1.0;
    value += r.values[off + best];
  }
  return {SocialState{layout, std::move(vertex)}, value};
}

SocialState interior_clamp(const SocialState& x, double eps) {
  const auto& layout = x.layout;
  int max_count = 0;
  for (int c : layout.counts()) max_count = std::max(max_count, c);
  if (!(eps > 0.0) || !(eps < 1.0 / max_count)) {
    throw std::invalid_argument("interior_clamp: eps outside (0, 1/max block size)");
  }
  require_state(layout, x.values, 1e-9);
  if (x.values.minCoeff() >= eps) {
    return x;
  }
  Eigen::VectorXd v = x.values;
  for (int k = 0; k < layout.populations(); ++k) {
    auto blk = layout.block(v, k);
    // Floor offending entries at eps and rescale the free mass; repeat in case
    // the rescaling drags a near-floor entry under.
    for (int pass = 0; pass < blk.size(); ++pass) {
      double floored_mass = 0.0;
      double free_mass = 0.0;
      bool any_low = false;
      for (int i = 0; i < blk.size(); ++i) {
        if (blk[i] <= eps) {
          any_low = blk[i] < eps || any_low;
          floored_mass += eps;
        } else {
          free_mass += blk[i];
        }
      }
      if (!any_low) break;
      const double scale = (1.0 - floored_mass) / free_mass;
      for (int i = 0; i < blk.size(); ++i) {
        blk[i] = blk[i] <= eps ? eps : blk[i] * scale;
      }
    }
  }
  return {layout, std::move(v)};
}

}  // namespace kldrl
