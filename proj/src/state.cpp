#include "kldrl/state.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace kldrl {

PopulationLayout::PopulationLayout(std::vector<int> counts) : counts_(std::move(counts)) {
  if (counts_.empty()) {
    throw std::invalid_argument("layout needs at least one population");
  }
  offsets_.reserve(counts_.size());
  for (int c : counts_) {
    if (c < 2) {
      throw std::invalid_argument("every population needs at least two strategies");
    }
    offsets_.push_back(total_);
    total_ += c;
  }
}

SocialState uniform_state(const PopulationLayout& layout) {
  Eigen::VectorXd v(layout.total());
  for (int k = 0; k < layout.populations(); ++k) {
    layout.block(v, k).setConstant(1.0 / layout.count(k));
  }
  return {layout, std::move(v)};
}

SocialState vertex_state(const PopulationLayout& layout, const std::vector<int>& picks) {
  if (static_cast<int>(picks.size()) != layout.populations()) {
    throw std::invalid_argument("one strategy pick per population required");
  }
  Eigen::VectorXd v = Eigen::VectorXd::Zero(layout.total());
  for (int k = 0; k < layout.populations(); ++k) {
    if (picks[static_cast<size_t>(k)] < 0 || picks[static_cast<size_t>(k)] >= layout.count(k)) {
      throw std::invalid_argument("strategy pick out of range");
    }
    v[layout.offset(k) + picks[static_cast<size_t>(k)]] = 1.0;
  }
  return {layout, std::move(v)};
}

void require_state(const PopulationLayout& layout, const Eigen::VectorXd& values, double sum_tol) {
  if (values.size() != layout.total()) {
    throw std::invalid_argument("state length does not match layout");
  }
  for (int k = 0; k < layout.populations(); ++k) {
    auto blk = layout.block(values, k);
    if (blk.minCoeff() < 0.0) {
      throw std::invalid_argument("negative strategy share in population " + std::to_string(k));
    }
    if (std::abs(blk.sum() - 1.0) > sum_tol) {
      throw std::invalid_argument("population " + std::to_string(k) +
                                  " mass differs from one by " + std::to_string(blk.sum() - 1.0));
    }
  }
}

SocialState make_state(const PopulationLayout& layout, Eigen::VectorXd values, double sum_tol) {
  require_state(layout, values, sum_tol);
  return {layout, std::move(values)};
}

bool is_interior(const SocialState& x) { return x.values.minCoeff() > 0.0; }

void require_same_layout(const PopulationLayout& a, const PopulationLayout& b) {
  if (!(a == b)) {
    throw std::invalid_argument("population layouts differ");
  }
}

SocialState random_interior_state(const PopulationLayout& layout, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd v(layout.total());
  for (int k = 0; k < layout.populations(); ++k) {
    auto blk = layout.block(v, k);
    double sum = 0.0;
    for (int i = 0; i < blk.size(); ++i) {
      double u;
      do {
        u = unit(rng);
      } while (u <= 0.0);
      blk[i] = -std::log(u);
      sum += blk[i];
    }
    blk /= sum;
  }
  return {layout, std::move(v)};
}

}  // namespace kldrl
