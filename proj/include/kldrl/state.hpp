#pragma once

#include <Eigen/Dense>

#include <initializer_list>
#include <random>
#include <vector>

namespace kldrl {

// Strategy-count bookkeeping for a society of M populations. Values indexed by
// population k live in the contiguous segment [offset(k), offset(k)+count(k)).
class PopulationLayout {
 public:
  PopulationLayout() = default;
  explicit PopulationLayout(std::vector<int> counts);
  PopulationLayout(std::initializer_list<int> counts)
      : PopulationLayout(std::vector<int>(counts)) {}

  int populations() const { return static_cast<int>(counts_.size()); }
  int total() const { return total_; }
  int count(int k) const { return counts_[static_cast<size_t>(k)]; }
  int offset(int k) const { return offsets_[static_cast<size_t>(k)]; }
  const std::vector<int>& counts() const { return counts_; }

  template <class Vec>
  auto block(Vec&& v, int k) const {
    return v.segment(offset(k), count(k));
  }

  friend bool operator==(const PopulationLayout&, const PopulationLayout&) = default;

 private:
  std::vector<int> counts_;
  std::vector<int> offsets_;
  int total_ = 0;
};

// Element of the product of unit simplices: per-population strategy shares.
struct SocialState {
  PopulationLayout layout;
  Eigen::VectorXd values;
};

// Per-population payoff entries, same blocking as SocialState.
struct PayoffVector {
  PopulationLayout layout;
  Eigen::VectorXd values;
};

// Direction with vanishing block sums (admissible state velocity).
struct TangentVector {
  PopulationLayout layout;
  Eigen::VectorXd values;
};

SocialState uniform_state(const PopulationLayout& layout);

// Vertex with strategy picks[k] selected in each population.
SocialState vertex_state(const PopulationLayout& layout, const std::vector<int>& picks);

// Validates block sums (within sum_tol of one) and nonnegativity; throws on breach.
SocialState make_state(const PopulationLayout& layout, Eigen::VectorXd values,
                       double sum_tol = 1e-12);

bool is_interior(const SocialState& x);

void require_state(const PopulationLayout& layout, const Eigen::VectorXd& values,
                   double sum_tol = 1e-12);
void require_same_layout(const PopulationLayout& a, const PopulationLayout& b);

// Dirichlet(1,...,1) draw per block; strictly interior almost surely.
SocialState random_interior_state(const PopulationLayout& layout, std::mt19937_64& rng);

}  // namespace kldrl
