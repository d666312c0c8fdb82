#pragma once

#include "kldrl/simplex.hpp"
#include "kldrl/state.hpp"

namespace kldrl {

// Affine population game: payoff(x) = F x + b, blocked per population.
struct AffineGame {
  PopulationLayout layout;
  Eigen::MatrixXd F;
  Eigen::VectorXd b;
};

struct GameBounds {
  double payoff_bound = 0.0;    // max over the state space of ||F z + b||_2
  double jacobian_bound = 0.0;  // ||F||_2 (spectral norm)
};

PayoffVector payoff(const AffineGame& game, const SocialState& x);

// Two-population three-route congestion game; unique equilibrium (4/9,1/9,4/9)x2.
AffineGame congestion_game();

// Two-population biased rock-paper-scissors zero-sum game;
// unique equilibrium (1/16,10/16,5/16)x2.
AffineGame rps_zero_sum_game();

// True iff (w-z)^T (F(w)-F(z)) <= 0 on the state space, tested as negative
// semi-definiteness of the symmetric part of F under per-block mean removal.
bool is_contractive(const AffineGame& game, double tol = 1e-9);

// payoff_bound is exact for affine maps: the max of a convex function over a
// polytope is attained at a vertex, so all vertices are enumerated.
GameBounds bounds(const AffineGame& game);

// max_{z in X} (z - x)^T F(x); zero exactly at equilibria.
double nash_residual(const AffineGame& game, const SocialState& x);

// Extragradient iteration on the equilibrium variational inequality with
// Euclidean projection onto the product of simplices. Requires a contractive
// game; throws if the iteration cap is exceeded.
SocialState nash_oracle(const AffineGame& game, double tol = 1e-8);

// Euclidean projection of an arbitrary vector onto the product of simplices.
Eigen::VectorXd project_to_simplex_product(const PopulationLayout& layout,
                                           const Eigen::VectorXd& v);

double spectral_norm(const Eigen::MatrixXd& m);

}  // namespace kldrl
