#include "kldrl/game.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace kldrl {

PayoffVector payoff(const AffineGame& game, const SocialState& x) {
  require_same_layout(game.layout, x.layout);
  Eigen::VectorXd p = game.F * x.values + game.b;
  return {game.layout, std::move(p)};
}

AffineGame congestion_game() {
  PopulationLayout layout{3, 3};
  Eigen::MatrixXd m(6, 6);
  // Route congestion per population, coupled through the shared middle link.
  m << 2.5, 1.0, 0.0, 0.0, 0.0, 0.0,  //
      1.0, 2.5, 1.0, 0.0, 0.5, 0.0,   //
      0.0, 1.0, 2.5, 0.0, 0.0, 0.0,   //
      0.0, 0.0, 0.0, 2.5, 1.0, 0.0,   //
      0.0, 0.5, 0.0, 1.0, 2.5, 1.0,   //
      0.0, 0.0, 0.0, 0.0, 1.0, 2.5;
  return {layout, -m, Eigen::VectorXd::Zero(6)};
}

AffineGame rps_zero_sum_game() {
  PopulationLayout layout{3, 3};
  Eigen::Matrix3d a;
  a << 0.0, -0.5, 1.0,  //
      0.5, 0.0, -0.1,   //
      -1.0, 0.1, 0.0;
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(6, 6);
  f.block<3, 3>(0, 3) = a;  // each population is paid against the other's state
  f.block<3, 3>(3, 0) = a;
  return {layout, std::move(f), Eigen::VectorXd::Zero(6)};
}

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

namespace {

Eigen::MatrixXd block_centering(const PopulationLayout& layout) {
  const int n = layout.total();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < layout.populations(); ++k) {
    const int c = layout.count(k);
    p.block(layout.offset(k), layout.offset(k), c, c) =
        Eigen::MatrixXd::Identity(c, c) - Eigen::MatrixXd::Constant(c, c, 1.0 / c);
  }
  return p;
}

}  // namespace

bool is_contractive(const AffineGame& game, double tol) {
  if (tol < 0.0) {
    throw std::invalid_argument("is_contractive: negative tolerance");
  }
  Eigen::MatrixXd p = block_centering(game.layout);
  Eigen::MatrixXd sym = p * (0.5 * (game.F + game.F.transpose())) * p;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff() <= tol;
}

GameBounds bounds(const AffineGame& game) {
  GameBounds out;
  out.jacobian_bound = spectral_norm(game.F);
  // Vertex enumeration: odometer over one strategy pick per population.
  const auto& layout = game.layout;
  std::vector<int> picks(static_cast<size_t>(layout.populations()), 0);
  while (true) {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(layout.total());
    for (int k = 0; k < layout.populations(); ++k) {
      z[layout.offset(k) + picks[static_cast<size_t>(k)]] = 1.0;
    }
    out.payoff_bound = std::max(out.payoff_bound, (game.F * z + game.b).norm());
    int k = 0;
    for (; k < layout.populations(); ++k) {
      if (++picks[static_cast<size_t>(k)] < layout.count(k)) break;
      picks[static_cast<size_t>(k)] = 0;
    }
    if (k == layout.populations()) break;
  }
  return out;
}

double nash_residual(const AffineGame& game, const SocialState& x) {
  PayoffVector p = payoff(game, x);
  ArgmaxResult best = linear_argmax(p);
  return best.value - x.values.dot(p.values);
}

Eigen::VectorXd project_to_simplex_product(const PopulationLayout& layout,
                                           const Eigen::VectorXd& v) {
  if (v.size() != layout.total()) {
    throw std::invalid_argument("projection: length does not match layout");
  }
  Eigen::VectorXd out(v.size());
  for (int k = 0; k < layout.populations(); ++k) {
    auto src = layout.block(v, k);
    std::vector<double> sorted(src.data(), src.data() + src.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double shift = 0.0;
    for (size_t j = 0; j < sorted.size(); ++j) {
      cumulative += sorted[j];
      const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
      if (sorted[j] - candidate > 0.0) shift = candidate;
    }
    auto dst = layout.block(out, k);
    for (int i = 0; i < src.size(); ++i) {
      dst[i] = std::max(src[i] - shift, 0.0);
    }
  }
  return out;
}

SocialState nash_oracle(const AffineGame& game, double tol) {
  if (!is_contractive(game)) {
    throw std::invalid_argument("nash_oracle: game is not contractive");
  }
  const double slope = spectral_norm(game.F);
  const double step = slope > 1e-12 ? 0.1 / slope : 1.0;
  SocialState x = uniform_state(game.layout);
  constexpr long kMaxIters = 1000000;
  for (long it = 0; it < kMaxIters; ++it) {
    if (nash_residual(game, x) <= tol) return x;
    Eigen::VectorXd gx = game.F * x.values + game.b;
    Eigen::VectorXd y = project_to_simplex_product(game.layout, x.values + step * gx);
    Eigen::VectorXd gy = game.F * y + game.b;
    x.values = project_to_simplex_product(game.layout, x.values + step * gy);
  }
  throw std::runtime_error("nash_oracle: iteration cap exceeded");
}

}  // namespace kldrl
