#include "kldrl/protocol.hpp"

#include <cmath>
#include <stdexcept>

namespace kldrl {

namespace {

void validate_protocol(const RevisionProtocol& proto) {
  if (!(proto.eta > 0.0)) throw std::invalid_argument("protocol weight eta must be positive");
  if (static_cast<int>(proto.kinds.size()) != proto.layout.populations()) {
    throw std::invalid_argument("one protocol kind per population required");
  }
  require_same_layout(proto.layout, proto.theta.layout);
  require_state(proto.theta.layout, proto.theta.values, 1e-9);
  if (!is_interior(proto.theta)) {
    throw std::invalid_argument("protocol reference theta must be interior");
  }
}

}  // namespace

RevisionProtocol RevisionProtocol::logit(const PopulationLayout& layout, double eta) {
  RevisionProtocol proto{layout,
                         std::vector<ProtocolKind>(static_cast<size_t>(layout.populations()),
                                                   ProtocolKind::Logit),
                         eta, uniform_state(layout)};
  validate_protocol(proto);
  return proto;
}

RevisionProtocol RevisionProtocol::kldrl(double eta, SocialState theta) {
  PopulationLayout layout = theta.layout;
  RevisionProtocol proto{layout,
                         std::vector<ProtocolKind>(static_cast<size_t>(layout.populations()),
                                                   ProtocolKind::KldRl),
                         eta, std::move(theta)};
  validate_protocol(proto);
  return proto;
}

RevisionProtocol RevisionProtocol::mixed(double eta, SocialState theta,
                                         std::vector<ProtocolKind> kinds) {
  PopulationLayout layout = theta.layout;
  RevisionProtocol proto{layout, std::move(kinds), eta, std::move(theta)};
  validate_protocol(proto);
  return proto;
}

bool RevisionProtocol::any_kldrl() const {
  for (auto k : kinds) {
    if (k == ProtocolKind::KldRl) return true;
  }
  return false;
}

bool RevisionProtocol::pure_kldrl() const {
  for (auto k : kinds) {
    if (k != ProtocolKind::KldRl) return false;
  }
  return true;
}

Eigen::VectorXd kldrl_choice(const Eigen::VectorXd& theta, const Eigen::VectorXd& r, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  if (theta.size() != r.size()) throw std::invalid_argument("block sizes differ");
  const double shift = r.maxCoeff();
  Eigen::VectorXd w =
      (theta.array() * ((r.array() - shift) / eta).exp()).matrix();
  return w / w.sum();
}

Eigen::VectorXd logit_choice(const Eigen::VectorXd& r, double eta) {
  return kldrl_choice(Eigen::VectorXd::Ones(r.size()), r, eta);
}

SocialState protocol_choice(const RevisionProtocol& proto, const PayoffVector& p) {
  require_same_layout(proto.layout, p.layout);
  Eigen::VectorXd out(proto.layout.total());
  for (int k = 0; k < proto.layout.populations(); ++k) {
    auto rk = proto.layout.block(p.values, k);
    auto ok = proto.layout.block(out, k);
    if (proto.kinds[static_cast<size_t>(k)] == ProtocolKind::KldRl) {
      ok = kldrl_choice(proto.layout.block(proto.theta.values, k), rk, proto.eta);
    } else {
      ok = logit_choice(rk, proto.eta);
    }
  }
  return {proto.layout, std::move(out)};
}

TangentVector edm_vector_field(const RevisionProtocol& proto, const SocialState& x,
                               const PayoffVector& p) {
  require_same_layout(x.layout, p.layout);
  SocialState target = protocol_choice(proto, p);
  return {x.layout, target.values - x.values};
}

TangentVector generic_edm_field(const GenericProtocol& gp, const SocialState& x,
                                const PayoffVector& p) {
  require_same_layout(gp.layout, x.layout);
  require_same_layout(gp.layout, p.layout);
  Eigen::VectorXd out(gp.layout.total());
  for (int k = 0; k < gp.layout.populations(); ++k) {
    const Eigen::VectorXd xk = gp.layout.block(x.values, k);
    const Eigen::VectorXd rk = gp.layout.block(p.values, k);
    Eigen::MatrixXd rates = gp.switch_rates(k, xk, rk);
    const int c = gp.layout.count(k);
    if (rates.rows() != c || rates.cols() != c) {
      throw std::invalid_argument("switch-rate matrix has wrong shape");
    }
    for (int i = 0; i < c; ++i) {
      if (rates.row(i).minCoeff() < -1e-12 || rates.row(i).maxCoeff() > 1.0 + 1e-12 ||
          std::abs(rates.row(i).sum() - 1.0) > 1e-9) {
        throw std::invalid_argument("switch rates must be row-stochastic");
      }
    }
    // x'_i = sum_j x_j T_ji - x_i sum_j T_ij
    auto ok = gp.layout.block(out, k);
    for (int i = 0; i < c; ++i) {
      double inflow = 0.0;
      for (int j = 0; j < c; ++j) inflow += xk[j] * rates(j, i);
      ok[i] = inflow - xk[i] * rates.row(i).sum();
    }
  }
  return {gp.layout, std::move(out)};
}

double storage_function(const SocialState& theta, double eta, const SocialState& z,
                        const PayoffVector& r) {
  require_same_layout(theta.layout, z.layout);
  require_same_layout(theta.layout, r.layout);
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  if (!is_interior(theta)) throw std::domain_error("storage_function: theta must be interior");
  if (!is_interior(z)) throw std::domain_error("storage_function: state must be interior");
  double best = 0.0;  // eta sum_k ln(sum_s theta_s e^{r_s/eta}), max-stabilized
  for (int k = 0; k < theta.layout.populations(); ++k) {
    auto rk = theta.layout.block(r.values, k);
    auto tk = theta.layout.block(theta.values, k);
    const double shift = rk.maxCoeff();
    const double lse = std::log((tk.array() * ((rk.array() - shift) / eta).exp()).sum());
    best += shift + eta * lse;
  }
  return best - z.values.dot(r.values) + eta * kl_divergence(z, theta);
}

double mixed_equilibrium_residual(const AffineGame& game, double eta, const SocialState& x) {
  if (game.layout.populations() != 2) {
    throw std::invalid_argument("mixed residual is defined for two populations");
  }
  require_same_layout(game.layout, x.layout);
  PayoffVector p = payoff(game, x);
  auto p1 = game.layout.block(p.values, 0);
  auto x1 = game.layout.block(x.values, 0);
  const double best_response_gap = p1.maxCoeff() - x1.dot(p1);
  Eigen::VectorXd choice2 = logit_choice(game.layout.block(p.values, 1), eta);
  const double logit_gap = (game.layout.block(x.values, 1) - choice2).norm();
  return best_response_gap + logit_gap;
}

}  // namespace kldrl
