#include "petc/hybrid_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace petc {

namespace {

constexpr double kClockSlack = 1e-9;

std::string agent_str(std::size_t i) { return "agent " + std::to_string(i); }
std::string link_str(std::size_t i, std::size_t m) {
  return "link " + std::to_string(i) + "->" + std::to_string(m);
}

}  // namespace

const char* to_string(JumpKind k) {
  switch (k) {
    case JumpKind::transmit:
      return "G_a";
    case JumpKind::sample:
      return "G_b";
    case JumpKind::receive:
      return "G_c";
  }
  return "?";
}

HybridSystem::HybridSystem(std::shared_ptr<const SystemModel> model,
                           std::vector<std::shared_ptr<const TriggerFunctions>> triggers,
                           HybridOptions opts)
    : model_(std::move(model)), triggers_(std::move(triggers)), opts_(opts) {
  if (!model_) throw HybridError("hybrid system needs a model");
  layout_ = model_->make_layout();
  const auto& g = model_->topology();
  if (triggers_.size() != g.size()) {
    throw HybridError("need one trigger design per agent (" + std::to_string(g.size()) +
                      "), got " + std::to_string(triggers_.size()));
  }
  if (!(opts_.max_substep > 0.0)) throw HybridError("max_substep must be positive");
  psi_.reserve(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!triggers_[i]) throw HybridError("missing trigger design for " + agent_str(i));
    const auto& p = triggers_[i]->params();
    if (p.n_out != std::max<std::size_t>(1, g.out_degree(i))) {
      throw HybridError("design of " + agent_str(i) + " assumes N_i=" + std::to_string(p.n_out) +
                        " but the graph gives " + std::to_string(g.out_degree(i)));
    }
    auto m = model_;
    psi_.push_back(make_psi([m, i](const Eigen::VectorXd& v) { return m->varsigma(i, v); },
                            [m, i](const Eigen::VectorXd& v) { return m->H_lower(i, v); }, p));
  }
}

HybridState HybridSystem::initial_state(const Eigen::VectorXd& x0,
                                        std::span<const double> eta0) const {
  HybridState s(layout_);
  if (static_cast<std::size_t>(x0.size()) != layout_->nx_total) {
    throw HybridError("x0 has dimension " + std::to_string(x0.size()) + ", expected " +
                      std::to_string(layout_->nx_total));
  }
  if (!eta0.empty() && eta0.size() != size()) throw HybridError("eta0 needs one value per agent");
  s.x = x0;
  for (std::size_t i = 0; i < size(); ++i) {
    s.r_block(i) = model_->h(i, s.x);
    if (!eta0.empty()) {
      if (!(eta0[i] >= 0.0)) throw HybridError("eta0 must be non-negative");
      s.eta[i] = eta0[i];
    }
  }
  return s;
}

Eigen::VectorXd HybridSystem::output(const HybridState& s, std::size_t i) const {
  return model_->h(i, s.x);
}

Eigen::VectorXd HybridSystem::estimates_in(const HybridState& s, std::size_t i) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout_->ny_total));
  for (std::size_t m : topology().in_neighbors(i)) {
    v.segment(static_cast<Eigen::Index>(layout_->y_off[m]),
              static_cast<Eigen::Index>(layout_->ny[m])) = model_->h(m, s.x) + s.e_block(m, i);
  }
  return v;
}

Eigen::VectorXd HybridSystem::controller_view(const HybridState& s, std::size_t i) const {
  Eigen::VectorXd v = estimates_in(s, i);
  v.segment(static_cast<Eigen::Index>(layout_->y_off[i]),
            static_cast<Eigen::Index>(layout_->ny[i])) = s.r_block(i);
  return v;
}

double HybridSystem::e_out_sq(const HybridState& s, std::size_t i) const {
  double acc = 0.0;
  for (std::size_t m : topology().out_neighbors(i)) acc += s.e_block(i, m).squaredNorm();
  return acc;
}

double HybridSystem::psi(const HybridState& s, std::size_t i) const {
  return psi_[i](controller_view(s, i));
}

Eigen::VectorXd HybridSystem::input_of(const Inputs& v, std::size_t i) const {
  if (v.empty()) return Eigen::VectorXd();
  return v.at(i);
}

HybridState HybridSystem::flow(const HybridState& s, double dt, const Inputs& v) const {
  if (!(dt >= 0.0)) throw HybridError("flow called with negative duration");
  HybridState out = s;
  if (dt == 0.0) return out;
  const std::size_t n = size();
  const auto& g = topology();

  std::vector<Eigen::VectorXd> views(n);
  std::vector<Eigen::VectorXd> inputs(n);
  for (std::size_t i = 0; i < n; ++i) {
    views[i] = controller_view(s, i);
    inputs[i] = input_of(v, i);
  }
  auto rhs = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd dx(x.size());
    for (std::size_t i = 0; i < n; ++i) {
      dx.segment(static_cast<Eigen::Index>(layout_->x_off[i]),
                 static_cast<Eigen::Index>(layout_->nx[i])) = model_->f(i, x, views[i], inputs[i]);
    }
    return dx;
  };

  const auto steps = static_cast<std::size_t>(std::ceil(dt / opts_.max_substep));
  const double h = dt / static_cast<double>(steps);
  Eigen::VectorXd x = s.x;
  for (std::size_t k = 0; k < steps; ++k) {
    const Eigen::VectorXd k1 = rhs(x);
    const Eigen::VectorXd k2 = rhs(x + 0.5 * h * k1);
    const Eigen::VectorXd k3 = rhs(x + 0.5 * h * k2);
    const Eigen::VectorXd k4 = rhs(x + h * k3);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  out.x = x;

  // The estimates are held, so each e_i^m moves by exactly -(y_i(t+dt) - y_i(t)).
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd dy = model_->h(i, out.x) - model_->h(i, s.x);
    for (std::size_t m : g.out_neighbors(i)) out.e_block(i, m) -= dy;
    out.tau[i] += dt;
    out.sigma[i] += dt;
    out.eta[i] =
        eta_exact_step(s.eta[i], psi_[i](views[i]), triggers_[i]->eps_eta(), dt);
  }
  if (!out.all_finite()) throw HybridError("non-finite state after flow of " + std::to_string(dt) + " s");
  if (opts_.debug_checks) check_admissible(out);
  return out;
}

void HybridSystem::flush_buffers(HybridState& s, std::size_t i, JumpInfo* info) const {
  for (std::size_t j : topology().in_neighbors(i)) {
    if (s.b_at(j, i)) {
      s.e_block(j, i) = s.r_block(j) - model_->h(j, s.x);
      s.b_at(j, i) = 0;
      if (info) info->flushed.push_back(j);
    }
  }
}

void HybridSystem::check_sampling_pre(const HybridState& s, std::size_t i) const {
  if (i >= size()) throw HybridError("agent index out of range");
  if (s.sigma[i] + kClockSlack < triggers_[i]->params().d_min) {
    throw HybridError(agent_str(i) + " sampled after " + std::to_string(s.sigma[i]) +
                      " s, below d_i");
  }
}

HybridState HybridSystem::jump_transmit(const HybridState& s, std::size_t i, JumpInfo* info) const {
  check_sampling_pre(s, i);
  for (std::size_t m : topology().out_neighbors(i)) {
    if (s.ell_at(i, m) || s.b_at(i, m)) {
      throw HybridError(agent_str(i) + " transmits while its previous packet on " +
                        link_str(i, m) + " is unprocessed");
    }
  }
  if (!trigger_decision(s, i)) throw HybridError(agent_str(i) + " transmits without trigger");
  const auto& tf = *triggers_[i];
  HybridState out = s;
  if (info) *info = JumpInfo{};
  flush_buffers(out, i, info);
  const double inc = tf.rho(e_out_sq(s, i), s.sigma[i]);
  out.tau[i] = 0.0;
  out.sigma[i] = 0.0;
  out.r_block(i) = model_->h(i, s.x);
  for (std::size_t m : topology().out_neighbors(i)) out.ell_at(i, m) = 1;
  out.eta[i] += inc;
  if (info) info->eta_increment = inc;
  if (opts_.debug_checks) check_admissible(out);
  return out;
}

HybridState HybridSystem::jump_sample(const HybridState& s, std::size_t i, JumpInfo* info) const {
  check_sampling_pre(s, i);
  const auto& tf = *triggers_[i];
  HybridState out = s;
  if (info) *info = JumpInfo{};
  const double inc = tf.nu(e_out_sq(s, i), s.tau[i], s.sigma[i]);
  flush_buffers(out, i, info);
  out.sigma[i] = 0.0;
  out.eta[i] += inc;
  if (info) info->eta_increment = inc;
  if (opts_.debug_checks) check_admissible(out);
  return out;
}

HybridState HybridSystem::jump_receive(const HybridState& s, std::size_t sender,
                                       std::size_t receiver) const {
  if (sender >= size() || receiver >= size() || !topology().delta(sender, receiver)) {
    throw HybridError("delivery on non-existent " + link_str(sender, receiver));
  }
  if (!s.ell_at(sender, receiver)) {
    throw HybridError("duplicate delivery on " + link_str(sender, receiver));
  }
  HybridState out = s;
  out.ell_at(sender, receiver) = 0;
  out.b_at(sender, receiver) = 1;
  return out;
}

bool HybridSystem::trigger_decision(const HybridState& s, std::size_t i) const {
  const auto& tf = *triggers_[i];
  if (s.tau[i] < tf.timing().tau_miet) return false;
  return s.eta[i] + tf.nu(e_out_sq(s, i), s.tau[i], s.sigma[i]) <= 0.0;
}

void HybridSystem::check_admissible(const HybridState& s) const {
  if (s.layout != layout_) throw HybridError("state belongs to a different system");
  if (!s.all_finite()) throw HybridError("state contains non-finite values");
  const std::size_t n = size();
  const auto& g = topology();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& tf = *triggers_[i];
    if (!(s.eta[i] >= 0.0)) throw HybridError(agent_str(i) + " has eta < 0");
    if (s.sigma[i] < 0.0 || s.sigma[i] > tf.params().tau_masp + kClockSlack) {
      throw HybridError(agent_str(i) + " has sigma outside [0, tau_MASP]");
    }
    if (s.tau[i] < 0.0) throw HybridError(agent_str(i) + " has tau < 0");
    for (std::size_t m = 0; m < n; ++m) {
      const int pair = s.ell_at(i, m) + s.b_at(i, m);
      if (!g.delta(i, m)) {
        if (pair != 0) throw HybridError("indicator set on non-edge " + link_str(i, m));
        if (!s.e_block(i, m).isZero(0.0)) {
          throw HybridError("redundant error block on non-edge " + link_str(i, m) + " is non-zero");
        }
        continue;
      }
      if (pair > 1) throw HybridError("ell + b > 1 on " + link_str(i, m));
      if (pair == 1 && s.tau[i] > tf.timing().tau_mad + kClockSlack) {
        throw HybridError("packet on " + link_str(i, m) + " outstanding beyond tau_MAD");
      }
    }
  }
}

}  // namespace petc
