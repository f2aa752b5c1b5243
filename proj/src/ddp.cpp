#include "torl/ddp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace torl {

namespace {

struct StepContext {
  std::vector<int> contacts;     // active set of the interval
  std::vector<int> impact_next;  // active set to hit with the impulse map at k+1
};

std::vector<StepContext> build_contexts(const ContactSchedule& schedule, double dt,
                                        int horizon) {
  const auto starts = schedule.phase_start_knots(dt);
  if (starts.back() != horizon)
    throw std::invalid_argument("ddp: schedule does not cover the horizon");
  const auto impacts = schedule.impact_knots(dt);
  std::vector<StepContext> ctx(horizon);
  for (int k = 0; k < horizon; ++k) {
    const int phase = schedule.phase_of_interval(k, dt);
    ctx[k].contacts = schedule.phases[phase].active_sites;
    for (const auto& imp : impacts)
      if (imp.knot == k + 1) {
        const int next = schedule.phase_of_interval(k + 1, dt);
        ctx[k].impact_next = schedule.phases[next].active_sites;
      }
  }
  return ctx;
}

VecX clamp_torque(const VecX& u, const VecX& limits) {
  return u.cwiseMax(-limits).cwiseMin(limits);
}

// Softplus with unit slope far above zero; the cone penalties run through it
// so their curvature stays continuous despite the stiff force Jacobians.
constexpr double kConeSmoothing = 0.1;  // N
double softplus(double s) {
  const double z = s / kConeSmoothing;
  if (z > 30.0) return s;
  return kConeSmoothing * std::log1p(std::exp(z));
}
double softplus_grad(double s) {
  const double z = s / kConeSmoothing;
  if (z > 30.0) return 1.0;
  if (z < -30.0) return 0.0;
  return 1.0 / (1.0 + std::exp(-z));
}

// One hybrid step: clamped torque, semi-implicit integration under the
// interval's contact set, impulse map when a new site lands at k+1.
RobotState hybrid_step(const RobotModel& model, const StepContext& ctx,
                       const RobotState& x, const VecX& u_raw, double dt,
                       const VecX& limits, VecX* forces) {
  const VecX u = clamp_torque(u_raw, limits);
  RobotState next =
      integrate_step(model, x, u, ContactSet::of(ctx.contacts), dt, forces);
  if (!ctx.impact_next.empty()) {
    const auto imp = impulse_dynamics(model, next, ContactSet::of(ctx.impact_next));
    next.v = imp.v_post;
  }
  return next;
}

VecX pack(const RobotState& s) {
  VecX x(s.q.size() + s.v.size());
  x << s.q, s.v;
  return x;
}

RobotState unpack(const RobotModel& model, const VecX& x) {
  RobotState s;
  s.q = x.head(model.nq());
  s.v = x.tail(model.nv());
  return s;
}

// Quadratic expansion of one knot cost.
struct CostExpansion {
  double value = 0.0;
  VecX lx, lu;
  MatX lxx, luu, lux;
};

int force_row(const std::vector<int>& active, int site) {
  for (size_t i = 0; i < active.size(); ++i)
    if (active[i] == site) return static_cast<int>(2 * i);
  return -1;
}

// Scalar cost of one knot; forces are those of the interval starting at k and
// u is the raw (pre-clamp) control so the torque barrier stays live.
double knot_cost_value(const RobotModel& model, const CostStack& costs, int k,
                       const RobotState& s, const VecX& u_raw,
                       const std::vector<int>& active, const VecX& forces,
                       bool terminal) {
  const auto& kc = costs.knots[k];
  double c = 0.0;
  for (const auto& st : kc.sites) {
    const Vec2 r = site_kinematics(model, s, st.site).position - st.target;
    c += 0.5 * (st.weight.x() * r.x() * r.x() + st.weight.y() * r.y() * r.y());
  }
  if (kc.x_weight.size() > 0) {
    const VecX r = pack(s) - kc.x_target;
    c += 0.5 * r.dot(kc.x_weight.cwiseProduct(r));
  }
  if (terminal) return c;

  c += 0.5 * u_raw.dot(costs.r_diag.cwiseProduct(u_raw));
  const VecX limits = model.torque_limits();
  for (int i = 0; i < model.nj(); ++i) {
    const double over = std::abs(u_raw(i)) - limits(i);
    if (over > 0.0) c += 0.5 * costs.torque_penalty_weight * over * over;
  }
  const VecX lo = model.joint_lower(), hi = model.joint_upper();
  for (int i = 0; i < model.nj(); ++i) {
    const double qj = s.q(model.nbase() + i);
    const double below = (lo(i) + costs.joint_limit_margin) - qj;
    const double above = qj - (hi(i) - costs.joint_limit_margin);
    if (below > 0.0) c += 0.5 * costs.joint_limit_weight * below * below;
    if (above > 0.0) c += 0.5 * costs.joint_limit_weight * above * above;
  }
  for (size_t i = 0; i < active.size(); ++i) {
    const double ft = forces(2 * i), fn = forces(2 * i + 1);
    // smoothed |Ft| keeps the cone residual differentiable through zero
    const double st = std::sqrt(ft * ft + 1e-4);
    const double slip = softplus(st - costs.friction_mu * fn + costs.friction_margin);
    c += 0.5 * costs.friction_weight * slip * slip;
    const double push = softplus(costs.normal_margin - fn);
    c += 0.5 * costs.normal_force_weight * push * push;
  }
  for (const auto& target : kc.forces) {
    const int row = force_row(active, target.site);
    if (row < 0) continue;
    const double r = forces(row + 1) - target.normal;
    c += 0.5 * target.weight * r * r;
  }
  return c;
}

// Gauss-Newton expansion of one knot cost around (x, u); Fx/Fu linearize the
// interval contact force in the state/control directions.
CostExpansion expand_cost(const RobotModel& model, const CostStack& costs, int k,
                          const RobotState& s, const VecX& u_raw,
                          const std::vector<int>& active, const VecX& forces,
                          const MatX& fx, const MatX& fu, bool terminal) {
  const int nx = 2 * model.nv();
  const int nu = model.nj();
  CostExpansion e;
  e.lx = VecX::Zero(nx);
  e.lxx = MatX::Zero(nx, nx);
  e.lu = VecX::Zero(terminal ? 0 : nu);
  e.luu = MatX::Zero(terminal ? 0 : nu, terminal ? 0 : nu);
  e.lux = MatX::Zero(terminal ? 0 : nu, nx);
  e.value = knot_cost_value(model, costs, k, s, u_raw, active, forces, terminal);

  const auto& kc = costs.knots[k];
  for (const auto& st : kc.sites) {
    const auto kin = site_kinematics(model, s, st.site);
    const Vec2 r = kin.position - st.target;
    for (int axis = 0; axis < 2; ++axis) {
      const double w = axis == 0 ? st.weight.x() : st.weight.y();
      if (w == 0.0) continue;
      VecX jrow = VecX::Zero(nx);
      jrow.head(model.nv()) = kin.jacobian.row(axis);
      e.lx += w * r(axis) * jrow;
      e.lxx += w * jrow * jrow.transpose();
    }
  }
  if (kc.x_weight.size() > 0) {
    const VecX r = pack(s) - kc.x_target;
    e.lx += kc.x_weight.cwiseProduct(r);
    e.lxx += kc.x_weight.asDiagonal();
  }
  if (terminal) return e;

  e.lu += costs.r_diag.cwiseProduct(u_raw);
  e.luu += MatX(costs.r_diag.asDiagonal());
  const VecX limits = model.torque_limits();
  for (int i = 0; i < nu; ++i) {
    const double over = std::abs(u_raw(i)) - limits(i);
    if (over > 0.0) {
      const double sgn = u_raw(i) >= 0.0 ? 1.0 : -1.0;
      e.lu(i) += costs.torque_penalty_weight * over * sgn;
      e.luu(i, i) += costs.torque_penalty_weight;
    }
  }
  const VecX lo = model.joint_lower(), hi = model.joint_upper();
  for (int i = 0; i < nu; ++i) {
    const int xi = model.nbase() + i;
    const double qj = s.q(xi);
    const double below = (lo(i) + costs.joint_limit_margin) - qj;
    const double above = qj - (hi(i) - costs.joint_limit_margin);
    if (below > 0.0) {
      e.lx(xi) -= costs.joint_limit_weight * below;
      e.lxx(xi, xi) += costs.joint_limit_weight;
    }
    if (above > 0.0) {
      e.lx(xi) += costs.joint_limit_weight * above;
      e.lxx(xi, xi) += costs.joint_limit_weight;
    }
  }

  // force-dependent residuals through the contact-force linearization
  auto add_force_residual = [&](const VecX& drdf, double r, double w) {
    if (w == 0.0) return;
    const VecX drdx = fx.transpose() * drdf;
    const VecX drdu = fu.transpose() * drdf;
    e.lx += w * r * drdx;
    e.lu += w * r * drdu;
    e.lxx += w * drdx * drdx.transpose();
    e.luu += w * drdu * drdu.transpose();
    e.lux += w * drdu * drdx.transpose();
  };
  if (forces.size() > 0) {
    for (size_t i = 0; i < active.size(); ++i) {
      const double ft = forces(2 * i), fn = forces(2 * i + 1);
      const double st = std::sqrt(ft * ft + 1e-4);
      const double slip_arg = st - costs.friction_mu * fn + costs.friction_margin;
      const double g_slip = softplus_grad(slip_arg);
      if (g_slip > 1e-8) {
        VecX drdf = VecX::Zero(forces.size());
        drdf(2 * i) = g_slip * ft / st;
        drdf(2 * i + 1) = g_slip * -costs.friction_mu;
        add_force_residual(drdf, softplus(slip_arg), costs.friction_weight);
      }
      const double push_arg = costs.normal_margin - fn;
      const double g_push = softplus_grad(push_arg);
      if (g_push > 1e-8) {
        VecX drdf = VecX::Zero(forces.size());
        drdf(2 * i + 1) = -g_push;
        add_force_residual(drdf, softplus(push_arg), costs.normal_force_weight);
      }
    }
    for (const auto& target : kc.forces) {
      const int row = force_row(active, target.site);
      if (row < 0) continue;
      VecX drdf = VecX::Zero(forces.size());
      drdf(row + 1) = 1.0;
      add_force_residual(drdf, forces(row + 1) - target.normal, target.weight);
    }
  }
  return e;
}

TrajectoryKnot make_knot(const RobotModel& model, const RobotState& s, const VecX& u,
                         const std::vector<int>& active, const VecX& forces) {
  TrajectoryKnot k;
  k.q = s.q;
  k.v = s.v;
  k.u = u;
  k.active_sites = active;
  k.forces = forces;
  k.site_positions.resize(model.num_sites());
  for (int i = 0; i < model.num_sites(); ++i)
    k.site_positions[i] = site_kinematics(model, s, i).position;
  return k;
}

}  // namespace

// Static hold at a state: least-squares contact forces carry the base
// wrench, joints compensate the rest. The solver's default initial iterate;
// zero torque collapses multi-contact poses immediately.
VecX static_hold_controls(const RobotModel& model, const std::vector<int>& contacts,
                          const RobotState& x0) {
  const VecX bias = bias_forces(model, x0);
  VecX tau = bias.tail(model.nj());
  if (!contacts.empty() && model.nbase() > 0) {
    const MatX jac = contact_jacobian(model, x0, ContactSet::of(contacts));
    const MatX a = jac.transpose().topRows(model.nbase());
    const VecX f = a.transpose() * (a * a.transpose())
                                       .ldlt()
                                       .solve(bias.head(model.nbase()));
    tau = (bias - jac.transpose() * f).tail(model.nj());
  }
  return clamp_torque(tau, model.torque_limits());
}

namespace {

// Internal iterate: states, interval forces and the raw control sequence.
struct Sweep {
  std::vector<RobotState> xs;  // horizon + 1
  std::vector<VecX> forces;    // horizon, per-interval multipliers
  double cost = 0.0;
  bool ok = false;
};

Sweep sweep_rollout(const RobotModel& model, const std::vector<StepContext>& ctx,
                    const CostStack& costs, const RobotState& x0,
                    const std::vector<VecX>& u_raw, double dt, const VecX& limits) {
  const int horizon = static_cast<int>(ctx.size());
  Sweep sw;
  sw.xs.resize(horizon + 1);
  sw.forces.resize(horizon);
  sw.xs[0] = x0;
  sw.cost = 0.0;
  for (int k = 0; k < horizon; ++k) {
    try {
      sw.xs[k + 1] =
          hybrid_step(model, ctx[k], sw.xs[k], u_raw[k], dt, limits, &sw.forces[k]);
    } catch (const std::exception&) {
      return sw;
    }
    if (!sw.xs[k + 1].q.allFinite() || !sw.xs[k + 1].v.allFinite()) return sw;
    sw.cost += knot_cost_value(model, costs, k, sw.xs[k], u_raw[k], ctx[k].contacts,
                               sw.forces[k], false);
  }
  sw.cost += knot_cost_value(model, costs, horizon, sw.xs[horizon], VecX(),
                             {}, VecX(), true);
  sw.ok = std::isfinite(sw.cost);
  return sw;
}

}  // namespace

void CostStack::validate(const RobotModel& model) const {
  if (knots.size() < 2) throw std::invalid_argument("costs: horizon must be >= 2 knots");
  if (r_diag.size() != model.nj() || (r_diag.array() <= 0.0).any())
    throw std::invalid_argument("costs: control weight must be strictly positive");
  if (friction_mu <= 0.0 || friction_mu > 1.5)
    throw std::invalid_argument("costs: friction coefficient out of (0, 1.5]");
  for (const auto& kc : knots) {
    if (kc.x_weight.size() != 0 &&
        (kc.x_weight.size() != 2 * model.nv() || (kc.x_weight.array() < 0.0).any()))
      throw std::invalid_argument("costs: bad state weight");
    for (const auto& st : kc.sites)
      if (st.site < 0 || st.site >= model.num_sites() ||
          (st.weight.array() < 0.0).any())
        throw std::invalid_argument("costs: bad site target");
    for (const auto& ft : kc.forces)
      if (ft.site < 0 || ft.site >= model.num_sites() || ft.weight < 0.0)
        throw std::invalid_argument("costs: bad force target");
  }
}

OptimalTrajectory rollout(const RobotModel& model, const ContactSchedule& schedule,
                          const std::vector<VecX>& controls, const RobotState& x0,
                          double dt) {
  schedule.validate(dt);
  const int horizon = schedule.phase_start_knots(dt).back();
  if (static_cast<int>(controls.size()) != horizon)
    throw std::invalid_argument("rollout: controls length must equal knot count - 1");
  const auto ctx = build_contexts(schedule, dt, horizon);
  const VecX limits = model.torque_limits();

  OptimalTrajectory traj;
  traj.dt = dt;
  traj.knots.reserve(horizon + 1);
  RobotState s = x0;
  for (int k = 0; k < horizon; ++k) {
    VecX forces;
    const VecX u = clamp_torque(controls[k], limits);
    RobotState next = hybrid_step(model, ctx[k], s, u, dt, limits, &forces);
    traj.knots.push_back(make_knot(model, s, u, ctx[k].contacts, forces));
    s = next;
  }
  // terminal knot: torque and forces held from the last interval (zero-order
  // hold; the multipliers of record are those of the intervals)
  const auto& last = traj.knots.back();
  traj.knots.push_back(make_knot(model, s, last.u, last.active_sites, last.forces));
  return traj;
}

double trajectory_cost(const RobotModel& model, const CostStack& costs,
                       const OptimalTrajectory& traj) {
  const int horizon = traj.horizon();
  if (costs.horizon() != horizon)
    throw std::invalid_argument("cost: horizon mismatch");
  double total = 0.0;
  for (int k = 0; k <= horizon; ++k) {
    const auto& kn = traj.knots[k];
    total += knot_cost_value(model, costs, k, RobotState{kn.q, kn.v}, kn.u,
                             kn.active_sites, kn.forces, k == horizon);
  }
  return total;
}

OptimalTrajectory solve(const RobotModel& model, const ContactSchedule& schedule,
                        const CostStack& costs, const RobotState& x0,
                        const SolverOptions& opts,
                        const std::vector<VecX>* warm_start) {
  costs.validate(model);
  const int horizon = costs.horizon();
  const double dt = schedule.total_duration() / horizon;
  schedule.validate(dt);
  const auto ctx = build_contexts(schedule, dt, horizon);
  const VecX limits = model.torque_limits();
  const int nx = 2 * model.nv();
  const int nu = model.nj();

  std::vector<VecX> u_raw(
      horizon, static_hold_controls(model, ctx.front().contacts, x0));
  if (warm_start) {
    if (static_cast<int>(warm_start->size()) != horizon)
      throw std::invalid_argument("solve: warm start length mismatch");
    u_raw = *warm_start;
  }

  Sweep cur = sweep_rollout(model, ctx, costs, x0, u_raw, dt, limits);
  if (!cur.ok) throw std::runtime_error("ddp: initial rollout failed");

  std::vector<MatX> fx(horizon), fu(horizon), ffx(horizon), ffu(horizon);
  std::vector<VecX> gain_k(horizon);
  std::vector<MatX> gain_K(horizon);

  double reg = opts.reg_init;
  int iter = 0;
  bool converged = false;
  bool stalled = false;

  for (iter = 1; iter <= opts.max_iters && !converged; ++iter) {
    // --- dynamics and force derivatives, cached per knot ---
    const double h = opts.fd_step;
    for (int k = 0; k < horizon; ++k) {
      const VecX xk = pack(cur.xs[k]);
      const int nc = static_cast<int>(cur.forces[k].size());
      fx[k].resize(nx, nx);
      fu[k].resize(nx, nu);
      ffx[k].resize(nc, nx);
      ffu[k].resize(nc, nu);
      for (int j = 0; j < nx; ++j) {
        VecX xp = xk, xm = xk;
        xp(j) += h;
        xm(j) -= h;
        VecX fp, fm;
        const RobotState sp =
            hybrid_step(model, ctx[k], unpack(model, xp), u_raw[k], dt, limits, &fp);
        const RobotState sm =
            hybrid_step(model, ctx[k], unpack(model, xm), u_raw[k], dt, limits, &fm);
        fx[k].col(j) = (pack(sp) - pack(sm)) / (2.0 * h);
        if (nc > 0) ffx[k].col(j) = (fp - fm) / (2.0 * h);
      }
      for (int j = 0; j < nu; ++j) {
        VecX up = u_raw[k], um = u_raw[k];
        up(j) += h;
        um(j) -= h;
        VecX fp, fm;
        const RobotState sp = hybrid_step(model, ctx[k], cur.xs[k], up, dt, limits, &fp);
        const RobotState sm = hybrid_step(model, ctx[k], cur.xs[k], um, dt, limits, &fm);
        fu[k].col(j) = (pack(sp) - pack(sm)) / (2.0 * h);
        if (nc > 0) ffu[k].col(j) = (fp - fm) / (2.0 * h);
      }
    }

    // --- backward pass, restarted with more regularization on failure ---
    double expected = 0.0;
    bool backward_ok = false;
    while (!backward_ok) {
      backward_ok = true;
      expected = 0.0;
      CostExpansion terminal =
          expand_cost(model, costs, horizon, cur.xs[horizon], VecX(), {}, VecX(),
                      MatX::Zero(0, nx), MatX::Zero(0, nu), true);
      VecX vx = terminal.lx;
      MatX vxx = terminal.lxx;
      for (int k = horizon - 1; k >= 0; --k) {
        const auto e =
            expand_cost(model, costs, k, cur.xs[k], u_raw[k], ctx[k].contacts,
                        cur.forces[k], ffx[k], ffu[k], false);
        const VecX qx = e.lx + fx[k].transpose() * vx;
        const VecX qu = e.lu + fu[k].transpose() * vx;
        const MatX qxx = e.lxx + fx[k].transpose() * vxx * fx[k];
        const MatX quu = e.luu + fu[k].transpose() * vxx * fu[k];
        const MatX qux = e.lux + fu[k].transpose() * vxx * fx[k];
        // state-space regularization: gains from the damped value Hessian,
        // value recursion from the undamped one
        const MatX vxx_reg = vxx + reg * MatX::Identity(nx, nx);
        MatX quu_hat = e.luu + fu[k].transpose() * vxx_reg * fu[k];
        quu_hat.diagonal().array() += reg;
        const MatX qux_hat = e.lux + fu[k].transpose() * vxx_reg * fx[k];
        Eigen::LLT<MatX> llt(quu_hat);
        if (llt.info() != Eigen::Success) {
          backward_ok = false;
          break;
        }
        gain_k[k] = -llt.solve(qu);
        gain_K[k] = -llt.solve(qux_hat);
        expected += -gain_k[k].dot(qu) - 0.5 * gain_k[k].dot(quu * gain_k[k]);
        vx = qx + gain_K[k].transpose() * quu * gain_k[k] +
             gain_K[k].transpose() * qu + qux.transpose() * gain_k[k];
        vxx = qxx + gain_K[k].transpose() * quu * gain_K[k] +
              gain_K[k].transpose() * qux + qux.transpose() * gain_K[k];
        vxx = 0.5 * (vxx + vxx.transpose());
        // a runaway recursion is treated like an indefinite Hessian
        if (!vxx.allFinite() || !vx.allFinite() ||
            vxx.cwiseAbs().maxCoeff() > 1e12 ||
            gain_K[k].cwiseAbs().maxCoeff() > 1e8) {
          backward_ok = false;
          break;
        }
      }
      if (!backward_ok) {
        reg *= 10.0;
        if (reg > opts.reg_max) {
          backward_ok = true;  // keep the best iterate, stop improving
          stalled = true;
        }
      }
      if (stalled) break;
    }

    if (stalled) break;
    // converged when the quadratic model predicts no further progress
    if (expected < opts.tol * std::max(1.0, std::abs(cur.cost))) {
      converged = true;
      break;
    }

    // --- forward pass with backtracking line search ---
    bool accepted = false;
    for (int ls = 0; ls < opts.line_search_steps && !accepted; ++ls) {
      const double alpha = std::pow(0.5, ls);
      std::vector<VecX> u_try(horizon);
      Sweep cand;
      cand.xs.resize(horizon + 1);
      cand.forces.resize(horizon);
      cand.xs[0] = x0;
      cand.cost = 0.0;
      bool failed = false;
      for (int k = 0; k < horizon; ++k) {
        const VecX dx = pack(cand.xs[k]) - pack(cur.xs[k]);
        u_try[k] = u_raw[k] + alpha * gain_k[k] + gain_K[k] * dx;
        try {
          cand.xs[k + 1] = hybrid_step(model, ctx[k], cand.xs[k], u_try[k], dt,
                                       limits, &cand.forces[k]);
        } catch (const std::exception&) {
          failed = true;
          break;
        }
        if (!cand.xs[k + 1].q.allFinite() || !cand.xs[k + 1].v.allFinite()) {
          failed = true;
          break;
        }
        cand.cost += knot_cost_value(model, costs, k, cand.xs[k], u_try[k],
                                     ctx[k].contacts, cand.forces[k], false);
      }
      if (failed) continue;
      cand.cost += knot_cost_value(model, costs, horizon, cand.xs[horizon], VecX(),
                                   {}, VecX(), true);
      if (std::isfinite(cand.cost) && cand.cost < cur.cost) {
        accepted = true;
        const double improvement =
            (cur.cost - cand.cost) / std::max(1.0, std::abs(cur.cost));
        cur = std::move(cand);
        u_raw = std::move(u_try);
        reg = std::max(opts.reg_min, reg / 2.0);
        if (opts.verbose)
          std::printf("ddp iter %3d  cost %.10e  reg %.1e  alpha %.4f  impr %.2e  exp %.2e\n",
                      iter, cur.cost, reg, alpha, improvement, expected);
        if (improvement < opts.tol) converged = true;
      }
    }
    if (!accepted) {
      reg *= 10.0;
      if (reg > opts.reg_max) break;  // stalled: return best iterate
    }
  }

  OptimalTrajectory traj;
  traj.dt = dt;
  traj.cost = cur.cost;
  traj.iterations = std::min(iter, opts.max_iters);
  traj.converged = converged;
  traj.knots.reserve(horizon + 1);
  for (int k = 0; k < horizon; ++k)
    traj.knots.push_back(make_knot(model, cur.xs[k], clamp_torque(u_raw[k], limits),
                                   ctx[k].contacts, cur.forces[k]));
  const auto& last = traj.knots.back();
  traj.knots.push_back(make_knot(model, cur.xs[horizon], last.u, last.active_sites,
                                 last.forces));
  return traj;
}

FeasibilityReport check_feasibility(const OptimalTrajectory& traj,
                                    const RobotModel& model,
                                    const CostStack& costs,
                                    const ContactSchedule& schedule) {
  FeasibilityReport rep;
  rep.converged = traj.converged;
  rep.min_normal_force = 1e9;
  const int horizon = traj.horizon();
  const auto ctx = build_contexts(schedule, traj.dt, horizon);
  const VecX limits = model.torque_limits();
  const VecX lo = model.joint_lower(), hi = model.joint_upper();

  for (int k = 0; k <= horizon; ++k) {
    const auto& kn = traj.knots[k];
    for (int i = 0; i < model.nj(); ++i) {
      const double qj = kn.q(model.nbase() + i);
      rep.max_joint_violation =
          std::max({rep.max_joint_violation, lo(i) - qj, qj - hi(i)});
      rep.max_torque_violation =
          std::max(rep.max_torque_violation, std::abs(kn.u(i)) - limits(i));
    }
    for (size_t c = 0; c < kn.active_sites.size(); ++c) {
      const double ft = kn.forces(2 * c), fn = kn.forces(2 * c + 1);
      rep.max_friction_residual = std::max(
          rep.max_friction_residual, std::abs(ft) - costs.friction_mu * fn);
      rep.min_normal_force = std::min(rep.min_normal_force, fn);
    }
  }
  rep.max_joint_violation = std::max(rep.max_joint_violation, 0.0);
  rep.max_torque_violation = std::max(rep.max_torque_violation, 0.0);
  rep.max_friction_residual = std::max(rep.max_friction_residual, 0.0);
  if (rep.min_normal_force > 1e8) rep.min_normal_force = 0.0;

  // knot-wise dynamics defect against the hybrid step
  for (int k = 0; k < horizon; ++k) {
    const RobotState s{traj.knots[k].q, traj.knots[k].v};
    const RobotState next =
        hybrid_step(model, ctx[k], s, traj.knots[k].u, traj.dt, limits, nullptr);
    const double defect =
        std::max((next.q - traj.knots[k + 1].q).cwiseAbs().maxCoeff(),
                 (next.v - traj.knots[k + 1].v).cwiseAbs().maxCoeff());
    rep.max_dynamics_defect = std::max(rep.max_dynamics_defect, defect);
  }

  // post-impact contact velocity
  for (const auto& imp : schedule.impact_knots(traj.dt)) {
    if (imp.knot > horizon) continue;
    const RobotState s{traj.knots[imp.knot].q, traj.knots[imp.knot].v};
    const int phase = imp.knot < horizon
                          ? schedule.phase_of_interval(imp.knot, traj.dt)
                          : static_cast<int>(schedule.phases.size()) - 1;
    const auto contacts = ContactSet::of(schedule.phases[phase].active_sites);
    const MatX jac = contact_jacobian(model, s, contacts);
    rep.max_impact_residual =
        std::max(rep.max_impact_residual, (jac * s.v).cwiseAbs().maxCoeff());
  }
  return rep;
}

bool FeasibilityReport::passes(double mu, double total_weight_newtons) const {
  return converged && min_normal_force >= -1e-6 &&
         max_friction_residual <= 1e-3 * mu * total_weight_newtons &&
         max_dynamics_defect < 1e-6 && max_impact_residual < 1e-8;
}

}  // namespace torl
