#include "torl/dynamics.hpp"

#include <cmath>

namespace torl {

namespace {

void check_state(const RobotModel& model, const RobotState& state) {
  if (state.q.size() != model.nq() || state.v.size() != model.nv())
    throw std::invalid_argument("dynamics: state dimension mismatch");
  if (!state.q.allFinite() || !state.v.allFinite())
    throw std::invalid_argument("dynamics: non-finite state");
}

// Per-link joint transform and motion subspace for the current q.
struct JointFrame {
  Xform x_up;  // parent link -> this link
  Vec3 s;      // motion subspace column, this-link coordinates
};

JointFrame joint_frame(const CompiledLink& link, double q) {
  Xform tree;
  tree.E = rot2(link.rotation).transpose();
  tree.r = link.anchor;
  JointFrame jf;
  if (link.prismatic) {
    Xform xj;
    xj.r = q * link.axis;
    jf.x_up = xj * tree;
    jf.s = Vec3(0.0, link.axis.x(), link.axis.y());
  } else {
    Xform xj;
    xj.E = rot2(q).transpose();
    jf.x_up = xj * tree;
    jf.s = Vec3(1.0, 0.0, 0.0);
  }
  return jf;
}

}  // namespace

KinematicsCache forward_kinematics(const RobotModel& model, const RobotState& state) {
  check_state(model, state);
  const auto& links = model.links();
  KinematicsCache cache;
  cache.link.resize(links.size());
  for (size_t i = 0; i < links.size(); ++i) {
    const auto& l = links[i];
    const double q = state.q(l.gc);
    const double qd = state.v(l.gc);
    Mat2 r_joint;
    Vec2 o_joint;
    double w_parent;
    Vec2 v_parent;
    if (l.parent < 0) {
      r_joint = rot2(l.rotation);
      o_joint = l.anchor;
      w_parent = 0.0;
      v_parent = Vec2::Zero();
    } else {
      const auto& p = cache.link[l.parent];
      r_joint = p.R * rot2(l.rotation);
      o_joint = p.origin + p.R * l.anchor;
      w_parent = p.omega;
      v_parent = p.vel + p.omega * perp(o_joint - p.origin);
    }
    auto& k = cache.link[i];
    if (l.prismatic) {
      const Vec2 axis_w = r_joint * l.axis;
      k.R = r_joint;
      k.origin = o_joint + q * axis_w;
      k.omega = w_parent;
      k.vel = v_parent + w_parent * (q * perp(axis_w)) + qd * axis_w;
    } else {
      k.R = r_joint * rot2(q);
      k.origin = o_joint;
      k.omega = w_parent + qd;
      k.vel = v_parent;
    }
  }
  return cache;
}

namespace {

// World position/velocity of a point fixed on a compiled link.
Vec2 point_position(const KinematicsCache::LinkKin& k, const Vec2& local) {
  return k.origin + k.R * local;
}
Vec2 point_velocity(const KinematicsCache::LinkKin& k, const Vec2& local) {
  return k.vel + k.omega * perp(k.R * local);
}

// Jacobian of a point on `link`: 2 x nv, columns over ancestor joints.
MatX point_jacobian(const RobotModel& model, const KinematicsCache& cache,
                    int link, const Vec2& local) {
  const auto& links = model.links();
  MatX jac = MatX::Zero(2, model.nv());
  const Vec2 p = point_position(cache.link[link], local);
  for (int i = link; i >= 0; i = links[i].parent) {
    const auto& l = links[i];
    const auto& k = cache.link[i];
    if (l.prismatic) {
      // world axis: R of the link equals the joint frame for prismatic links
      jac.col(l.gc) = k.R * l.axis;
    } else {
      jac.col(l.gc) = perp(p - k.origin);
    }
  }
  return jac;
}

// Classical acceleration of a point fixed on a link, for qddot = 0 and no
// gravity: the Jdot * v bias.
struct AccelCache {
  std::vector<double> domega;
  std::vector<Vec2> accel;  // of link-frame origin points
};

AccelCache bias_accelerations(const RobotModel& model, const RobotState& state,
                              const KinematicsCache& cache) {
  const auto& links = model.links();
  AccelCache out;
  out.domega.resize(links.size());
  out.accel.resize(links.size());
  for (size_t i = 0; i < links.size(); ++i) {
    const auto& l = links[i];
    const double q = state.q(l.gc);
    const double qd = state.v(l.gc);
    double dw_parent;
    Vec2 a_parent;
    double w_parent;
    Vec2 d_world;  // joint origin relative to parent origin, world frame
    Mat2 r_joint;
    if (l.parent < 0) {
      dw_parent = 0.0;
      a_parent = Vec2::Zero();
      w_parent = 0.0;
      d_world = l.anchor;
      r_joint = rot2(l.rotation);
      // world-attached: the anchor point has zero acceleration
      a_parent = Vec2::Zero();
    } else {
      const auto& pk = cache.link[l.parent];
      r_joint = pk.R * rot2(l.rotation);
      d_world = pk.R * l.anchor;
      w_parent = pk.omega;
      dw_parent = out.domega[l.parent];
      a_parent = out.accel[l.parent] + dw_parent * perp(d_world) -
                 w_parent * w_parent * d_world;
    }
    if (l.prismatic) {
      const Vec2 axis_w = r_joint * l.axis;
      out.domega[i] = dw_parent;
      out.accel[i] = a_parent + dw_parent * (q * perp(axis_w)) -
                     w_parent * w_parent * (q * axis_w) +
                     2.0 * qd * w_parent * perp(axis_w);
    } else {
      out.domega[i] = dw_parent;  // qddot = 0
      out.accel[i] = a_parent;
    }
  }
  return out;
}

}  // namespace

SiteKinematics site_kinematics(const RobotModel& model, const RobotState& state,
                               int site) {
  if (site < 0 || site >= model.num_sites())
    throw std::invalid_argument("dynamics: unknown site index");
  const auto cache = forward_kinematics(model, state);
  const auto& def = model.contact_sites[site];
  const int link = model.link_of_body(def.body);
  SiteKinematics out;
  out.position = point_position(cache.link[link], def.offset);
  out.velocity = point_velocity(cache.link[link], def.offset);
  out.jacobian = point_jacobian(model, cache, link, def.offset);
  return out;
}

SiteKinematics site_kinematics(const RobotModel& model, const RobotState& state,
                               const std::string& site_name) {
  return site_kinematics(model, state, model.site_index(site_name));
}

MatX contact_jacobian(const RobotModel& model, const RobotState& state,
                      const ContactSet& contacts) {
  const auto cache = forward_kinematics(model, state);
  MatX jac(2 * contacts.active_sites.size(), model.nv());
  for (size_t c = 0; c < contacts.active_sites.size(); ++c) {
    const auto& def = model.contact_sites.at(contacts.active_sites[c]);
    jac.middleRows<2>(2 * c) =
        point_jacobian(model, cache, model.link_of_body(def.body), def.offset);
  }
  return jac;
}

VecX contact_accel_bias(const RobotModel& model, const RobotState& state,
                        const ContactSet& contacts) {
  const auto cache = forward_kinematics(model, state);
  const auto acc = bias_accelerations(model, state, cache);
  VecX bias(2 * contacts.active_sites.size());
  for (size_t c = 0; c < contacts.active_sites.size(); ++c) {
    const auto& def = model.contact_sites.at(contacts.active_sites[c]);
    const int link = model.link_of_body(def.body);
    const auto& k = cache.link[link];
    const Vec2 arm = k.R * def.offset;
    bias.segment<2>(2 * c) = acc.accel[link] + acc.domega[link] * perp(arm) -
                             k.omega * k.omega * arm;
  }
  return bias;
}

VecX inverse_dynamics(const RobotModel& model, const RobotState& state,
                      const VecX& accel, const ContactSet& contacts) {
  check_state(model, state);
  if (accel.size() != model.nv())
    throw std::invalid_argument("dynamics: acceleration dimension mismatch");
  if (!accel.allFinite())
    throw std::invalid_argument("dynamics: non-finite acceleration");
  if (contacts.forces.size() != 0 && contacts.forces.size() != contacts.dim())
    throw std::invalid_argument("dynamics: contact force dimension mismatch");

  const auto& links = model.links();
  const size_t n = links.size();

  // spatial external force per link, link coordinates
  std::vector<Vec3> f_ext(n, Vec3::Zero());
  if (contacts.forces.size() > 0) {
    const auto cache = forward_kinematics(model, state);
    for (size_t c = 0; c < contacts.active_sites.size(); ++c) {
      const auto& def = model.contact_sites.at(contacts.active_sites[c]);
      const int link = model.link_of_body(def.body);
      const Vec2 f_world = contacts.forces.segment<2>(2 * c);
      const Vec2 f_body = cache.link[link].R.transpose() * f_world;
      f_ext[link] += Vec3(cross2(def.offset, f_body), f_body.x(), f_body.y());
    }
  }

  std::vector<Vec3> v(n), a(n), f(n);
  std::vector<JointFrame> jf(n);
  const Vec3 a_world(0.0, -model.gravity.x(), -model.gravity.y());
  for (size_t i = 0; i < n; ++i) {
    const auto& l = links[i];
    jf[i] = joint_frame(l, state.q(l.gc));
    const Vec3 vj = jf[i].s * state.v(l.gc);
    if (l.parent < 0) {
      v[i] = vj;
      a[i] = jf[i].x_up.motion(a_world) + jf[i].s * accel(l.gc) + crm(v[i], vj);
    } else {
      v[i] = jf[i].x_up.motion(v[l.parent]) + vj;
      a[i] = jf[i].x_up.motion(a[l.parent]) + jf[i].s * accel(l.gc) + crm(v[i], vj);
    }
    f[i] = l.inertia * a[i] + crf(v[i], l.inertia * v[i]) - f_ext[i];
  }

  VecX tau(model.nv());
  for (int i = static_cast<int>(n) - 1; i >= 0; --i) {
    tau(links[i].gc) = jf[i].s.dot(f[i]);
    if (links[i].parent >= 0) f[links[i].parent] += jf[i].x_up.force_inv(f[i]);
  }
  return tau;
}

VecX bias_forces(const RobotModel& model, const RobotState& state) {
  return inverse_dynamics(model, state, VecX::Zero(model.nv()), ContactSet::none());
}

MatX mass_matrix(const RobotModel& model, const RobotState& state) {
  check_state(model, state);
  const auto& links = model.links();
  const size_t n = links.size();
  std::vector<JointFrame> jf(n);
  std::vector<Mat3> ic(n);
  for (size_t i = 0; i < n; ++i) {
    jf[i] = joint_frame(links[i], state.q(links[i].gc));
    ic[i] = links[i].inertia;
  }
  MatX m = MatX::Zero(model.nv(), model.nv());
  for (int i = static_cast<int>(n) - 1; i >= 0; --i) {
    const auto& l = links[i];
    if (l.parent >= 0) {
      const Mat3 xm = jf[i].x_up.motion_matrix();
      ic[l.parent] += xm.transpose() * ic[i] * xm;
    }
    Vec3 fh = ic[i] * jf[i].s;
    m(l.gc, l.gc) = jf[i].s.dot(fh);
    int j = i;
    while (links[j].parent >= 0) {
      fh = jf[j].x_up.motion_matrix().transpose() * fh;
      j = links[j].parent;
      m(l.gc, links[j].gc) = fh.dot(jf[j].s);
      m(links[j].gc, l.gc) = m(l.gc, links[j].gc);
    }
  }
  return m;
}

namespace {

// Assembles and solves the contact KKT system shared by the forward and
// impulse dynamics. Unknowns are [vdot; F] (or [v+; Lambda]).
struct KktSolution {
  VecX primal;
  VecX multipliers;
};

KktSolution solve_kkt(const MatX& m, const MatX& jac, const VecX& rhs_top,
                      const VecX& rhs_bottom) {
  const int nv = static_cast<int>(m.rows());
  const int nc = static_cast<int>(jac.rows());

  Eigen::FullPivLU<MatX> jlu(jac);
  jlu.setThreshold(1e-10);
  if (jlu.rank() < nc)
    throw std::runtime_error("dynamics: rank-deficient contact Jacobian");

  MatX kkt = MatX::Zero(nv + nc, nv + nc);
  kkt.topLeftCorner(nv, nv) = m;
  kkt.topRightCorner(nv, nc) = -jac.transpose();
  kkt.bottomLeftCorner(nc, nv) = jac;
  VecX rhs(nv + nc);
  rhs.head(nv) = rhs_top;
  rhs.tail(nc) = rhs_bottom;

  VecX sol = kkt.partialPivLu().solve(rhs);
  const double resid = (kkt * sol - rhs).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
  if (!sol.allFinite() || resid > 1e-9 * scale) {
    // near-singular double-support pose: damp the contact block
    kkt.bottomRightCorner(nc, nc) = -1e-9 * MatX::Identity(nc, nc);
    sol = kkt.fullPivLu().solve(rhs);
    if (!sol.allFinite())
      throw std::runtime_error("dynamics: contact KKT solve failed");
  }
  KktSolution out;
  out.primal = sol.head(nv);
  out.multipliers = sol.tail(nc);
  return out;
}

}  // namespace

ForwardDynamicsResult constrained_forward_dynamics(const RobotModel& model,
                                                   const RobotState& state,
                                                   const VecX& torque,
                                                   const ContactSet& contacts) {
  check_state(model, state);
  if (torque.size() != model.nj())
    throw std::invalid_argument("dynamics: torque dimension mismatch");
  if (!torque.allFinite())
    throw std::invalid_argument("dynamics: non-finite torque");

  const MatX m = mass_matrix(model, state);
  VecX rhs = -bias_forces(model, state);
  rhs.tail(model.nj()) += torque;

  ForwardDynamicsResult out;
  if (contacts.active_sites.empty()) {
    out.accel = m.ldlt().solve(rhs);
    out.forces = VecX();
    return out;
  }
  const MatX jac = contact_jacobian(model, state, contacts);
  const VecX bias = contact_accel_bias(model, state, contacts);
  const auto sol = solve_kkt(m, jac, rhs, -bias);
  out.accel = sol.primal;
  out.forces = sol.multipliers;
  return out;
}

ImpulseResult impulse_dynamics(const RobotModel& model, const RobotState& state,
                               const ContactSet& new_contacts) {
  check_state(model, state);
  if (new_contacts.active_sites.empty())
    throw std::invalid_argument("dynamics: impulse map needs a nonempty contact set");

  const MatX m = mass_matrix(model, state);
  const MatX jac = contact_jacobian(model, state, new_contacts);
  const auto sol = solve_kkt(m, jac, m * state.v, VecX::Zero(jac.rows()));
  ImpulseResult out;
  out.v_post = sol.primal;
  out.impulses = sol.multipliers;
  return out;
}

double kinetic_energy(const RobotModel& model, const RobotState& state) {
  return 0.5 * state.v.dot(mass_matrix(model, state) * state.v);
}

double potential_energy(const RobotModel& model, const RobotState& state) {
  const auto cache = forward_kinematics(model, state);
  double e = 0.0;
  for (const auto& l : model.links()) {
    if (l.body < 0) continue;
    const auto& b = model.bodies[l.body];
    const Vec2 com = point_position(cache.link[model.link_of_body(l.body)], b.com);
    e -= b.mass * model.gravity.dot(com);
  }
  return e;
}

RobotState integrate_step(const RobotModel& model, const RobotState& state,
                          const VecX& torque, const ContactSet& contacts,
                          double dt, VecX* forces_out) {
  const auto fd = constrained_forward_dynamics(model, state, torque, contacts);
  if (forces_out) *forces_out = fd.forces;
  RobotState next;
  next.v = state.v + dt * fd.accel;
  next.q = state.q + dt * next.v;
  return next;
}

RobotState rk4_passive_step(const RobotModel& model, const RobotState& state,
                            double dt) {
  const VecX u = VecX::Zero(model.nj());
  const auto acc = [&](const RobotState& s) {
    return constrained_forward_dynamics(model, s, u, ContactSet::none()).accel;
  };
  const VecX k1q = state.v, k1v = acc(state);
  RobotState s2{state.q + 0.5 * dt * k1q, state.v + 0.5 * dt * k1v};
  const VecX k2q = s2.v, k2v = acc(s2);
  RobotState s3{state.q + 0.5 * dt * k2q, state.v + 0.5 * dt * k2v};
  const VecX k3q = s3.v, k3v = acc(s3);
  RobotState s4{state.q + dt * k3q, state.v + dt * k3v};
  const VecX k4q = s4.v, k4v = acc(s4);
  RobotState next;
  next.q = state.q + dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
  next.v = state.v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  return next;
}

}  // namespace torl
