#pragma once

#include "torl/model.hpp"

namespace torl {

struct SiteKinematics {
  Vec2 position;   // world
  Vec2 velocity;   // world
  MatX jacobian;   // 2 x nv, d(site velocity)/dv
};

// World-frame kinematics of every compiled link for one state.
struct KinematicsCache {
  struct LinkKin {
    Mat2 R;        // link frame -> world
    Vec2 origin;   // world
    double omega;  // rad/s
    Vec2 vel;      // classical velocity of the link-frame origin point
  };
  std::vector<LinkKin> link;
};

KinematicsCache forward_kinematics(const RobotModel& model, const RobotState& state);

SiteKinematics site_kinematics(const RobotModel& model, const RobotState& state,
                               int site);
SiteKinematics site_kinematics(const RobotModel& model, const RobotState& state,
                               const std::string& site_name);

// Stacked 2-rows-per-site contact Jacobian for the active set.
MatX contact_jacobian(const RobotModel& model, const RobotState& state,
                      const ContactSet& contacts);

// Contact-point acceleration bias Jdot * v, stacked like the Jacobian rows.
VecX contact_accel_bias(const RobotModel& model, const RobotState& state,
                        const ContactSet& contacts);

// Recursive Newton-Euler: tau = M(q) vdot + C(q, v) - Jc^T Fc.
// Base rows carry the residual wrench of a floating-base model.
VecX inverse_dynamics(const RobotModel& model, const RobotState& state,
                      const VecX& accel, const ContactSet& contacts);

// Nonlinear bias C(q, v) (Coriolis, centrifugal, gravity).
VecX bias_forces(const RobotModel& model, const RobotState& state);

// Composite rigid-body algorithm; symmetric positive definite.
MatX mass_matrix(const RobotModel& model, const RobotState& state);

struct ForwardDynamicsResult {
  VecX accel;   // nv
  VecX forces;  // 2 per active site, world frame, acting on the robot
};

// Rigid-contact forward dynamics via the dense KKT system
//   [M  -J^T] [vdot]   [B u - C]
//   [J    0 ] [ F  ] = [-Jdot v]
// `torque` is the actuated-joint torque vector (nj).
ForwardDynamicsResult constrained_forward_dynamics(const RobotModel& model,
                                                   const RobotState& state,
                                                   const VecX& torque,
                                                   const ContactSet& contacts);

struct ImpulseResult {
  VecX v_post;    // nv
  VecX impulses;  // 2 per active site, N s
};

// Plastic impact map: M (v+ - v-) = J^T Lambda with J v+ = 0.
ImpulseResult impulse_dynamics(const RobotModel& model, const RobotState& state,
                               const ContactSet& new_contacts);

// Kinetic energy 0.5 v^T M v.
double kinetic_energy(const RobotModel& model, const RobotState& state);

// Gravitational potential energy relative to world origin height.
double potential_energy(const RobotModel& model, const RobotState& state);

// One semi-implicit Euler step under rigid contact:
//   v' = v + dt vdot(q, v, u),  q' = q + dt v'.
RobotState integrate_step(const RobotModel& model, const RobotState& state,
                          const VecX& torque, const ContactSet& contacts,
                          double dt, VecX* forces_out = nullptr);

// One classical RK4 step of the passive, contact-free dynamics; the
// small-step integrator behind the energy-drift validation probe.
RobotState rk4_passive_step(const RobotModel& model, const RobotState& state,
                            double dt);

}  // namespace torl
