#pragma once

#include "torl/dynamics.hpp"
#include "torl/tasks.hpp"

namespace torl {

// ---------- cost stack ----------

struct SiteTarget {
  int site = 0;
  Vec2 target = Vec2::Zero();
  Vec2 weight = Vec2::Zero();  // per-axis diagonal weight
};

struct ForceTarget {
  int site = 0;
  double normal = 0.0;  // N, commanded contact normal force
  double weight = 0.0;
};

struct KnotCost {
  std::vector<SiteTarget> sites;
  VecX x_weight;  // diagonal on [q; v], may be empty (= zero)
  VecX x_target;
  std::vector<ForceTarget> forces;
};

struct CostStack {
  std::vector<KnotCost> knots;  // horizon + 1 entries, terminal last
  VecX r_diag;                  // strictly positive control weight

  double torque_penalty_weight = 1e3;
  double joint_limit_weight = 1e3;
  double joint_limit_margin = 0.05;  // barrier activates this far inside
  double friction_weight = 1e2;
  double friction_mu = 0.7;
  double friction_margin = 0.1;      // N, penalty cone tightening
  double normal_force_weight = 1e2;  // hinge active below this normal force
  double normal_margin = 0.5;        // N

  int horizon() const { return static_cast<int>(knots.size()) - 1; }
  void validate(const RobotModel& model) const;
};

// ---------- trajectories ----------

struct TrajectoryKnot {
  VecX q, v;
  VecX u;                            // nj, clamped to the torque limits
  std::vector<int> active_sites;     // contact set of the interval [k, k+1)
  VecX forces;                       // 2 per active site
  std::vector<Vec2> site_positions;  // all model sites
};

struct OptimalTrajectory {
  std::vector<TrajectoryKnot> knots;
  double dt = 0.0;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;

  int horizon() const { return static_cast<int>(knots.size()) - 1; }
  double duration() const { return dt * horizon(); }
};

struct SolverOptions {
  int max_iters = 200;
  double tol = 1e-9;  // relative cost improvement
  double reg_init = 1e-6;
  double reg_min = 1e-9;
  double reg_max = 1e6;
  double fd_step = 1e-6;
  int line_search_steps = 12;
  bool verbose = false;
};

// Semi-implicit rollout of a control sequence over the contact schedule;
// torques are clamped to the limits and the impulse map is applied at every
// knot where a site becomes active.
OptimalTrajectory rollout(const RobotModel& model, const ContactSchedule& schedule,
                          const std::vector<VecX>& controls, const RobotState& x0,
                          double dt);

// Gauss-Newton DDP (iLQR) over the hybrid rollout. Returns the best iterate
// with converged=false if the iteration budget runs out; throws only on
// malformed inputs or an unrecoverable backward pass.
OptimalTrajectory solve(const RobotModel& model, const ContactSchedule& schedule,
                        const CostStack& costs, const RobotState& x0,
                        const SolverOptions& opts = {},
                        const std::vector<VecX>* warm_start = nullptr);

double trajectory_cost(const RobotModel& model, const CostStack& costs,
                       const OptimalTrajectory& traj);

// Torque that holds `x0` statically under the given contact set.
VecX static_hold_controls(const RobotModel& model, const std::vector<int>& contacts,
                          const RobotState& x0);

// ---------- task-specific cost builders ----------

// Per-knot swing-foot and base targets for walk/stair tasks.
CostStack make_dense_targets(const RobotModel& model, const TaskSpec& task,
                             const ContactSchedule& schedule,
                             const RobotState& x0);

// Waypoint-only targets for press/pickup tasks; pressing phases add a
// contact-force tracking term toward the commanded normal force.
CostStack make_sparse_subgoals(const RobotModel& model, const TaskSpec& task,
                               const ContactSchedule& schedule,
                               const RobotState& x0);

CostStack make_cost_stack(const RobotModel& model, const TaskSpec& task,
                          const ContactSchedule& schedule, const RobotState& x0);

// ---------- feasibility ----------

struct FeasibilityReport {
  double max_joint_violation = 0.0;    // rad
  double max_torque_violation = 0.0;   // N m
  double max_friction_residual = 0.0;  // N, max(0, |Ft| - mu Fn)
  double min_normal_force = 0.0;       // N
  double max_dynamics_defect = 0.0;    // state infinity norm
  double max_impact_residual = 0.0;    // m/s, ||Jc v+||_inf at impact knots
  bool converged = false;

  bool passes(double mu, double total_weight_newtons) const;
};

FeasibilityReport check_feasibility(const OptimalTrajectory& traj,
                                    const RobotModel& model,
                                    const CostStack& costs,
                                    const ContactSchedule& schedule);

}  // namespace torl
