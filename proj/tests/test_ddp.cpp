#include "doctest.h"
#include "torl/dataset.hpp"
#include "torl/ddp.hpp"
#include "torl/dynamics.hpp"
#include "torl/tasks.hpp"

#include <cmath>

using namespace torl;

namespace {

ContactSchedule free_schedule(double duration) {
  ContactSchedule s;
  s.phases.push_back({duration, {}});
  return s;
}

// Discrete finite-horizon LQR via the Riccati recursion; the independent
// oracle for the unconstrained solver path.
struct LqrSolution {
  std::vector<VecX> u;
  std::vector<VecX> x;
};

LqrSolution riccati_lqr(const MatX& a, const MatX& b, const MatX& q, const MatX& r,
                        const MatX& qf, const VecX& x0, int horizon) {
  std::vector<MatX> gains(horizon);
  MatX p = qf;
  for (int k = horizon - 1; k >= 0; --k) {
    const MatX quu = r + b.transpose() * p * b;
    const MatX qux = b.transpose() * p * a;
    gains[k] = quu.ldlt().solve(qux);
    p = q + a.transpose() * p * a - qux.transpose() * gains[k];
    p = 0.5 * (p + p.transpose());
  }
  LqrSolution sol;
  sol.x.push_back(x0);
  for (int k = 0; k < horizon; ++k) {
    sol.u.push_back(-gains[k] * sol.x.back());
    sol.x.push_back(a * sol.x.back() + b * sol.u.back());
  }
  return sol;
}

}  // namespace

TEST_CASE("rollout reproduces the discrete ballistic arc") {
  RobotModel m;
  m.name = "ball";
  m.bodies.push_back({"ball", 1.0, Vec2(0.0, 0.0), 0.01});
  Joint j;
  j.name = "base";
  j.type = JointType::FloatingPlanar;
  j.parent = -1;
  j.child = 0;
  m.joints.push_back(j);
  m.compile();

  RobotState x0 = m.zero_state();
  x0.q(1) = 3.0;
  x0.v(0) = 1.5;
  x0.v(1) = 2.0;
  const double dt = 1e-3;
  const int n = 200;
  const auto traj = rollout(m, free_schedule(n * dt), std::vector<VecX>(n, VecX()),
                            x0, dt);
  // closed form of the semi-implicit scheme: v_k = v_0 + k dt g,
  // q_k = q_0 + k dt v_0 + g dt^2 k(k+1)/2
  for (int k = 0; k <= n; ++k) {
    const double g = -9.81;
    const double vz = 2.0 + k * dt * g;
    const double z = 3.0 + k * dt * 2.0 + g * dt * dt * 0.5 * k * (k + 1);
    const double x = k * dt * 1.5;
    CHECK(traj.knots[k].v(1) == doctest::Approx(vz).epsilon(1e-12));
    CHECK(traj.knots[k].q(1) == doctest::Approx(z).epsilon(1e-9));
    CHECK(traj.knots[k].q(0) == doctest::Approx(x).epsilon(1e-9));
    // and within integration error of the continuous parabola
    const double t = k * dt;
    CHECK(std::abs(traj.knots[k].q(1) - (3.0 + 2.0 * t + 0.5 * g * t * t)) <
          0.5 * 9.81 * dt * t + 1e-9);
  }
}

TEST_CASE("gravity-compensated pendulum stays put under rollout") {
  const RobotModel m = build_model("pendulum");
  RobotState x0 = m.zero_state();
  x0.q(0) = M_PI / 12.0;
  const VecX hold = inverse_dynamics(m, x0, VecX::Zero(1), ContactSet::none());
  REQUIRE(std::abs(hold(0)) < m.torque_limits()(0));
  const int n = 100;
  const auto traj =
      rollout(m, free_schedule(n * 0.01), std::vector<VecX>(n, hold), x0, 0.01);
  for (const auto& kn : traj.knots) {
    CHECK(kn.q(0) == doctest::Approx(M_PI / 12.0).epsilon(1e-10));
    CHECK(std::abs(kn.v(0)) < 1e-10);
  }
}

TEST_CASE("impact knot zeroes the landing-site velocity") {
  const RobotModel m = build_model("planar-biped-7dof");
  const TaskSpec task = sample_task("walk", 4);
  const ContactSchedule schedule = make_schedule(m, task);
  const RobotState x0 = initial_state(m, task);
  const int horizon = schedule.phase_start_knots(task.dt).back();
  const auto traj = rollout(m, schedule, std::vector<VecX>(horizon, VecX::Zero(4)),
                            x0, task.dt);
  for (const auto& imp : schedule.impact_knots(task.dt)) {
    const RobotState s{traj.knots[imp.knot].q, traj.knots[imp.knot].v};
    const MatX jac = contact_jacobian(m, s, ContactSet::of(imp.new_sites));
    CHECK((jac * s.v).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("ddp matches the riccati oracle on a double integrator") {
  const RobotModel m = build_model("double-integrator");
  const double dt = 0.02;
  const int horizon = 60;

  CostStack costs;
  costs.knots.resize(horizon + 1);
  costs.r_diag = VecX::Constant(1, 0.1);
  const double wq = 1.0, wv = 0.5, wf = 50.0;
  for (int k = 0; k <= horizon; ++k) {
    auto& kc = costs.knots[k];
    kc.x_weight = VecX::Zero(2);
    kc.x_target = VecX::Zero(2);
    kc.x_weight << (k == horizon ? wf : wq), (k == horizon ? wf : wv);
  }

  RobotState x0 = m.zero_state();
  x0.q(0) = 1.0;
  x0.v(0) = -0.5;

  SolverOptions opts;
  opts.tol = 1e-12;
  const auto traj = solve(m, free_schedule(horizon * dt), costs, x0, opts);
  CHECK(traj.converged);

  // semi-implicit discrete model: v' = v + dt u, q' = q + dt v'
  MatX a(2, 2), b(2, 1);
  a << 1.0, dt, 0.0, 1.0;
  b << dt * dt, dt;
  const auto lqr = riccati_lqr(a, b, (VecX(2) << wq, wv).finished().asDiagonal(),
                               MatX::Constant(1, 1, 0.1),
                               (VecX(2) << wf, wf).finished().asDiagonal(),
                               (VecX(2) << 1.0, -0.5).finished(), horizon);
  for (int k = 0; k < horizon; ++k) {
    CHECK(std::abs(traj.knots[k].u(0) - lqr.u[k](0)) < 1e-6);
    CHECK(std::abs(traj.knots[k].q(0) - lqr.x[k](0)) < 1e-6);
    CHECK(std::abs(traj.knots[k].v(0) - lqr.x[k](1)) < 1e-6);
  }
}

TEST_CASE("torque-limited pendulum swing-up saturates but converges upright") {
  const RobotModel m = build_model("pendulum");
  const double dt = 0.01;
  const int horizon = 300;

  CostStack costs;
  costs.knots.resize(horizon + 1);
  costs.r_diag = VecX::Constant(1, 0.1);
  for (int k = 0; k <= horizon; ++k) {
    auto& kc = costs.knots[k];
    kc.x_weight = VecX::Zero(2);
    kc.x_target = VecX::Zero(2);
    kc.x_target(0) = M_PI;
    kc.x_weight(0) = k == horizon ? 1e4 : 1.0;
    kc.x_weight(1) = k == horizon ? 1e2 : 0.0;
  }

  SolverOptions opts;
  opts.max_iters = 400;
  const auto traj = solve(m, free_schedule(horizon * dt), costs, m.zero_state(), opts);

  const double limit = m.torque_limits()(0);
  REQUIRE(limit < 0.5 * 9.81);  // cannot hold horizontally, must pump
  CHECK(std::abs(traj.knots[horizon].q(0) - M_PI) < 1e-2);
  double max_u = 0.0;
  for (const auto& kn : traj.knots) max_u = std::max(max_u, std::abs(kn.u(0)));
  CHECK(max_u <= limit + 1e-12);
  CHECK(max_u == doctest::Approx(limit).epsilon(1e-9));
}

TEST_CASE("tracking the passive rollout is a fixed point") {
  const RobotModel m = build_model("pendulum");
  const double dt = 0.01;
  const int horizon = 100;
  RobotState x0 = m.zero_state();
  x0.q(0) = 0.7;
  const auto passive = rollout(m, free_schedule(horizon * dt),
                               std::vector<VecX>(horizon, VecX::Zero(1)), x0, dt);

  CostStack costs;
  costs.knots.resize(horizon + 1);
  costs.r_diag = VecX::Constant(1, 1e-8);
  for (int k = 0; k <= horizon; ++k) {
    auto& kc = costs.knots[k];
    kc.x_weight = VecX::Constant(2, 1e3);
    kc.x_target = VecX(2);
    kc.x_target << passive.knots[k].q(0), passive.knots[k].v(0);
  }
  const auto traj = solve(m, free_schedule(horizon * dt), costs, x0);
  CHECK(traj.converged);
  CHECK(traj.iterations <= 1);
  CHECK(traj.cost < 1e-10);
}

TEST_CASE("warm start converges immediately") {
  const RobotModel m = build_model("double-integrator");
  const double dt = 0.02;
  const int horizon = 50;
  CostStack costs;
  costs.knots.resize(horizon + 1);
  costs.r_diag = VecX::Constant(1, 0.1);
  for (int k = 0; k <= horizon; ++k) {
    auto& kc = costs.knots[k];
    kc.x_weight = VecX::Constant(2, k == horizon ? 50.0 : 1.0);
    kc.x_target = VecX::Zero(2);
  }
  RobotState x0 = m.zero_state();
  x0.q(0) = 1.0;

  const auto first = solve(m, free_schedule(horizon * dt), costs, x0);
  REQUIRE(first.converged);
  std::vector<VecX> warm;
  for (int k = 0; k < horizon; ++k) warm.push_back(first.knots[k].u);
  const auto again = solve(m, free_schedule(horizon * dt), costs, x0, {}, &warm);
  CHECK(again.converged);
  CHECK(again.iterations <= 2);
  CHECK(again.cost <= first.cost + 1e-12);
}

TEST_CASE("dense walk targets parameterize the swing profile") {
  const RobotModel m = build_model("planar-biped-7dof");
  TaskSpec task = sample_task("walk", 2);
  task.step_height = 0.15;
  const ContactSchedule schedule = make_schedule(m, task);
  const RobotState x0 = initial_state(m, task);
  const CostStack costs = make_dense_targets(m, task, schedule, x0);

  // apex of the first swing is step_height above flat ground at mid-swing
  const auto starts = schedule.phase_start_knots(task.dt);
  const int k0 = starts[1], k1 = starts[2];
  const int mid = (k0 + k1) / 2;
  REQUIRE(!costs.knots[mid].sites.empty());
  const double apex = costs.knots[mid].sites[0].target.y();
  CHECK(apex == doctest::Approx(0.15).epsilon(1e-6));

  // zero speed: base targets constant across knots
  TaskSpec still = task;
  still.speed = 0.0;
  still.step_length = 0.0;
  const CostStack cstill = make_dense_targets(m, still, schedule, x0);
  for (int k = 0; k + 1 <= cstill.horizon(); ++k) {
    CHECK(cstill.knots[k].x_target(1) == cstill.knots[0].x_target(1));
    CHECK(cstill.knots[k].x_target(m.nv()) == 0.0);
  }
}

TEST_CASE("stair targets step the stance foot by the riser") {
  const RobotModel m = build_model("planar-biped-7dof");
  TaskSpec task = sample_task("stair", 5);
  task.stair_riser = 0.10;
  const ContactSchedule schedule = make_schedule(m, task);
  const RobotState x0 = initial_state(m, task);
  const CostStack costs = make_dense_targets(m, task, schedule, x0);
  const auto starts = schedule.phase_start_knots(task.dt);

  // landing targets of consecutive swings differ by one riser in z
  std::vector<double> landings;
  for (size_t p = 1; p + 1 < schedule.phases.size(); ++p) {
    if (schedule.phases[p].active_sites.size() != 1) continue;
    const int kland = starts[p + 1];
    const int swing = schedule.phases[p].active_sites[0] == 0 ? 1 : 0;
    for (const auto& st : costs.knots[kland].sites)
      if (st.site == swing) landings.push_back(st.target.y());
  }
  REQUIRE(landings.size() >= 2);
  for (size_t i = 1; i < landings.size(); ++i)
    CHECK(landings[i] - landings[i - 1] == doctest::Approx(0.10).epsilon(1e-9));
}

TEST_CASE("sparse subgoals: single terminal subgoal leaves other knots empty") {
  const RobotModel m = build_model("planar-arm-3dof");
  TaskSpec task = sample_task("press", 9);
  task.press_force = 0.0;
  const ContactSchedule schedule = make_schedule(m, task);
  const RobotState x0 = initial_state(m, task);
  const CostStack costs = make_sparse_subgoals(m, task, schedule, x0);
  const auto starts = schedule.phase_start_knots(task.dt);
  for (int k = 0; k <= costs.horizon(); ++k) {
    if (k == starts[1] || k == costs.horizon()) {
      CHECK(!costs.knots[k].sites.empty());
    } else {
      CHECK(costs.knots[k].sites.empty());
      CHECK(costs.knots[k].x_weight.size() == 0);
    }
  }
}

TEST_CASE("feasibility report flags constructed violations") {
  const RobotModel m = build_model("pendulum");
  const double dt = 0.01;
  const int horizon = 50;
  CostStack costs;
  costs.knots.resize(horizon + 1);
  costs.r_diag = VecX::Constant(1, 0.1);
  for (auto& kc : costs.knots) {
    kc.x_weight = VecX::Constant(2, 1.0);
    kc.x_target = VecX::Zero(2);
  }
  auto traj = solve(m, free_schedule(horizon * dt), costs, m.zero_state());
  const auto clean = check_feasibility(traj, m, costs, free_schedule(horizon * dt));
  CHECK(clean.max_torque_violation == 0.0);
  CHECK(clean.max_dynamics_defect < 1e-6);

  // scaled torques break both the limit and the dynamics defect
  for (auto& kn : traj.knots) kn.u *= 10.0;
  traj.knots[5].u(0) = 10.0 * m.torque_limits()(0);
  const auto broken = check_feasibility(traj, m, costs, free_schedule(horizon * dt));
  CHECK(broken.max_torque_violation > 0.0);
}
