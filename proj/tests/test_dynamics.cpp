#include "doctest.h"
#include "torl/dynamics.hpp"
#include "torl/tasks.hpp"
#include "torl/util.hpp"

#include <cmath>

using namespace torl;

namespace {

// Floating-base point mass with a contact site at the com.
RobotModel make_puck() {
  RobotModel m;
  m.name = "puck";
  m.bodies.push_back({"puck", 1.0, Vec2(0.0, 0.0), 0.01});
  Joint j;
  j.name = "base";
  j.type = JointType::FloatingPlanar;
  j.parent = -1;
  j.child = 0;
  m.joints.push_back(j);
  m.contact_sites.push_back({"center", 0, Vec2(0.0, 0.0)});
  m.compile();
  return m;
}

RobotState random_state(const RobotModel& model, Rng& rng, double amp = 1.0) {
  RobotState s = model.zero_state();
  for (int i = 0; i < model.nq(); ++i) s.q(i) = uniform(rng, -amp, amp);
  for (int i = 0; i < model.nv(); ++i) s.v(i) = uniform(rng, -amp, amp);
  return s;
}

}  // namespace

TEST_CASE("pendulum statics") {
  const RobotModel m = build_model("pendulum");
  RobotState s = m.zero_state();
  const VecX zero = VecX::Zero(1);

  // hanging at rest: zero holding torque
  VecX tau = inverse_dynamics(m, s, zero, ContactSet::none());
  CHECK(std::abs(tau(0)) < 1e-12);

  // horizontal rod: holding torque m g l / 2
  s.q(0) = M_PI / 2.0;
  tau = inverse_dynamics(m, s, zero, ContactSet::none());
  CHECK(tau(0) == doctest::Approx(1.0 * 9.81 * 0.5).epsilon(1e-10));
}

TEST_CASE("pendulum mass matrix is the rod inertia about the pivot") {
  const RobotModel m = build_model("pendulum");
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const RobotState s = random_state(m, rng, 3.0);
    const MatX mm = mass_matrix(m, s);
    CHECK(mm(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
}

TEST_CASE("crba equals the rnea column oracle on random biped states") {
  const RobotModel m = build_model("planar-biped-7dof");
  Rng rng(5);
  const VecX zero = VecX::Zero(m.nv());
  for (int trial = 0; trial < 100; ++trial) {
    RobotState s = random_state(m, rng);
    const MatX mm = mass_matrix(m, s);
    CHECK((mm - mm.transpose()).cwiseAbs().maxCoeff() < 1e-10);

    RobotState s0 = s;
    s0.v.setZero();
    const VecX bias = inverse_dynamics(m, s0, zero, ContactSet::none());
    for (int j = 0; j < m.nv(); ++j) {
      VecX ej = VecX::Zero(m.nv());
      ej(j) = 1.0;
      const VecX col = inverse_dynamics(m, s0, ej, ContactSet::none()) - bias;
      CHECK((mm.col(j) - col).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("mass matrix is positive definite") {
  const RobotModel m = build_model("planar-biped-7dof");
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const RobotState s = random_state(m, rng);
    Eigen::SelfAdjointEigenSolver<MatX> eig(mass_matrix(m, s));
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("biped standing: weight split over both feet balances the base") {
  const RobotModel m = build_model("planar-biped-7dof");
  TaskSpec task = sample_task("walk", 0);
  const RobotState s = initial_state(m, task);

  // independent static solve: z and pitch balance about the base origin
  const auto left = site_kinematics(m, s, m.site_index("foot_l"));
  const auto right = site_kinematics(m, s, m.site_index("foot_r"));
  const double mg = m.total_mass() * 9.81;
  double com_x = 0.0;
  {
    const auto cache = forward_kinematics(m, s);
    double mass = 0.0;
    for (const auto& l : m.links()) {
      if (l.body < 0) continue;
      const auto& b = m.bodies[l.body];
      const auto& k = cache.link[m.link_of_body(l.body)];
      com_x += b.mass * (k.origin + k.R * b.com).x();
      mass += b.mass;
    }
    com_x /= mass;
  }
  const double xl = left.position.x() - s.q(0);
  const double xr = right.position.x() - s.q(0);
  const double xc = com_x - s.q(0);
  Mat2 a;
  a << 1.0, 1.0, xl, xr;
  const Vec2 fz = a.colPivHouseholderQr().solve(Vec2(mg, xc * mg));

  ContactSet contacts = ContactSet::of({m.site_index("foot_l"), m.site_index("foot_r")});
  contacts.forces = VecX::Zero(4);
  contacts.forces(1) = fz(0);
  contacts.forces(3) = fz(1);
  const VecX tau = inverse_dynamics(m, s, VecX::Zero(m.nv()), contacts);
  CHECK(tau.head(3).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("free fall accelerates the base straight down") {
  const RobotModel m = make_puck();
  RobotState s = m.zero_state();
  s.q(1) = 2.0;
  const auto fd = constrained_forward_dynamics(m, s, VecX(), ContactSet::none());
  CHECK(fd.accel(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(fd.accel(1) == doctest::Approx(-9.81).epsilon(1e-12));
  CHECK(fd.accel(2) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(fd.forces.size() == 0);
}

TEST_CASE("point mass resting on a contact carries its weight") {
  const RobotModel m = make_puck();
  const RobotState s = m.zero_state();
  const auto fd = constrained_forward_dynamics(m, s, VecX(), ContactSet::of({0}));
  CHECK(fd.accel.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(fd.forces(0) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(fd.forces(1) == doctest::Approx(9.81).epsilon(1e-10));
}

TEST_CASE("pinned feet satisfy the acceleration constraint") {
  const RobotModel m = build_model("planar-biped-7dof");
  Rng rng(21);
  const ContactSet contacts = ContactSet::of({0, 1});
  for (int trial = 0; trial < 20; ++trial) {
    const RobotState s = random_state(m, rng, 0.4);
    VecX u(m.nj());
    for (int i = 0; i < m.nj(); ++i) u(i) = uniform(rng, -20.0, 20.0);
    const auto fd = constrained_forward_dynamics(m, s, u, contacts);
    const MatX jac = contact_jacobian(m, s, contacts);
    const VecX bias = contact_accel_bias(m, s, contacts);
    CHECK((jac * fd.accel + bias).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("impulse map: falling point mass sticks") {
  const RobotModel m = make_puck();
  RobotState s = m.zero_state();
  s.v(1) = -1.0;
  const auto imp = impulse_dynamics(m, s, ContactSet::of({0}));
  CHECK(imp.v_post.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(imp.impulses(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(imp.impulses(1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("impulse map is a no-op when the contact is already still") {
  const RobotModel m = build_model("planar-biped-7dof");
  const RobotState s = initial_state(m, sample_task("walk", 1));
  const auto imp = impulse_dynamics(m, s, ContactSet::of({0, 1}));
  CHECK((imp.v_post - s.v).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(imp.impulses.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("impulse map never increases kinetic energy") {
  const RobotModel m = build_model("planar-biped-7dof");
  Rng rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    const RobotState s = random_state(m, rng);
    const auto imp = impulse_dynamics(m, s, ContactSet::of({0, 1}));
    RobotState post = s;
    post.v = imp.v_post;
    CHECK(kinetic_energy(m, post) <= kinetic_energy(m, s) + 1e-10);
  }
}

TEST_CASE("site kinematics geometry") {
  const RobotModel m = build_model("pendulum");
  RobotState s = m.zero_state();
  auto tip = site_kinematics(m, s, 0);
  CHECK((tip.position - Vec2(0.0, -1.0)).norm() < 1e-12);
  s.q(0) = M_PI / 2.0;
  tip = site_kinematics(m, s, 0);
  CHECK((tip.position - Vec2(1.0, 0.0)).norm() < 1e-12);

  const RobotModel arm = build_model("planar-arm-3dof");
  RobotState sa = arm.zero_state();
  const auto hand = site_kinematics(arm, sa, "hand");
  CHECK(hand.jacobian.rows() == 2);
  CHECK(hand.jacobian.cols() == 3);
  CHECK((hand.position - Vec2(1.0, 1.5)).norm() < 1e-12);
  CHECK_THROWS_AS((void)site_kinematics(arm, sa, "nope"), std::invalid_argument);
}

TEST_CASE("site jacobians match central finite differences") {
  for (const char* id : {"pendulum", "planar-biped-7dof", "planar-arm-3dof"}) {
    const RobotModel m = build_model(id);
    Rng rng(fnv1a(id));
    const double h = 1e-6;
    for (int trial = 0; trial < 25; ++trial) {
      const RobotState s = random_state(m, rng);
      for (int site = 0; site < m.num_sites(); ++site) {
        const auto kin = site_kinematics(m, s, site);
        MatX fd(2, m.nv());
        for (int j = 0; j < m.nv(); ++j) {
          RobotState sp = s, sm = s;
          sp.q(j) += h;
          sm.q(j) -= h;
          fd.col(j) = (site_kinematics(m, sp, site).position -
                       site_kinematics(m, sm, site).position) /
                      (2.0 * h);
        }
        CHECK((kin.jacobian - fd).cwiseAbs().maxCoeff() < 1e-5);
        // J v equals the finite-difference velocity as well
        CHECK((kin.jacobian * s.v - kin.velocity).cwiseAbs().maxCoeff() < 1e-10);
      }
    }
  }
}

TEST_CASE("contact acceleration bias matches d(Jv)/dt") {
  const RobotModel m = build_model("planar-biped-7dof");
  Rng rng(55);
  const ContactSet contacts = ContactSet::of({0, 1});
  const double h = 1e-6;
  for (int trial = 0; trial < 25; ++trial) {
    const RobotState s = random_state(m, rng);
    const VecX bias = contact_accel_bias(m, s, contacts);
    RobotState sp = s, sm = s;
    sp.q += h * s.v;
    sm.q -= h * s.v;
    const VecX fd = (contact_jacobian(m, sp, contacts) * s.v -
                     contact_jacobian(m, sm, contacts) * s.v) /
                    (2.0 * h);
    CHECK((bias - fd).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("pendulum energy drift stays under 0.1% over 10 s") {
  const RobotModel m = build_model("pendulum");
  RobotState s = m.zero_state();
  s.q(0) = 1.2;
  const double e0 = kinetic_energy(m, s) + potential_energy(m, s);
  const double dt = 1e-3;
  for (int k = 0; k < 10000; ++k) s = rk4_passive_step(m, s, dt);
  const double e1 = kinetic_energy(m, s) + potential_energy(m, s);
  CHECK(std::abs(e1 - e0) / std::abs(e0) < 1e-3);
}

TEST_CASE("dimension and finiteness guards") {
  const RobotModel m = build_model("pendulum");
  RobotState s = m.zero_state();
  CHECK_THROWS_AS((void)inverse_dynamics(m, s, VecX::Zero(3), ContactSet::none()),
                  std::invalid_argument);
  s.q(0) = std::nan("");
  CHECK_THROWS_AS((void)mass_matrix(m, s), std::invalid_argument);
  s = m.zero_state();
  CHECK_THROWS_AS(
      (void)constrained_forward_dynamics(m, s, VecX::Zero(2), ContactSet::none()),
      std::invalid_argument);
  // 1-dof pendulum cannot pin a 2d point: rank-deficient contact
  CHECK_THROWS_AS((void)impulse_dynamics(m, s, ContactSet::of({0})),
                  std::runtime_error);
  CHECK_THROWS_AS((void)impulse_dynamics(m, s, ContactSet::none()),
                  std::invalid_argument);
}
