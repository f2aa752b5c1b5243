#include "doctest.h"
#include "torl/dynamics.hpp"
#include "torl/model.hpp"
#include "torl/tasks.hpp"

#include <sstream>

using namespace torl;

TEST_CASE("model zoo shapes") {
  const RobotModel pend = build_model("pendulum");
  CHECK(pend.nq() == 1);
  CHECK(pend.nv() == 1);
  CHECK(pend.nj() == 1);
  CHECK(pend.torque_limits().size() == 1);

  const RobotModel biped = build_model("planar-biped-7dof");
  CHECK(biped.nq() == 7);
  CHECK(biped.nj() == 4);
  CHECK(biped.has_floating_base());
  CHECK(biped.total_mass() == doctest::Approx(30.0));
  const MatX b = biped.actuation_selector();
  CHECK(b.rows() == 7);
  CHECK(b.cols() == 4);
  CHECK(b.topRows(3).cwiseAbs().maxCoeff() == 0.0);
  CHECK((b.bottomRows(4) - MatX::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);

  const RobotModel arm = build_model("planar-arm-3dof");
  CHECK(arm.nq() == 3);
  CHECK(!arm.has_floating_base());
  CHECK_THROWS_AS((void)build_model("hexapod"), std::invalid_argument);
}

TEST_CASE("model persistence round trip and hash") {
  for (const char* id :
       {"pendulum", "double-integrator", "planar-biped-7dof", "planar-arm-3dof"}) {
    const RobotModel m = build_model(id);
    const RobotModel back = load_model_string(save_model(m));
    CHECK(back.hash() == m.hash());
    CHECK(back.nq() == m.nq());
    CHECK(back.nj() == m.nj());
    CHECK(back.num_sites() == m.num_sites());
  }
  CHECK_THROWS_AS((void)load_model_string("{\"format\":\"robot/2\"}"),
                  std::invalid_argument);
  // invariant violations surface at compile time
  RobotModel bad = build_model("pendulum");
  bad.bodies[0].inertia = -1.0;
  CHECK_THROWS_AS(bad.compile(), std::invalid_argument);
}

TEST_CASE("task sampling is deterministic and in range") {
  const TaskSpec a = sample_task("walk", 0);
  const TaskSpec b = sample_task("walk", 0);
  CHECK(a.speed == b.speed);
  CHECK(a.step_height == b.step_height);
  CHECK(a.horizon == b.horizon);
  CHECK(sample_task("walk", 1).speed != a.speed);

  double lo_speed = 1e9, hi_speed = -1e9;
  for (int seed = 0; seed < 1000; ++seed) {
    const TaskSpec t = sample_task("walk", seed);
    t.validate();
    lo_speed = std::min(lo_speed, t.speed);
    hi_speed = std::max(hi_speed, t.speed);
    CHECK(t.speed >= 0.0);
    CHECK(t.speed <= 1.5);
    CHECK(t.step_height >= 0.10);
    CHECK(t.step_height <= 0.20);
  }
  CHECK(lo_speed < 0.1);
  CHECK(hi_speed > 1.4);

  double lo_f = 1e9, hi_f = -1e9;
  for (int seed = 0; seed < 1000; ++seed) {
    const TaskSpec t = sample_task("press", seed);
    CHECK(t.press_force >= 0.0);
    CHECK(t.press_force <= 20.0);
    CHECK(t.desk_height >= 0.85);
    CHECK(t.desk_height <= 0.95);
    lo_f = std::min(lo_f, t.press_force);
    hi_f = std::max(hi_f, t.press_force);
  }
  CHECK(lo_f < 1.0);
  CHECK(hi_f > 19.0);
}

TEST_CASE("schedules are consistent with dt and flag impacts") {
  const RobotModel biped = build_model("planar-biped-7dof");
  const TaskSpec walk = sample_task("walk", 7);
  const ContactSchedule s = make_schedule(biped, walk);
  s.validate(walk.dt);
  CHECK(s.total_duration() == doctest::Approx(walk.horizon));

  const auto impacts = s.impact_knots(walk.dt);
  // a landing at each of the five step exchanges plus the final double support
  CHECK(impacts.size() == 6);
  CHECK(impacts.front().new_sites == std::vector<int>{biped.site_index("foot_r")});

  const auto starts = s.phase_start_knots(walk.dt);
  CHECK(starts.front() == 0);
  CHECK(s.phase_of_interval(0, walk.dt) == 0);
  CHECK(s.phase_of_interval(starts[1], walk.dt) == 1);
  CHECK_THROWS_AS((void)s.phase_of_interval(starts.back(), walk.dt), std::out_of_range);

  const RobotModel arm = build_model("planar-arm-3dof");
  const TaskSpec press = sample_task("press", 3);
  const auto ps = make_schedule(arm, press);
  CHECK(ps.phases.size() == 2);
  CHECK(ps.phases[0].active_sites.empty());
  CHECK(ps.impact_knots(press.dt).size() == 1);
}

TEST_CASE("initial states start on the ground") {
  const RobotModel biped = build_model("planar-biped-7dof");
  const RobotState s = initial_state(biped, sample_task("walk", 11));
  for (int i = 0; i < biped.num_sites(); ++i) {
    const double z = site_kinematics(biped, s, i).position.y();
    CHECK(z == doctest::Approx(0.0).epsilon(1e-10));
  }
}
