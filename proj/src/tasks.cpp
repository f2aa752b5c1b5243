#include "torl/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "torl/dynamics.hpp"
#include "torl/util.hpp"

namespace torl {

namespace {

int knots_of(double duration, double dt) {
  const double k = duration / dt;
  const int ki = static_cast<int>(std::lround(k));
  if (ki <= 0 || std::abs(k - ki) > 1e-9)
    throw std::invalid_argument("schedule: phase duration is not a multiple of dt");
  return ki;
}

double snap(double duration, double dt) {
  return std::max(1.0, std::round(duration / dt)) * dt;
}

}  // namespace

double ContactSchedule::total_duration() const {
  double t = 0.0;
  for (const auto& p : phases) t += p.duration;
  return t;
}

std::vector<int> ContactSchedule::phase_start_knots(double dt) const {
  std::vector<int> starts;
  int k = 0;
  for (const auto& p : phases) {
    starts.push_back(k);
    k += knots_of(p.duration, dt);
  }
  starts.push_back(k);
  return starts;
}

int ContactSchedule::phase_of_interval(int k, double dt) const {
  const auto starts = phase_start_knots(dt);
  for (size_t i = 0; i + 1 < starts.size(); ++i)
    if (k >= starts[i] && k < starts[i + 1]) return static_cast<int>(i);
  throw std::out_of_range("schedule: interval index beyond horizon");
}

std::vector<ContactSchedule::ImpactKnot> ContactSchedule::impact_knots(double dt) const {
  std::vector<ImpactKnot> impacts;
  const auto starts = phase_start_knots(dt);
  for (size_t i = 1; i < phases.size(); ++i) {
    const std::set<int> prev(phases[i - 1].active_sites.begin(),
                             phases[i - 1].active_sites.end());
    std::vector<int> entered;
    for (int s : phases[i].active_sites)
      if (!prev.count(s)) entered.push_back(s);
    if (!entered.empty()) impacts.push_back({starts[i], entered});
  }
  return impacts;
}

void ContactSchedule::validate(double dt) const {
  if (phases.empty()) throw std::invalid_argument("schedule: no phases");
  for (const auto& p : phases) knots_of(p.duration, dt);
}

void TaskSpec::validate() const {
  auto in = [](double x, double lo, double hi) { return x >= lo && x <= hi; };
  if (dt <= 0.0 || horizon <= 0.0)
    throw std::invalid_argument("task: horizon and dt must be positive");
  if (!in(speed, 0.0, 1.5)) throw std::invalid_argument("task: speed out of range");
  if (name == "walk" || name == "stair") {
    if (!in(step_height, 0.10, 0.20))
      throw std::invalid_argument("task: step height out of range");
  }
  if (name == "stair" && !in(stair_riser, 0.04, 0.14))
    throw std::invalid_argument("task: stair riser out of range");
  if (name == "press") {
    if (!in(desk_height, 0.85, 0.95))
      throw std::invalid_argument("task: desk height out of range");
    if (!in(press_force, 0.0, 20.0))
      throw std::invalid_argument("task: press force out of range");
  }
}

RobotModel build_model(const std::string& model_id) {
  RobotModel m;
  m.name = model_id;
  if (model_id == "pendulum") {
    m.bodies.push_back({"rod", 1.0, Vec2(0.5, 0.0), 1.0 / 12.0});
    Joint j;
    j.name = "pivot";
    j.type = JointType::Revolute;
    j.parent = -1;
    j.child = 0;
    j.rotation = -M_PI / 2.0;  // rod hangs along -z at q = 0
    j.lower = -4.0 * M_PI;
    j.upper = 4.0 * M_PI;
    j.torque_limit = 2.5;
    m.joints.push_back(j);
    m.contact_sites.push_back({"tip", 0, Vec2(1.0, 0.0)});
  } else if (model_id == "double-integrator") {
    m.bodies.push_back({"cart", 1.0, Vec2(0.0, 0.0), 0.01});
    Joint j;
    j.name = "slide";
    j.type = JointType::Prismatic;
    j.parent = -1;
    j.child = 0;
    j.axis = Vec2(1.0, 0.0);
    j.lower = -1e3;
    j.upper = 1e3;
    j.torque_limit = 1e3;
    m.joints.push_back(j);
  } else if (model_id == "planar-biped-7dof") {
    m.bodies.push_back({"torso", 14.0, Vec2(0.0, 0.25), 0.8});
    m.bodies.push_back({"thigh_l", 4.0, Vec2(0.0, -0.25), 0.09});
    m.bodies.push_back({"shank_l", 4.0, Vec2(0.0, -0.25), 0.09});
    m.bodies.push_back({"thigh_r", 4.0, Vec2(0.0, -0.25), 0.09});
    m.bodies.push_back({"shank_r", 4.0, Vec2(0.0, -0.25), 0.09});
    Joint base;
    base.name = "base";
    base.type = JointType::FloatingPlanar;
    base.parent = -1;
    base.child = 0;
    m.joints.push_back(base);
    auto leg = [&m](const std::string& side, int thigh, int shank) {
      Joint hip;
      hip.name = "hip_" + side;
      hip.type = JointType::Revolute;
      hip.parent = 0;
      hip.child = thigh;
      hip.anchor = Vec2(0.0, 0.0);
      hip.lower = -2.4;
      hip.upper = 2.4;
      hip.torque_limit = 150.0;
      m.joints.push_back(hip);
      Joint knee;
      knee.name = "knee_" + side;
      knee.type = JointType::Revolute;
      knee.parent = thigh;
      knee.child = shank;
      knee.anchor = Vec2(0.0, -0.5);
      knee.lower = -2.4;
      knee.upper = -0.02;
      knee.torque_limit = 150.0;
      m.joints.push_back(knee);
    };
    leg("l", 1, 2);
    leg("r", 3, 4);
    m.contact_sites.push_back({"foot_l", 2, Vec2(0.0, -0.5)});
    m.contact_sites.push_back({"foot_r", 4, Vec2(0.0, -0.5)});
  } else if (model_id == "planar-arm-3dof") {
    m.bodies.push_back({"upper", 2.0, Vec2(0.2, 0.0), 0.03});
    m.bodies.push_back({"fore", 1.5, Vec2(0.2, 0.0), 0.02});
    m.bodies.push_back({"hand", 0.8, Vec2(0.1, 0.0), 0.004});
    Joint shoulder;
    shoulder.name = "shoulder";
    shoulder.type = JointType::Revolute;
    shoulder.parent = -1;
    shoulder.child = 0;
    shoulder.anchor = Vec2(0.0, 1.5);
    shoulder.lower = -3.0;
    shoulder.upper = 1.0;
    shoulder.torque_limit = 60.0;
    m.joints.push_back(shoulder);
    Joint elbow;
    elbow.name = "elbow";
    elbow.type = JointType::Revolute;
    elbow.parent = 0;
    elbow.child = 1;
    elbow.anchor = Vec2(0.4, 0.0);
    elbow.lower = -2.9;
    elbow.upper = 2.9;
    elbow.torque_limit = 40.0;
    m.joints.push_back(elbow);
    Joint wrist;
    wrist.name = "wrist";
    wrist.type = JointType::Revolute;
    wrist.parent = 1;
    wrist.child = 2;
    wrist.anchor = Vec2(0.4, 0.0);
    wrist.lower = -2.9;
    wrist.upper = 2.9;
    wrist.torque_limit = 20.0;
    m.joints.push_back(wrist);
    m.contact_sites.push_back({"hand", 2, Vec2(0.2, 0.0)});
  } else {
    throw std::invalid_argument("unknown model id '" + model_id + "'");
  }
  m.compile();
  return m;
}

VecX nominal_pose(const RobotModel& model, const std::string& model_id) {
  VecX q = VecX::Zero(model.nq());
  if (model_id == "planar-biped-7dof") {
    q(3) = 0.25;   // hip_l
    q(4) = -0.4;   // knee_l
    q(5) = 0.15;   // hip_r
    q(6) = -0.4;   // knee_r
  } else if (model_id == "planar-arm-3dof") {
    q << -1.1, 1.0, 0.3;
  }
  return q;
}

TaskSpec sample_task(const std::string& name, std::uint64_t seed) {
  Rng rng(split_seed(seed, fnv1a(name)));
  TaskSpec t;
  t.name = name;
  t.dt = 0.01;
  if (name == "walk" || name == "stair") {
    t.model_id = "planar-biped-7dof";
    t.dt = 0.02;
    t.speed = name == "walk" ? uniform(rng, 0.0, 1.5) : uniform(rng, 0.2, 0.8);
    t.timing_offset = uniform(rng, -0.05, 0.05);
    t.step_duration = snap(0.4 + t.timing_offset, t.dt);
    if (name == "stair") {
      t.stair_riser = uniform(rng, 0.04, 0.14);
      t.step_height = uniform(rng, std::max(0.10, t.stair_riser + 0.04), 0.20);
    } else {
      t.step_height = uniform(rng, 0.10, 0.20);
    }
    t.step_length = t.speed * t.step_duration;
    const int n_steps = name == "walk" ? 6 : 4;
    t.horizon = 0.2 + n_steps * t.step_duration + 0.3;
  } else if (name == "press") {
    t.model_id = "planar-arm-3dof";
    t.dt = 0.02;
    t.desk_height = uniform(rng, 0.85, 0.95);
    t.press_force = uniform(rng, 0.0, 20.0);
    t.timing_offset = uniform(rng, -0.04, 0.04);
    t.horizon = 1.2;
  } else if (name == "pickup") {
    t.model_id = "planar-biped-7dof";
    t.dt = 0.02;
    t.squat_depth = uniform(rng, 0.10, 0.25);
    t.horizon = 2.0;
  } else {
    throw std::invalid_argument("unknown task '" + name + "'");
  }
  t.horizon = snap(t.horizon, t.dt);
  t.validate();
  return t;
}

ContactSchedule make_schedule(const RobotModel& model, const TaskSpec& task) {
  ContactSchedule s;
  if (task.name == "walk" || task.name == "stair") {
    const int left = model.site_index("foot_l");
    const int right = model.site_index("foot_r");
    const double step = task.step_duration;
    const int n_steps = static_cast<int>(
        std::lround((task.horizon - 0.5) / step));
    s.phases.push_back({snap(0.2, task.dt), {left, right}});
    for (int i = 0; i < n_steps; ++i) {
      // stance alternates: swing starts with the right leg
      const int stance = (i % 2 == 0) ? left : right;
      s.phases.push_back({step, {stance}});
    }
    s.phases.push_back({snap(0.3, task.dt), {left, right}});
  } else if (task.name == "press") {
    const int hand = model.site_index("hand");
    const double reach = snap(0.4 + task.timing_offset, task.dt);
    s.phases.push_back({reach, {}});
    s.phases.push_back({task.horizon - reach, {hand}});
  } else if (task.name == "pickup") {
    const int left = model.site_index("foot_l");
    const int right = model.site_index("foot_r");
    s.phases.push_back({task.horizon, {left, right}});
  } else {
    throw std::invalid_argument("unknown task '" + task.name + "'");
  }
  s.validate(task.dt);
  return s;
}

Vec2 press_surface_point(const TaskSpec& task) {
  return Vec2(0.55, task.desk_height);
}

Vec2 swing_profile(const Vec2& from, const Vec2& to, double height, double s) {
  const double sx = s - std::sin(2.0 * M_PI * s) / (2.0 * M_PI);
  const double x = from.x() + (to.x() - from.x()) * sx;
  const double z_line = from.y() + (to.y() - from.y()) * sx;
  return Vec2(x, z_line + height * 0.5 * (1.0 - std::cos(2.0 * M_PI * s)));
}

Vec2 leg_ik(const Vec2& foot_rel_hip) {
  const double reach = std::min(std::max(foot_rel_hip.norm(), 0.05), 0.995);
  const double knee =
      -std::acos(std::min(std::max(2.0 * reach * reach - 1.0, -1.0), 1.0));
  const double phi = std::atan2(foot_rel_hip.x(), -foot_rel_hip.y());
  return Vec2(phi - 0.5 * knee, knee);
}

std::vector<WalkStep> walk_foot_plan(const RobotModel& model, const TaskSpec& task,
                                     const ContactSchedule& schedule,
                                     const RobotState& x0) {
  const int left = model.site_index("foot_l");
  const int right = model.site_index("foot_r");
  const Vec2 foot0_l = site_kinematics(model, x0, left).position;
  const Vec2 foot0_r = site_kinematics(model, x0, right).position;
  std::vector<Vec2> foot_now = {foot0_l, foot0_r};
  std::vector<WalkStep> plan;
  int step_index = 0;
  for (size_t p = 0; p < schedule.phases.size(); ++p) {
    if (schedule.phases[p].active_sites.size() != 1) continue;
    const int stance = schedule.phases[p].active_sites[0];
    const int swing = stance == left ? right : left;
    WalkStep step;
    step.phase = static_cast<int>(p);
    step.swing_site = swing;
    step.from = foot_now[swing == left ? 0 : 1];
    step.ground =
        task.name == "stair" ? task.stair_riser * (step_index + 1) : 0.0;
    const Vec2 stance_pos = foot_now[stance == left ? 0 : 1];
    const double spread = (foot0_l.x() - foot0_r.x()) * (swing == left ? 0.5 : -0.5);
    step.to = Vec2(stance_pos.x() + task.step_length + spread, step.ground);
    plan.push_back(step);
    foot_now[swing == left ? 0 : 1] = step.to;
    ++step_index;
  }
  return plan;
}

namespace {

// Closed-form 3-dof arm IK; redundancy fixed by the hand-link angle.
VecX arm_ik(const Vec2& shoulder, const Vec2& hand_target, double hand_angle) {
  const double l1 = 0.4, l2 = 0.4, l3 = 0.2;
  const Vec2 wrist =
      hand_target - l3 * Vec2(std::cos(hand_angle), std::sin(hand_angle));
  const Vec2 d = wrist - shoulder;
  const double r = std::min(std::max(d.norm(), 1e-6), l1 + l2 - 1e-6);
  const double cos_el = (r * r - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
  const double elbow = std::acos(std::min(std::max(cos_el, -1.0), 1.0));
  const double alpha = std::atan2(d.y(), d.x());
  const double beta = std::acos(std::min(std::max(r / (2.0 * l1), -1.0), 1.0));
  VecX q(3);
  q(0) = alpha - beta;   // elbow-up branch, matching the nominal pose
  q(1) = elbow;
  q(2) = hand_angle - q(0) - q(1);
  return q;
}

}  // namespace

RobotState initial_state(const RobotModel& model, const TaskSpec& task) {
  RobotState s = model.zero_state();
  s.q = nominal_pose(model, task.model_id);
  if (task.name == "press") {
    s.q = arm_ik(Vec2(0.0, 1.5), press_surface_point(task) + Vec2(0.0, 0.06), -0.7);
  }
  if (model.has_floating_base()) {
    // place the base so the lowest contact site touches the ground
    double zmin = 1e9;
    for (int i = 0; i < model.num_sites(); ++i)
      zmin = std::min(zmin, site_kinematics(model, s, i).position.y());
    s.q(1) -= zmin;
  }
  return s;
}

}  // namespace torl
