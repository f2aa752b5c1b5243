#include <cmath>

#include "torl/ddp.hpp"

namespace torl {

namespace {

constexpr double kSiteWeight = 1e3;     // tracked site coordinates
constexpr double kBaseVelWeight = 1e2;  // base forward-velocity rows
constexpr double kBaseZWeight = 4e2;
constexpr double kPitchWeight = 2e2;
constexpr double kPostureWeight = 1.0;
constexpr double kTerminalBoost = 10.0;  // Q_f = 10 Q
constexpr double kForceTrackWeight = 10.0;
constexpr double kControlWeight = 1e-2;

CostStack empty_stack(const RobotModel& model, int horizon) {
  CostStack c;
  c.knots.resize(horizon + 1);
  c.r_diag = VecX::Constant(model.nj(), kControlWeight);
  return c;
}

}  // namespace

CostStack make_dense_targets(const RobotModel& model, const TaskSpec& task,
                             const ContactSchedule& schedule,
                             const RobotState& x0) {
  if (task.name != "walk" && task.name != "stair")
    throw std::invalid_argument("dense targets only defined for walk/stair tasks");
  const double dt = task.dt;
  const auto starts = schedule.phase_start_knots(dt);
  const int horizon = starts.back();
  CostStack costs = empty_stack(model, horizon);

  const double base_z0 = x0.q(1);
  const double nx = 2 * model.nv();

  const std::vector<WalkStep> swings = walk_foot_plan(model, task, schedule, x0);

  // per-knot swing-foot targets
  for (const auto& plan : swings) {
    const int k0 = starts[plan.phase];
    const int k1 = starts[plan.phase + 1];
    for (int k = k0; k <= k1 && k <= horizon; ++k) {
      const double s = k1 == k0 ? 1.0 : double(k - k0) / double(k1 - k0);
      SiteTarget st;
      st.site = plan.swing_site;
      st.target = swing_profile(plan.from, plan.to, task.step_height, s);
      st.weight = Vec2(kSiteWeight, kSiteWeight);
      costs.knots[k].sites.push_back(st);
    }
  }

  // base velocity/height/pitch and joint posture targets at every knot
  const VecX posture = x0.q;
  const int nb = model.nbase();
  for (int k = 0; k <= horizon; ++k) {
    auto& kc = costs.knots[k];
    if (kc.x_weight.size() == 0) {
      kc.x_weight = VecX::Zero(nx);
      kc.x_target = VecX::Zero(nx);
    }
    const int phase = k < horizon ? schedule.phase_of_interval(k, dt)
                                  : static_cast<int>(schedule.phases.size()) - 1;
    const bool stepping = schedule.phases[phase].active_sites.size() == 1;
    const double speed_now = stepping ? task.speed : 0.0;
    // ground reference under the torso rises with the staircase
    double ground = 0.0;
    if (task.name == "stair") {
      int steps_done = 0;
      for (const auto& plan : swings)
        if (starts[plan.phase + 1] <= k) ++steps_done;
      ground = task.stair_riser * steps_done;
    }
    kc.x_target(1) = base_z0 + ground;
    kc.x_weight(1) = kBaseZWeight;
    kc.x_target(2) = 0.0;
    kc.x_weight(2) = kPitchWeight;
    kc.x_target(model.nv()) = speed_now;  // base forward velocity row
    kc.x_weight(model.nv()) = kBaseVelWeight;
    for (int j = 0; j < model.nj(); ++j) {
      kc.x_target(nb + j) = posture(nb + j);
      kc.x_weight(nb + j) = kPostureWeight;
    }
  }

  // terminal boost
  auto& terminal = costs.knots[horizon];
  terminal.x_weight *= kTerminalBoost;
  for (auto& st : terminal.sites) st.weight *= kTerminalBoost;
  return costs;
}

CostStack make_sparse_subgoals(const RobotModel& model, const TaskSpec& task,
                               const ContactSchedule& schedule,
                               const RobotState& x0) {
  const double dt = task.dt;
  const auto starts = schedule.phase_start_knots(dt);
  const int horizon = starts.back();
  CostStack costs = empty_stack(model, horizon);
  const int nx = 2 * model.nv();

  if (task.name == "press") {
    const int hand = model.site_index("hand");
    const int touchdown = starts[1];
    if (touchdown > horizon)
      throw std::invalid_argument("sparse subgoals: subgoal knot beyond horizon");
    const Vec2 press_point = press_surface_point(task);

    // subgoal: reach the desk surface at the touchdown knot, arriving slowly
    // so the impact transient stays inside the friction cone
    SiteTarget reach;
    reach.site = hand;
    reach.target = press_point;
    reach.weight = Vec2(kSiteWeight, kSiteWeight);
    costs.knots[touchdown].sites.push_back(reach);
    auto& td = costs.knots[touchdown];
    td.x_weight = VecX::Zero(nx);
    td.x_target = VecX::Zero(nx);
    td.x_weight.tail(model.nv()).setConstant(1.0);

    // terminal: stay at the press point
    SiteTarget hold = reach;
    hold.weight *= kTerminalBoost;
    costs.knots[horizon].sites.push_back(hold);

    // commanded normal force once the impact transient has settled
    const int settle = std::min(horizon, touchdown + 3);
    for (int k = settle; k < horizon; ++k) {
      ForceTarget ft;
      ft.site = hand;
      ft.normal = task.press_force;
      ft.weight = kForceTrackWeight;
      costs.knots[k].forces.push_back(ft);
    }
    // the feasibility gate scales with the arm weight
    costs.friction_weight = 10.0;
    costs.friction_margin = 0.01;
    costs.normal_force_weight = 10.0;
    costs.normal_margin = 0.02;
  } else if (task.name == "pickup") {
    // squat: base height dips by squat_depth at mid-horizon, returns at the end
    const int mid = horizon / 2;
    auto set_base_goal = [&](int k, double dz, double boost) {
      auto& kc = costs.knots[k];
      kc.x_weight = VecX::Zero(nx);
      kc.x_target = VecX::Zero(nx);
      kc.x_target(1) = x0.q(1) + dz;
      kc.x_weight(1) = kSiteWeight * boost;
      kc.x_target(2) = 0.0;
      kc.x_weight(2) = kPitchWeight * boost;
      for (int j = 0; j < model.nj(); ++j) {
        kc.x_target(3 + j) = x0.q(3 + j);
        kc.x_weight(3 + j) = kPostureWeight;
      }
    };
    if (!model.has_floating_base())
      throw std::invalid_argument("pickup subgoals need a floating base");
    set_base_goal(mid, -task.squat_depth, 1.0);
    set_base_goal(horizon, 0.0, kTerminalBoost);
  } else {
    throw std::invalid_argument("sparse subgoals only defined for press/pickup");
  }
  return costs;
}

CostStack make_cost_stack(const RobotModel& model, const TaskSpec& task,
                          const ContactSchedule& schedule, const RobotState& x0) {
  if (task.name == "walk" || task.name == "stair")
    return make_dense_targets(model, task, schedule, x0);
  return make_sparse_subgoals(model, task, schedule, x0);
}

}  // namespace torl
