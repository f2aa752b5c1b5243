#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "torl/model.hpp"

namespace torl {

// Timed contact phases; the hybrid structure the solver rolls out.
struct ContactPhase {
  double duration = 0.0;          // s, a multiple of dt
  std::vector<int> active_sites;  // site indices
};

struct ContactSchedule {
  std::vector<ContactPhase> phases;

  double total_duration() const;
  // Knot index of the first knot of each phase, plus the end knot.
  std::vector<int> phase_start_knots(double dt) const;
  // Phase index owning the integration interval [k, k+1).
  int phase_of_interval(int k, double dt) const;
  // Knots where a site becomes active (impulse map applies), with the sites
  // that enter at that knot.
  struct ImpactKnot {
    int knot;
    std::vector<int> new_sites;
  };
  std::vector<ImpactKnot> impact_knots(double dt) const;

  void validate(double dt) const;
};

struct TaskSpec {
  std::string name;      // walk | stair | press | pickup
  std::string model_id;
  double horizon = 0.0;  // s
  double dt = 0.01;

  double speed = 0.0;          // m/s, base velocity command
  double step_height = 0.15;   // m, swing apex
  double step_length = 0.0;    // m, derived from speed and step timing
  double step_duration = 0.4;  // s
  double stair_riser = 0.0;    // m, per-step ground rise
  double desk_height = 0.9;    // m, press surface
  double press_force = 0.0;    // N, commanded normal force
  double timing_offset = 0.0;  // s, applied to the step duration
  double squat_depth = 0.0;    // m, pickup-analog base drop

  void validate() const;
};

RobotModel build_model(const std::string& model_id);
// Default joint configuration (full q, base included) used for PD targets
// and as the trajectory start.
VecX nominal_pose(const RobotModel& model, const std::string& model_id);

TaskSpec sample_task(const std::string& name, std::uint64_t seed);

// The contact schedule implied by a task (predefined, never optimized).
ContactSchedule make_schedule(const RobotModel& model, const TaskSpec& task);

// Start state for a task: nominal pose placed on the ground/surface; press
// tasks start the hand just above the commanded surface point.
RobotState initial_state(const RobotModel& model, const TaskSpec& task);

// Where the press task touches its surface.
Vec2 press_surface_point(const TaskSpec& task);

// Footstep plan shared by the walk/stair cost targets and the kinematic
// seed: one entry per single-support phase.
struct WalkStep {
  int phase = 0;
  int swing_site = 0;
  Vec2 from = Vec2::Zero();
  Vec2 to = Vec2::Zero();
  double ground = 0.0;  // landing ground height
};
std::vector<WalkStep> walk_foot_plan(const RobotModel& model, const TaskSpec& task,
                                     const ContactSchedule& schedule,
                                     const RobotState& x0);

// Cycloidal swing interpolation used for targets and seeds alike.
Vec2 swing_profile(const Vec2& from, const Vec2& to, double height, double s);

// Two-link leg inverse kinematics (thigh and shank 0.5 m, knee-back branch):
// returns (hip, knee) for a foot position relative to the hip, torso frame.
Vec2 leg_ik(const Vec2& foot_rel_hip);

}  // namespace torl
