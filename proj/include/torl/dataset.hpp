#pragma once

#include <optional>
#include <string>
#include <vector>

#include "torl/ddp.hpp"
#include "torl/tasks.hpp"

namespace torl {

// One reference trajectory: the full per-knot tuple consumed by imitation
// training. Contact forces and site positions are stacked over all model
// sites (zeros where a site is inactive).
struct DatasetRecord {
  TaskSpec task;
  std::string model_hash;
  std::string schedule_digest;
  double dt = 0.0;
  FeasibilityReport feasibility;

  std::vector<VecX> q;        // nq per knot
  std::vector<VecX> v;        // nv
  std::vector<VecX> u;        // nj
  std::vector<VecX> forces;   // 2 * nsites
  std::vector<VecX> sites;    // 2 * nsites
  std::vector<unsigned> active_mask;  // bit per site

  int knot_count() const { return static_cast<int>(q.size()); }
  double duration() const { return dt * (knot_count() - 1); }
};

std::string schedule_digest(const ContactSchedule& schedule);

DatasetRecord make_record(const RobotModel& model, const TaskSpec& task,
                          const ContactSchedule& schedule,
                          const OptimalTrajectory& traj,
                          const FeasibilityReport& feasibility);

// Line-delimited text persistence; numerics at 17 significant digits so
// round trips are bit-exact. Header per record:
//   TRJD v1 <model-hash> <dt> <n-knots>
void write_dataset(const std::vector<DatasetRecord>& records,
                   const std::string& path);
std::vector<DatasetRecord> read_dataset(
    const std::string& path,
    const std::optional<std::string>& expect_model_hash = std::nullopt);

// Interpolated reference at time t: linear in q, v and site/base targets,
// zero-order hold for torques and contact forces.
struct ReferenceTuple {
  VecX q, v;
  VecX u;       // nj
  VecX forces;  // 2 * nsites
  VecX sites;   // 2 * nsites
  Vec2 base_pos = Vec2::Zero();
  double base_pitch = 0.0;
  Vec2 base_vel = Vec2::Zero();
  double base_ang_vel = 0.0;
};

ReferenceTuple reference_at(const DatasetRecord& record, double t, int nbase);

}  // namespace torl
