#pragma once

#include "torl/dataset.hpp"

namespace torl {

struct TaskSolution {
  TaskSpec task;
  ContactSchedule schedule;
  CostStack costs;
  RobotState x0;
  OptimalTrajectory trajectory;
  FeasibilityReport report;
  bool gates_passed = false;
};

TaskSolution solve_task(const RobotModel& model, const TaskSpec& task,
                        const SolverOptions& opts = {});

DatasetRecord to_record(const RobotModel& model, const TaskSolution& sol);

}  // namespace torl
