#include "torl/solve_task.hpp"

#include <algorithm>
#include <cmath>

namespace torl {

TaskSolution solve_task(const RobotModel& model, const TaskSpec& task,
                        const SolverOptions& opts) {
  TaskSolution sol;
  sol.task = task;
  sol.schedule = make_schedule(model, task);
  sol.x0 = initial_state(model, task);
  sol.costs = make_cost_stack(model, task, sol.schedule, sol.x0);

  const bool progressive = task.name == "walk" || task.name == "stair";
  std::vector<VecX> warm;
  bool solved_in_stages = false;
  if (progressive) {
    // gait synthesis from a static hold diverges; solving one contact phase
    // at a time from the previous end state keeps every subproblem local,
    // then a full-horizon solve stitches the pieces
    const auto starts = sol.schedule.phase_start_knots(task.dt);
    const int phases = static_cast<int>(sol.schedule.phases.size());
    SolverOptions stage_opts = opts;
    stage_opts.max_iters = std::max(40, opts.max_iters / 3);
    auto slice_costs = [&](int p) {
      CostStack slice = sol.costs;
      slice.knots.assign(sol.costs.knots.begin() + starts[p],
                         sol.costs.knots.begin() + starts[p + 1] + 1);
      if (p + 1 < phases) {
        auto& anchor = slice.knots.back();
        if (anchor.x_weight.size() > 0) anchor.x_weight *= 10.0;
        for (auto& st : anchor.sites) st.weight *= 10.0;
        anchor.forces.clear();
      }
      return slice;
    };
    auto prefix_costs = [&](int p) {
      CostStack c = sol.costs;
      c.knots.assign(sol.costs.knots.begin(),
                     sol.costs.knots.begin() + starts[p + 1] + 1);
      if (p + 1 < phases) {
        auto& anchor = c.knots.back();
        if (anchor.x_weight.size() > 0) anchor.x_weight *= 10.0;
        for (auto& st : anchor.sites) st.weight *= 10.0;
        anchor.forces.clear();
      }
      return c;
    };

    RobotState cursor = sol.x0;
    OptimalTrajectory prefix_traj;
    for (int p = 0; p < phases; ++p) {
      // local stage over the new phase seeds the extension tail
      ContactSchedule single;
      single.phases.push_back(sol.schedule.phases[p]);
      std::vector<VecX> tail;
      try {
        SolverOptions tail_opts = stage_opts;
        tail_opts.max_iters = 40;
        const auto stage = solve(model, single, slice_costs(p), cursor, tail_opts);
        for (int k = 0; k < stage.horizon(); ++k) tail.push_back(stage.knots[k].u);
      } catch (const std::exception&) {
        tail.assign(starts[p + 1] - starts[p],
                    static_hold_controls(
                        model, sol.schedule.phases[p].active_sites, cursor));
      }
      std::vector<VecX> guess = warm;
      guess.insert(guess.end(), tail.begin(), tail.end());

      // prefix solve rebalances everything up to the new phase end
      ContactSchedule prefix;
      prefix.phases.assign(sol.schedule.phases.begin(),
                           sol.schedule.phases.begin() + p + 1);
      const bool last = p + 1 == phases;
      prefix_traj = solve(model, prefix, prefix_costs(p), sol.x0,
                          last ? opts : stage_opts, &guess);
      warm.clear();
      for (int k = 0; k < prefix_traj.horizon(); ++k)
        warm.push_back(prefix_traj.knots[k].u);
      cursor.q = prefix_traj.knots.back().q;
      cursor.v = prefix_traj.knots.back().v;
      if (!last) {
        const auto& prev = sol.schedule.phases[p].active_sites;
        bool entered = false;
        for (int s : sol.schedule.phases[p + 1].active_sites)
          if (std::find(prev.begin(), prev.end(), s) == prev.end()) entered = true;
        if (entered) {
          const auto imp = impulse_dynamics(
              model, cursor,
              ContactSet::of(sol.schedule.phases[p + 1].active_sites));
          cursor.v = imp.v_post;
        }
      }
    }
    sol.trajectory = prefix_traj;
    solved_in_stages = true;
  }

  if (!solved_in_stages)
    sol.trajectory = solve(model, sol.schedule, sol.costs, sol.x0, opts,
                           warm.empty() ? nullptr : &warm);
  sol.report = check_feasibility(sol.trajectory, model, sol.costs, sol.schedule);
  sol.gates_passed =
      sol.report.passes(sol.costs.friction_mu, model.total_mass() * 9.81);
  return sol;
}

DatasetRecord to_record(const RobotModel& model, const TaskSolution& sol) {
  return make_record(model, sol.task, sol.schedule, sol.trajectory, sol.report);
}

}  // namespace torl
