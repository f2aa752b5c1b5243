#include "torl/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "torl/util.hpp"

namespace torl {

namespace {

void put_vec(std::ostream& out, const VecX& v) {
  for (int i = 0; i < v.size(); ++i) out << ' ' << format17(v(i));
}

VecX get_vec(std::istringstream& in, int n, const std::string& what, int record) {
  VecX v(n);
  for (int i = 0; i < n; ++i)
    if (!(in >> v(i)))
      throw std::runtime_error("dataset: truncated " + what + " in record " +
                               std::to_string(record));
  return v;
}

}  // namespace

std::string schedule_digest(const ContactSchedule& schedule) {
  std::ostringstream ss;
  for (const auto& p : schedule.phases) {
    ss << format17(p.duration) << ':';
    for (int s : p.active_sites) ss << s << ',';
    ss << ';';
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(ss.str())));
  return buf;
}

DatasetRecord make_record(const RobotModel& model, const TaskSpec& task,
                          const ContactSchedule& schedule,
                          const OptimalTrajectory& traj,
                          const FeasibilityReport& feasibility) {
  DatasetRecord rec;
  rec.task = task;
  rec.model_hash = model.hash();
  rec.schedule_digest = schedule_digest(schedule);
  rec.dt = traj.dt;
  rec.feasibility = feasibility;
  const int ns = model.num_sites();
  for (const auto& kn : traj.knots) {
    rec.q.push_back(kn.q);
    rec.v.push_back(kn.v);
    rec.u.push_back(kn.u);
    VecX f = VecX::Zero(2 * ns);
    unsigned mask = 0;
    for (size_t c = 0; c < kn.active_sites.size(); ++c) {
      f.segment<2>(2 * kn.active_sites[c]) = kn.forces.segment<2>(2 * c);
      mask |= 1u << kn.active_sites[c];
    }
    rec.forces.push_back(f);
    VecX p(2 * ns);
    for (int s = 0; s < ns; ++s) p.segment<2>(2 * s) = kn.site_positions[s];
    rec.sites.push_back(p);
    rec.active_mask.push_back(mask);
  }
  return rec;
}

void write_dataset(const std::vector<DatasetRecord>& records,
                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dataset: cannot write '" + path + "'");
  for (const auto& rec : records) {
    out << "TRJD v1 " << rec.model_hash << ' ' << format17(rec.dt) << ' '
        << rec.knot_count() << '\n';
    const auto& t = rec.task;
    out << "task " << t.name << ' ' << t.model_id << ' ' << format17(t.horizon)
        << ' ' << format17(t.dt) << ' ' << format17(t.speed) << ' '
        << format17(t.step_height) << ' ' << format17(t.step_length) << ' '
        << format17(t.step_duration) << ' ' << format17(t.stair_riser) << ' '
        << format17(t.desk_height) << ' ' << format17(t.press_force) << ' '
        << format17(t.timing_offset) << ' ' << format17(t.squat_depth) << '\n';
    const auto& f = rec.feasibility;
    out << "feas " << (f.converged ? 1 : 0) << ' '
        << format17(f.max_joint_violation) << ' '
        << format17(f.max_torque_violation) << ' '
        << format17(f.max_friction_residual) << ' '
        << format17(f.min_normal_force) << ' ' << format17(f.max_dynamics_defect)
        << ' ' << format17(f.max_impact_residual) << '\n';
    out << "sched " << rec.schedule_digest << '\n';
    out << "dims " << rec.q.front().size() << ' ' << rec.v.front().size() << ' '
        << rec.u.front().size() << ' ' << rec.forces.front().size() << '\n';
    for (int k = 0; k < rec.knot_count(); ++k) {
      out << "knot";
      put_vec(out, rec.q[k]);
      put_vec(out, rec.v[k]);
      put_vec(out, rec.u[k]);
      put_vec(out, rec.forces[k]);
      put_vec(out, rec.sites[k]);
      out << ' ' << rec.active_mask[k] << '\n';
    }
    out << "end\n";
  }
}

std::vector<DatasetRecord> read_dataset(
    const std::string& path, const std::optional<std::string>& expect_model_hash) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("dataset: cannot open '" + path + "'");
  std::vector<DatasetRecord> records;
  std::string line;
  int record_index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream head(line);
    std::string magic, version;
    head >> magic >> version;
    if (magic != "TRJD")
      throw std::runtime_error("dataset: bad record header in record " +
                               std::to_string(record_index));
    if (version != "v1")
      throw std::runtime_error("dataset: unsupported version '" + version +
                               "' in record " + std::to_string(record_index));
    DatasetRecord rec;
    int knots = 0;
    if (!(head >> rec.model_hash >> rec.dt >> knots) || knots < 2)
      throw std::runtime_error("dataset: malformed header in record " +
                               std::to_string(record_index));
    if (expect_model_hash && *expect_model_hash != rec.model_hash)
      throw std::runtime_error("dataset: model hash mismatch: expected " +
                               *expect_model_hash + ", file has " + rec.model_hash);

    auto expect_line = [&](const std::string& tag) -> std::istringstream {
      if (!std::getline(in, line))
        throw std::runtime_error("dataset: truncated record " +
                                 std::to_string(record_index) + " before '" + tag +
                                 "'");
      std::istringstream ss(line);
      std::string got;
      ss >> got;
      if (got != tag)
        throw std::runtime_error("dataset: expected '" + tag + "' in record " +
                                 std::to_string(record_index) + ", found '" + got +
                                 "'");
      return ss;
    };

    {
      auto ss = expect_line("task");
      auto& t = rec.task;
      if (!(ss >> t.name >> t.model_id >> t.horizon >> t.dt >> t.speed >>
            t.step_height >> t.step_length >> t.step_duration >> t.stair_riser >>
            t.desk_height >> t.press_force >> t.timing_offset >> t.squat_depth))
        throw std::runtime_error("dataset: malformed task line in record " +
                                 std::to_string(record_index));
    }
    {
      auto ss = expect_line("feas");
      auto& f = rec.feasibility;
      int conv = 0;
      if (!(ss >> conv >> f.max_joint_violation >> f.max_torque_violation >>
            f.max_friction_residual >> f.min_normal_force >>
            f.max_dynamics_defect >> f.max_impact_residual))
        throw std::runtime_error("dataset: malformed feas line in record " +
                                 std::to_string(record_index));
      f.converged = conv != 0;
    }
    {
      auto ss = expect_line("sched");
      ss >> rec.schedule_digest;
    }
    int nq = 0, nv = 0, nu = 0, nf = 0;
    {
      auto ss = expect_line("dims");
      if (!(ss >> nq >> nv >> nu >> nf))
        throw std::runtime_error("dataset: malformed dims line in record " +
                                 std::to_string(record_index));
    }
    for (int k = 0; k < knots; ++k) {
      auto ss = expect_line("knot");
      rec.q.push_back(get_vec(ss, nq, "q", record_index));
      rec.v.push_back(get_vec(ss, nv, "v", record_index));
      rec.u.push_back(get_vec(ss, nu, "u", record_index));
      rec.forces.push_back(get_vec(ss, nf, "forces", record_index));
      rec.sites.push_back(get_vec(ss, nf, "sites", record_index));
      unsigned mask = 0;
      if (!(ss >> mask))
        throw std::runtime_error("dataset: truncated mask in record " +
                                 std::to_string(record_index));
      rec.active_mask.push_back(mask);
    }
    expect_line("end");
    records.push_back(std::move(rec));
    ++record_index;
  }
  return records;
}

ReferenceTuple reference_at(const DatasetRecord& record, double t, int nbase) {
  const double duration = record.duration();
  if (t < -1e-12 || t > duration + 1e-12)
    throw std::out_of_range("reference_at: t outside the record duration");
  t = std::min(std::max(t, 0.0), duration);
  const int last = record.knot_count() - 1;
  const double s = t / record.dt;
  const int k0 = std::min(static_cast<int>(s), last);
  const int k1 = std::min(k0 + 1, last);
  const double a = std::min(1.0, std::max(0.0, s - k0));

  ReferenceTuple ref;
  ref.q = (1.0 - a) * record.q[k0] + a * record.q[k1];
  ref.v = (1.0 - a) * record.v[k0] + a * record.v[k1];
  ref.sites = (1.0 - a) * record.sites[k0] + a * record.sites[k1];
  ref.u = record.u[k0];            // zero-order hold
  ref.forces = record.forces[k0];  // zero-order hold
  if (nbase == 3) {
    ref.base_pos = ref.q.head<2>();
    ref.base_pitch = ref.q(2);
    ref.base_vel = ref.v.head<2>();
    ref.base_ang_vel = ref.v(2);
  }
  return ref;
}

}  // namespace torl
