#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "torl/planar.hpp"

namespace torl {

enum class JointType { FloatingPlanar, Revolute, Prismatic };

struct Body {
  std::string name;
  double mass = 0.0;      // kg
  Vec2 com = Vec2::Zero();  // m, body frame
  double inertia = 0.0;   // kg m^2 about the com
};

struct Joint {
  std::string name;
  JointType type = JointType::Revolute;
  int parent = -1;  // body index, -1 = world
  int child = 0;
  Vec2 anchor = Vec2::Zero();   // joint origin in parent frame
  double rotation = 0.0;        // fixed rotation parent -> joint frame
  Vec2 axis = Vec2(1.0, 0.0);   // prismatic axis, joint frame
  double lower = -1e9, upper = 1e9;  // joint limits (rad or m)
  double torque_limit = 1e9;         // N m (or N), actuated joints only
};

struct ContactSiteDef {
  std::string name;
  int body = 0;
  Vec2 offset = Vec2::Zero();  // body frame
};

struct RobotState {
  VecX q;
  VecX v;
};

// Rigid contact working set: which sites are active and (optionally) the
// forces acting on them, stacked [fx, fz] per site in declaration order.
struct ContactSet {
  std::vector<int> active_sites;
  VecX forces;  // 2 * active_sites.size() or empty

  static ContactSet none() { return {}; }
  static ContactSet of(std::vector<int> sites) {
    ContactSet c;
    c.active_sites = std::move(sites);
    return c;
  }
  int dim() const { return 2 * static_cast<int>(active_sites.size()); }
};

// Internal single-dof link produced by compiling the joint list; a floating
// planar joint expands to prismatic-x, prismatic-z, revolute chains through
// massless virtual links.
struct CompiledLink {
  int parent = -1;            // compiled link index, -1 = world
  bool prismatic = false;
  Vec2 anchor = Vec2::Zero();  // in parent link frame
  double rotation = 0.0;       // fixed rotation parent -> joint frame
  Vec2 axis = Vec2(1.0, 0.0);  // joint frame (prismatic)
  Mat3 inertia = Mat3::Zero();
  int body = -1;  // public body carried by this link, -1 for virtual links
  int gc = 0;     // generalized coordinate index
};

class RobotModel {
 public:
  std::string name;
  std::vector<Body> bodies;
  std::vector<Joint> joints;
  std::vector<ContactSiteDef> contact_sites;
  Vec2 gravity = Vec2(0.0, -9.81);

  // Validates invariants and builds the compiled link chain. Throws
  // std::invalid_argument on a malformed description.
  void compile();

  int nq() const { return nv_; }
  int nv() const { return nv_; }
  int nj() const { return nj_; }       // actuated joints
  int nbase() const { return nbase_; }  // unactuated base coordinates (0 or 3)
  int num_sites() const { return static_cast<int>(contact_sites.size()); }

  bool has_floating_base() const { return nbase_ == 3; }

  // B of the equations of motion: nv x nj, identity on joint rows.
  MatX actuation_selector() const;

  VecX joint_lower() const;
  VecX joint_upper() const;
  VecX torque_limits() const;
  double total_mass() const;

  int site_index(const std::string& site_name) const;

  const std::vector<CompiledLink>& links() const { return links_; }
  int link_of_body(int body) const { return body_link_[body]; }

  RobotState zero_state() const;

  // Deterministic content hash of the model description.
  std::string hash() const;

  // Returns a copy with masses/inertias scaled by `mass_scale` and gravity by
  // `gravity_scale` (domain randomization).
  RobotModel scaled(double mass_scale, double gravity_scale) const;

 private:
  std::vector<CompiledLink> links_;
  std::vector<int> body_link_;
  int nv_ = 0;
  int nj_ = 0;
  int nbase_ = 0;
};

// Structured-text persistence (JSON tree, "robot/1" schema).
std::string save_model(const RobotModel& model);
RobotModel load_model_string(const std::string& text);
RobotModel load_model_file(const std::string& path);
void save_model_file(const RobotModel& model, const std::string& path);

// FNV-1a over a byte string; shared by model hashing and config digests.
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace torl
