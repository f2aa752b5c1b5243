#include "torl/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace torl {

using nlohmann::json;

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument("robot model: " + msg);
}

}  // namespace

void RobotModel::compile() {
  const int nb = static_cast<int>(bodies.size());
  require(nb > 0, "no bodies");
  require(!joints.empty(), "no joints");
  for (const auto& b : bodies) {
    require(b.mass > 0.0, "body '" + b.name + "' mass must be > 0");
    require(b.inertia > 0.0, "body '" + b.name + "' inertia must be > 0");
  }

  int floating = 0;
  std::vector<int> parent_of_body(nb, -2);
  for (const auto& j : joints) {
    require(j.child >= 0 && j.child < nb, "joint '" + j.name + "' bad child");
    require(j.parent >= -1 && j.parent < nb, "joint '" + j.name + "' bad parent");
    require(parent_of_body[j.child] == -2, "body has two parent joints");
    parent_of_body[j.child] = j.parent;
    if (j.type == JointType::FloatingPlanar) {
      ++floating;
      require(j.parent == -1, "floating joint must attach to the world");
    } else {
      require(j.lower < j.upper, "joint '" + j.name + "' limits out of order");
      require(j.torque_limit > 0.0, "joint '" + j.name + "' torque limit must be > 0");
    }
  }
  require(floating <= 1, "more than one floating base joint");

  // acyclicity: every body must reach the world through parents
  for (int b = 0; b < nb; ++b) {
    int cur = b, hops = 0;
    while (cur != -1) {
      require(parent_of_body[cur] != -2, "body '" + bodies[cur].name + "' is not attached");
      cur = parent_of_body[cur];
      require(++hops <= nb, "kinematic tree has a cycle");
    }
  }
  for (const auto& s : contact_sites)
    require(s.body >= 0 && s.body < nb, "site '" + s.name + "' bad body");

  // joints must be declared parent-before-child (floating base first)
  links_.clear();
  body_link_.assign(nb, -1);
  nv_ = 0;
  nj_ = 0;
  nbase_ = 0;
  for (const auto& j : joints) {
    const int parent_link = j.parent < 0 ? -1 : body_link_[j.parent];
    require(j.parent < 0 || parent_link >= 0, "joints must be declared parent-first");
    if (j.type == JointType::FloatingPlanar) {
      require(links_.empty(), "floating joint must come first");
      CompiledLink px;
      px.parent = -1;
      px.prismatic = true;
      px.axis = Vec2(1.0, 0.0);
      px.gc = nv_++;
      links_.push_back(px);
      CompiledLink pz;
      pz.parent = 0;
      pz.prismatic = true;
      pz.axis = Vec2(0.0, 1.0);
      pz.gc = nv_++;
      links_.push_back(pz);
      CompiledLink ry;
      ry.parent = 1;
      ry.gc = nv_++;
      ry.body = j.child;
      ry.inertia = spatial_inertia(bodies[j.child].mass, bodies[j.child].com,
                                   bodies[j.child].inertia);
      links_.push_back(ry);
      body_link_[j.child] = 2;
      nbase_ = 3;
    } else {
      CompiledLink l;
      l.parent = parent_link;
      l.prismatic = j.type == JointType::Prismatic;
      l.anchor = j.anchor;
      l.rotation = j.rotation;
      l.axis = j.axis.normalized();
      l.gc = nv_++;
      l.body = j.child;
      l.inertia = spatial_inertia(bodies[j.child].mass, bodies[j.child].com,
                                  bodies[j.child].inertia);
      links_.push_back(l);
      body_link_[j.child] = static_cast<int>(links_.size()) - 1;
      ++nj_;
    }
  }
  for (int b = 0; b < nb; ++b)
    require(body_link_[b] >= 0, "body '" + bodies[b].name + "' has no joint");
}

MatX RobotModel::actuation_selector() const {
  MatX b = MatX::Zero(nv_, nj_);
  for (int j = 0; j < nj_; ++j) b(nbase_ + j, j) = 1.0;
  return b;
}

VecX RobotModel::joint_lower() const {
  VecX lo(nj_);
  int k = 0;
  for (const auto& j : joints)
    if (j.type != JointType::FloatingPlanar) lo(k++) = j.lower;
  return lo;
}

VecX RobotModel::joint_upper() const {
  VecX hi(nj_);
  int k = 0;
  for (const auto& j : joints)
    if (j.type != JointType::FloatingPlanar) hi(k++) = j.upper;
  return hi;
}

VecX RobotModel::torque_limits() const {
  VecX t(nj_);
  int k = 0;
  for (const auto& j : joints)
    if (j.type != JointType::FloatingPlanar) t(k++) = j.torque_limit;
  return t;
}

double RobotModel::total_mass() const {
  double m = 0.0;
  for (const auto& b : bodies) m += b.mass;
  return m;
}

int RobotModel::site_index(const std::string& site_name) const {
  for (int i = 0; i < num_sites(); ++i)
    if (contact_sites[i].name == site_name) return i;
  throw std::invalid_argument("unknown contact site '" + site_name + "'");
}

RobotState RobotModel::zero_state() const {
  RobotState s;
  s.q = VecX::Zero(nv_);
  s.v = VecX::Zero(nv_);
  return s;
}

RobotModel RobotModel::scaled(double mass_scale, double gravity_scale) const {
  RobotModel m = *this;
  for (auto& b : m.bodies) {
    b.mass *= mass_scale;
    b.inertia *= mass_scale;
  }
  m.gravity *= gravity_scale;
  m.compile();
  return m;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string RobotModel::hash() const {
  const std::uint64_t h = fnv1a(save_model(*this));
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

const char* joint_type_name(JointType t) {
  switch (t) {
    case JointType::FloatingPlanar: return "floating";
    case JointType::Revolute: return "revolute";
    case JointType::Prismatic: return "prismatic";
  }
  return "?";
}

JointType joint_type_from(const std::string& s) {
  if (s == "floating") return JointType::FloatingPlanar;
  if (s == "revolute") return JointType::Revolute;
  if (s == "prismatic") return JointType::Prismatic;
  throw std::invalid_argument("robot model: unknown joint type '" + s + "'");
}

json num2(const Vec2& v) { return json::array({v.x(), v.y()}); }

Vec2 vec2_of(const json& j) {
  if (!j.is_array() || j.size() != 2)
    throw std::invalid_argument("robot model: expected [x, z] pair");
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

}  // namespace

std::string save_model(const RobotModel& model) {
  json root;
  root["format"] = "robot/1";
  root["name"] = model.name;
  root["gravity"] = num2(model.gravity);
  json jb = json::array();
  for (const auto& b : model.bodies)
    jb.push_back({{"name", b.name},
                  {"mass", b.mass},
                  {"com", num2(b.com)},
                  {"inertia", b.inertia}});
  root["bodies"] = jb;
  json jj = json::array();
  for (const auto& j : model.joints) {
    json e = {{"name", j.name},
              {"type", joint_type_name(j.type)},
              {"parent", j.parent < 0 ? "world" : model.bodies[j.parent].name},
              {"child", model.bodies[j.child].name}};
    if (j.type != JointType::FloatingPlanar) {
      e["anchor"] = num2(j.anchor);
      e["rotation"] = j.rotation;
      if (j.type == JointType::Prismatic) e["axis"] = num2(j.axis);
      e["limits"] = json::array({j.lower, j.upper});
      e["torque_limit"] = j.torque_limit;
    }
    jj.push_back(e);
  }
  root["joints"] = jj;
  json js = json::array();
  for (const auto& s : model.contact_sites)
    js.push_back({{"name", s.name},
                  {"body", model.bodies[s.body].name},
                  {"offset", num2(s.offset)}});
  root["sites"] = js;
  return root.dump(2) + "\n";
}

RobotModel load_model_string(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("robot model: parse error: ") + e.what());
  }
  if (root.value("format", "") != "robot/1")
    throw std::invalid_argument("robot model: missing or unsupported format header");

  RobotModel m;
  m.name = root.value("name", "");
  if (root.contains("gravity")) m.gravity = vec2_of(root["gravity"]);

  std::vector<std::string> body_names;
  for (const auto& jb : root.at("bodies")) {
    Body b;
    b.name = jb.at("name").get<std::string>();
    b.mass = jb.at("mass").get<double>();
    b.com = vec2_of(jb.at("com"));
    b.inertia = jb.at("inertia").get<double>();
    body_names.push_back(b.name);
    m.bodies.push_back(b);
  }
  auto body_id = [&](const std::string& n) -> int {
    if (n == "world") return -1;
    for (size_t i = 0; i < body_names.size(); ++i)
      if (body_names[i] == n) return static_cast<int>(i);
    throw std::invalid_argument("robot model: unknown body '" + n + "'");
  };
  for (const auto& jj : root.at("joints")) {
    Joint j;
    j.name = jj.at("name").get<std::string>();
    j.type = joint_type_from(jj.at("type").get<std::string>());
    j.parent = body_id(jj.at("parent").get<std::string>());
    j.child = body_id(jj.at("child").get<std::string>());
    if (j.type != JointType::FloatingPlanar) {
      if (jj.contains("anchor")) j.anchor = vec2_of(jj["anchor"]);
      j.rotation = jj.value("rotation", 0.0);
      if (jj.contains("axis")) j.axis = vec2_of(jj["axis"]);
      const auto& lim = jj.at("limits");
      j.lower = lim[0].get<double>();
      j.upper = lim[1].get<double>();
      j.torque_limit = jj.at("torque_limit").get<double>();
    }
    m.joints.push_back(j);
  }
  if (root.contains("sites"))
    for (const auto& js : root["sites"]) {
      ContactSiteDef s;
      s.name = js.at("name").get<std::string>();
      s.body = body_id(js.at("body").get<std::string>());
      s.offset = vec2_of(js.at("offset"));
      m.contact_sites.push_back(s);
    }
  m.compile();
  return m;
}

RobotModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("robot model: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_model_string(ss.str());
}

void save_model_file(const RobotModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("robot model: cannot write '" + path + "'");
  out << save_model(model);
}

}  // namespace torl
