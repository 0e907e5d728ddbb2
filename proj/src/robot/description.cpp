#include "mmk/robot/description.hpp"

#include <sstream>
#include <stdexcept>

#include "mmk/io/text.hpp"

namespace mmk {

namespace {

constexpr const char* kMagic = "mmk-robot";
constexpr int kVersion = 1;

Eigen::Vector3d rpyOf(const Eigen::Matrix3d& R) {
  // z-y-x euler angles, matching rpy composition Rz(y)Ry(p)Rx(r)
  const double pitch = std::asin(std::clamp(-R(2, 0), -1.0, 1.0));
  double roll, yaw;
  if (std::abs(std::cos(pitch)) > 1e-9) {
    roll = std::atan2(R(2, 1), R(2, 2));
    yaw = std::atan2(R(1, 0), R(0, 0));
  } else {
    roll = std::atan2(-R(1, 2), R(1, 1));
    yaw = 0.0;
  }
  return {roll, pitch, yaw};
}

RigidPose poseFrom(const io::Section& s, const std::string& prefix) {
  const Eigen::Vector3d xyz = s.vec3(prefix + "xyz");
  const Eigen::Vector3d rpy = s.vec3(prefix + "rpy");
  const Eigen::Matrix3d R = (Eigen::AngleAxisd(rpy.z(), Eigen::Vector3d::UnitZ()) *
                             Eigen::AngleAxisd(rpy.y(), Eigen::Vector3d::UnitY()) *
                             Eigen::AngleAxisd(rpy.x(), Eigen::Vector3d::UnitX()))
                                .toRotationMatrix();
  return RigidPose(R, xyz);
}

void emitPose(std::ostringstream& os, const RigidPose& p, const std::string& prefix) {
  os << prefix << "xyz = " << io::fmtVec(p.translation) << "\n";
  os << prefix << "rpy = " << io::fmtVec(rpyOf(p.matrix())) << "\n";
}

}  // namespace

double RobotDescription::maxReach() const {
  double reach = 0.0;
  for (const auto& j : joints) reach += j.origin.translation.norm();
  reach += ee_frame.translation.norm();
  return reach;
}

Eigen::VectorXd RobotDescription::lowerLimits() const {
  Eigen::VectorXd lo(jointCount());
  for (int i = 0; i < jointCount(); ++i) lo[i] = joints[i].q_min;
  return lo;
}

Eigen::VectorXd RobotDescription::upperLimits() const {
  Eigen::VectorXd hi(jointCount());
  for (int i = 0; i < jointCount(); ++i) hi[i] = joints[i].q_max;
  return hi;
}

bool RobotDescription::withinLimits(const Eigen::VectorXd& q, double tol) const {
  if (q.size() != jointCount()) return false;
  for (int i = 0; i < jointCount(); ++i)
    if (q[i] < joints[i].q_min - tol || q[i] > joints[i].q_max + tol) return false;
  return true;
}

std::string RobotDescription::serialize() const {
  std::ostringstream os;
  os << kMagic << " " << kVersion << "\n";
  os << "[robot]\nname = " << name << "\njoint_count = " << jointCount() << "\n";
  os << "[base]\n";
  os << "wheel_radius = " << io::fmtNum(base.wheel_radius) << "\n";
  os << "wheel_separation = " << io::fmtNum(base.wheel_separation) << "\n";
  os << "wheel_omega_max = " << io::fmtNum(base.wheel_omega_max) << "\n";
  os << "wheel_alpha_max = " << io::fmtNum(base.wheel_alpha_max) << "\n";
  os << "v_min = " << io::fmtNum(base.v_min) << "\n";
  os << "[mount]\n";
  emitPose(os, mount, "");
  for (int i = 0; i < jointCount(); ++i) {
    const auto& j = joints[i];
    os << "[joint " << (i + 1) << "]\n";
    emitPose(os, j.origin, "");
    os << "axis = " << io::fmtVec(j.axis) << "\n";
    os << "limits = " << io::fmtNum(j.q_min) << " " << io::fmtNum(j.q_max) << "\n";
    os << "omega_max = " << io::fmtNum(j.omega_max) << "\n";
    os << "alpha_max = " << io::fmtNum(j.alpha_max) << "\n";
  }
  os << "[ee]\n";
  emitPose(os, ee_frame, "");
  os << "[camera]\n";
  emitPose(os, camera_frame, "");
  os << "[spheres]\n";
  os << "# link x y z radius\n";
  for (const auto& s : spheres) {
    os << s.link << " " << io::fmtVec(s.center) << " " << io::fmtNum(s.radius) << "\n";
  }
  return os.str();
}

RobotDescription RobotDescription::parse(const std::string& text) {
  const io::Document doc = io::parseDocument(text, kMagic);
  RobotDescription d;
  const auto& robot = doc.require("robot");
  d.name = robot.get("name", "robot");
  const int count = static_cast<int>(robot.num("joint_count"));

  const auto& b = doc.require("base");
  d.base.wheel_radius = b.num("wheel_radius");
  d.base.wheel_separation = b.num("wheel_separation");
  d.base.wheel_omega_max = b.num("wheel_omega_max");
  d.base.wheel_alpha_max = b.num("wheel_alpha_max");
  d.base.v_min = b.num("v_min");
  if (d.base.wheel_radius <= 0.0 || d.base.wheel_separation <= 0.0 || d.base.v_min <= 0.0)
    throw std::runtime_error("robot description: base parameters must be positive");

  d.mount = poseFrom(doc.require("mount"), "");
  d.ee_frame = poseFrom(doc.require("ee"), "");
  d.camera_frame = poseFrom(doc.require("camera"), "");

  const auto joint_sections = doc.all("joint");
  if (static_cast<int>(joint_sections.size()) != count)
    throw std::runtime_error("robot description: joint_count does not match joint sections");
  for (const auto* js : joint_sections) {
    JointSpec j;
    j.origin = poseFrom(*js, "");
    j.axis = js->vec3("axis").normalized();
    const auto lim = js->nums("limits");
    if (lim.size() != 2 || !(lim[0] < lim[1]))
      throw std::runtime_error("robot description: bad joint limits");
    j.q_min = lim[0];
    j.q_max = lim[1];
    j.omega_max = js->num("omega_max");
    j.alpha_max = js->num("alpha_max");
    d.joints.push_back(j);
  }

  if (const auto* sp = doc.find("spheres")) {
    for (const auto& row : sp->rows) {
      const auto v = io::parseNums(row);
      if (v.size() != 5) throw std::runtime_error("robot description: bad sphere row: " + row);
      CollisionSphere cs;
      cs.link = static_cast<int>(v[0]);
      cs.center = {v[1], v[2], v[3]};
      cs.radius = v[4];
      if (cs.radius <= 0.0 || cs.link < 0 || cs.link > count)
        throw std::runtime_error("robot description: bad sphere row: " + row);
      d.spheres.push_back(cs);
    }
  }
  return d;
}

RobotDescription RobotDescription::load(const std::string& path) {
  return parse(io::readFile(path));
}

void RobotDescription::save(const std::string& path) const {
  io::writeFile(path, serialize());
}

uint64_t RobotDescription::contentHash() const {
  // FNV-1a over the canonical serialization
  const std::string s = serialize();
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace mmk
