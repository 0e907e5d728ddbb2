#pragma once

#include <functional>

#include "mmk/plan/tasks.hpp"
#include "mmk/reach/cmz.hpp"
#include "mmk/robot/ik.hpp"
#include "mmk/world/esdf.hpp"

namespace mmk {

struct FrontendParams {
  double keypoint_dt = 0.5;     // task-trajectory sampling step
  double lattice_xy = 0.1;
  int lattice_yaw_bins = 16;
  double arc_length = 0.2;
  std::vector<double> curvatures{0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0};
  bool allow_reverse = false;
  int max_expansions = 120000;
  int boundary_samples = 64;    // heuristic boundary minimizers
  double d_s = 0.05;            // environment clearance at search level
  double d_self = 0.02;
  // task-trajectory consistency
  double consistency_lambda = 0.1;     // m per rad
  double consistency_thresh = 0.03;    // m
  int consistency_samples = 10;
  int max_configs_per_key = 8;  // IK solutions kept per key node
  bool use_heuristic = true;    // disabled = uniform-cost search, the optimality oracle
  IkOptions ik{.max_iterations = 60, .restarts = 5};
};

// Progress-aware heuristic: remaining travel estimate through the ordered
// reachability ellipses, greedy one-step lookahead over sampled boundary
// points. progress is 1-based; N_p+1 returns 0.
double progressHeuristic(const Eigen::Vector2d& base, int progress,
                         const std::vector<Ellipse2>& ellipses, int boundary_samples = 64);

// One whole-body waypoint of the warm-start path.
struct WholeBodyPath {
  std::vector<WholeBodyState> states;            // x_0 .. x_M
  std::vector<int> kappa;                        // waypoint index per keypoint
  std::vector<std::pair<int, int>> task_phases;  // per task (kappa_s, kappa_e)
  std::vector<int> selected_grasps;              // grasp index per task (-1 none)
  std::vector<Keypoint> keypoints;

  std::string serialize() const;
  static WholeBodyPath parse(const std::string& text);
};

struct FrontendResult {
  bool success = false;
  std::string failure;
  int best_progress = 0;  // diagnostics when the open set is exhausted
  WholeBodyPath path;
};

class FrontendPlanner {
 public:
  FrontendPlanner(const RobotDescription& robot, const InverseReachabilityMap& irm,
                  FrontendParams params = {})
      : robot_(robot), irm_(irm), params_(std::move(params)) {}

  // grasp_lock: per-task fixed grasp index (-1 free), used when an object is
  // already held at replan time
  FrontendResult plan(const WholeBodyState& start, const std::vector<TaskSpec>& tasks,
                      const std::vector<RigidPose>& object_poses, const EsdfGrid& world,
                      const std::vector<int>& grasp_lock = {}) const;

  // keypoint filter ellipses, exposed for the planner pipeline and tests
  std::vector<Ellipse2> keypointEllipses(const std::vector<Keypoint>& keypoints,
                                         const std::vector<TaskSpec>& tasks,
                                         const std::vector<int>& grasp_lock) const;

  const FrontendParams& params() const { return params_; }

 private:
  const RobotDescription& robot_;
  const InverseReachabilityMap& irm_;
  FrontendParams params_;
};

// Appendix-style task-trajectory consistency: linearly interpolated arm
// configurations against the synchronized base poses must track the sampled
// task end-effector poses within the weighted threshold.
bool checkTaskConsistency(const RobotDescription& robot,
                          const std::vector<Eigen::Vector3d>& base_poses,
                          const Eigen::VectorXd& q_start, const Eigen::VectorXd& q_end,
                          const std::vector<RigidPose>& ee_targets, double lambda,
                          double delta_thresh);

// Exact kinematic verification of one keypoint from one base pose: ellipse
// filter, per-grasp IK, joint-limit/collision/self-collision screening, and
// (for same-task continuations) the trajectory-consistency check against the
// previous key configurations. Results are ranked by joint-limit distance.
struct KeypointCheck {
  const TaskSpec* task = nullptr;
  RigidPose object_pose;
  Keypoint keypoint;
  Ellipse2 ellipse;
  std::vector<int> candidate_grasps;  // grasp indices to try
  // same-task continuation context (empty = independent/first keypoint)
  bool same_task_continuation = false;
  double prev_tau = 0.0;
  std::vector<std::pair<Eigen::VectorXd, int>> prev_key;  // (config, grasp)
  std::vector<Eigen::Vector3d> base_segment;              // last key -> here
};

void verifyKeypoint(const RobotDescription& robot, const EsdfGrid& world,
                    const FrontendParams& params, const KeypointCheck& check,
                    const Eigen::Vector3d& base_pose, std::vector<Eigen::VectorXd>& q_out,
                    std::vector<int>& c_out);

// whole-body clearance at one state: min(esdf - radius) over all spheres
double bodyClearance(const RobotDescription& robot, const WholeBodyState& state,
                     const EsdfGrid& world);

// Insert interpolated states into the segments entering and leaving each key
// waypoint. Finer pieces around the task instants give the optimizer shape
// freedom inside the approach/retreat windows. pre/post_group report, per
// task, the refined piece range [first, last] of the original pre- and
// post-task search segments ({-1,-1} when absent).
WholeBodyPath refinePathAroundKeys(const WholeBodyPath& path, int splits = 3,
                                   std::vector<std::array<int, 2>>* pre_group = nullptr,
                                   std::vector<std::array<int, 2>>* post_group = nullptr);

}  // namespace mmk
