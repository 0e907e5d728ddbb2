#pragma once

#include <map>
#include <optional>

#include "mmk/opt/backend_config.hpp"
#include "mmk/plan/frontend.hpp"
#include "mmk/robot/diff_kinematics.hpp"
#include "mmk/traj/minco.hpp"
#include "mmk/world/scene.hpp"

namespace mmk {

// Whole-body spatiotemporal trajectory optimization over (waypoints, segment
// durations, final configuration, perception windows), transcribed onto
// per-segment samples and solved by the augmented Lagrangian loop.
class TrajectoryProblem : public ConstrainedProblem {
 public:
  struct Inputs {
    const RobotDescription* robot = nullptr;
    const EsdfGrid* world = nullptr;
    std::vector<TaskSpec> tasks;
    std::vector<RigidPose> object_poses;  // latest estimates
    std::vector<int> grasps;              // selected grasp per task
    WholeBodyPath warm;
    BoundaryCondition start;              // start configuration + derivatives
    std::vector<DynamicObstacle> obstacles;
    double obstacle_time_offset = 0.0;
    std::vector<Ellipse2> cmz;            // per task, aligned with tasks
    std::vector<uint8_t> cmz_valid;
    // refined piece ranges of the pre-/post-task search segments; the safe
    // interaction windows scale with the group duration ({-1,-1} = the single
    // piece adjacent to the task instant)
    std::vector<std::array<int, 2>> esi_pre_group, esi_post_group;
    BackendConfig cfg;
  };

  explicit TrajectoryProblem(Inputs in);

  int dim() const override { return static_cast<int>(x0_.size()); }
  int eqCount() const override { return static_cast<int>(eq_items_.size()); }
  int ineqCount() const override { return static_cast<int>(ineq_items_.size()); }
  void constraintWeights(Eigen::VectorXd& w_eq, Eigen::VectorXd& w_ineq) const override;
  double evalAugmented(const Eigen::VectorXd& x, const AlmState& alm, Eigen::VectorXd& h,
                       Eigen::VectorXd& g, Eigen::VectorXd& grad) override;
  std::string eqKind(int j) const override { return eq_items_[j].label; }
  std::string ineqKind(int j) const override { return ineq_items_[j].label; }
  Eigen::VectorXd preconditioner(const Eigen::VectorXd& x) override;

  const Eigen::VectorXd& initialDecision() const { return x0_; }
  PiecewiseTrajectory decode(const Eigen::VectorXd& x) const;

  // segment index bounds of each task phase (0-based segments)
  int taskStartState(int task) const { return inputs_.warm.task_phases[task].first; }
  int taskEndState(int task) const { return inputs_.warm.task_phases[task].second; }

  // worst violation per constraint family on a trajectory, measured at
  // `density_factor` times the optimization sampling density
  std::map<std::string, double> validate(const PiecewiseTrajectory& traj,
                                         int density_factor = 4) const;

  const Inputs& inputs() const { return inputs_; }

  // registered constraint items per family label (assembly introspection)
  std::map<std::string, int> itemCounts() const;

 private:
  enum class Kind {
    TaskPos, TaskOri, TaskDuration, InstantVel, InstantOmega,
    WheelVel, WheelAcc, MinVel, JointPos, JointVel, JointAcc,
    EnvCol, DynCol, SelfCol, TapLo, TapHi, VisFov, VisRange, VisOcc,
    Cmz, EsiRay, EsiOri, EsiAnchor, Ecs
  };

  struct Item {
    Kind kind;
    const char* label;
    int task = -1;
    int segment = -1;     // sampled segment (0-based); -1 for pure time items
    double gamma = 0.0;   // local fraction
    bool window_sample = false;  // perception-window sample (time depends on T_p)
    double frac = 0.0;           // window fraction
    int sub = 0;          // wheel side, joint, sphere, occlusion index, ...
    int sub2 = 0;         // pair second sphere / obstacle / target selector
    double weight = 1.0;
    double tau = 0.0;     // task-local time at the sample (duration tasks)
  };

  struct EvalSample;  // defined in the implementation

  void buildItems();
  void packInitial();

  Inputs inputs_;
  int D_ = 0, M_ = 0, L_ = 0;
  std::vector<int> perc_tasks_;           // tasks with perception windows
  std::vector<int> tp_index_;             // task -> index into T_p block (-1 none)
  std::vector<std::pair<int, int>> sphere_pairs_;  // self-collision pairs
  Eigen::VectorXd end_vel_;               // fixed final velocity (heading * v_min)
  std::vector<Item> eq_items_, ineq_items_;
  Eigen::VectorXd x0_;

  // per-task cached anchors (latest estimates, fixed during one solve)
  struct TaskAnchors {
    RigidPose ee_start, ee_end;           // task ee poses at tau = 0 / duration
    Eigen::Vector3d ray_origin_pre, ray_dir_pre;
    Eigen::Vector3d ray_origin_post, ray_dir_post;
    Eigen::Vector3d anchor_pre, anchor_post;
    std::vector<Eigen::Vector3d> sphere_targets_end;    // ECS targets at task end
    std::vector<Eigen::Vector3d> sphere_targets_next;   // and at the next task start
    std::vector<double> esdf_at_targets_end, esdf_at_targets_next;
    bool has_next_hold = false;
  };
  std::vector<TaskAnchors> anchors_;

  mutable MinJerkSpline spline_;
};

struct SolveOutput {
  bool feasible = false;
  PiecewiseTrajectory trajectory;
  AlmReport report;
  Eigen::VectorXd decision;
};

SolveOutput solveTrajectory(TrajectoryProblem& problem, const AlmOptions& opts);

}  // namespace mmk
