#include "mmk/plan/frontend.hpp"

#include <queue>
#include <set>
#include <sstream>
#include <unordered_set>

#include "mmk/io/text.hpp"

namespace mmk {

namespace {

double wrapAngle(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a < -M_PI) a += 2.0 * M_PI;
  return a;
}

Eigen::Vector2d minimizeOnBoundary(const Ellipse2& e, int samples,
                                   const std::function<double(const Eigen::Vector2d&)>& cost) {
  Eigen::Vector2d best = e.boundaryPoint(0.0);
  double best_cost = cost(best);
  for (int i = 1; i < samples; ++i) {
    const Eigen::Vector2d p = e.boundaryPoint(2.0 * M_PI * i / samples);
    const double c = cost(p);
    if (c < best_cost) {
      best_cost = c;
      best = p;
    }
  }
  return best;
}

}  // namespace

double progressHeuristic(const Eigen::Vector2d& base, int progress,
                         const std::vector<Ellipse2>& ellipses, int boundary_samples) {
  const int Np = static_cast<int>(ellipses.size());
  if (progress > Np) return 0.0;

  // step 1: skip regions already satisfied from here
  int k_eff = progress;
  while (k_eff <= Np && ellipses[k_eff - 1].contains(base)) ++k_eff;
  if (k_eff == Np + 1) return 0.0;

  Eigen::Vector2d p_start = base;
  if (k_eff != progress) {
    const Ellipse2& next = ellipses[k_eff - 1];
    p_start = minimizeOnBoundary(ellipses[progress - 1], boundary_samples,
                                 [&](const Eigen::Vector2d& p) { return ellipseDistance(p, next); });
  }

  // step 2: greedy one-step-lookahead piecewise-linear length
  double h = 0.0;
  Eigen::Vector2d c_last = p_start;
  for (int k = k_eff; k <= Np - 1; ++k) {
    const Ellipse2& here = ellipses[k - 1];
    const Ellipse2& next = ellipses[k];
    const Eigen::Vector2d c =
        minimizeOnBoundary(here, boundary_samples, [&](const Eigen::Vector2d& p) {
          return (c_last - p).norm() + ellipseDistance(p, next);
        });
    h += (c_last - c).norm();
    c_last = c;
  }
  h += ellipseDistance(c_last, ellipses[Np - 1]);
  return h;
}

double bodyClearance(const RobotDescription& robot, const WholeBodyState& state,
                     const EsdfGrid& world) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : collisionSpherePositions(robot, state)) {
    const auto q = world.query(s.center);
    best = std::min(best, q.value - s.radius);
  }
  return best;
}

bool checkTaskConsistency(const RobotDescription& robot,
                          const std::vector<Eigen::Vector3d>& base_poses,
                          const Eigen::VectorXd& q_start, const Eigen::VectorXd& q_end,
                          const std::vector<RigidPose>& ee_targets, double lambda,
                          double delta_thresh) {
  const int K = static_cast<int>(base_poses.size()) - 1;
  if (K <= 0) return true;
  if (ee_targets.size() != base_poses.size()) return false;
  for (int k = 0; k <= K; ++k) {
    const double a = static_cast<double>(k) / K;
    const Eigen::VectorXd q = (1.0 - a) * q_start + a * q_end;
    const RigidPose ee = fkFrame(robot, WholeBodyState(base_poses[k], q), FrameId::Ee);
    const double e = (ee.translation - ee_targets[k].translation).norm() +
                     lambda * rotationAngle(ee, ee_targets[k]);
    if (e >= delta_thresh) return false;
  }
  return true;
}

namespace {

struct Node {
  Eigen::Vector3d pose;
  int progress = 1;  // 1-based index of the next keypoint
  double g = 0.0, h = 0.0;
  int parent = -1;
  std::vector<Eigen::VectorXd> q_valid;  // nonempty only on key nodes
  std::vector<int> c_valid;              // grasp index per configuration
};

struct OpenEntry {
  double f, h;
  int progress;
  long order;
  int index;
  bool operator<(const OpenEntry& o) const {
    if (f != o.f) return f > o.f;
    if (h != o.h) return h > o.h;
    if (progress != o.progress) return progress < o.progress;
    return order > o.order;  // FIFO among exact ties
  }
};

struct SearchContext {
  const RobotDescription& robot;
  const EsdfGrid& world;
  const std::vector<TaskSpec>& tasks;
  const std::vector<RigidPose>& object_poses;
  const std::vector<Keypoint>& keypoints;
  const std::vector<Ellipse2>& ellipses;
  const std::vector<int>& grasp_lock;
  const FrontendParams& params;
  // failed verifications keyed on (lattice cell, yaw bin, keypoint, grasp set):
  // skips repeated IK storms; pose variation within one cell can only delay a
  // claim to a neighboring cell, which is the lattice granularity anyway
  std::unordered_set<uint64_t>* failed_verify = nullptr;
};

bool isContinuation(const SearchContext& ctx, int kp) {
  const int task = ctx.keypoints[kp].task_index;
  if (kp > 0 && ctx.keypoints[kp - 1].task_index == task) return true;
  const bool first_of_task = (kp == 0) || (ctx.keypoints[kp - 1].task_index != task);
  return first_of_task && ctx.tasks[task].continues_grasp;
}

// signed_arc < 0 drives the same arc in reverse gear (heading unchanged)
bool baseArcClear(const SearchContext& ctx, const Eigen::Vector3d& from, double curvature,
                  double signed_arc, Eigen::Vector3d& to) {
  const int steps = std::max(2, static_cast<int>(std::ceil(std::abs(signed_arc) / 0.05)));
  for (int s = 1; s <= steps; ++s) {
    const double ds = signed_arc * s / steps;
    Eigen::Vector3d p;
    if (std::abs(curvature) < 1e-9) {
      p = {from.x() + ds * std::cos(from.z()), from.y() + ds * std::sin(from.z()), from.z()};
    } else {
      const double dpsi = curvature * ds;
      p = {from.x() + (std::sin(from.z() + dpsi) - std::sin(from.z())) / curvature,
           from.y() - (std::cos(from.z() + dpsi) - std::cos(from.z())) / curvature,
           wrapAngle(from.z() + dpsi)};
    }
    // base footprint only; arm clearance is enforced at key nodes and along
    // the layered-graph edges
    for (const auto& cs : ctx.robot.spheres) {
      if (cs.link != 0) continue;
      const Eigen::Vector3d c = fkBase(p).apply(cs.center);
      if (ctx.world.query(c).value - cs.radius < ctx.params.d_s) return false;
    }
    if (s == steps) to = p;
  }
  return true;
}

// walk to the last key node; empty result means the root was reached
const Node* lastKeyNode(const std::vector<Node>& pool, int idx) {
  while (idx >= 0) {
    if (!pool[idx].c_valid.empty()) return &pool[idx];
    idx = pool[idx].parent;
  }
  return nullptr;
}

// base poses along the parent chain from the last key node (or root) to
// node_idx inclusive, in travel order
std::vector<Eigen::Vector3d> traceFromLastKey(const std::vector<Node>& pool, int node_idx,
                                              const Eigen::Vector3d& tip) {
  std::vector<Eigen::Vector3d> rev{tip};
  int idx = node_idx;
  while (idx >= 0 && pool[idx].c_valid.empty()) {
    rev.push_back(pool[idx].pose);
    idx = pool[idx].parent;
  }
  if (idx >= 0) rev.push_back(pool[idx].pose);
  return {rev.rbegin(), rev.rend()};
}

void verifyReachability(const SearchContext& ctx, const Eigen::Vector3d& base_pose,
                        const std::vector<Node>& pool, int parent_idx, int kp,
                        std::vector<Eigen::VectorXd>& q_out, std::vector<int>& c_out) {
  q_out.clear();
  c_out.clear();
  const Keypoint& keypoint = ctx.keypoints[kp];
  const TaskSpec& task = ctx.tasks[keypoint.task_index];

  KeypointCheck check;
  check.task = &task;
  check.object_pose = ctx.object_poses[keypoint.task_index];
  check.keypoint = keypoint;
  check.ellipse = ctx.ellipses[kp];

  // step A: grasp-consistency enforcement
  const int lock = ctx.grasp_lock.empty() ? -1 : ctx.grasp_lock[keypoint.task_index];
  const Node* key = lastKeyNode(pool, parent_idx);
  if (lock >= 0) {
    check.candidate_grasps.push_back(lock);
  } else if (isContinuation(ctx, kp) && key) {
    std::set<int> uniq(key->c_valid.begin(), key->c_valid.end());
    check.candidate_grasps.assign(uniq.begin(), uniq.end());
  }
  if (check.candidate_grasps.empty()) {
    check.candidate_grasps.resize(task.grasps.size());
    for (size_t i = 0; i < check.candidate_grasps.size(); ++i)
      check.candidate_grasps[i] = static_cast<int>(i);
  }

  check.same_task_continuation =
      kp > 0 && ctx.keypoints[kp - 1].task_index == keypoint.task_index;
  if (check.same_task_continuation && key) {
    check.prev_tau = ctx.keypoints[kp - 1].tau;
    for (size_t i = 0; i < key->c_valid.size(); ++i)
      check.prev_key.emplace_back(key->q_valid[i], key->c_valid[i]);
    check.base_segment = traceFromLastKey(pool, parent_idx, base_pose);
  }

  uint64_t fail_key = 0;
  if (ctx.failed_verify && !check.same_task_continuation) {
    uint64_t mask = 0;
    for (int g : check.candidate_grasps)
      if (g < 62) mask |= 1ull << g;
    const int64_t cx = static_cast<int64_t>(std::lround(base_pose.x() / ctx.params.lattice_xy));
    const int64_t cy = static_cast<int64_t>(std::lround(base_pose.y() / ctx.params.lattice_xy));
    int yb = static_cast<int>(
        std::lround(wrapAngle(base_pose.z()) / (2.0 * M_PI) * ctx.params.lattice_yaw_bins));
    yb = ((yb % ctx.params.lattice_yaw_bins) + ctx.params.lattice_yaw_bins) %
         ctx.params.lattice_yaw_bins;
    fail_key = 1469598103934665603ull;
    for (uint64_t v : {static_cast<uint64_t>(cx + (1 << 20)), static_cast<uint64_t>(cy + (1 << 20)),
                       static_cast<uint64_t>(yb), static_cast<uint64_t>(kp), mask}) {
      fail_key ^= v;
      fail_key *= 1099511628211ull;
    }
    if (ctx.failed_verify->count(fail_key)) return;
  }

  verifyKeypoint(ctx.robot, ctx.world, ctx.params, check, base_pose, q_out, c_out);
  if (ctx.failed_verify && !check.same_task_continuation && q_out.empty())
    ctx.failed_verify->insert(fail_key);
}

}  // namespace

void verifyKeypoint(const RobotDescription& robot, const EsdfGrid& world,
                    const FrontendParams& params, const KeypointCheck& check,
                    const Eigen::Vector3d& base_pose, std::vector<Eigen::VectorXd>& q_out,
                    std::vector<int>& c_out) {
  q_out.clear();
  c_out.clear();
  const TaskSpec& task = *check.task;
  if (!check.ellipse.contains(base_pose.head<2>())) return;  // fast geometric filter

  // step B: exact kinematic feasibility
  struct Scored {
    double margin;
    Eigen::VectorXd q;
    int grasp;
  };
  std::vector<Scored> accepted;
  for (int g : check.candidate_grasps) {
    if (g < 0 || g >= static_cast<int>(task.grasps.size())) continue;
    const RigidPose target = check.keypoint.pose * task.grasps[g];
    Eigen::VectorXd seed = Eigen::VectorXd::Zero(robot.jointCount());
    for (const auto& [pq, pg] : check.prev_key)
      if (pg == g) {
        seed = pq;
        break;
      }
    for (const auto& q : solveIk(robot, target, base_pose, seed, params.ik)) {
      const WholeBodyState state(base_pose, q);
      if (bodyClearance(robot, state, world) < params.d_s) continue;
      if (selfClearance(robot, state) < params.d_self) continue;
      if (check.same_task_continuation && !check.prev_key.empty()) {
        // whole-body task-trajectory consistency back to the previous keypoint
        const auto& bases = check.base_segment;
        const int K = static_cast<int>(bases.size()) - 1;
        std::vector<RigidPose> targets;
        targets.reserve(K + 1);
        const double tau0 = check.prev_tau, tau1 = check.keypoint.tau;
        for (int k = 0; k <= K; ++k) {
          const double tau = tau0 + (tau1 - tau0) * (K > 0 ? static_cast<double>(k) / K : 1.0);
          targets.push_back(task.taskPoseAt(tau, check.object_pose) * task.grasps[g]);
        }
        bool ok = false;
        for (const auto& [pq, pg] : check.prev_key) {
          if (pg != g) continue;
          if (checkTaskConsistency(robot, bases, pq, q, targets, params.consistency_lambda,
                                   params.consistency_thresh)) {
            ok = true;
            break;
          }
        }
        if (!ok) continue;
      }
      double margin = std::numeric_limits<double>::infinity();
      for (int j = 0; j < q.size(); ++j)
        margin = std::min(margin,
                          std::min(q[j] - robot.joints[j].q_min, robot.joints[j].q_max - q[j]));
      accepted.push_back({margin, q, g});
    }
  }
  std::stable_sort(accepted.begin(), accepted.end(),
                   [](const Scored& a, const Scored& b) { return a.margin > b.margin; });
  const int keep = std::min<int>(params.max_configs_per_key, static_cast<int>(accepted.size()));
  for (int i = 0; i < keep; ++i) {
    q_out.push_back(accepted[i].q);
    c_out.push_back(accepted[i].grasp);
  }
}

std::vector<Ellipse2> FrontendPlanner::keypointEllipses(const std::vector<Keypoint>& keypoints,
                                                        const std::vector<TaskSpec>& tasks,
                                                        const std::vector<int>& grasp_lock) const {
  std::vector<Ellipse2> out;
  out.reserve(keypoints.size());
  for (const auto& kp : keypoints) {
    const auto& task = tasks[kp.task_index];
    std::vector<RigidPose> grasps;
    const int lock = grasp_lock.empty() ? -1 : grasp_lock[kp.task_index];
    if (lock >= 0) {
      grasps.push_back(task.grasps[lock]);
    } else {
      grasps = task.grasps;
    }
    out.push_back(keypointEllipse(kp.pose, grasps, irm_));
  }
  return out;
}

FrontendResult FrontendPlanner::plan(const WholeBodyState& start,
                                     const std::vector<TaskSpec>& tasks,
                                     const std::vector<RigidPose>& object_poses,
                                     const EsdfGrid& world,
                                     const std::vector<int>& grasp_lock) const {
  FrontendResult result;
  const auto keypoints = discretizeTasks(tasks, object_poses, params_.keypoint_dt);
  if (keypoints.empty()) {
    result.failure = "no keypoints";
    return result;
  }
  std::vector<Ellipse2> ellipses;
  try {
    ellipses = keypointEllipses(keypoints, tasks, grasp_lock);
  } catch (const std::exception& e) {
    result.failure = std::string("keypoint infeasible: ") + e.what();
    return result;
  }
  const int Np = static_cast<int>(keypoints.size());
  std::unordered_set<uint64_t> failed_verify;
  const SearchContext ctx{robot_,   world,    tasks,      object_poses,  keypoints,
                          ellipses, grasp_lock, params_, &failed_verify};

  auto heuristic = [&](const Eigen::Vector2d& p, int progress) {
    return params_.use_heuristic
               ? progressHeuristic(p, progress, ellipses, params_.boundary_samples)
               : 0.0;
  };

  std::vector<Node> pool;
  std::priority_queue<OpenEntry> open;
  std::unordered_set<uint64_t> closed;
  long order = 0;

  auto stateKey = [&](const Eigen::Vector3d& pose, int progress) {
    const int64_t cx = static_cast<int64_t>(std::lround(pose.x() / params_.lattice_xy));
    const int64_t cy = static_cast<int64_t>(std::lround(pose.y() / params_.lattice_xy));
    int yb = static_cast<int>(std::lround(wrapAngle(pose.z()) / (2.0 * M_PI) * params_.lattice_yaw_bins));
    yb = ((yb % params_.lattice_yaw_bins) + params_.lattice_yaw_bins) % params_.lattice_yaw_bins;
    uint64_t h = 1469598103934665603ull;
    for (uint64_t v : {static_cast<uint64_t>(cx + (1 << 20)), static_cast<uint64_t>(cy + (1 << 20)),
                       static_cast<uint64_t>(yb), static_cast<uint64_t>(progress)}) {
      h ^= v;
      h *= 1099511628211ull;
    }
    return h;
  };

  auto push = [&](int idx) {
    const Node& n = pool[idx];
    open.push({n.g + n.h, n.h, n.progress, order++, idx});
  };

  // claim every keypoint reachable without moving, as a chain of zero-cost
  // key nodes at the same pose
  auto chainAdvance = [&](int idx) {
    while (pool[idx].progress <= Np) {
      std::vector<Eigen::VectorXd> q;
      std::vector<int> c;
      verifyReachability(ctx, pool[idx].pose, pool, idx, pool[idx].progress - 1, q, c);
      if (q.empty()) break;
      Node next;
      next.pose = pool[idx].pose;
      next.progress = pool[idx].progress + 1;
      next.g = pool[idx].g;
      next.h = heuristic(next.pose.head<2>(), next.progress);
      next.parent = idx;
      next.q_valid = std::move(q);
      next.c_valid = std::move(c);
      pool.push_back(std::move(next));
      idx = static_cast<int>(pool.size()) - 1;
      push(idx);
    }
    return idx;
  };

  {
    Node root;
    root.pose = start.base;
    root.progress = 1;
    root.g = 0.0;
    root.h = heuristic(start.base.head<2>(), 1);
    pool.push_back(root);
    if (bodyClearance(robot_, start, world) < 0.0) {
      result.failure = "start state in collision";
      return result;
    }
    push(0);
    chainAdvance(0);
  }

  int goal = -1;
  int expansions = 0;
  while (!open.empty()) {
    const OpenEntry top = open.top();
    open.pop();
    result.best_progress = std::max(result.best_progress, pool[top.index].progress - 1);
    if (pool[top.index].progress == Np + 1) {
      goal = top.index;
      break;
    }
    const uint64_t key = stateKey(pool[top.index].pose, pool[top.index].progress);
    if (closed.count(key)) continue;
    closed.insert(key);
    if (++expansions > params_.max_expansions) break;

    for (double kappa : params_.curvatures) {
      for (int dir = 0; dir < (params_.allow_reverse ? 2 : 1); ++dir) {
        const Eigen::Vector3d from = pool[top.index].pose;
        const double arc = (dir == 0) ? params_.arc_length : -params_.arc_length;
        Eigen::Vector3d to;
        if (!baseArcClear(ctx, from, kappa, arc, to)) continue;
        if (closed.count(stateKey(to, pool[top.index].progress))) continue;

        Node succ;
        succ.pose = to;
        succ.progress = pool[top.index].progress;
        succ.g = pool[top.index].g + params_.arc_length;
        succ.parent = top.index;
        std::vector<Eigen::VectorXd> q;
        std::vector<int> c;
        if (succ.progress <= Np) {
          verifyReachability(ctx, to, pool, top.index, succ.progress - 1, q, c);
        }
        if (!q.empty()) {
          succ.progress += 1;
          succ.q_valid = std::move(q);
          succ.c_valid = std::move(c);
          if (closed.count(stateKey(to, succ.progress))) continue;
        }
        succ.h = heuristic(to.head<2>(), succ.progress);
        pool.push_back(std::move(succ));
        const int idx = static_cast<int>(pool.size()) - 1;
        push(idx);
        if (pool[idx].progress > pool[top.index].progress) chainAdvance(idx);
      }
    }
  }

  if (goal < 0) {
    result.failure = "open set exhausted at progress " + std::to_string(result.best_progress) +
                     "/" + std::to_string(Np);
    return result;
  }

  // backtrack base path and key indices; zero-cost claim chains collapse onto
  // one waypoint
  std::vector<int> chain;
  for (int idx = goal; idx >= 0; idx = pool[idx].parent) chain.push_back(idx);
  std::reverse(chain.begin(), chain.end());

  WholeBodyPath& path = result.path;
  path.keypoints = keypoints;
  path.kappa.assign(Np, -1);
  std::vector<const Node*> key_nodes(Np, nullptr);
  std::vector<Eigen::Vector3d> bases;
  for (size_t i = 0; i < chain.size(); ++i) {
    const Node& n = pool[chain[i]];
    if (bases.empty() || (bases.back() - n.pose).norm() > 1e-12) bases.push_back(n.pose);
    if (!n.c_valid.empty()) {
      path.kappa[n.progress - 2] = static_cast<int>(bases.size()) - 1;
      key_nodes[n.progress - 2] = &n;
    }
  }

  // layered-graph shortest path over stored arm configurations
  struct LNode {
    Eigen::VectorXd q;
    int grasp;
    double dist;
    int prev;  // node index in the previous layer
  };
  std::vector<std::vector<LNode>> layers(Np + 1);
  layers[0].push_back({start.arm, -1, 0.0, -1});
  for (int k = 0; k < Np; ++k) {
    for (size_t i = 0; i < key_nodes[k]->q_valid.size(); ++i) {
      layers[k + 1].push_back({key_nodes[k]->q_valid[i], key_nodes[k]->c_valid[i],
                               std::numeric_limits<double>::infinity(), -1});
    }
  }

  auto edgeFeasible = [&](int k, const LNode& u, const LNode& v) {
    // grasp consistency along continuous operations
    if (isContinuation(ctx, k) && u.grasp >= 0 && u.grasp != v.grasp) return false;
    const int j0 = (k == 0) ? 0 : path.kappa[k - 1];
    const int j1 = path.kappa[k];
    const int steps = std::max(1, j1 - j0);
    // whole-body clearance along the synchronized interpolation, with midpoint
    // refinement between waypoints
    const int refine = std::max(1, static_cast<int>(std::ceil(
                               (v.q - u.q).cwiseAbs().maxCoeff() / (0.15 * steps))));
    for (int j = 0; j <= steps; ++j) {
      for (int r = 0; r < ((j < steps) ? refine : 1); ++r) {
        const double a = (j + static_cast<double>(r) / refine) / steps;
        const Eigen::VectorXd q = (1.0 - a) * u.q + a * v.q;
        const int jb = std::min(j0 + j, static_cast<int>(bases.size()) - 1);
        // base pose interpolated only at waypoint resolution
        const WholeBodyState s(bases[jb], q);
        if (bodyClearance(robot_, s, world) < params_.d_s) return false;
        if (selfClearance(robot_, s) < params_.d_self) return false;
      }
    }
    if (k > 0 && keypoints[k].task_index == keypoints[k - 1].task_index) {
      std::vector<Eigen::Vector3d> seg(bases.begin() + j0, bases.begin() + j1 + 1);
      const auto& task = tasks[keypoints[k].task_index];
      std::vector<RigidPose> targets;
      const int K = static_cast<int>(seg.size()) - 1;
      for (int s = 0; s <= K; ++s) {
        const double tau = keypoints[k - 1].tau +
                           (keypoints[k].tau - keypoints[k - 1].tau) * (K ? double(s) / K : 1.0);
        targets.push_back(task.taskPoseAt(tau, object_poses[keypoints[k].task_index]) *
                          task.grasps[v.grasp]);
      }
      if (!checkTaskConsistency(robot_, seg, u.q, v.q, targets, params_.consistency_lambda,
                                params_.consistency_thresh))
        return false;
    }
    return true;
  };

  for (int k = 1; k <= Np; ++k) {
    for (auto& v : layers[k]) {
      for (size_t ui = 0; ui < layers[k - 1].size(); ++ui) {
        const auto& u = layers[k - 1][ui];
        if (std::isinf(u.dist)) continue;
        if (!edgeFeasible(k - 1, u, v)) continue;  // keypoint index of layer k
        const double cand = u.dist + (v.q - u.q).norm();
        if (cand < v.dist) {
          v.dist = cand;
          v.prev = static_cast<int>(ui);
        }
      }
    }
    bool any = false;
    for (const auto& v : layers[k]) any |= !std::isinf(v.dist);
    if (!any) {
      result.failure = "no feasible arm path into layer " + std::to_string(k);
      return result;
    }
  }

  // pick the cheapest final node and walk back
  std::vector<int> pick(Np + 1, 0);
  {
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < layers[Np].size(); ++i)
      if (layers[Np][i].dist < best) {
        best = layers[Np][i].dist;
        pick[Np] = static_cast<int>(i);
      }
    for (int k = Np; k > 0; --k) pick[k - 1] = layers[k][pick[k]].prev;
  }

  // synchronize base and arm into whole-body states
  path.states.clear();
  const int M = static_cast<int>(bases.size()) - 1;
  for (int j = 0; j <= M; ++j) {
    int k = 0;
    while (k < Np && path.kappa[k] < j) ++k;  // first key with kappa >= j
    Eigen::VectorXd q;
    if (k == 0) {
      const int j1 = path.kappa.empty() ? 0 : path.kappa[0];
      const auto& u = layers[0][0];
      const auto& v = layers.size() > 1 ? layers[1][pick[1]] : layers[0][0];
      const double a = (j1 > 0) ? static_cast<double>(j) / j1 : 1.0;
      q = Np ? ((1.0 - a) * u.q + a * v.q).eval() : u.q;
    } else if (k == Np) {
      q = layers[Np][pick[Np]].q;  // past the last keypoint
    } else {
      const int j0 = path.kappa[k - 1], j1 = path.kappa[k];
      const auto& u = layers[k][pick[k]];
      const auto& v = layers[k + 1][pick[k + 1]];
      const double a = (j1 > j0) ? static_cast<double>(j - j0) / (j1 - j0) : 1.0;
      q = (1.0 - a) * u.q + a * v.q;
    }
    path.states.emplace_back(bases[j], q);
  }

  // selected grasp and phase indices per task
  path.selected_grasps.assign(tasks.size(), -1);
  path.task_phases.assign(tasks.size(), {-1, -1});
  for (int k = 0; k < Np; ++k) {
    const int task = keypoints[k].task_index;
    path.selected_grasps[task] = layers[k + 1][pick[k + 1]].grasp;
    auto& [s, e] = path.task_phases[task];
    if (s < 0) s = path.kappa[k];
    e = path.kappa[k];
  }

  result.success = true;
  return result;
}

WholeBodyPath refinePathAroundKeys(const WholeBodyPath& path, int splits,
                                   std::vector<std::array<int, 2>>* pre_group,
                                   std::vector<std::array<int, 2>>* post_group) {
  const int M = static_cast<int>(path.states.size()) - 1;
  std::vector<int> pieces(M, 1);
  for (int k : path.kappa) {
    if (k - 1 >= 0) pieces[k - 1] = splits;
    if (k < M) pieces[k] = splits;
  }
  WholeBodyPath out;
  out.keypoints = path.keypoints;
  out.selected_grasps = path.selected_grasps;
  std::vector<int> new_index(M + 1, 0);
  out.states.push_back(path.states.front());
  for (int i = 0; i < M; ++i) {
    const auto& a = path.states[i];
    const auto& b = path.states[i + 1];
    for (int s = 1; s <= pieces[i]; ++s) {
      const double f = static_cast<double>(s) / pieces[i];
      WholeBodyState mid;
      double dpsi = b.base.z() - a.base.z();
      while (dpsi > M_PI) dpsi -= 2.0 * M_PI;
      while (dpsi < -M_PI) dpsi += 2.0 * M_PI;
      mid.base = Eigen::Vector3d(a.base.x() + f * (b.base.x() - a.base.x()),
                                 a.base.y() + f * (b.base.y() - a.base.y()),
                                 a.base.z() + f * dpsi);
      mid.arm = (1.0 - f) * a.arm + f * b.arm;
      out.states.push_back(mid);
    }
    new_index[i + 1] = static_cast<int>(out.states.size()) - 1;
  }
  for (int k : path.kappa) out.kappa.push_back(new_index[k]);
  for (const auto& [s, e] : path.task_phases)
    out.task_phases.emplace_back(s >= 0 ? new_index[s] : s, e >= 0 ? new_index[e] : e);
  if (pre_group) {
    pre_group->clear();
    for (const auto& [s, e] : path.task_phases) {
      if (s >= 1)
        pre_group->push_back({new_index[s - 1], new_index[s] - 1});
      else
        pre_group->push_back({-1, -1});
    }
  }
  if (post_group) {
    post_group->clear();
    for (const auto& [s, e] : path.task_phases) {
      if (e >= 0 && e < M)
        post_group->push_back({new_index[e], new_index[e + 1] - 1});
      else
        post_group->push_back({-1, -1});
    }
  }
  return out;
}

std::string WholeBodyPath::serialize() const {
  std::ostringstream os;
  os << "mmk-path 1\n[path]\n";
  os << "states = " << states.size() << "\n";
  os << "tasks = " << task_phases.size() << "\n";
  os << "[states]\n";
  for (const auto& s : states) {
    Eigen::VectorXd row(3 + s.arm.size());
    row.head<3>() = s.base;
    row.tail(s.arm.size()) = s.arm;
    os << io::fmtVec(row) << "\n";
  }
  os << "[kappa]\n";
  for (int k : kappa) os << k << "\n";
  os << "[phases]\n";
  for (const auto& [s, e] : task_phases) os << s << " " << e << "\n";
  os << "[grasps]\n";
  for (int g : selected_grasps) os << g << "\n";
  os << "[keypoints]\n";
  for (const auto& kp : keypoints) {
    const auto& q = kp.pose.rotation;
    os << kp.task_index << " " << io::fmtNum(kp.tau) << " " << io::fmtNum(q.w()) << " "
       << io::fmtNum(q.x()) << " " << io::fmtNum(q.y()) << " " << io::fmtNum(q.z()) << " "
       << io::fmtVec(kp.pose.translation) << "\n";
  }
  return os.str();
}

WholeBodyPath WholeBodyPath::parse(const std::string& text) {
  const auto doc = io::parseDocument(text, "mmk-path");
  WholeBodyPath p;
  for (const auto& row : doc.require("states").rows) {
    const auto v = io::parseNums(row);
    WholeBodyState s;
    s.base = {v[0], v[1], v[2]};
    s.arm = Eigen::Map<const Eigen::VectorXd>(v.data() + 3, v.size() - 3);
    p.states.push_back(s);
  }
  for (const auto& row : doc.require("kappa").rows) p.kappa.push_back(std::stoi(row));
  for (const auto& row : doc.require("phases").rows) {
    const auto v = io::parseNums(row);
    p.task_phases.emplace_back(static_cast<int>(v[0]), static_cast<int>(v[1]));
  }
  for (const auto& row : doc.require("grasps").rows) p.selected_grasps.push_back(std::stoi(row));
  for (const auto& row : doc.require("keypoints").rows) {
    const auto v = io::parseNums(row);
    Keypoint kp;
    kp.task_index = static_cast<int>(v[0]);
    kp.tau = v[1];
    kp.pose = RigidPose(Eigen::Quaterniond(v[2], v[3], v[4], v[5]), {v[6], v[7], v[8]});
    p.keypoints.push_back(kp);
  }
  return p;
}

}  // namespace mmk
