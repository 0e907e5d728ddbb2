#include "mmk/opt/problem.hpp"

#include <cmath>

#include "mmk/geometry/smooth.hpp"

namespace mmk {

namespace {

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

double traceProd(const Eigen::Matrix3d& A, const Eigen::Matrix3d& B) {
  return (A.transpose() * B).trace();
}

// trace(Rref^T [a]x Ree), the directional derivative of the trace alignment
double traceSkew(const Eigen::Matrix3d& Rref, const Eigen::Vector3d& a, const Eigen::Matrix3d& Ree) {
  return traceProd(Rref, skew(a) * Ree);
}

}  // namespace

struct TrajectoryProblem::EvalSample {
  int segment = 0;
  double u = 0.0;
  Eigen::VectorXd q, dq, ddq, dddq, d4q;
  Eigen::Vector2d dqb{0, 0};
  double speed2 = 0.0, psi = 0.0;
  bool kin = false;
  WholeBodyState state;
  KinChain chain;
  bool spheres_ready = false;
  std::vector<SpherePlacement> spheres;
  std::vector<EsdfQuery> sphere_q;
  std::vector<std::pair<int, double>> du_dT;  // (segment, du/dT)
  double du_dTp = 0.0;
  int tp = -1;

  Eigen::Vector2d dpsiddq() const {
    const double s = std::max(speed2, 1e-6);
    return Eigen::Vector2d(-dqb.y(), dqb.x()) / s;
  }
};

namespace {

struct Sink {
  Eigen::MatrixXd dC;
  Eigen::VectorXd dT;
  Eigen::VectorXd dTp;
};

}  // namespace

// ---------------------------------------------------------------------------
// assembly

TrajectoryProblem::TrajectoryProblem(Inputs in) : inputs_(std::move(in)) {
  const auto& warm = inputs_.warm;
  L_ = inputs_.robot->jointCount();
  D_ = 2 + L_;
  M_ = static_cast<int>(warm.states.size()) - 1;
  if (M_ < 1) throw std::invalid_argument("TrajectoryProblem: warm start too short");
  if (inputs_.start.pos.size() != D_)
    throw std::invalid_argument("TrajectoryProblem: boundary dimension mismatch");

  tp_index_.assign(inputs_.tasks.size(), -1);
  for (size_t i = 0; i < inputs_.tasks.size(); ++i) {
    if (inputs_.tasks[i].needs_perception) {
      tp_index_[i] = static_cast<int>(perc_tasks_.size());
      perc_tasks_.push_back(static_cast<int>(i));
    }
  }

  for (size_t i = 0; i < inputs_.robot->spheres.size(); ++i)
    for (size_t j = i + 1; j < inputs_.robot->spheres.size(); ++j)
      if (std::abs(inputs_.robot->spheres[i].link - inputs_.robot->spheres[j].link) > 1)
        sphere_pairs_.emplace_back(static_cast<int>(i), static_cast<int>(j));

  // final velocity: keep rolling along the warm-start heading
  end_vel_ = Eigen::VectorXd::Zero(D_);
  const double psi_f = warm.states.back().base.z();
  end_vel_[0] = inputs_.robot->base.v_min * std::cos(psi_f);
  end_vel_[1] = inputs_.robot->base.v_min * std::sin(psi_f);

  // task anchors from the latest estimates (fixed during one solve)
  anchors_.resize(inputs_.tasks.size());
  for (size_t t = 0; t < inputs_.tasks.size(); ++t) {
    const auto& task = inputs_.tasks[t];
    auto& a = anchors_[t];
    const int g = inputs_.grasps.empty() ? 0 : std::max(0, inputs_.grasps[t]);
    const RigidPose grasp = task.grasps.empty() ? RigidPose::Identity() : task.grasps[g];
    a.ee_start = task.taskPoseAt(0.0, inputs_.object_poses[t]) * grasp;
    a.ee_end = task.taskPoseAt(task.duration, inputs_.object_poses[t]) * grasp;
    a.ray_origin_pre = a.ee_start.translation;
    a.ray_dir_pre = -a.ee_start.zAxis();
    a.ray_origin_post = a.ee_end.translation;
    a.ray_dir_post = -a.ee_end.zAxis();
    a.anchor_pre = a.ee_start.translation - inputs_.cfg.d_m * a.ee_start.zAxis();
    a.anchor_post = a.ee_end.translation - inputs_.cfg.d_m * a.ee_end.zAxis();
    if (task.holds_object_after) {
      const RigidPose obj_end = task.taskPoseAt(task.duration, inputs_.object_poses[t]);
      for (const auto& [c, r] : task.object_spheres) {
        a.sphere_targets_end.push_back(obj_end.apply(c));
        a.esdf_at_targets_end.push_back(inputs_.world->valueAt(a.sphere_targets_end.back()));
      }
      if (t + 1 < inputs_.tasks.size()) {
        a.has_next_hold = true;
        const RigidPose obj_next = inputs_.tasks[t + 1].taskPoseAt(0.0, inputs_.object_poses[t + 1]);
        for (const auto& [c, r] : task.object_spheres) {
          a.sphere_targets_next.push_back(obj_next.apply(c));
          a.esdf_at_targets_next.push_back(inputs_.world->valueAt(a.sphere_targets_next.back()));
        }
      }
    }
  }

  buildItems();
  packInitial();
}

void TrajectoryProblem::buildItems() {
  const auto& cfg = inputs_.cfg;
  const auto& warm = inputs_.warm;
  const int ns = cfg.samples_per_segment;
  const int S = static_cast<int>(inputs_.robot->spheres.size());
  const int O = static_cast<int>(inputs_.obstacles.size());

  auto gammaOf = [&](int j, int n) { return (j + 0.5) / n; };

  // dynamic feasibility, collision and self-collision over the whole horizon
  for (int i = 0; i < M_; ++i) {
    for (int j = 0; j < ns; ++j) {
      const double gm = gammaOf(j, ns);
      ineq_items_.push_back({Kind::WheelVel, "wheel_velocity", -1, i, gm, false, 0, 0, 0, 1.0, 0});
      ineq_items_.push_back({Kind::WheelVel, "wheel_velocity", -1, i, gm, false, 0, 1, 0, 1.0, 0});
      ineq_items_.push_back({Kind::WheelAcc, "wheel_acceleration", -1, i, gm, false, 0, 0, 0, 1.0, 0});
      ineq_items_.push_back({Kind::WheelAcc, "wheel_acceleration", -1, i, gm, false, 0, 1, 0, 1.0, 0});
      ineq_items_.push_back({Kind::MinVel, "min_base_velocity", -1, i, gm, false, 0, 0, 0, 1.0, 0});
      for (int l = 0; l < L_; ++l) {
        ineq_items_.push_back({Kind::JointPos, "joint_position", -1, i, gm, false, 0, l, 0, 1.0, 0});
        ineq_items_.push_back({Kind::JointPos, "joint_position", -1, i, gm, false, 0, l, 1, 1.0, 0});
        ineq_items_.push_back({Kind::JointVel, "joint_velocity", -1, i, gm, false, 0, l, 0, 1.0, 0});
        ineq_items_.push_back({Kind::JointAcc, "joint_acceleration", -1, i, gm, false, 0, l, 0, 1.0, 0});
      }
      for (int s = 0; s < S; ++s)
        ineq_items_.push_back({Kind::EnvCol, "env_collision", -1, i, gm, false, 0, s, 0, 1.0, 0});
      for (size_t p = 0; p < sphere_pairs_.size(); ++p)
        ineq_items_.push_back(
            {Kind::SelfCol, "self_collision", -1, i, gm, false, 0, static_cast<int>(p), 0, 1.0, 0});
      for (int s = 0; s < S; ++s)
        for (int o = 0; o < O; ++o)
          ineq_items_.push_back({Kind::DynCol, "dyn_collision", -1, i, gm, false, 0, s, o, 1.0, 0});
    }
  }

  for (size_t t = 0; t < inputs_.tasks.size(); ++t) {
    const auto& task = inputs_.tasks[t];
    const auto [ks, ke] = warm.task_phases[t];
    const bool instant = task.duration <= 0.0;

    auto instantSample = [&](Item& it, int state_idx) {
      if (state_idx >= 1) {
        it.segment = state_idx - 1;
        it.gamma = 1.0;
      } else {
        it.segment = 0;
        it.gamma = 0.0;
      }
    };

    if (instant) {
      Item pos{Kind::TaskPos, "task_position", static_cast<int>(t), 0, 0, false, 0, 0, 0, 1.0, 0.0};
      instantSample(pos, ks);
      for (int axis = 0; axis < 3; ++axis) {
        pos.sub = axis;
        eq_items_.push_back(pos);
      }
      pos.sub = 0;
      Item ori = pos;
      ori.kind = Kind::TaskOri;
      ori.label = "task_orientation";
      ineq_items_.push_back(ori);
      Item vel = pos;
      vel.kind = Kind::InstantVel;
      vel.label = "instant_task_velocity";
      ineq_items_.push_back(vel);
      Item om = pos;
      om.kind = Kind::InstantOmega;
      om.label = "instant_task_velocity";
      ineq_items_.push_back(om);
    } else {
      // sampled equality/inequality over the task phase, endpoints included
      for (int seg = ks; seg < ke; ++seg) {
        for (int j = -1; j <= ns; ++j) {
          double gm;
          if (j < 0) {
            if (seg != ks) continue;
            gm = 0.0;
          } else if (j == ns) {
            if (seg != ke - 1) continue;
            gm = 1.0;
          } else {
            gm = gammaOf(j, ns);
          }
          Item it{Kind::TaskPos, "task_position", static_cast<int>(t), seg, gm, false, 0, 0, 0, 1.0, 0};
          for (int axis = 0; axis < 3; ++axis) {
            it.sub = axis;
            eq_items_.push_back(it);
          }
          it.sub = 0;
          it.kind = Kind::TaskOri;
          it.label = "task_orientation";
          ineq_items_.push_back(it);
        }
      }
      eq_items_.push_back(
          {Kind::TaskDuration, "task_duration", static_cast<int>(t), -1, 0, false, 0, 0, 0, 1.0, 0});
    }

    if (task.needs_perception) {
      ineq_items_.push_back({Kind::TapLo, "tap_window", static_cast<int>(t), -1, 0, false, 0, 0, 0, 1.0, 0});
      ineq_items_.push_back({Kind::TapHi, "tap_window", static_cast<int>(t), -1, 0, false, 0, 0, 0, 1.0, 0});
      for (int j = 0; j < cfg.vis_samples; ++j) {
        const double f = (j + 0.5) / cfg.vis_samples;
        ineq_items_.push_back(
            {Kind::VisFov, "visibility_fov", static_cast<int>(t), -1, 0, true, f, 0, 0, 1.0, 0});
        ineq_items_.push_back(
            {Kind::VisRange, "visibility_range", static_cast<int>(t), -1, 0, true, f, 0, 0, 1.0, 0});
        for (int k = 1; k < cfg.occlusion_spheres; ++k)
          ineq_items_.push_back(
              {Kind::VisOcc, "visibility_occlusion", static_cast<int>(t), -1, 0, true, f, k, 0, 1.0, 0});
      }
    }

    if (task.needs_cmz && t < inputs_.cmz_valid.size() && inputs_.cmz_valid[t]) {
      Item it{Kind::Cmz, "cmz", static_cast<int>(t), 0, 0, false, 0, 0, 0, 1.0, 0};
      instantSample(it, ks);
      ineq_items_.push_back(it);
    }

    if (task.is_grasp && ks >= 1) {
      for (int j = 0; j < cfg.esi_samples; ++j) {
        const double fr = gammaOf(j, cfg.esi_samples);
        ineq_items_.push_back({Kind::EsiRay, "esi_pre", static_cast<int>(t), -1, 0, false, fr, 0, 0, 1.0, 0});
        ineq_items_.push_back({Kind::EsiOri, "esi_pre", static_cast<int>(t), -1, 0, false, fr, 0, 0, 1.0, 0});
      }
      ineq_items_.push_back(
          {Kind::EsiAnchor, "esi_anchor", static_cast<int>(t), -1, 0, false, 0.0, 0, 0, 1.0, 0});
    }
    if (task.is_place && ke <= M_ - 1) {
      for (int j = 0; j < cfg.esi_samples; ++j) {
        const double fr = gammaOf(j, cfg.esi_samples);
        ineq_items_.push_back({Kind::EsiRay, "esi_post", static_cast<int>(t), -1, 0, false, fr, 1, 0, 1.0, 0});
        ineq_items_.push_back({Kind::EsiOri, "esi_post", static_cast<int>(t), -1, 0, false, fr, 1, 0, 1.0, 0});
      }
      ineq_items_.push_back(
          {Kind::EsiAnchor, "esi_anchor", static_cast<int>(t), -1, 0, false, 1.0, 1, 0, 1.0, 0});
    }

    if (task.holds_object_after && !task.object_spheres.empty()) {
      const int hold_end = (t + 1 < inputs_.tasks.size()) ? warm.task_phases[t + 1].first : M_;
      for (int seg = ke; seg < hold_end; ++seg) {
        for (int j = 0; j < ns; ++j) {
          const double gm = gammaOf(j, ns);
          for (size_t m = 0; m < task.object_spheres.size(); ++m) {
            ineq_items_.push_back({Kind::Ecs, "ecs_object_safety", static_cast<int>(t), seg, gm,
                                   false, 0, static_cast<int>(m), 0, 1.0, 0});
            if (anchors_[t].has_next_hold)
              ineq_items_.push_back({Kind::Ecs, "ecs_object_safety", static_cast<int>(t), seg, gm,
                                     false, 0, static_cast<int>(m), 1, 1.0, 0});
          }
        }
      }
    }
  }

  // every sample is one PHR constraint with unit weight: a sub-unit integral
  // weight would slow the effective multiplier accumulation by its inverse
  (void)ns;
}

void TrajectoryProblem::packInitial() {
  const auto& warm = inputs_.warm;
  const int P = static_cast<int>(perc_tasks_.size());
  x0_ = Eigen::VectorXd::Zero((M_ - 1) * D_ + M_ + D_ + P);
  for (int j = 1; j < M_; ++j) {
    const auto& s = warm.states[j];
    x0_.segment((j - 1) * D_, 2) = s.base.head<2>();
    x0_.segment((j - 1) * D_ + 2, L_) = s.arm;
  }
  for (int i = 0; i < M_; ++i)
    x0_[(M_ - 1) * D_ + i] =
        rawFromDuration(inputs_.cfg.init_segment_duration, inputs_.cfg.min_segment_duration);
  Eigen::VectorXd qf(D_);
  qf.head<2>() = warm.states.back().base.head<2>();
  qf.tail(L_) = warm.states.back().arm;
  x0_.segment((M_ - 1) * D_ + M_, D_) = qf;
  for (int p = 0; p < P; ++p) x0_[(M_ - 1) * D_ + M_ + D_ + p] = inputs_.cfg.t_p_min;
}

Eigen::VectorXd TrajectoryProblem::preconditioner(const Eigen::VectorXd& x) {
  // the control-effort integral dominates the curvature spectrum (it scales
  // like 1/T^5 along waypoint bending modes); the energy is quadratic in the
  // waypoints for fixed durations, so its diagonal is exact from one probe
  const int P = static_cast<int>(perc_tasks_.size());
  Eigen::VectorXd curv = Eigen::VectorXd::Ones(x.size());

  Eigen::MatrixXd wp(std::max(0, M_ - 1), D_);
  for (int j = 0; j < M_ - 1; ++j) wp.row(j) = x.segment(j * D_, D_).transpose();
  Eigen::VectorXd tau = x.segment((M_ - 1) * D_, M_);
  Eigen::VectorXd T(M_);
  for (int i = 0; i < M_; ++i) T[i] = durationFromRaw(tau[i], inputs_.cfg.min_segment_duration);
  BoundaryCondition end;
  end.pos = x.segment((M_ - 1) * D_ + M_, D_);
  end.vel = end_vel_;
  end.acc = Eigen::VectorXd::Zero(D_);

  auto energyAt = [&](const Eigen::MatrixXd& w, const Eigen::VectorXd& t,
                      const Eigen::VectorXd& qf) {
    BoundaryCondition e2 = end;
    e2.pos = qf;
    spline_.fit(inputs_.start, e2, w, t);
    return spline_.energy();
  };
  const Eigen::VectorXd qf0 = end.pos;
  const double e0 = energyAt(wp, T, qf0);
  const double hp = 1e-3;
  // one bending probe per waypoint row covers all of its coordinates (the
  // diagonal is identical across dimensions of one junction)
  for (int j = 0; j < M_ - 1; ++j) {
    Eigen::MatrixXd w2 = wp;
    w2(j, 0) += hp;
    const double ep = energyAt(w2, T, qf0);
    w2(j, 0) -= 2 * hp;
    const double em = energyAt(w2, T, qf0);
    const double d2 = std::max(1.0, (ep - 2 * e0 + em) / (hp * hp));
    for (int d = 0; d < D_; ++d) curv[j * D_ + d] = d2;
  }
  {
    Eigen::VectorXd q2 = qf0;
    q2[0] += hp;
    const double ep = energyAt(wp, T, q2);
    q2[0] -= 2 * hp;
    const double em = energyAt(wp, T, q2);
    const double d2 = std::max(1.0, (ep - 2 * e0 + em) / (hp * hp));
    for (int d = 0; d < D_; ++d) curv[(M_ - 1) * D_ + M_ + d] = d2;
  }
  for (int i = 0; i < M_; ++i) {
    Eigen::VectorXd t2 = tau;
    t2[i] += hp;
    Eigen::VectorXd Tp2(M_);
    for (int m = 0; m < M_; ++m) Tp2[m] = durationFromRaw(t2[m], inputs_.cfg.min_segment_duration);
    const double ep = energyAt(wp, Tp2, qf0);
    t2[i] -= 2 * hp;
    for (int m = 0; m < M_; ++m) Tp2[m] = durationFromRaw(t2[m], inputs_.cfg.min_segment_duration);
    const double em = energyAt(wp, Tp2, qf0);
    const double d2 = std::max(1.0, (ep - 2 * e0 + em) / (hp * hp));
    curv[(M_ - 1) * D_ + i] = d2;
  }
  (void)P;
  return curv.cwiseSqrt().cwiseInverse();
}

std::map<std::string, int> TrajectoryProblem::itemCounts() const {
  std::map<std::string, int> counts;
  for (const auto& it : eq_items_) counts[it.label]++;
  for (const auto& it : ineq_items_) counts[it.label]++;
  return counts;
}

void TrajectoryProblem::constraintWeights(Eigen::VectorXd& w_eq, Eigen::VectorXd& w_ineq) const {
  w_eq.resize(eq_items_.size());
  for (size_t j = 0; j < eq_items_.size(); ++j) w_eq[j] = eq_items_[j].weight;
  w_ineq.resize(ineq_items_.size());
  for (size_t j = 0; j < ineq_items_.size(); ++j) w_ineq[j] = ineq_items_[j].weight;
}

PiecewiseTrajectory TrajectoryProblem::decode(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd wp(M_ - 1, D_);
  for (int j = 0; j < M_ - 1; ++j) wp.row(j) = x.segment(j * D_, D_).transpose();
  Eigen::VectorXd T(M_);
  for (int i = 0; i < M_; ++i)
    T[i] = durationFromRaw(x[(M_ - 1) * D_ + i], inputs_.cfg.min_segment_duration);
  BoundaryCondition end;
  end.pos = x.segment((M_ - 1) * D_ + M_, D_);
  end.vel = end_vel_;
  end.acc = Eigen::VectorXd::Zero(D_);
  spline_.fit(inputs_.start, end, wp, T);
  PiecewiseTrajectory traj = spline_.trajectory();
  for (int p = 0; p < static_cast<int>(perc_tasks_.size()); ++p)
    traj.perception_durations[perc_tasks_[p]] = x[(M_ - 1) * D_ + M_ + D_ + p];
  return traj;
}

// ---------------------------------------------------------------------------
// evaluation

double TrajectoryProblem::evalAugmented(const Eigen::VectorXd& x, const AlmState& alm,
                                        Eigen::VectorXd& h, Eigen::VectorXd& g,
                                        Eigen::VectorXd& grad) {
  const auto& cfg = inputs_.cfg;
  const auto& robot = *inputs_.robot;
  const auto& world = *inputs_.world;
  const int P = static_cast<int>(perc_tasks_.size());

  // decode
  Eigen::MatrixXd wp(std::max(0, M_ - 1), D_);
  for (int j = 0; j < M_ - 1; ++j) wp.row(j) = x.segment(j * D_, D_).transpose();
  Eigen::VectorXd tau = x.segment((M_ - 1) * D_, M_);
  Eigen::VectorXd T(M_);
  for (int i = 0; i < M_; ++i) T[i] = durationFromRaw(tau[i], cfg.min_segment_duration);
  BoundaryCondition end;
  end.pos = x.segment((M_ - 1) * D_ + M_, D_);
  end.vel = end_vel_;
  end.acc = Eigen::VectorXd::Zero(D_);
  Eigen::VectorXd Tp = x.tail(P);
  spline_.fit(inputs_.start, end, wp, T);
  const Eigen::MatrixXd& C = spline_.coeffs();

  std::vector<double> tbar(M_ + 1, 0.0);
  for (int i = 0; i < M_; ++i) tbar[i + 1] = tbar[i] + T[i];

  // objective and its direct gradients
  double f = spline_.energy() + cfg.w_time * T.sum() - cfg.w_perception * Tp.sum();
  Sink sink;
  Eigen::VectorXd dE_dT;
  spline_.energyGradients(sink.dC, dE_dT);
  sink.dT = dE_dT.array() + cfg.w_time;
  sink.dTp = Eigen::VectorXd::Constant(P, -cfg.w_perception);

  // ------ sample machinery ------
  auto fillDerivatives = [&](EvalSample& s) {
    const auto block = C.middleRows(6 * s.segment, 6);
    s.q = block.transpose() * polyBasis(s.u, 0);
    s.dq = block.transpose() * polyBasis(s.u, 1);
    s.ddq = block.transpose() * polyBasis(s.u, 2);
    s.dddq = block.transpose() * polyBasis(s.u, 3);
    s.d4q = block.transpose() * polyBasis(s.u, 4);
    s.dqb = s.dq.head<2>();
    s.speed2 = s.dqb.squaredNorm();
    s.psi = std::atan2(s.dq[1], s.dq[0]);
  };
  auto regularSample = [&](int seg, double gamma) {
    EvalSample s;
    s.segment = seg;
    s.u = gamma * T[seg];
    s.du_dT = {{seg, gamma}};
    fillDerivatives(s);
    return s;
  };
  auto windowSample = [&](int task, double frac) {
    // t = tbar(kappa_s) - (1 - frac) * T_p; the mission start saturates the
    // sample smoothly so duration changes stay C1 for the line search
    EvalSample s;
    const int ks = inputs_.warm.task_phases[task].first;
    const double tp = Tp[tp_index_[task]];
    const double traw = tbar[ks] - (1.0 - frac) * tp;
    constexpr double kSoft = 0.02;
    const double z = traw / kSoft;
    double t, dt_draw;
    if (z > 30.0) {
      t = traw;
      dt_draw = 1.0;
    } else {
      t = kSoft * std::log1p(std::exp(z));
      dt_draw = 1.0 / (1.0 + std::exp(-z));
    }
    t = std::min(t, tbar[M_]);
    int seg = std::min(M_ - 1, static_cast<int>(std::upper_bound(tbar.begin(), tbar.end(), t) -
                                                tbar.begin()) -
                                   1);
    seg = std::max(seg, 0);
    s.segment = seg;
    s.u = std::clamp(t - tbar[seg], 0.0, T[seg]);
    for (int i = 0; i < M_; ++i) {
      double sens = (i < ks ? 1.0 : 0.0) * dt_draw - (i < seg ? 1.0 : 0.0);
      if (sens != 0.0) s.du_dT.push_back({i, sens});
    }
    s.du_dTp = -(1.0 - frac) * dt_draw;
    s.tp = tp_index_[task];
    fillDerivatives(s);
    return s;
  };
  auto esiGroup = [&](int task, bool pre) -> std::array<int, 2> {
    const auto [ks, ke] = inputs_.warm.task_phases[task];
    std::array<int, 2> grp{-1, -1};
    if (pre) {
      if (task < static_cast<int>(inputs_.esi_pre_group.size())) grp = inputs_.esi_pre_group[task];
      if (grp[0] < 0) grp = {ks - 1, ks - 1};
    } else {
      if (task < static_cast<int>(inputs_.esi_post_group.size())) grp = inputs_.esi_post_group[task];
      if (grp[0] < 0) grp = {ke, ke};
    }
    grp[0] = std::clamp(grp[0], 0, M_ - 1);
    grp[1] = std::clamp(grp[1], grp[0], M_ - 1);
    return grp;
  };
  // safe-interaction window sample: fraction fr of the window spanning
  // alpha_m of the refined pre-/post-task piece group
  auto esiSample = [&](int task, double fr, bool pre) {
    EvalSample s;
    const auto [ks, ke] = inputs_.warm.task_phases[task];
    const auto grp = esiGroup(task, pre);
    double W = 0.0;
    for (int m = grp[0]; m <= grp[1]; ++m) W += T[m];
    W *= cfg.alpha_m;
    const int anchor_state = pre ? ks : ke;
    const double t =
        std::clamp(pre ? tbar[anchor_state] - (1.0 - fr) * W : tbar[anchor_state] + fr * W, 0.0,
                   tbar[M_]);
    int seg = std::min(M_ - 1, static_cast<int>(std::upper_bound(tbar.begin(), tbar.end(), t) -
                                                tbar.begin()) -
                                   1);
    seg = std::max(seg, 0);
    s.segment = seg;
    s.u = std::clamp(t - tbar[seg], 0.0, T[seg]);
    // dt/dT_m: the anchor junction moves with every earlier segment, the
    // window width with the group
    const double wsens = pre ? -(1.0 - fr) * cfg.alpha_m : fr * cfg.alpha_m;
    for (int m = 0; m < M_; ++m) {
      double sens = 0.0;
      if (m < anchor_state) sens += 1.0;
      if (m >= grp[0] && m <= grp[1]) sens += wsens;
      if (m < seg) sens -= 1.0;  // du = dt - d tbar[seg]
      if (m == seg) {
        // u also saturates at the segment bounds, where the sample stops moving
      }
      if (sens != 0.0) s.du_dT.push_back({m, sens});
    }
    fillDerivatives(s);
    return s;
  };
  auto ensureKin = [&](EvalSample& s) {
    if (s.kin) return;
    s.state.base = Eigen::Vector3d(s.q[0], s.q[1], s.psi);
    s.state.arm = s.q.tail(L_);
    s.chain = KinChain::at(robot, s.state);
    s.kin = true;
  };
  auto ensureSpheres = [&](EvalSample& s) {
    if (s.spheres_ready) return;
    ensureKin(s);
    s.spheres = collisionSpherePositions(robot, s.state);
    s.sphere_q.resize(s.spheres.size());
    for (size_t i = 0; i < s.spheres.size(); ++i) s.sphere_q[i] = world.query(s.spheres[i].center);
    s.spheres_ready = true;
  };

  // accumulate sigma * d(value) through (q, dq, ddq, dddq) and the time chain
  auto accumulate = [&](const EvalSample& s, double sigma, const Eigen::VectorXd* gq,
                        const Eigen::VectorXd* gdq, const Eigen::VectorXd* gddq,
                        const Eigen::VectorXd* gdddq) {
    auto block = sink.dC.middleRows(6 * s.segment, 6);
    double dv_du = 0.0;
    if (gq) {
      block += sigma * polyBasis(s.u, 0) * gq->transpose();
      dv_du += gq->dot(s.dq);
    }
    if (gdq) {
      block += sigma * polyBasis(s.u, 1) * gdq->transpose();
      dv_du += gdq->dot(s.ddq);
    }
    if (gddq) {
      block += sigma * polyBasis(s.u, 2) * gddq->transpose();
      dv_du += gddq->dot(s.dddq);
    }
    if (gdddq) {
      block += sigma * polyBasis(s.u, 3) * gdddq->transpose();
      dv_du += gdddq->dot(s.d4q);
    }
    for (const auto& [m, sens] : s.du_dT) sink.dT[m] += sigma * sens * dv_du;
    if (s.tp >= 0) sink.dTp[s.tp] += sigma * s.du_dTp * dv_du;
  };
  // gradient given over (x, y, yaw, arm): route yaw through the heading chain
  auto accumulatePose = [&](const EvalSample& s, double sigma, const Eigen::VectorXd& gw) {
    Eigen::VectorXd gq = Eigen::VectorXd::Zero(D_);
    gq[0] = gw[0];
    gq[1] = gw[1];
    gq.tail(L_) = gw.tail(L_);
    Eigen::VectorXd gdq = Eigen::VectorXd::Zero(D_);
    gdq.head<2>() = gw[2] * s.dpsiddq();
    accumulate(s, sigma, &gq, &gdq, nullptr, nullptr);
  };

  // per-eval cache of the regular per-segment samples
  std::map<std::pair<int, int>, EvalSample> cache;
  auto cachedSample = [&](int seg, double gamma) -> EvalSample& {
    const int key = static_cast<int>(std::lround(gamma * 4096.0));
    auto it = cache.find({seg, key});
    if (it == cache.end()) it = cache.emplace(std::make_pair(seg, key), regularSample(seg, gamma)).first;
    return it->second;
  };

  double penalty = 0.0;

  // ------ equalities ------
  for (size_t j = 0; j < eq_items_.size(); ++j) {
    const Item& it = eq_items_[j];
    double value = 0.0;
    if (it.kind == Kind::TaskDuration) {
      const auto [ks, ke] = inputs_.warm.task_phases[it.task];
      double sum = 0.0;
      for (int i = ks; i < ke; ++i) sum += T[i];
      value = sum - inputs_.tasks[it.task].duration;
      h[j] = value;
      const double sigma = alm.sigmaEq(static_cast<int>(j), value) * it.weight;
      for (int i = ks; i < ke; ++i) sink.dT[i] += sigma;
      penalty += alm.valueEq(static_cast<int>(j), value, it.weight);
      continue;
    }
    // task position equality at a (possibly task-phase) sample
    EvalSample& s = cachedSample(it.segment, it.gamma);
    ensureKin(s);
    const auto& task = inputs_.tasks[it.task];
    const int ks = inputs_.warm.task_phases[it.task].first;
    double tau_local = 0.0;
    if (task.duration > 0.0) {
      tau_local = tbar[it.segment] + it.gamma * T[it.segment] - tbar[ks];
      tau_local = std::clamp(tau_local, 0.0, task.duration);
    }
    const int gi = inputs_.grasps.empty() ? 0 : std::max(0, inputs_.grasps[it.task]);
    const RigidPose grasp = task.grasps.empty() ? RigidPose::Identity() : task.grasps[gi];
    const RigidPose target = task.taskPoseAt(tau_local, inputs_.object_poses[it.task]) * grasp;
    const RigidPose ee = s.chain.ee();
    // one equality per axis keeps the penalty curvature bounded and pins each
    // component near eps_cons directly
    value = target.translation[it.sub] - ee.translation[it.sub];
    h[j] = value;
    const double sigma = alm.sigmaEq(static_cast<int>(j), value) * it.weight;
    const Eigen::MatrixXd Jp = s.chain.pointJacobian(L_, ee.translation);
    const Eigen::VectorXd gw = -Jp.row(it.sub).transpose();
    accumulatePose(s, sigma, gw);
    if (task.duration > 0.0) {
      // the reference moves with tau, which stretches with the phase durations
      Eigen::Vector3d vref, wref;
      task.taskRateAt(tau_local, inputs_.object_poses[it.task], vref, wref);
      const Eigen::Vector3d ref_vel = vref + wref.cross(target.translation -
                                                        task.taskPoseAt(tau_local, inputs_.object_poses[it.task]).translation);
      const double dv_dtau = ref_vel[it.sub];
      for (int m = ks; m < it.segment; ++m) sink.dT[m] += sigma * dv_dtau;
      sink.dT[it.segment] += sigma * dv_dtau * it.gamma;
    }
    penalty += alm.valueEq(static_cast<int>(j), value, it.weight);
  }

  // ------ inequalities ------
  const auto& base = robot.base;
  for (size_t j = 0; j < ineq_items_.size(); ++j) {
    const Item& it = ineq_items_[j];
    double value = 0.0;
    double sigma = 0.0;
    auto finish = [&](int jj) {
      g[jj] = value;
      sigma = alm.sigmaIneq(jj, value) * it.weight;
      penalty += alm.valueIneq(jj, value, it.weight);
      return sigma != 0.0;  // gradient needed
    };

    switch (it.kind) {
      case Kind::TapLo: {
        value = cfg.t_p_min - Tp[tp_index_[it.task]];
        if (finish(static_cast<int>(j))) sink.dTp[tp_index_[it.task]] -= sigma;
        break;
      }
      case Kind::TapHi: {
        // available span: end of the previous task to the start of this one
        const int ks = inputs_.warm.task_phases[it.task].first;
        int prev_end = 0;
        for (int t2 = it.task - 1; t2 >= 0; --t2) {
          prev_end = inputs_.warm.task_phases[t2].second;
          break;
        }
        double avail = 0.0;
        for (int i = prev_end; i < ks; ++i) avail += T[i];
        value = Tp[tp_index_[it.task]] - avail;
        if (finish(static_cast<int>(j))) {
          sink.dTp[tp_index_[it.task]] += sigma;
          for (int i = prev_end; i < ks; ++i) sink.dT[i] -= sigma;
        }
        break;
      }
      case Kind::MinVel: {
        EvalSample& s = cachedSample(it.segment, it.gamma);
        value = (base.v_min * base.v_min - s.speed2) / (2.0 * base.v_min);
        if (finish(static_cast<int>(j))) {
          Eigen::VectorXd gdq = Eigen::VectorXd::Zero(D_);
          gdq.head<2>() = -s.dqb / base.v_min;
          accumulate(s, sigma, nullptr, &gdq, nullptr, nullptr);
        }
        break;
      }
      case Kind::JointPos: {
        EvalSample& s = cachedSample(it.segment, it.gamma);
        const auto& jt = robot.joints[it.sub];
        value = it.sub2 == 0 ? s.q[2 + it.sub] - jt.q_max : jt.q_min - s.q[2 + it.sub];
        if (finish(static_cast<int>(j))) {
          Eigen::VectorXd gq = Eigen::VectorXd::Zero(D_);
          gq[2 + it.sub] = it.sub2 == 0 ? 1.0 : -1.0;
          accumulate(s, sigma, &gq, nullptr, nullptr, nullptr);
        }
        break;
      }
      case Kind::JointVel: {
        EvalSample& s = cachedSample(it.segment, it.gamma);
        const double w = s.dq[2 + it.sub];
        const double wmax = robot.joints[it.sub].omega_max;
        value = (w * w - wmax * wmax) / (2.0 * wmax);
        if (finish(static_cast<int>(j))) {
          Eigen::VectorXd gdq = Eigen::VectorXd::Zero(D_);
          gdq[2 + it.sub] = w / wmax;
          accumulate(s, sigma, nullptr, &gdq, nullptr, nullptr);
        }
        break;
      }
      case Kind::JointAcc: {
        EvalSample& s = cachedSample(it.segment, it.gamma);
        const double a = s.ddq[2 + it.sub];
        const double amax = robot.joints[it.sub].alpha_max;
        value = (a * a - amax * amax) / (2.0 * amax);
        if (finish(static_cast<int>(j))) {
          Eigen::VectorXd gddq = Eigen::VectorXd::Zero(D_);
          gddq[2 + it.sub] = a / amax;
          accumulate(s, sigma, nullptr, nullptr, &gddq, nullptr);
        }
        break;
      }
      case Kind::WheelVel: {
        EvalSample& s = cachedSample(it.segment, it.gamma);
        const double sgn = it.sub == 0 ? -1.0 : 1.0;  // left uses minus
        const double sp2 = std::max(s.speed2, 1e-12);
        const double v = std::sqrt(sp2);
        const double c2 = cross2(s.dqb, s.ddq.head<2>());
        const double wb = c2 / sp2;
        const double w = (2.0 * v + sgn * base.wheel_separation * wb) / (2.0 * base.wheel_radius);
        value = (w * w - base.wheel_omega_max * base.wheel_omega_max) / (2.0 * base.wheel_omega_max);
        if (finish(static_cast<int>(j))) {
          const Eigen::Vector2d dc2_ddq(s.ddq[1], -s.ddq[0]);
          const Eigen::Vector2d dc2_dddq(-s.dqb.y(), s.dqb.x());
          const Eigen::Vector2d dwb_ddq = dc2_ddq / sp2 - 2.0 * c2 * s.dqb / (sp2 * sp2);
          const Eigen::Vector2d dwb_dddq = dc2_dddq / sp2;
          const double coef = (w / base.wheel_omega_max) / (2.0 * base.wheel_radius);
          Eigen::VectorXd gdq = Eigen::VectorXd::Zero(D_);
          gdq.head<2>() = coef * (2.0 * s.dqb / v + sgn * base.wheel_separation * dwb_ddq);
          Eigen::VectorXd gddq = Eigen::VectorXd::Zero(D_);
          gddq.head<2>() = coef * sgn * base.wheel_separation * dwb_dddq;
          accumulate(s, sigma, nullptr, &gdq, &gddq, nullptr);
        }
        break;
      }
      case Kind::WheelAcc: {
        EvalSample& s = cachedSample(it.segment, it.gamma);
        const double sgn = it.sub == 0 ? -1.0 : 1.0;
        const double sp2 = std::max(s.speed2, 1e-12);
        const double v = std::sqrt(sp2);
        const Eigen::Vector2d dd = s.ddq.head<2>(), d3 = s.dddq.head<2>();
        const double wdot = s.dqb.dot(dd);
        const double a_lin = wdot / v;
        const double c2 = cross2(s.dqb, dd);
        const double c3 = cross2(s.dqb, d3);
        const double ab = c3 / sp2 - 2.0 * c2 * wdot / (sp2 * sp2);
        const double a_w = (2.0 * a_lin + sgn * base.wheel_separation * ab) / (2.0 * base.wheel_radius);
        value = (a_w * a_w - base.wheel_alpha_max * base.wheel_alpha_max) / (2.0 * base.wheel_alpha_max);
        if (finish(static_cast<int>(j))) {
          const Eigen::Vector2d da_ddq = dd / v - wdot * s.dqb / (v * sp2);
          const Eigen::Vector2d da_dddq = s.dqb / v;
          const Eigen::Vector2d dc2_ddq(dd.y(), -dd.x());
          const Eigen::Vector2d dc2_dddq(-s.dqb.y(), s.dqb.x());
          const Eigen::Vector2d dc3_ddq(d3.y(), -d3.x());
          const Eigen::Vector2d dc3_d3q(-s.dqb.y(), s.dqb.x());
          const Eigen::Vector2d dab_ddq = dc3_ddq / sp2 - 2.0 * c3 * s.dqb / (sp2 * sp2) -
                                          2.0 * (wdot * dc2_ddq + c2 * dd) / (sp2 * sp2) +
                                          8.0 * c2 * wdot * s.dqb / (sp2 * sp2 * sp2);
          const Eigen::Vector2d dab_dddq = -2.0 * (wdot * dc2_dddq + c2 * s.dqb) / (sp2 * sp2);
          const Eigen::Vector2d dab_d3q = dc3_d3q / sp2;
          const double coef = (a_w / base.wheel_alpha_max) / (2.0 * base.wheel_radius);
          Eigen::VectorXd gdq = Eigen::VectorXd::Zero(D_);
          gdq.head<2>() = coef * (2.0 * da_ddq + sgn * base.wheel_separation * dab_ddq);
          Eigen::VectorXd gddq = Eigen::VectorXd::Zero(D_);
          gddq.head<2>() = coef * (2.0 * da_dddq + sgn * base.wheel_separation * dab_dddq);
          Eigen::VectorXd gd3q = Eigen::VectorXd::Zero(D_);
          gd3q.head<2>() = coef * sgn * base.wheel_separation * dab_d3q;
          accumulate(s, sigma, nullptr, &gdq, &gddq, &gd3q);
        }
        break;
      }
      case Kind::EnvCol: {
        EvalSample& s = cachedSample(it.segment, it.gamma);
        ensureSpheres(s);
        const auto& sp = s.spheres[it.sub];
        const auto& q = s.sphere_q[it.sub];
        value = sp.radius + cfg.d_s - q.value;
        if (finish(static_cast<int>(j))) {
          const Eigen::MatrixXd Jp = s.chain.pointJacobian(sp.link, sp.center);
          accumulatePose(s, sigma, -(Jp.transpose() * q.gradient));
        }
        break;
      }
      case Kind::DynCol: {
        EvalSample& s = cachedSample(it.segment, it.gamma);
        ensureSpheres(s);
        const auto& sp = s.spheres[it.sub];
        const auto& obs = inputs_.obstacles[it.sub2];
        const double t_abs = inputs_.obstacle_time_offset + tbar[it.segment] + s.u;
        const Eigen::Vector2d po = predictObstacle(obs, t_abs);
        const Eigen::Vector2d d = sp.center.head<2>() - po;
        const double dist = std::max(d.norm(), 1e-9);
        value = sp.radius + obs.radius + cfg.d_s - dist;
        if (finish(static_cast<int>(j))) {
          const Eigen::Vector2d dir = d / dist;
          const Eigen::MatrixXd Jp = s.chain.pointJacobian(sp.link, sp.center);
          Eigen::Vector3d dir3(dir.x(), dir.y(), 0.0);
          accumulatePose(s, sigma, -(Jp.transpose() * dir3));
          // the obstacle itself moves with absolute time
          const double dv_dt = dir.dot(obs.velocity);
          for (const auto& [m, sens] : s.du_dT) sink.dT[m] += sigma * sens * dv_dt;
          for (int m = 0; m < it.segment; ++m) sink.dT[m] += sigma * dv_dt;
        }
        break;
      }
      case Kind::SelfCol: {
        EvalSample& s = cachedSample(it.segment, it.gamma);
        ensureSpheres(s);
        const auto& [ia, ib] = sphere_pairs_[it.sub];
        const auto& pa = s.spheres[ia];
        const auto& pb = s.spheres[ib];
        const Eigen::Vector3d d = pa.center - pb.center;
        const double dist = std::max(d.norm(), 1e-9);
        value = pa.radius + pb.radius + cfg.d_self - dist;
        if (finish(static_cast<int>(j))) {
          const Eigen::Vector3d dir = d / dist;
          const Eigen::MatrixXd Ja = s.chain.pointJacobian(pa.link, pa.center);
          const Eigen::MatrixXd Jb = s.chain.pointJacobian(pb.link, pb.center);
          accumulatePose(s, sigma, -(Ja.transpose() * dir - Jb.transpose() * dir));
        }
        break;
      }
      case Kind::TaskOri:
      case Kind::EsiOri: {
        EvalSample esi_s;
        if (it.kind == Kind::EsiOri) esi_s = esiSample(it.task, it.frac, it.sub == 0);
        EvalSample& s = it.kind == Kind::EsiOri ? esi_s : cachedSample(it.segment, it.gamma);
        ensureKin(s);
        const auto& task = inputs_.tasks[it.task];
        Eigen::Matrix3d Rref;
        double tau_local = 0.0;
        if (it.kind == Kind::EsiOri) {
          Rref = (it.sub == 0 ? anchors_[it.task].ee_start : anchors_[it.task].ee_end).matrix();
        } else {
          const int ks = inputs_.warm.task_phases[it.task].first;
          if (task.duration > 0.0)
            tau_local = std::clamp(tbar[it.segment] + it.gamma * T[it.segment] - tbar[ks], 0.0,
                                   task.duration);
          const int gi = inputs_.grasps.empty() ? 0 : std::max(0, inputs_.grasps[it.task]);
          Rref = (task.taskPoseAt(tau_local, inputs_.object_poses[it.task]) * task.grasps[gi]).matrix();
        }
        const Eigen::Matrix3d Ree = s.chain.ee().matrix();
        // same feasible set as acos(0.5 tr - 0.5) <= d_o, but linear in the
        // trace: bounded curvature at exact alignment, radian-scaled at the
        // boundary
        const double denom = 1.0 / (2.0 * std::sin(cfg.d_o));
        value = (2.0 * std::cos(cfg.d_o) + 1.0 - traceProd(Rref, Ree)) * denom;
        if (finish(static_cast<int>(j))) {
          Eigen::VectorXd gw = Eigen::VectorXd::Zero(3 + L_);
          for (int m = 0; m < static_cast<int>(s.chain.axes.size()); ++m) {
            const double dtr = traceSkew(Rref, s.chain.axes[m], Ree);
            gw[m == 0 ? 2 : 2 + m] = -denom * dtr;
          }
          accumulatePose(s, sigma, gw);
          if (it.kind == Kind::TaskOri && task.duration > 0.0) {
            Eigen::Vector3d vref, wref;
            task.taskRateAt(tau_local, inputs_.object_poses[it.task], vref, wref);
            const double dv_dtau = denom * traceSkew(Rref, wref, Ree);
            const int ks = inputs_.warm.task_phases[it.task].first;
            for (int m = ks; m < it.segment; ++m) sink.dT[m] += sigma * dv_dtau;
            sink.dT[it.segment] += sigma * dv_dtau * it.gamma;
          }
        }
        break;
      }
      case Kind::InstantVel:
      case Kind::InstantOmega: {
        EvalSample& s = cachedSample(it.segment, it.gamma);
        ensureKin(s);
        const double sp2 = std::max(s.speed2, 1e-6);
        const double psid = cross2(s.dqb, s.ddq.head<2>()) / sp2;
        Eigen::VectorXd v_gen(3 + L_);
        v_gen[0] = s.dq[0];
        v_gen[1] = s.dq[1];
        v_gen[2] = psid;
        v_gen.tail(L_) = s.dq.tail(L_);
        const RigidPose ee = s.chain.ee();
        const Eigen::MatrixXd J = (it.kind == Kind::InstantVel)
                                      ? s.chain.pointJacobian(L_, ee.translation)
                                      : Eigen::MatrixXd();
        Eigen::Vector3d vel;
        if (it.kind == Kind::InstantVel) {
          vel = J * v_gen;
        } else {
          vel.setZero();
          for (int m = 0; m < static_cast<int>(s.chain.axes.size()); ++m)
            vel += (m == 0 ? v_gen[2] : v_gen[2 + m]) * s.chain.axes[m];
        }
        const double tol = it.kind == Kind::InstantVel ? cfg.d_ee_v : cfg.d_ee_w;
        value = (vel.squaredNorm() - tol * tol) / (2.0 * tol);
        if (finish(static_cast<int>(j))) {
          const Eigen::Vector3d u = vel / tol;
          // through the jacobian (configuration dependence)
          const Eigen::MatrixXd Dj = (it.kind == Kind::InstantVel)
                                         ? s.chain.velocityJacobian(L_, ee.translation, v_gen)
                                         : s.chain.angularVelocityJacobian(L_, v_gen);
          accumulatePose(s, sigma, Dj.transpose() * u);
          // through the generalized rates
          Eigen::VectorXd dv_dvgen(3 + L_);
          if (it.kind == Kind::InstantVel) {
            dv_dvgen = J.transpose() * u;
          } else {
            dv_dvgen.setZero();
            for (int m = 0; m < static_cast<int>(s.chain.axes.size()); ++m)
              dv_dvgen[m == 0 ? 2 : 2 + m] = u.dot(s.chain.axes[m]);
          }
          Eigen::VectorXd gdq = Eigen::VectorXd::Zero(D_);
          gdq[0] = dv_dvgen[0];
          gdq[1] = dv_dvgen[1];
          gdq.tail(L_) = dv_dvgen.tail(L_);
          // psid depends on dq and ddq
          const double c2v = cross2(s.dqb, s.ddq.head<2>());
          const Eigen::Vector2d dpsid_ddq =
              Eigen::Vector2d(s.ddq[1], -s.ddq[0]) / sp2 - 2.0 * c2v * s.dqb / (sp2 * sp2);
          const Eigen::Vector2d dpsid_dddq = Eigen::Vector2d(-s.dqb.y(), s.dqb.x()) / sp2;
          gdq.head<2>() += dv_dvgen[2] * dpsid_ddq;
          Eigen::VectorXd gddq = Eigen::VectorXd::Zero(D_);
          gddq.head<2>() = dv_dvgen[2] * dpsid_dddq;
          accumulate(s, sigma, nullptr, &gdq, &gddq, nullptr);
        }
        break;
      }
      case Kind::Cmz: {
        EvalSample& s = cachedSample(it.segment, it.gamma);
        const Ellipse2& e = inputs_.cmz[it.task];
        const double cs = std::cos(s.psi), sn = std::sin(s.psi);
        const Eigen::Vector2d mnt = inputs_.robot->mount.translation.head<2>();
        const Eigen::Vector2d pm(s.q[0] + cs * mnt.x() - sn * mnt.y(),
                                 s.q[1] + sn * mnt.x() + cs * mnt.y());
        const Eigen::Matrix2d Sm =
            Eigen::Vector2d(1.0 / e.a, 1.0 / e.b).asDiagonal() * e.orientation.transpose();
        const Eigen::Vector2d y = Sm * (pm - e.center);
        value = y.squaredNorm() - 1.0;
        if (finish(static_cast<int>(j))) {
          const Eigen::Vector2d gp = 2.0 * (Sm.transpose() * y);
          Eigen::VectorXd gw = Eigen::VectorXd::Zero(3 + L_);
          gw[0] = gp.x();
          gw[1] = gp.y();
          gw[2] = gp.dot(Eigen::Vector2d(-sn * mnt.x() - cs * mnt.y(), cs * mnt.x() - sn * mnt.y()));
          accumulatePose(s, sigma, gw);
        }
        break;
      }
      case Kind::EsiRay: {
        EvalSample s = esiSample(it.task, it.frac, it.sub == 0);
        ensureKin(s);
        const auto& a = anchors_[it.task];
        const Eigen::Vector3d origin = it.sub == 0 ? a.ray_origin_pre : a.ray_origin_post;
        const Eigen::Vector3d dir = it.sub == 0 ? a.ray_dir_pre : a.ray_dir_post;
        const Eigen::Vector3d pe = s.chain.ee().translation;
        Eigen::Vector3d dp;
        value = rayDistance(pe, origin, dir, cfg.mu_ray, &dp) - cfg.d_pos;
        if (finish(static_cast<int>(j))) {
          const Eigen::MatrixXd Jp = s.chain.pointJacobian(L_, pe);
          accumulatePose(s, sigma, Jp.transpose() * dp);
        }
        break;
      }
      case Kind::EsiAnchor: {
        EvalSample s = esiSample(it.task, it.frac, it.sub == 0);
        ensureKin(s);
        const auto& a = anchors_[it.task];
        const Eigen::Vector3d anchor = it.sub == 0 ? a.anchor_pre : a.anchor_post;
        const Eigen::Vector3d pe = s.chain.ee().translation;
        const Eigen::Vector3d d = pe - anchor;
        value = (d.squaredNorm() - cfg.d_pos * cfg.d_pos) / (2.0 * cfg.d_pos);
        if (finish(static_cast<int>(j))) {
          const Eigen::MatrixXd Jp = s.chain.pointJacobian(L_, pe);
          accumulatePose(s, sigma, (Jp.transpose() * d) / cfg.d_pos);
        }
        break;
      }
      case Kind::VisFov:
      case Kind::VisRange:
      case Kind::VisOcc: {
        EvalSample s = windowSample(it.task, it.frac);
        ensureKin(s);
        const RigidPose cam = s.chain.camera();
        const Eigen::Vector3d tgt =
            inputs_.tasks[it.task].taskPoseAt(0.0, inputs_.object_poses[it.task]).translation;
        const Eigen::Vector3d v = tgt - cam.translation;
        const double dist = std::max(v.norm(), 1e-9);
        if (it.kind == Kind::VisRange) {
          value = (v.squaredNorm() - cfg.d_max_range * cfg.d_max_range) / (2.0 * cfg.d_max_range);
          if (finish(static_cast<int>(j))) {
            const Eigen::MatrixXd Jc = s.chain.pointJacobian(L_, cam.translation);
            accumulatePose(s, sigma, -(Jc.transpose() * v) / cfg.d_max_range);
          }
        } else if (it.kind == Kind::VisFov) {
          const Eigen::Vector3d vhat = v / dist;
          const Eigen::Vector3d zc = cam.zAxis();
          value = std::cos(cfg.theta_fov) - zc.dot(vhat);
          if (finish(static_cast<int>(j))) {
            const Eigen::MatrixXd Jz = s.chain.directionJacobian(L_, zc);
            const Eigen::MatrixXd Jc = s.chain.pointJacobian(L_, cam.translation);
            const Eigen::Vector3d zperp = (Eigen::Matrix3d::Identity() - vhat * vhat.transpose()) * zc;
            accumulatePose(s, sigma, -(Jz.transpose() * vhat) + (Jc.transpose() * zperp) / dist);
          }
        } else {
          const double beta = static_cast<double>(it.sub) / cfg.occlusion_spheres;
          const Eigen::Vector3d pk = cam.translation + beta * v;
          const auto qk = world.query(pk);
          value = beta * inputs_.tasks[it.task].target_radius - qk.value;
          if (finish(static_cast<int>(j))) {
            const Eigen::MatrixXd Jc = s.chain.pointJacobian(L_, cam.translation);
            accumulatePose(s, sigma, -(1.0 - beta) * (Jc.transpose() * qk.gradient));
          }
        }
        break;
      }
      case Kind::Ecs: {
        EvalSample& s = cachedSample(it.segment, it.gamma);
        ensureKin(s);
        const auto& task = inputs_.tasks[it.task];
        const auto& a = anchors_[it.task];
        const int gi = inputs_.grasps.empty() ? 0 : std::max(0, inputs_.grasps[it.task]);
        const RigidPose grasp = task.grasps.empty() ? RigidPose::Identity() : task.grasps[gi];
        const auto& [c_local, r_obj] = task.object_spheres[it.sub];
        const Eigen::Vector3d p = (s.chain.ee() * grasp.inverse()).apply(c_local);
        const Eigen::Vector3d target =
            it.sub2 == 0 ? a.sphere_targets_end[it.sub] : a.sphere_targets_next[it.sub];
        const double esdf_t =
            it.sub2 == 0 ? a.esdf_at_targets_end[it.sub] : a.esdf_at_targets_next[it.sub];
        Eigen::Vector3d dre;
        const double rel = elasticRadius(target, p, r_obj, esdf_t, cfg.d_s, cfg.mu_smooth, &dre);
        const auto qk = world.query(p);
        value = rel + cfg.d_s - qk.value - cfg.d_ela;
        if (finish(static_cast<int>(j))) {
          const Eigen::MatrixXd Jp = s.chain.pointJacobian(L_, p);
          accumulatePose(s, sigma, Jp.transpose() * (dre - qk.gradient));
        }
        break;
      }
      default:
        throw std::logic_error("unhandled inequality kind");
    }
  }

  // chain to the decision variables
  const SplineGradients sg = spline_.propagate(sink.dC, sink.dT);
  grad.resize(x.size());
  for (int j = 0; j < M_ - 1; ++j) grad.segment(j * D_, D_) = sg.waypoints.row(j).transpose();
  for (int i = 0; i < M_; ++i)
    grad[(M_ - 1) * D_ + i] = sg.durations[i] * durationRawGrad(tau[i]);
  grad.segment((M_ - 1) * D_ + M_, D_) = sg.tail.row(0).transpose();
  grad.tail(P) = sink.dTp;
  return f + penalty;
}

std::map<std::string, double> TrajectoryProblem::validate(const PiecewiseTrajectory& traj,
                                                          int density_factor) const {
  Inputs dense = inputs_;
  dense.cfg.samples_per_segment *= density_factor;
  dense.cfg.esi_samples *= density_factor;
  dense.cfg.vis_samples *= density_factor;
  TrajectoryProblem probe(std::move(dense));

  // encode the trajectory into the dense problem's decision vector
  Eigen::VectorXd x = probe.initialDecision();
  const int D = probe.D_, M = probe.M_;
  for (int j = 1; j < M; ++j) {
    const Eigen::VectorXd qj = traj.eval(traj.junctionTime(j), 0);
    x.segment((j - 1) * D, D) = qj;
  }
  for (int i = 0; i < M; ++i)
    x[(M - 1) * D + i] =
        rawFromDuration(traj.durations()[i], probe.inputs_.cfg.min_segment_duration);
  x.segment((M - 1) * D + M, D) = traj.eval(traj.totalDuration(), 0);
  for (int p = 0; p < static_cast<int>(probe.perc_tasks_.size()); ++p) {
    const auto itp = traj.perception_durations.find(probe.perc_tasks_[p]);
    if (itp != traj.perception_durations.end()) x[(M - 1) * D + M + D + p] = itp->second;
  }

  AlmState alm;
  alm.lambda = Eigen::VectorXd::Zero(probe.eqCount());
  alm.mu = Eigen::VectorXd::Zero(probe.ineqCount());
  alm.rho = 1.0;
  Eigen::VectorXd h(probe.eqCount()), g(probe.ineqCount()), grad(probe.dim());
  probe.evalAugmented(x, alm, h, g, grad);

  std::map<std::string, double> worst;
  for (int j = 0; j < h.size(); ++j) {
    auto& w = worst[probe.eqKind(j)];
    w = std::max(w, std::abs(h[j]));
  }
  for (int j = 0; j < g.size(); ++j) {
    auto& w = worst[probe.ineqKind(j)];
    w = std::max(w, g[j]);
  }
  return worst;
}

SolveOutput solveTrajectory(TrajectoryProblem& problem, const AlmOptions& opts) {
  SolveOutput out;
  out.decision = problem.initialDecision();
  out.report = almSolve(problem, out.decision, opts);
  out.feasible = out.report.feasible;
  out.trajectory = problem.decode(out.decision);
  return out;
}

}  // namespace mmk
