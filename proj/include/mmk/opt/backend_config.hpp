#pragma once

#include <string>

#include "mmk/opt/alm.hpp"

namespace mmk {

// Weights, tolerances, and transcription parameters of the trajectory
// optimizer. Everything is exposed through the structured-text config file.
struct BackendConfig {
  // objective: control effort + w_time * total duration - w_perception * sum T_p
  double w_time = 20.0;
  double w_perception = 2.0;

  // margins and tolerances
  double d_s = 0.05;        // environment clearance margin (m)
  double d_self = 0.02;     // self-collision clearance (m)
  double d_o = 0.05;        // task orientation tolerance (rad)
  double d_pos = 0.01;      // approach-ray position tolerance (m)
  double d_m = 0.08;        // approach anchor offset along the ray (m)
  double alpha_m = 0.5;     // safe-interaction window fraction of the segment
  double d_ela = 5e-3;      // elastic clearance tolerance (m)
  double t_p_min = 3.0;     // minimum observation window (s)
  double mu_smooth = 0.01;  // smooth blend half-width (lengths)
  double mu_ray = 0.5;      // ray-blend half-width on the direction cosine
  double d_ee_v = 0.05;     // instant-task linear velocity tolerance (m/s)
  double d_ee_w = 0.2;      // instant-task angular velocity tolerance (rad/s)

  // visibility model
  double theta_fov = 0.8;   // cone half-angle (rad)
  double d_max_range = 2.5; // maximum effective sensing range (m)
  int occlusion_spheres = 8;

  // transcription
  int samples_per_segment = 16;
  int esi_samples = 8;
  int vis_samples = 12;
  double init_segment_duration = 0.5;
  double min_segment_duration = 0.05;  // positive-duration reparameterization floor

  AlmOptions alm;

  std::string serialize() const;
  static BackendConfig parse(const std::string& text);
  static BackendConfig load(const std::string& path);
};

// positive duration reparameterization: T = floor + softplus(tau)
double durationFromRaw(double tau, double floor_t);
double durationRawGrad(double tau);        // dT/dtau
double rawFromDuration(double T, double floor_t);

}  // namespace mmk
