#include "mmk/opt/backend_config.hpp"

#include <cmath>
#include <sstream>

#include "mmk/io/text.hpp"

namespace mmk {

double durationFromRaw(double tau, double floor_t) {
  const double sp = tau > 30.0 ? tau : std::log1p(std::exp(tau));
  return floor_t + sp;
}

double durationRawGrad(double tau) {
  return tau > 30.0 ? 1.0 : 1.0 / (1.0 + std::exp(-tau));
}

double rawFromDuration(double T, double floor_t) {
  const double sp = std::max(1e-9, T - floor_t);
  return sp > 30.0 ? sp : std::log(std::expm1(sp));
}

std::string BackendConfig::serialize() const {
  std::ostringstream os;
  os << "mmk-config 1\n[objective]\n";
  os << "w_time = " << io::fmtNum(w_time) << "\n";
  os << "w_perception = " << io::fmtNum(w_perception) << "\n";
  os << "[tolerances]\n";
  os << "d_s = " << io::fmtNum(d_s) << "\n";
  os << "d_self = " << io::fmtNum(d_self) << "\n";
  os << "d_o = " << io::fmtNum(d_o) << "\n";
  os << "d_pos = " << io::fmtNum(d_pos) << "\n";
  os << "d_m = " << io::fmtNum(d_m) << "\n";
  os << "alpha_m = " << io::fmtNum(alpha_m) << "\n";
  os << "d_ela = " << io::fmtNum(d_ela) << "\n";
  os << "t_p_min = " << io::fmtNum(t_p_min) << "\n";
  os << "mu_smooth = " << io::fmtNum(mu_smooth) << "\n";
  os << "mu_ray = " << io::fmtNum(mu_ray) << "\n";
  os << "d_ee_v = " << io::fmtNum(d_ee_v) << "\n";
  os << "d_ee_w = " << io::fmtNum(d_ee_w) << "\n";
  os << "[visibility]\n";
  os << "theta_fov = " << io::fmtNum(theta_fov) << "\n";
  os << "d_max_range = " << io::fmtNum(d_max_range) << "\n";
  os << "occlusion_spheres = " << occlusion_spheres << "\n";
  os << "[transcription]\n";
  os << "samples_per_segment = " << samples_per_segment << "\n";
  os << "esi_samples = " << esi_samples << "\n";
  os << "vis_samples = " << vis_samples << "\n";
  os << "init_segment_duration = " << io::fmtNum(init_segment_duration) << "\n";
  os << "min_segment_duration = " << io::fmtNum(min_segment_duration) << "\n";
  os << "[alm]\n";
  os << "rho_init = " << io::fmtNum(alm.rho_init) << "\n";
  os << "rho_max = " << io::fmtNum(alm.rho_max) << "\n";
  os << "gamma = " << io::fmtNum(alm.gamma) << "\n";
  os << "eps_cons = " << io::fmtNum(alm.eps_cons) << "\n";
  os << "eps_grad = " << io::fmtNum(alm.eps_grad) << "\n";
  os << "max_outer = " << alm.max_outer << "\n";
  os << "inner_max_iterations = " << alm.inner.max_iterations << "\n";
  return os.str();
}

BackendConfig BackendConfig::parse(const std::string& text) {
  const auto doc = io::parseDocument(text, "mmk-config");
  BackendConfig c;
  if (const auto* s = doc.find("objective")) {
    c.w_time = s->num("w_time", c.w_time);
    c.w_perception = s->num("w_perception", c.w_perception);
  }
  if (const auto* s = doc.find("tolerances")) {
    c.d_s = s->num("d_s", c.d_s);
    c.d_self = s->num("d_self", c.d_self);
    c.d_o = s->num("d_o", c.d_o);
    c.d_pos = s->num("d_pos", c.d_pos);
    c.d_m = s->num("d_m", c.d_m);
    c.alpha_m = s->num("alpha_m", c.alpha_m);
    c.d_ela = s->num("d_ela", c.d_ela);
    c.t_p_min = s->num("t_p_min", c.t_p_min);
    c.mu_smooth = s->num("mu_smooth", c.mu_smooth);
    c.mu_ray = s->num("mu_ray", c.mu_ray);
    c.d_ee_v = s->num("d_ee_v", c.d_ee_v);
    c.d_ee_w = s->num("d_ee_w", c.d_ee_w);
  }
  if (const auto* s = doc.find("visibility")) {
    c.theta_fov = s->num("theta_fov", c.theta_fov);
    c.d_max_range = s->num("d_max_range", c.d_max_range);
    c.occlusion_spheres = static_cast<int>(s->num("occlusion_spheres", c.occlusion_spheres));
  }
  if (const auto* s = doc.find("transcription")) {
    c.samples_per_segment = static_cast<int>(s->num("samples_per_segment", c.samples_per_segment));
    c.esi_samples = static_cast<int>(s->num("esi_samples", c.esi_samples));
    c.vis_samples = static_cast<int>(s->num("vis_samples", c.vis_samples));
    c.init_segment_duration = s->num("init_segment_duration", c.init_segment_duration);
    c.min_segment_duration = s->num("min_segment_duration", c.min_segment_duration);
  }
  if (const auto* s = doc.find("alm")) {
    c.alm.rho_init = s->num("rho_init", c.alm.rho_init);
    c.alm.rho_max = s->num("rho_max", c.alm.rho_max);
    c.alm.gamma = s->num("gamma", c.alm.gamma);
    c.alm.eps_cons = s->num("eps_cons", c.alm.eps_cons);
    c.alm.eps_grad = s->num("eps_grad", c.alm.eps_grad);
    c.alm.max_outer = static_cast<int>(s->num("max_outer", c.alm.max_outer));
    c.alm.inner.max_iterations =
        static_cast<int>(s->num("inner_max_iterations", c.alm.inner.max_iterations));
  }
  return c;
}

BackendConfig BackendConfig::load(const std::string& path) {
  return parse(io::readFile(path));
}

}  // namespace mmk
