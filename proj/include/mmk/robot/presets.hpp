#pragma once

#include "mmk/robot/description.hpp"

namespace mmk {

// Planar arm with all-vertical joint axes and the given link lengths; the
// end-effector approach axis points along the last link. Analytic geometry
// keeps test oracles closed-form.
RobotDescription makePlanarArm(const std::vector<double>& link_lengths,
                               double mount_height = 0.3);

// 6-DOF spatial arm on the differential-drive base. Joint layout: waist yaw,
// shoulder/elbow/wrist pitches, wrist yaw, tool roll about the approach axis.
// Limits and sphere decomposition are artifact defaults, not measured values.
RobotDescription makeSpatialArm6();

}  // namespace mmk
