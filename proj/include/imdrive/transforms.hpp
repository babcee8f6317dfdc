#pragma once

// Reference-frame transformations for three-phase machine quantities:
// common-mode removal, abc <-> two-axis stationary frame, and the rotation
// between the stationary and synchronously rotating frames. All transforms
// are amplitude-invariant (no power-invariant sqrt(2/3) scaling).

#include <cmath>

namespace imdrive {

struct ThreePhase {
  double a{}, b{}, c{};
};

// Two-axis quantities fixed to the stator.
struct QdStationary {
  double q{}, d{};
};

// Two-axis quantities in the frame rotating at the excitation frequency.
struct QdSynchronous {
  double q{}, d{};
};

// Electrical angle of the synchronous frame, radians. Kept unwrapped by the
// caller; only sin/cos are ever taken.
struct FrameAngle {
  double theta_e{};
};

// Removes the common-mode component (e.g. inverter pole voltages referred to
// the DC midpoint -> line-to-neutral voltages). Output components sum to
// zero; applying the map twice equals applying it once.
inline ThreePhase phase_to_line_neutral(const ThreePhase& v) {
  const double common = (v.a + v.b + v.c) / 3.0;
  return {v.a - common, v.b - common, v.c - common};
}

// 2x3 projection onto the stationary q-d axes. Expects line-to-neutral
// input; q coincides with phase a.
inline QdStationary abc_to_qd_stationary(const ThreePhase& v) {
  constexpr double inv_sqrt3 = 0.5773502691896257645091488;
  return {v.a, (-v.b + v.c) * inv_sqrt3};
}

// 3x2 back-projection; columns (1, -1/2, -1/2) and (0, -sqrt3/2, sqrt3/2).
// Left inverse of abc_to_qd_stationary; output sums to zero.
inline ThreePhase qd_stationary_to_abc(const QdStationary& x) {
  constexpr double half_sqrt3 = 0.8660254037844386467637232;
  return {x.q, -0.5 * x.q - half_sqrt3 * x.d, -0.5 * x.q + half_sqrt3 * x.d};
}

// Rotation by theta_e into the synchronous frame. Norm-preserving.
inline QdSynchronous stationary_to_synchronous(const QdStationary& x,
                                               FrameAngle theta) {
  const double c = std::cos(theta.theta_e);
  const double s = std::sin(theta.theta_e);
  return {x.q * c - x.d * s, x.q * s + x.d * c};
}

// Exact inverse rotation of stationary_to_synchronous.
inline QdStationary synchronous_to_stationary(const QdSynchronous& x,
                                              FrameAngle theta) {
  const double c = std::cos(theta.theta_e);
  const double s = std::sin(theta.theta_e);
  return {x.q * c + x.d * s, -x.q * s + x.d * c};
}

}  // namespace imdrive
