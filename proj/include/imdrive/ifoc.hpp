#pragma once

// Indirect field-oriented control: outer speed PI producing the torque
// current command, feedforward slip from the commanded rotor time constant,
// frame-angle accumulation, and the current-regulation stage that couples
// the commands to the machine (ideal current source or per-phase hysteresis
// comparators against the DC bus).

#include <algorithm>
#include <cmath>

#include "imdrive/errors.hpp"
#include "imdrive/motor_model.hpp"
#include "imdrive/transforms.hpp"

namespace imdrive {

struct SpeedPi {
  double Kp{35.0};      // A per rad/s of electrical speed error
  double Ki{520.0};     // A per rad/s per s
  double integ{};       // integrator state, A
  double iqs_max{80.0};  // command limit, A
};

struct IfocState {
  double theta_e{};       // synchronous frame angle, rad, unwrapped
  double ids_ref{};       // flux current command, A
  double iqs_ref{};       // torque current command, A
  double omega_sl_ref{};  // commanded slip, rad/s
  double Tr_cmd{};        // rotor time constant used for the slip, s
};

// PI on speed error with output clamp and conditional anti-windup (the
// integrator freezes while the output is saturated and the error pushes it
// further in). omega_ref is mechanical rad/s, omega_r electrical rad/s.
inline double speed_loop(double omega_ref, double omega_r, SpeedPi& pi,
                         const MotorParams& params, double h) {
  const double err = omega_ref * params.pole_pairs() - omega_r;
  double u = pi.Kp * err + pi.integ;
  if (u > pi.iqs_max || u < -pi.iqs_max) {
    if (err * u < 0.0) pi.integ += pi.Ki * err * h;  // unwinding direction
  } else {
    pi.integ += pi.Ki * err * h;
  }
  u = pi.Kp * err + pi.integ;
  return std::clamp(u, -pi.iqs_max, pi.iqs_max);
}

// Slip relation omega_sl = iqs_ref / (Tr_cmd ids_ref) and frame angle
// accumulation theta_e += (omega_r + omega_sl) h. A zero torque command
// yields zero slip regardless of ids_ref (pre-magnetization).
inline void slip_and_angle(double iqs_ref, double ids_ref, double Tr_cmd,
                           double omega_r, double h, IfocState& s) {
  if (iqs_ref == 0.0) {
    s.omega_sl_ref = 0.0;
  } else {
    if (!(ids_ref > 0.0))
      throw ConfigError("ifoc: torque commanded before magnetization "
                        "(ids_ref <= 0)");
    if (!(Tr_cmd > 0.0)) throw ConfigError("ifoc: Tr_cmd must be positive");
    s.omega_sl_ref = iqs_ref / (Tr_cmd * ids_ref);
  }
  s.iqs_ref = iqs_ref;
  s.ids_ref = ids_ref;
  s.Tr_cmd = Tr_cmd;
  s.theta_e += (omega_r + s.omega_sl_ref) * h;
}

enum class RegulationMode { ideal, hysteresis };

// Commanded synchronous currents mapped to phase commands for logging and
// for the hysteresis comparators.
inline ThreePhase phase_current_commands(double iqs_ref, double ids_ref,
                                         FrameAngle theta) {
  const QdStationary st =
      synchronous_to_stationary({iqs_ref, ids_ref}, theta);
  return qd_stationary_to_abc(st);
}

// Per-phase latched comparator state: +1 upper switch (+Vd/2), -1 lower.
struct HysteresisState {
  int sw[3]{1, 1, 1};
};

// Bang-bang comparison of measured against commanded phase currents with
// band delta; emits pole voltages referred to the DC midpoint.
inline ThreePhase hysteresis_voltages(const ThreePhase& i_meas,
                                      const ThreePhase& i_ref, double band,
                                      double Vd, HysteresisState& hs) {
  const double meas[3] = {i_meas.a, i_meas.b, i_meas.c};
  const double ref[3] = {i_ref.a, i_ref.b, i_ref.c};
  double v[3];
  for (int k = 0; k < 3; ++k) {
    if (meas[k] < ref[k] - band)
      hs.sw[k] = 1;
    else if (meas[k] > ref[k] + band)
      hs.sw[k] = -1;
    v[k] = 0.5 * Vd * hs.sw[k];
  }
  return {v[0], v[1], v[2]};
}

// Pole voltages to synchronous-frame stator voltages: common-mode removal,
// stationary-frame projection, then rotation by theta_e.
inline QdSynchronous pole_voltages_to_synchronous(const ThreePhase& v_pole,
                                                  FrameAngle theta) {
  const ThreePhase v_ln = phase_to_line_neutral(v_pole);
  const QdStationary v_st = abc_to_qd_stationary(v_ln);
  return stationary_to_synchronous(v_st, theta);
}

}  // namespace imdrive
