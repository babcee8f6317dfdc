#pragma once

// Induction machine dynamics in flux-linkage-per-second form (the Krause
// model). State variables Fij are flux linkages multiplied by the base
// electrical frequency, so they carry volt units; currents and torque are
// algebraic outputs of the state. The model is frame-agnostic: the caller
// chooses the reference frame through the omega_e input (0 for stationary).

#include <cmath>
#include <numbers>
#include <string>

#include "imdrive/errors.hpp"

namespace imdrive {

inline constexpr double kBaseOmega = 2.0 * std::numbers::pi * 60.0;

struct MotorParams {
  double Rs{0.6};                     // stator resistance, ohm
  double Rr{0.412};                   // rotor resistance (stator-referred), ohm
  double Xls{kBaseOmega * 0.0019};    // stator leakage reactance, ohm
  double Xlr{kBaseOmega * 0.0019};    // rotor leakage reactance, ohm
  double Xm{kBaseOmega * 0.034};      // magnetizing reactance, ohm
  int p{6};                           // pole count
  double J{3.0};                      // rotor inertia, kg m^2
  double omega_b{kBaseOmega};         // base electrical frequency, rad/s
  double Vd{260.0};                   // DC bus voltage, V (hysteresis mode)

  // Parallel combination of the three reactance branches; appears in the
  // magnetizing flux expressions.
  double xml_star() const { return 1.0 / (1.0 / Xm + 1.0 / Xls + 1.0 / Xlr); }

  double pole_pairs() const { return 0.5 * static_cast<double>(p); }
  double Lls() const { return Xls / omega_b; }
  double Llr() const { return Xlr / omega_b; }
  double Lm() const { return Xm / omega_b; }
  double Lr() const { return Lm() + Llr(); }
  double Ls() const { return Lm() + Lls(); }

  void validate() const {
    if (!(Rs > 0.0) || !(Rr > 0.0))
      throw ConfigError("motor: resistances must be positive");
    if (!(Xls > 0.0) || !(Xlr > 0.0) || !(Xm > 0.0))
      throw ConfigError("motor: reactances must be positive");
    if (p < 2 || p % 2 != 0)
      throw ConfigError("motor: pole count must be even and >= 2, got " +
                        std::to_string(p));
    if (!(J > 0.0)) throw ConfigError("motor: inertia must be positive");
    if (!(omega_b > 0.0))
      throw ConfigError("motor: base frequency must be positive");
  }
};

// Flux linkages per second (V) plus rotor electrical speed (rad/s).
struct MotorState {
  double Fqs{}, Fds{}, Fqr{}, Fdr{};
  double omega_r{};
};

struct MotorInputs {
  double vqs{}, vds{};     // stator voltages in the simulation frame
  double vqr{}, vdr{};     // rotor voltages; zero for a squirrel cage
  double omega_e{};        // frame electrical speed, rad/s
  double TL{};             // load torque, N m
};

struct MotorOutputs {
  double iqs{}, ids{}, iqr{}, idr{};
  double Fmq{}, Fmd{};
  double Te{};
};

struct MagnetizingFlux {
  double Fmq{}, Fmd{};
};

struct FluxDerivatives {
  double dFqs{}, dFds{}, dFqr{}, dFdr{};
};

// Fm = xml* (Fs/Xls + Fr/Xlr) per axis.
inline MagnetizingFlux magnetizing_flux(const MotorState& s,
                                        const MotorParams& p) {
  const double xml = p.xml_star();
  return {xml * (s.Fqs / p.Xls + s.Fqr / p.Xlr),
          xml * (s.Fds / p.Xls + s.Fdr / p.Xlr)};
}

struct Currents {
  double iqs{}, ids{}, iqr{}, idr{};
};

// Winding currents from leakage flux: i = (F - Fm)/Xl per winding.
inline Currents currents_from_flux(const MotorState& s, const MotorParams& p) {
  const MagnetizingFlux m = magnetizing_flux(s, p);
  return {(s.Fqs - m.Fmq) / p.Xls, (s.Fds - m.Fmd) / p.Xls,
          (s.Fqr - m.Fmq) / p.Xlr, (s.Fdr - m.Fmd) / p.Xlr};
}

// Te = (3/2)(p/2)(1/wb)(Fds iqs - Fqs ids)
inline double torque(const MotorState& s, double iqs, double ids,
                     const MotorParams& p) {
  return 1.5 * p.pole_pairs() / p.omega_b * (s.Fds * iqs - s.Fqs * ids);
}

// d(omega_r)/dt = (p/2)(Te - TL)/J, electrical rad/s^2.
inline double mechanical_acceleration(double Te, double TL,
                                      const MotorParams& p) {
  return p.pole_pairs() * (Te - TL) / p.J;
}

// Voltage-fed flux dynamics. Both stator and rotor use the dissipative
// coupling (Fm - F); cross-axis terms carry the frame speed (stator) and
// slip speed (rotor).
inline FluxDerivatives flux_derivatives(const MotorState& s,
                                        const MotorInputs& in,
                                        const MotorParams& p) {
  const MagnetizingFlux m = magnetizing_flux(s, p);
  const double wb = p.omega_b;
  const double wsl = in.omega_e - s.omega_r;
  return {
      wb * (in.vqs - in.omega_e / wb * s.Fds + p.Rs / p.Xls * (m.Fmq - s.Fqs)),
      wb * (in.vds + in.omega_e / wb * s.Fqs + p.Rs / p.Xls * (m.Fmd - s.Fds)),
      wb * (in.vqr - wsl / wb * s.Fdr + p.Rr / p.Xlr * (m.Fmq - s.Fqr)),
      wb * (in.vdr + wsl / wb * s.Fqr + p.Rr / p.Xlr * (m.Fmd - s.Fdr)),
  };
}

// --- Current-fed (stator currents imposed) form -----------------------------
//
// With the stator currents forced by an ideal regulator, the stator flux
// states become algebraic functions of (iqs, ids, Fqr, Fdr) and only the
// rotor fluxes remain dynamic. Eliminating the stator states from the
// magnetizing flux gives Fm = Xm/(Xm + Xlr) (Xlr is + Fr) per axis.

inline MagnetizingFlux magnetizing_flux_current_fed(double iqs, double ids,
                                                    double Fqr, double Fdr,
                                                    const MotorParams& p) {
  const double k = p.Xm / (p.Xm + p.Xlr);
  return {k * (p.Xlr * iqs + Fqr), k * (p.Xlr * ids + Fdr)};
}

struct StatorFlux {
  double Fqs{}, Fds{};
};

inline StatorFlux stator_flux_from_currents(double iqs, double ids, double Fqr,
                                            double Fdr, const MotorParams& p) {
  const MagnetizingFlux m = magnetizing_flux_current_fed(iqs, ids, Fqr, Fdr, p);
  return {p.Xls * iqs + m.Fmq, p.Xls * ids + m.Fmd};
}

struct RotorFluxDerivatives {
  double dFqr{}, dFdr{};
};

// Rotor flux dynamics with imposed stator currents; identical to the full
// rotor equations after substituting the algebraic magnetizing flux.
inline RotorFluxDerivatives rotor_flux_derivatives_current_fed(
    double Fqr, double Fdr, double iqs, double ids, double omega_e,
    double omega_r, const MotorParams& p) {
  const MagnetizingFlux m = magnetizing_flux_current_fed(iqs, ids, Fqr, Fdr, p);
  const double wb = p.omega_b;
  const double wsl = omega_e - omega_r;
  return {wb * (-wsl / wb * Fdr + p.Rr / p.Xlr * (m.Fmq - Fqr)),
          wb * (wsl / wb * Fqr + p.Rr / p.Xlr * (m.Fmd - Fdr))};
}

// Full algebraic output set for a given state.
inline MotorOutputs motor_outputs(const MotorState& s, const MotorParams& p) {
  const MagnetizingFlux m = magnetizing_flux(s, p);
  const Currents c = currents_from_flux(s, p);
  return {c.iqs, c.ids, c.iqr, c.idr, m.Fmq, m.Fmd, torque(s, c.iqs, c.ids, p)};
}

}  // namespace imdrive
