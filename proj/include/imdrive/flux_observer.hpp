#pragma once

// Current-model rotor flux observer in the synchronous frame: a real-time
// simulation of the rotor circuit driven by measured stator currents and
// slip speed. Open loop (no measurement correction term). Flux state is
// stored in V s; the rotor time constant is recomputed from the live
// resistance value on every evaluation.

#include <string>

#include "imdrive/errors.hpp"

namespace imdrive {

struct ObserverState {
  double lambda_dr_hat{};  // estimated d-axis rotor flux, V s
  double lambda_qr_hat{};  // estimated q-axis rotor flux, V s
  double Rr_hat{};         // rotor resistance in effect, ohm
};

struct ObserverParams {
  double Lm{};  // magnetizing inductance, H
  double Lr{};  // rotor self inductance, H (Lm + Llr)
};

struct ObserverDerivatives {
  double d_lambda_dr{}, d_lambda_qr{};
};

struct RotorFlux {
  double lambda_dr{}, lambda_qr{};
};

// d(lam_dr)/dt = Lm/Tr ids - lam_dr/Tr + wsl lam_qr
// d(lam_qr)/dt = Lm/Tr iqs - lam_qr/Tr - wsl lam_dr,  Tr = Lr/Rr
inline ObserverDerivatives observer_derivatives(const ObserverState& s,
                                                double ids, double iqs,
                                                double omega_sl,
                                                const ObserverParams& p) {
  if (!(s.Rr_hat > 0.0))
    throw ConfigError("observer: Rr_hat must be positive, got " +
                      std::to_string(s.Rr_hat));
  const double inv_tr = s.Rr_hat / p.Lr;
  return {inv_tr * (p.Lm * ids - s.lambda_dr_hat) + omega_sl * s.lambda_qr_hat,
          inv_tr * (p.Lm * iqs - s.lambda_qr_hat) - omega_sl * s.lambda_dr_hat};
}

// Unique fixed point of the observer for constant inputs: the 2x2 system
// [[-1/Tr, wsl], [-wsl, -1/Tr]] lam = -(Lm/Tr) i has determinant
// 1/Tr^2 + wsl^2 > 0, so the solve never degenerates.
inline RotorFlux steady_state(double ids, double iqs, double omega_sl,
                              const ObserverParams& p, double Rr) {
  if (!(Rr > 0.0))
    throw ConfigError("observer: Rr must be positive, got " +
                      std::to_string(Rr));
  const double a = Rr / p.Lr;  // 1/Tr
  const double det = a * a + omega_sl * omega_sl;
  return {a * p.Lm * (a * ids + omega_sl * iqs) / det,
          a * p.Lm * (a * iqs - omega_sl * ids) / det};
}

}  // namespace imdrive
