#pragma once

// MRAS rotor-resistance adaptation: the reference condition is zero q-axis
// rotor flux; the deviation of the observed q-axis flux from zero drives a
// discrete PI update of the resistance estimate. The processed error is
// sign-adjusted by the torque direction, since the sensitivity of the q-axis
// flux to a resistance mismatch reverses with the sign of iqs. Around zero
// torque the q-axis flux carries no resistance information, so the estimate
// is held inside a current dead-band and until the d-axis flux is
// established.

#include <algorithm>
#include <cmath>

#include "imdrive/errors.hpp"
#include "imdrive/flux_observer.hpp"

namespace imdrive {

struct AdaptationGains {
  // Note the default signs: raising the resistance estimate raises the
  // commanded slip, which lowers the q-axis flux for positive torque, so the
  // loop gain from estimate to processed error is positive and the
  // correcting gains must be negative.
  double Kp{-5e-4};     // ohm per V s of processed flux error
  double Ki{-1.0};      // ohm per V s per s
  double T{5e-5};       // adaptation sampling period, s
  double Rr_min{0.05};  // clamp, ohm
  double Rr_max{2.0};   // clamp, ohm

  void validate() const {
    if (!(T > 0.0)) throw ConfigError("gains: T must be positive");
    if (!(Rr_min > 0.0)) throw ConfigError("gains: Rr_min must be positive");
    if (!(Rr_min < Rr_max)) throw ConfigError("gains: Rr_min must be < Rr_max");
  }
};

struct AdaptationState {
  double Rr_hat{};        // current estimate, ohm
  double epsilon_prev{};  // last processed error, V s
  bool enabled{false};
};

// epsilon = lambda_qr_ref - lambda_qr_hat with the reference fixed at zero.
inline double flux_error(double lambda_qr_hat) { return -lambda_qr_hat; }

// Rr(k) = clamp(Rr(k-1) + Kp e + Ki e T) with e = torque_sign * epsilon.
// velocity_form replaces the Kp term by Kp (e(k) - e(k-1)). A zero
// torque_sign holds the estimate.
inline AdaptationState pi_update(const AdaptationState& s, double epsilon,
                                 const AdaptationGains& g, int torque_sign,
                                 bool velocity_form = false) {
  if (torque_sign == 0) return s;
  AdaptationState out = s;
  const double e = static_cast<double>(torque_sign) * epsilon;
  const double kp_term = velocity_form ? g.Kp * (e - s.epsilon_prev) : g.Kp * e;
  const double rr = s.Rr_hat + kp_term + g.Ki * e * g.T;
  out.Rr_hat = std::clamp(rr, g.Rr_min, g.Rr_max);
  out.epsilon_prev = e;
  return out;
}

struct AdaptationResult {
  AdaptationState state;
  double rr_for_observer{};  // resistance the adjustable model uses next
};

// One adaptation period: form the flux error from the observed q-axis flux,
// gate it on the operating point, and run the PI update. iqs_deadband and
// lambda_dr_gate are the hold thresholds (amperes, V s).
inline AdaptationResult adaptation_step(const ObserverState& obs,
                                        const AdaptationState& adapt,
                                        double iqs, double iqs_deadband,
                                        double lambda_dr_gate,
                                        const AdaptationGains& g,
                                        bool velocity_form = false) {
  if (!adapt.enabled) return {adapt, adapt.Rr_hat};
  const bool hold = std::abs(iqs) < iqs_deadband ||
                    std::abs(obs.lambda_dr_hat) < lambda_dr_gate;
  if (hold) return {adapt, adapt.Rr_hat};
  const int torque_sign = iqs > 0.0 ? 1 : -1;
  const double eps = flux_error(obs.lambda_qr_hat);
  AdaptationState next = pi_update(adapt, eps, g, torque_sign, velocity_form);
  return {next, next.Rr_hat};
}

}  // namespace imdrive
