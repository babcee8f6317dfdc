#pragma once

// Closed-loop drive simulation: machine, IFO controller, rotor flux
// observer and resistance adaptation advanced together on a fixed step.
// The controller, regulation stage and adaptation execute once per step
// (zero-order hold over the step); the continuous states integrate with the
// configured explicit method.
//
// Current regulation modes:
//  - ideal: the commanded synchronous currents are imposed on the machine
//    directly; only the rotor fluxes and the shaft remain dynamic and the
//    stator states are reconstructed algebraically.
//  - hysteresis: per-phase bang-bang comparators switch the DC bus onto the
//    machine; the full voltage-fed flux model is integrated.
//
// The observer instance in the loop carries the machine-side rotor
// resistance: driven by the measured currents and slip it tracks the
// machine's actual rotor flux, which is the quantity the adaptation
// compares against the zero q-axis reference. The adapted estimate closes
// the loop through the slip command, so field orientation is restored
// exactly when the estimate reaches the machine's value.

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "imdrive/errors.hpp"
#include "imdrive/flux_observer.hpp"
#include "imdrive/ifoc.hpp"
#include "imdrive/integrator.hpp"
#include "imdrive/motor_model.hpp"
#include "imdrive/mras.hpp"
#include "imdrive/scenario.hpp"
#include "imdrive/transforms.hpp"

namespace imdrive {

struct Sample {
  double t{};
  double ia_ref{}, ib_ref{}, ic_ref{};
  double ia{}, ib{}, ic{};
  double ids{}, iqs{};                        // measured synchronous currents
  double rr_hat{};                            // adapted resistance estimate
  double fqs{}, fds{};                        // stator flux / s, V
  double lambda_dr_hat{}, lambda_qr_hat{};    // observed rotor flux, V s
  double omega_r_rpm{};                       // mechanical shaft speed
  double te{};                                // electromagnetic torque, N m
};

struct RunSummary {
  double final_rr_hat{};
  std::optional<double> rr_settling_time;  // +-5% band around the true value
  double steady_lambda_qr_ratio{};         // |lam_qr|/|lam_dr|, last 10%
  std::optional<double> speed_rise_time;   // to 90% of the target speed
  double max_speed_overshoot_pct{};
};

inline double rpm_to_mech_rad(double rpm) {
  return rpm * 2.0 * std::numbers::pi / 60.0;
}

inline double elec_rad_to_rpm(double omega_r, const MotorParams& p) {
  return omega_r / p.pole_pairs() * 60.0 / (2.0 * std::numbers::pi);
}

// Final commanded speed; zero for an empty profile.
inline double target_rpm(const ScenarioConfig& cfg) {
  return cfg.speed_profile.empty() ? 0.0 : cfg.speed_profile.back().value;
}

class Simulation {
 public:
  explicit Simulation(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    params_ = cfg_.motor;
    params_.Rr = cfg_.true_Rr;
    obs_params_ = {params_.Lm(), params_.Lr()};
    pi_.Kp = cfg_.speed_pi.Kp;
    pi_.Ki = cfg_.speed_pi.Ki;
    pi_.iqs_max = cfg_.speed_pi.iqs_max;
    adapt_.Rr_hat = cfg_.cmd_Rr;
    adapt_.enabled = cfg_.adaptation_enabled;
    adapt_every_ =
        static_cast<long>(std::llround(cfg_.gains.T / cfg_.integrator.h));
  }

  // Advances one integration step; the logged sample for the step interval
  // is captured at its start.
  void step() {
    const double t = time();
    const double h = cfg_.integrator.h;
    const double TL = profile_value(cfg_.load_profile, t);
    const double omega_ref =
        rpm_to_mech_rad(profile_value(cfg_.speed_profile, t));
    const double ids_rated = cfg_.ids_rated();
    const double ids_ref =
        cfg_.magnetization_time > 0.0
            ? ids_rated * std::min(1.0, t / cfg_.magnetization_time)
            : ids_rated;

    const double iqs_ref = speed_loop(omega_ref, omega_r_, pi_, params_, h);

    // Measured synchronous currents: the imposed commands in ideal mode,
    // the machine windings otherwise.
    double iqs_m = iqs_ref;
    double ids_m = ids_ref;
    if (cfg_.regulation.mode == RegulationMode::hysteresis) {
      const Currents c = currents_from_flux(motor_state(), params_);
      iqs_m = c.iqs;
      ids_m = c.ids;
    }

    if (adapt_.enabled && (k_ % adapt_every_) == 0) {
      const AdaptationResult r = adaptation_step(
          observer_, adapt_, iqs_m, cfg_.iqs_deadband_frac * ids_rated,
          cfg_.flux_gate_frac * cfg_.rated_flux, cfg_.gains,
          cfg_.adaptation_velocity_form);
      adapt_ = r.state;
    }

    const double theta_pre = ifoc_.theta_e;
    slip_and_angle(iqs_ref, ids_ref, params_.Lr() / adapt_.Rr_hat, omega_r_, h,
                   ifoc_);
    const double omega_e = omega_r_ + ifoc_.omega_sl_ref;

    const ThreePhase iabc_ref =
        phase_current_commands(iqs_ref, ids_ref, {theta_pre});

    // The observer sees the frame-vs-shaft slip, sampled once per step.
    observer_.Rr_hat = params_.Rr;
    const double omega_sl_meas = omega_e - omega_r_;

    if (cfg_.regulation.mode == RegulationMode::ideal) {
      step_ideal(t, iqs_ref, ids_ref, omega_e, omega_sl_meas, TL, iabc_ref);
    } else {
      step_hysteresis(t, iqs_m, ids_m, omega_e, omega_sl_meas, TL, iabc_ref,
                      theta_pre);
    }
    check_state(t + h);
    ++k_;
  }

  double time() const { return static_cast<double>(k_) * cfg_.integrator.h; }

  void run_until(double t_stop) {
    while (time() < t_stop - 0.5 * cfg_.integrator.h) step();
  }

  const Sample& last_sample() const { return sample_; }
  const ScenarioConfig& config() const { return cfg_; }
  const ObserverState& observer() const { return observer_; }
  double adapted_rr() const { return adapt_.Rr_hat; }
  void set_adapted_rr(double rr) { adapt_.Rr_hat = rr; }
  void set_adaptation_enabled(bool on) { adapt_.enabled = on; }
  double omega_r() const { return omega_r_; }

  // Machine-side rotor flux in V s. The machine states are flux linkages
  // per second (volts); this accessor is the one place where the base
  // frequency converts between the two conventions.
  RotorFlux machine_rotor_flux() const {
    return {Fdr_ / params_.omega_b, Fqr_ / params_.omega_b};
  }

 private:
  MotorState motor_state() const {
    return {Fqs_, Fds_, Fqr_, Fdr_, omega_r_};
  }

  void step_ideal(double t, double iqs_m, double ids_m, double omega_e,
                  double omega_sl_meas, double TL,
                  const ThreePhase& iabc_ref) {
    // Stator states follow the imposed currents algebraically.
    const StatorFlux sf =
        stator_flux_from_currents(iqs_m, ids_m, Fqr_, Fdr_, params_);
    Fqs_ = sf.Fqs;
    Fds_ = sf.Fds;
    capture_sample(t, iabc_ref, iabc_ref, iqs_m, ids_m,
                   torque(motor_state(), iqs_m, ids_m, params_));

    std::array<double, 5> x{Fqr_, Fdr_, omega_r_, observer_.lambda_dr_hat,
                            observer_.lambda_qr_hat};
    const ObserverState obs0 = observer_;
    auto deriv = [&](double, const std::array<double, 5>& s,
                     std::array<double, 5>& dx) {
      const RotorFluxDerivatives rd = rotor_flux_derivatives_current_fed(
          s[0], s[1], iqs_m, ids_m, omega_e, s[2], params_);
      const StatorFlux st =
          stator_flux_from_currents(iqs_m, ids_m, s[0], s[1], params_);
      const MotorState ms{st.Fqs, st.Fds, s[0], s[1], s[2]};
      const double te = torque(ms, iqs_m, ids_m, params_);
      const ObserverDerivatives od = observer_derivatives(
          {s[3], s[4], obs0.Rr_hat}, ids_m, iqs_m, omega_sl_meas, obs_params_);
      dx = {rd.dFqr, rd.dFdr, mechanical_acceleration(te, TL, params_),
            od.d_lambda_dr, od.d_lambda_qr};
    };
    x = imdrive::step(x, deriv, t, cfg_.integrator);
    Fqr_ = x[0];
    Fdr_ = x[1];
    omega_r_ = x[2];
    observer_.lambda_dr_hat = x[3];
    observer_.lambda_qr_hat = x[4];
  }

  void step_hysteresis(double t, double iqs_m, double ids_m, double omega_e,
                       double omega_sl_meas, double TL,
                       const ThreePhase& iabc_ref, double theta_pre) {
    const QdStationary i_st =
        synchronous_to_stationary({iqs_m, ids_m}, {theta_pre});
    const ThreePhase iabc = qd_stationary_to_abc(i_st);
    const ThreePhase v_pole = hysteresis_voltages(
        iabc, iabc_ref, cfg_.regulation.band, params_.Vd, hyst_);
    const QdSynchronous v = pole_voltages_to_synchronous(v_pole, {theta_pre});

    capture_sample(t, iabc_ref, iabc,
                   iqs_m, ids_m, torque(motor_state(), iqs_m, ids_m, params_));

    std::array<double, 7> x{Fqs_, Fds_, Fqr_, Fdr_, omega_r_,
                            observer_.lambda_dr_hat, observer_.lambda_qr_hat};
    const ObserverState obs0 = observer_;
    auto deriv = [&](double, const std::array<double, 7>& s,
                     std::array<double, 7>& dx) {
      const MotorState ms{s[0], s[1], s[2], s[3], s[4]};
      const MotorInputs in{v.q, v.d, 0.0, 0.0, omega_e, TL};
      const FluxDerivatives fd = flux_derivatives(ms, in, params_);
      const Currents c = currents_from_flux(ms, params_);
      const double te = torque(ms, c.iqs, c.ids, params_);
      const ObserverDerivatives od = observer_derivatives(
          {s[5], s[6], obs0.Rr_hat}, ids_m, iqs_m, omega_sl_meas, obs_params_);
      dx = {fd.dFqs, fd.dFds, fd.dFqr, fd.dFdr,
            mechanical_acceleration(te, TL, params_), od.d_lambda_dr,
            od.d_lambda_qr};
    };
    x = imdrive::step(x, deriv, t, cfg_.integrator);
    Fqs_ = x[0];
    Fds_ = x[1];
    Fqr_ = x[2];
    Fdr_ = x[3];
    omega_r_ = x[4];
    observer_.lambda_dr_hat = x[5];
    observer_.lambda_qr_hat = x[6];
  }

  void capture_sample(double t, const ThreePhase& iabc_ref,
                      const ThreePhase& iabc, double iqs_m, double ids_m,
                      double te) {
    sample_ = {t,
               iabc_ref.a,
               iabc_ref.b,
               iabc_ref.c,
               iabc.a,
               iabc.b,
               iabc.c,
               ids_m,
               iqs_m,
               adapt_.Rr_hat,
               Fqs_,
               Fds_,
               observer_.lambda_dr_hat,
               observer_.lambda_qr_hat,
               elec_rad_to_rpm(omega_r_, params_),
               te};
  }

  void check_state(double t) const {
    const double vals[] = {Fqs_, Fds_, Fqr_,
                           Fdr_, omega_r_, observer_.lambda_dr_hat,
                           observer_.lambda_qr_hat};
    const char* names[] = {"Fqs", "Fds", "Fqr", "Fdr", "omega_r",
                           "lambda_dr_hat", "lambda_qr_hat"};
    for (int i = 0; i < 7; ++i) {
      if (!std::isfinite(vals[i]))
        throw SimulationError("non-finite state " + std::string(names[i]) +
                              " at t=" + std::to_string(t));
    }
  }

  ScenarioConfig cfg_;
  MotorParams params_;
  ObserverParams obs_params_;
  SpeedPi pi_;
  IfocState ifoc_;
  AdaptationState adapt_;
  ObserverState observer_;
  HysteresisState hyst_;
  double Fqs_{}, Fds_{}, Fqr_{}, Fdr_{}, omega_r_{};
  long k_{0};
  long adapt_every_{1};
  Sample sample_{};
};

// Metrics over a logged series. true_rr and target give the settling band
// and the speed references; they come from the config for a fresh run and
// from flags (or series-derived defaults) when recomputed from a CSV.
inline RunSummary summarize(const std::vector<Sample>& series, double true_rr,
                            double target) {
  RunSummary s;
  if (series.empty()) return s;
  s.final_rr_hat = series.back().rr_hat;

  // Settling: first sample after which rr_hat never leaves the +-5% band.
  std::size_t first_inside = series.size();
  for (std::size_t i = series.size(); i-- > 0;) {
    if (std::abs(series[i].rr_hat - true_rr) <= 0.05 * true_rr)
      first_inside = i;
    else
      break;
  }
  if (first_inside < series.size())
    s.rr_settling_time = series[first_inside].t;

  const std::size_t tail = std::max<std::size_t>(1, series.size() / 10);
  double num = 0.0, den = 0.0;
  for (std::size_t i = series.size() - tail; i < series.size(); ++i) {
    num += std::abs(series[i].lambda_qr_hat);
    den += std::abs(series[i].lambda_dr_hat);
  }
  s.steady_lambda_qr_ratio = den > 0.0 ? num / den : 0.0;

  if (target > 0.0) {
    for (const auto& row : series) {
      if (row.omega_r_rpm >= 0.9 * target) {
        s.speed_rise_time = row.t;
        break;
      }
    }
    double overshoot = 0.0;
    for (const auto& row : series)
      overshoot = std::max(overshoot, (row.omega_r_rpm - target) / target);
    s.max_speed_overshoot_pct = 100.0 * overshoot;
  }
  return s;
}

struct RunResult {
  std::vector<Sample> series;
  RunSummary summary;
};

// Full scenario run with decimated logging.
inline RunResult run(const ScenarioConfig& cfg) {
  Simulation sim(cfg);
  const long n = std::lround(cfg.duration / cfg.integrator.h);
  RunResult out;
  out.series.reserve(static_cast<std::size_t>(n / cfg.output_decimation) + 1);
  for (long k = 0; k < n; ++k) {
    const bool log = (k % cfg.output_decimation) == 0;
    sim.step();
    if (log) out.series.push_back(sim.last_sample());
  }
  out.summary = summarize(out.series, cfg.true_Rr, target_rpm(cfg));
  return out;
}

}  // namespace imdrive
