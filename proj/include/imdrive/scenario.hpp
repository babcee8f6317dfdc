#pragma once

// Scenario definitions: everything a closed-loop run needs, the built-in
// experiment set, and the flat key-value config file format (dotted section
// paths, one `key = value` per line, `#` comments, schema_version 1).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "imdrive/errors.hpp"
#include "imdrive/integrator.hpp"
#include "imdrive/ifoc.hpp"
#include "imdrive/motor_model.hpp"
#include "imdrive/mras.hpp"

namespace imdrive {

struct ProfileStep {
  double t{};      // s
  double value{};  // rpm or N m
  bool operator==(const ProfileStep&) const = default;
};

// Piecewise-constant lookup: value of the latest step at or before t, zero
// before the first step.
inline double profile_value(const std::vector<ProfileStep>& profile,
                            double t) {
  double v = 0.0;
  for (const auto& s : profile) {
    if (s.t > t) break;
    v = s.value;
  }
  return v;
}

struct SpeedPiConfig {
  double Kp{35.0};
  double Ki{520.0};
  double iqs_max{80.0};
  bool operator==(const SpeedPiConfig&) const = default;
};

struct RegulationConfig {
  RegulationMode mode{RegulationMode::ideal};
  double band{2.0};  // hysteresis band, A
  bool operator==(const RegulationConfig&) const = default;
};

struct ScenarioConfig {
  std::string name{"custom"};
  MotorParams motor{};
  double true_Rr{0.412};  // plant rotor resistance for the run, ohm
  double cmd_Rr{0.412};   // controller/observer initial resistance, ohm
  bool adaptation_enabled{false};
  AdaptationGains gains{};
  bool adaptation_velocity_form{false};
  double iqs_deadband_frac{0.02};  // fraction of rated ids
  double flux_gate_frac{0.5};      // fraction of commanded d-axis flux
  SpeedPiConfig speed_pi{};
  double rated_flux{0.408};        // commanded d-axis rotor flux, V s
  double magnetization_time{0.1};  // ids ramp duration, s
  std::vector<ProfileStep> speed_profile{{0.1, 250.0}};  // (s, rpm)
  std::vector<ProfileStep> load_profile{{1.0, 10.0}};    // (s, N m)
  double duration{4.0};
  IntegratorConfig integrator{};
  RegulationConfig regulation{};
  int output_decimation{20};
  std::string output;  // CSV path; empty means "<name>.csv"

  double ids_rated() const { return rated_flux / motor.Lm(); }

  std::string output_file() const {
    return output.empty() ? name + ".csv" : output;
  }

  void validate() const;
};

// Explicit fixed stepping is only stable if the step resolves the fastest
// leakage time constants; the bound below is a conservative fifth of the
// smaller of Lls/Rs and Llr/Rr (with Rr at its largest reachable value),
// and the step must also stay under one base-frequency radian.
inline double max_stable_step(const ScenarioConfig& c) {
  const double rr_upper = c.adaptation_enabled
                              ? c.gains.Rr_max
                              : std::max(c.true_Rr, c.cmd_Rr);
  const double tau = std::min(c.motor.Lls() / c.motor.Rs,
                              c.motor.Llr() / rr_upper);
  return std::min(0.2 * tau, 1.0 / c.motor.omega_b);
}

inline void ScenarioConfig::validate() const {
  motor.validate();
  gains.validate();
  if (name.empty()) throw ConfigError("scenario: name must not be empty");
  if (!(duration > 0.0)) throw ConfigError("scenario: duration must be > 0");
  if (!(true_Rr > 0.0)) throw ConfigError("scenario: true_Rr must be > 0");
  if (cmd_Rr < gains.Rr_min || cmd_Rr > gains.Rr_max)
    throw ConfigError("scenario: cmd_Rr outside adaptation clamps");
  if (!(rated_flux > 0.0))
    throw ConfigError("scenario: rated_flux must be > 0");
  if (magnetization_time < 0.0)
    throw ConfigError("scenario: magnetization_time must be >= 0");
  if (output_decimation < 1)
    throw ConfigError("scenario: output_decimation must be >= 1");
  if (!(speed_pi.iqs_max > 0.0))
    throw ConfigError("scenario: speed_pi.iqs_max must be > 0");
  if (regulation.mode == RegulationMode::hysteresis && !(regulation.band > 0.0))
    throw ConfigError("scenario: regulation.band must be > 0");
  if (!(integrator.h > 0.0))
    throw ConfigError("scenario: integrator.h must be > 0");
  if (integrator.h > max_stable_step(*this)) {
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "scenario: integrator.h=%g exceeds the stability bound %g",
                  integrator.h, max_stable_step(*this));
    throw ConfigError(buf);
  }
  if (!(gains.T / integrator.h > 0.999) ||
      std::abs(gains.T / integrator.h - std::round(gains.T / integrator.h)) >
          1e-9)
    throw ConfigError(
        "scenario: gains.T must be a positive integer multiple of "
        "integrator.h");
  for (const auto* profile : {&speed_profile, &load_profile}) {
    for (std::size_t i = 0; i < profile->size(); ++i) {
      if ((*profile)[i].t < 0.0)
        throw ConfigError("scenario: profile times must be >= 0");
      if (i > 0 && (*profile)[i].t <= (*profile)[i - 1].t)
        throw ConfigError("scenario: profile times must be strictly "
                          "increasing");
    }
  }
}

// The three detuning/adaptation experiments plus the tuned baseline. All
// four share the same machine, profiles and controller gains; they differ
// only in the commanded rotor resistance and the adaptation switch.
inline std::vector<ScenarioConfig> builtin_scenarios() {
  ScenarioConfig base;
  base.true_Rr = 0.412;

  ScenarioConfig tuned = base;
  tuned.name = "tuned";
  tuned.cmd_Rr = 0.412;

  ScenarioConfig half = base;
  half.name = "half";
  half.cmd_Rr = 0.206;

  ScenarioConfig quarter = base;
  quarter.name = "quarter";
  quarter.cmd_Rr = 0.103;

  ScenarioConfig adapt = base;
  adapt.name = "adapt-quarter";
  adapt.cmd_Rr = 0.103;
  adapt.adaptation_enabled = true;

  return {tuned, half, quarter, adapt};
}

inline const ScenarioConfig* find_builtin(const std::vector<ScenarioConfig>& v,
                                          const std::string& name) {
  for (const auto& s : v)
    if (s.name == name) return &s;
  return nullptr;
}

// --- Config file format ------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": '" + v + "'");
  }
  if (pos != v.size())
    throw ConfigError("config: bad number for " + key + ": '" + v + "'");
  return x;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: bad bool for " + key + ": '" + v + "'");
}

inline std::vector<ProfileStep> parse_profile(const std::string& key,
                                              const std::string& v) {
  std::vector<ProfileStep> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw ConfigError("config: " + key + " entries must be time:value, got '"
                        + item + "'");
    out.push_back({parse_double(key, trim(item.substr(0, colon))),
                   parse_double(key, trim(item.substr(colon + 1)))});
  }
  return out;
}

inline std::string format_profile(const std::vector<ProfileStep>& p) {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < p.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s%.9g:%.9g", i ? ", " : "", p[i].t,
                  p[i].value);
    out += buf;
  }
  return out;
}

}  // namespace detail

// Assigns one config key. Shared by the file parser and the sweep command.
inline void set_config_key(ScenarioConfig& c, const std::string& key,
                           const std::string& value) {
  using detail::parse_bool;
  using detail::parse_double;
  using detail::parse_profile;
  if (key == "schema_version") {
    if (value != "1")
      throw ConfigError("config: unsupported schema_version '" + value + "'");
  } else if (key == "name") {
    c.name = value;
  } else if (key == "output") {
    c.output = value;
  } else if (key == "true_Rr") {
    c.true_Rr = parse_double(key, value);
  } else if (key == "cmd_Rr") {
    c.cmd_Rr = parse_double(key, value);
  } else if (key == "duration") {
    c.duration = parse_double(key, value);
  } else if (key == "rated_flux") {
    c.rated_flux = parse_double(key, value);
  } else if (key == "magnetization_time") {
    c.magnetization_time = parse_double(key, value);
  } else if (key == "output_decimation") {
    c.output_decimation = static_cast<int>(parse_double(key, value));
  } else if (key == "speed_profile") {
    c.speed_profile = parse_profile(key, value);
  } else if (key == "load_profile") {
    c.load_profile = parse_profile(key, value);
  } else if (key == "motor.Rs") {
    c.motor.Rs = parse_double(key, value);
  } else if (key == "motor.Xls") {
    c.motor.Xls = parse_double(key, value);
  } else if (key == "motor.Xlr") {
    c.motor.Xlr = parse_double(key, value);
  } else if (key == "motor.Xm") {
    c.motor.Xm = parse_double(key, value);
  } else if (key == "motor.p") {
    c.motor.p = static_cast<int>(parse_double(key, value));
  } else if (key == "motor.J") {
    c.motor.J = parse_double(key, value);
  } else if (key == "motor.omega_b") {
    c.motor.omega_b = parse_double(key, value);
  } else if (key == "motor.Vd") {
    c.motor.Vd = parse_double(key, value);
  } else if (key == "gains.Kp") {
    c.gains.Kp = parse_double(key, value);
  } else if (key == "gains.Ki") {
    c.gains.Ki = parse_double(key, value);
  } else if (key == "gains.T") {
    c.gains.T = parse_double(key, value);
  } else if (key == "gains.Rr_min") {
    c.gains.Rr_min = parse_double(key, value);
  } else if (key == "gains.Rr_max") {
    c.gains.Rr_max = parse_double(key, value);
  } else if (key == "adaptation.enabled") {
    c.adaptation_enabled = parse_bool(key, value);
  } else if (key == "adaptation.velocity_form") {
    c.adaptation_velocity_form = parse_bool(key, value);
  } else if (key == "adaptation.iqs_deadband_frac") {
    c.iqs_deadband_frac = parse_double(key, value);
  } else if (key == "adaptation.flux_gate_frac") {
    c.flux_gate_frac = parse_double(key, value);
  } else if (key == "speed_pi.Kp") {
    c.speed_pi.Kp = parse_double(key, value);
  } else if (key == "speed_pi.Ki") {
    c.speed_pi.Ki = parse_double(key, value);
  } else if (key == "speed_pi.iqs_max") {
    c.speed_pi.iqs_max = parse_double(key, value);
  } else if (key == "integrator.h") {
    c.integrator.h = parse_double(key, value);
  } else if (key == "integrator.method") {
    if (value == "euler")
      c.integrator.method = Method::euler;
    else if (value == "rk4")
      c.integrator.method = Method::rk4;
    else
      throw ConfigError("config: integrator.method must be euler or rk4");
  } else if (key == "regulation.mode") {
    if (value == "ideal")
      c.regulation.mode = RegulationMode::ideal;
    else if (value == "hysteresis")
      c.regulation.mode = RegulationMode::hysteresis;
    else
      throw ConfigError("config: regulation.mode must be ideal or hysteresis");
  } else if (key == "regulation.band") {
    c.regulation.band = parse_double(key, value);
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

// Parses the flat key-value format. Starts from defaults; requires
// schema_version before any other key.
inline ScenarioConfig parse_config(const std::string& text) {
  ScenarioConfig c;
  bool versioned = false;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) +
                        " is not 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (!versioned && key != "schema_version")
      throw ConfigError("config: schema_version must come first");
    if (key == "schema_version") versioned = true;
    set_config_key(c, key, value);
  }
  if (!versioned) throw ConfigError("config: missing schema_version");
  return c;
}

// Canonical serialization; parse_config(serialize_config(c)) reproduces c.
inline std::string serialize_config(const ScenarioConfig& c) {
  char buf[256];
  std::string out;
  auto kv = [&](const char* key, const char* fmt, auto value) {
    std::snprintf(buf, sizeof(buf), "%s = ", key);
    out += buf;
    std::snprintf(buf, sizeof(buf), fmt, value);
    out += buf;
    out += "\n";
  };
  out += "schema_version = 1\n";
  kv("name", "%s", c.name.c_str());
  if (!c.output.empty()) kv("output", "%s", c.output.c_str());
  kv("true_Rr", "%.9g", c.true_Rr);
  kv("cmd_Rr", "%.9g", c.cmd_Rr);
  kv("duration", "%.9g", c.duration);
  kv("rated_flux", "%.9g", c.rated_flux);
  kv("magnetization_time", "%.9g", c.magnetization_time);
  kv("output_decimation", "%d", c.output_decimation);
  out += "speed_profile = " + detail::format_profile(c.speed_profile) + "\n";
  out += "load_profile = " + detail::format_profile(c.load_profile) + "\n";
  kv("motor.Rs", "%.9g", c.motor.Rs);
  kv("motor.Xls", "%.9g", c.motor.Xls);
  kv("motor.Xlr", "%.9g", c.motor.Xlr);
  kv("motor.Xm", "%.9g", c.motor.Xm);
  kv("motor.p", "%d", c.motor.p);
  kv("motor.J", "%.9g", c.motor.J);
  kv("motor.omega_b", "%.9g", c.motor.omega_b);
  kv("motor.Vd", "%.9g", c.motor.Vd);
  kv("gains.Kp", "%.9g", c.gains.Kp);
  kv("gains.Ki", "%.9g", c.gains.Ki);
  kv("gains.T", "%.9g", c.gains.T);
  kv("gains.Rr_min", "%.9g", c.gains.Rr_min);
  kv("gains.Rr_max", "%.9g", c.gains.Rr_max);
  kv("adaptation.enabled", "%s", c.adaptation_enabled ? "true" : "false");
  kv("adaptation.velocity_form", "%s",
     c.adaptation_velocity_form ? "true" : "false");
  kv("adaptation.iqs_deadband_frac", "%.9g", c.iqs_deadband_frac);
  kv("adaptation.flux_gate_frac", "%.9g", c.flux_gate_frac);
  kv("speed_pi.Kp", "%.9g", c.speed_pi.Kp);
  kv("speed_pi.Ki", "%.9g", c.speed_pi.Ki);
  kv("speed_pi.iqs_max", "%.9g", c.speed_pi.iqs_max);
  kv("integrator.h", "%.9g", c.integrator.h);
  kv("integrator.method", "%s",
     c.integrator.method == Method::rk4 ? "rk4" : "euler");
  kv("regulation.mode", "%s",
     c.regulation.mode == RegulationMode::ideal ? "ideal" : "hysteresis");
  kv("regulation.band", "%.9g", c.regulation.band);
  return out;
}

}  // namespace imdrive
