#pragma once

// Fixed-step explicit integration over small fixed-size state vectors.
// Deterministic: identical inputs give bit-identical trajectories.

#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include "imdrive/errors.hpp"

namespace imdrive {

enum class Method { euler, rk4 };

struct IntegratorConfig {
  double h{5e-5};  // step size, s
  Method method{Method::rk4};
};

namespace detail {

template <std::size_t N>
void check_finite(const std::array<double, N>& dx, double t) {
  for (std::size_t i = 0; i < N; ++i) {
    if (!std::isfinite(dx[i]))
      throw SimulationError("non-finite derivative at t=" + std::to_string(t) +
                            ", component " + std::to_string(i));
  }
}

}  // namespace detail

// One explicit step of x' = f(t, x). f fills its third argument with the
// derivative. Throws SimulationError if any stage produces a non-finite
// derivative.
template <std::size_t N, typename F>
std::array<double, N> step(const std::array<double, N>& x, F&& f, double t,
                           const IntegratorConfig& cfg) {
  if (!(cfg.h > 0.0)) throw ConfigError("integrator: step size must be > 0");
  const double h = cfg.h;
  std::array<double, N> k1{}, k2{}, k3{}, k4{}, xt{}, out{};

  f(t, x, k1);
  detail::check_finite<N>(k1, t);

  if (cfg.method == Method::euler) {
    for (std::size_t i = 0; i < N; ++i) out[i] = x[i] + h * k1[i];
    return out;
  }

  for (std::size_t i = 0; i < N; ++i) xt[i] = x[i] + 0.5 * h * k1[i];
  f(t + 0.5 * h, xt, k2);
  detail::check_finite<N>(k2, t);

  for (std::size_t i = 0; i < N; ++i) xt[i] = x[i] + 0.5 * h * k2[i];
  f(t + 0.5 * h, xt, k3);
  detail::check_finite<N>(k3, t);

  for (std::size_t i = 0; i < N; ++i) xt[i] = x[i] + h * k3[i];
  f(t + h, xt, k4);
  detail::check_finite<N>(k4, t);

  for (std::size_t i = 0; i < N; ++i)
    out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

}  // namespace imdrive
