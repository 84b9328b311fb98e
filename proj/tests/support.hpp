#pragma once

// Shared test utilities: seeded random instances and an independent RK4
// integrator used as the oracle against the exact-exponential propagation.

#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "gateforge/experiments.hpp"
#include "gateforge/model.hpp"

namespace testsupport {

using gateforge::complexd;
using gateforge::ControlField;
using gateforge::SystemModel;
using gateforge::TargetGate;
using gateforge::TimeGrid;

inline double u01(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

inline complexd gauss_pair(std::mt19937_64& rng) {
  // Box-Muller; both components standard normal.
  const double r = std::sqrt(-2.0 * std::log(u01(rng) + 1e-300));
  const double a = 2.0 * std::numbers::pi * u01(rng);
  return complexd(r * std::cos(a), r * std::sin(a));
}

inline Eigen::MatrixXcd random_unitary(int n, std::mt19937_64& rng) {
  Eigen::MatrixXcd g(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) g(a, b) = gauss_pair(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(n, n);
  const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int c = 0; c < n; ++c) {
    const complexd d = r(c, c);
    q.col(c) *= d / std::abs(d);
  }
  return q;
}

inline SystemModel random_model(int levels, int relevant,
                                std::mt19937_64& rng) {
  SystemModel model;
  model.levels = levels;
  model.relevant_dim = relevant;
  model.energies.resize(levels);
  double e = 0.0;
  for (int k = 0; k < levels; ++k) {
    model.energies[k] = e;
    e += 0.5 + u01(rng);
  }
  model.dipole = Eigen::MatrixXcd::Zero(levels, levels);
  for (int a = 0; a < levels; ++a) {
    for (int b = a + 1; b < levels; ++b) {
      const complexd v = gauss_pair(rng) / std::sqrt(static_cast<double>(levels));
      model.dipole(a, b) = v;
      model.dipole(b, a) = std::conj(v);
    }
  }
  return model;
}

struct RandomInstance {
  SystemModel model;
  TargetGate target;
  TimeGrid grid;
  ControlField field;
};

inline RandomInstance random_instance(unsigned seed, int max_levels = 8) {
  std::mt19937_64 rng(seed);
  const int levels = 2 + static_cast<int>(u01(rng) * (max_levels - 1));
  const int relevant = 1 + static_cast<int>(u01(rng) * levels);
  SystemModel model = random_model(levels, std::min(relevant, levels), rng);
  TargetGate target{random_unitary(model.relevant_dim, rng)};
  TimeGrid grid(1.0 + 3.0 * u01(rng), 40 + static_cast<int>(80 * u01(rng)));
  ControlField field =
      gateforge::seeded_probe_field(grid, 0.1 + 0.5 * u01(rng), seed + 1);
  return RandomInstance{std::move(model), std::move(target), grid,
                        std::move(field)};
}

// Fourth-order Runge-Kutta on dU/dt = -i H(t) U with a continuous field;
// deliberately a different integration scheme from the library path.
template <typename FieldFn>
Eigen::MatrixXcd rk4_unitary(const SystemModel& model, FieldFn&& eps,
                             double horizon, int steps) {
  const int m = model.levels;
  const complexd minus_i(0.0, -1.0);
  auto h_at = [&](double t) -> Eigen::MatrixXcd {
    Eigen::MatrixXcd h = (-eps(t)) * model.dipole;
    h += model.energies.asDiagonal();
    return minus_i * h;
  };
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(m, m);
  const double dt = horizon / steps;
  for (int j = 0; j < steps; ++j) {
    const double t = j * dt;
    const Eigen::MatrixXcd k1 = h_at(t) * u;
    const Eigen::MatrixXcd k2 = h_at(t + 0.5 * dt) * (u + 0.5 * dt * k1);
    const Eigen::MatrixXcd k3 = h_at(t + 0.5 * dt) * (u + 0.5 * dt * k2);
    const Eigen::MatrixXcd k4 = h_at(t + dt) * (u + dt * k3);
    u += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return u;
}

inline std::filesystem::path fresh_temp_dir(const std::string& stem) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   (stem + "_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testsupport
