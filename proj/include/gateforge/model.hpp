#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gateforge {

using complexd = std::complex<double>;

// Units: hbar = 1 throughout; energies, times and field amplitudes are in
// mutually consistent reduced units.

// An M-level system with free Hamiltonian diag(energies) and a Hermitian,
// zero-diagonal coupling operator `dipole`. The gate lives on the first
// `relevant_dim` levels.
struct SystemModel {
  int levels = 0;         // M
  int relevant_dim = 0;   // N <= M
  Eigen::VectorXd energies;   // size M, eigenbasis ordering
  Eigen::MatrixXcd dipole;    // M x M

  Eigen::MatrixXd free_hamiltonian() const { return energies.asDiagonal(); }
};

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty(); }
};

// Checks every structural invariant (dimensions, Hermiticity, zero dipole
// diagonal, finiteness). Unsorted energies produce a warning, not an error.
ValidationReport validate_model(const SystemModel& model);

// The N x N unitary block to be enforced on the relevant subspace. The
// complement block of the full-space transformation is arbitrary by
// construction and never materialized.
struct TargetGate {
  Eigen::MatrixXcd block;   // N x N

  int dim() const { return static_cast<int>(block.rows()); }
  // Columns of the target acting on the first N basis states, zero-padded
  // to the full system dimension.
  Eigen::MatrixXcd padded_columns(int levels) const;
};

bool is_unitary(const Eigen::MatrixXcd& m, double tol = 1e-12);

// Uniform grid on [0, horizon]: n intervals, field sample j applies on
// interval j with nominal time at the interval midpoint.
struct TimeGrid {
  TimeGrid(double horizon_, int steps_);

  double horizon;
  int steps;

  double dt() const { return horizon / steps; }
  double node_time(int node) const { return node * dt(); }
  double midpoint_time(int interval) const { return (interval + 0.5) * dt(); }
};

// Real piecewise-constant field samples, one per grid interval.
struct ControlField {
  std::vector<double> samples;

  static ControlField zero(const TimeGrid& grid) {
    return ControlField{std::vector<double>(grid.steps, 0.0)};
  }
  bool finite() const;
  // Time-integrated squared amplitude sum_j eps_j^2 * dt.
  double fluence(const TimeGrid& grid) const;
};

enum class BasisMode { orthonormal, phase_corrected };

// The N initial states spanning the relevant subspace. Orthonormal mode is
// the canonical basis |1>..|N>. Phase-corrected mode keeps |1>..|N-1> and
// replaces the last state with the uniform superposition over the first N
// levels, which makes the state-to-state objective sensitive to relative
// phases of the target.
struct InitialBasis {
  BasisMode mode;
  Eigen::MatrixXcd states;   // M x N, column l = initial state l
};

InitialBasis build_initial_basis(BasisMode mode, int relevant_dim, int levels);

// (sum_k E_k) * T / M, the global-phase contribution from the arbitrary
// energy origin. Unwrapped value; linear in T.
double spectrum_phase_raw(const SystemModel& model, double horizon);

// Same, reduced to (-pi, pi] for reporting.
double spectrum_phase(const SystemModel& model, double horizon);

// Wraps an angle to (-pi, pi].
double wrap_angle(double angle);

}  // namespace gateforge
