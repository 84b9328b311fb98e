#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gateforge/functionals.hpp"
#include "gateforge/model.hpp"

namespace gateforge {

enum class Approach { evolution, state_to_state };
enum class Scheme { krotov, gradient };

enum class StopReason { fidelity_reached, update_norm, max_iterations };

std::string to_string(Approach approach);
std::string to_string(Scheme scheme);
std::string to_string(StopReason reason);
std::string to_string(BasisMode mode);

// Raised when an iteration produces non-finite values; usually the penalty
// weight is too small or the gradient step too large.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OptimizerConfig {
  Approach approach = Approach::evolution;
  BasisMode basis_mode = BasisMode::phase_corrected;   // state_to_state runs
  Scheme scheme = Scheme::krotov;
  double lambda = 1.0;
  int max_iters = 200;
  double stop_fidelity = 1.0;        // |tau|/N or eta/N, per approach
  double stop_update_norm = 0.0;     // sum_j deps_j^2 dt
  double gradient_step = 0.5;        // gradient scheme only
  std::optional<ControlField> initial_field;   // default guess when absent
  unsigned rng_seed = 0;
};

struct IterationRecord {
  int iter = 0;
  double re_tau = 0.0;
  double abs_tau = 0.0;
  double fidelity = 0.0;
  double eta = 0.0;
  double fluence = 0.0;
  double update_norm = 0.0;
  double wall_ms = 0.0;
};

struct OptimizationTrace {
  std::vector<IterationRecord> records;
};

struct OptimizationResult {
  ControlField field;
  OptimizationTrace trace;
  StopReason reason = StopReason::max_iterations;
  GateOverlap overlap{0.0, 0};       // final gate overlap
  double eta = 0.0;                  // final transfer objective
  double residual_evolution = 0.0;   // final-field stationarity residuals
  double residual_s2s = 0.0;
};

// Iterative field construction. The Krotov scheme backward-propagates the
// terminal condition with the previous field, then sweeps forward updating
// each interval from the co-located backward slice and the
// currently-updating forward slice before stepping through it. The
// gradient scheme takes plain ascent steps along the unpenalized gradient.
OptimizationResult optimize(const SystemModel& model, const TargetGate& target,
                            const TimeGrid& grid, const OptimizerConfig& config);

// Weak broadband guess: one cosine per distinct level-gap frequency of the
// relevant block, seeded amplitudes and phases, under a sin^2 envelope that
// vanishes at both ends.
ControlField default_initial_guess(const SystemModel& model,
                                   const TimeGrid& grid, unsigned seed);

// Update norm sum_j deps_j^2 * dt between two fields on the same grid.
double field_update_norm(const ControlField& before, const ControlField& after,
                         const TimeGrid& grid);

}  // namespace gateforge
