#include "gateforge/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "gateforge/propagation.hpp"

namespace gateforge {

std::string to_string(Approach approach) {
  return approach == Approach::evolution ? "evolution" : "state_to_state";
}

std::string to_string(Scheme scheme) {
  return scheme == Scheme::krotov ? "krotov" : "gradient";
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::fidelity_reached: return "fidelity_reached";
    case StopReason::update_norm: return "update_norm";
    case StopReason::max_iterations: return "max_iterations";
  }
  return "unknown";
}

std::string to_string(BasisMode mode) {
  return mode == BasisMode::orthonormal ? "orthonormal" : "phase_corrected";
}

namespace {

using clock_type = std::chrono::steady_clock;

double elapsed_ms(clock_type::time_point start) {
  return std::chrono::duration<double, std::milli>(clock_type::now() - start)
      .count();
}

void validate_config(const OptimizerConfig& config, const TimeGrid& grid) {
  if (!(config.lambda > 0.0)) {
    throw std::invalid_argument("lambda must be positive");
  }
  if (config.max_iters < 1) {
    throw std::invalid_argument("max_iters must be positive");
  }
  if (!(config.stop_fidelity > 0.0) || config.stop_fidelity > 1.0) {
    throw std::invalid_argument("stop_fidelity must lie in (0, 1]");
  }
  if (config.stop_update_norm < 0.0) {
    throw std::invalid_argument("stop_update_norm must be nonnegative");
  }
  if (config.scheme == Scheme::gradient && !(config.gradient_step > 0.0)) {
    throw std::invalid_argument("gradient_step must be positive");
  }
  if (config.initial_field &&
      static_cast<int>(config.initial_field->samples.size()) != grid.steps) {
    throw std::invalid_argument("initial field length does not match grid");
  }
}

// Per-approach boundary data: forward initial columns, backward terminal
// columns, the correction prefactor 1/(s*lambda), and whether overlap
// factors weight the update.
struct RunSetup {
  Eigen::MatrixXcd init_states;     // M x N
  Eigen::MatrixXcd terminal;        // M x N
  Eigen::MatrixXcd targets;         // final targets for eta / factors
  double correction_scale;          // s in deps = -integrand / (s*lambda)
  bool use_factors;
  InitialBasis basis;
};

RunSetup make_setup(const SystemModel& model, const TargetGate& target,
                    const OptimizerConfig& config) {
  RunSetup setup;
  const int m = model.levels;
  const int n = model.relevant_dim;
  if (target.dim() != n) {
    throw std::invalid_argument("target block does not match relevant dimension");
  }
  if (config.approach == Approach::evolution) {
    setup.basis = build_initial_basis(BasisMode::orthonormal, n, m);
    setup.init_states = identity_rows(m, n);
    setup.terminal = target.padded_columns(m);
    setup.targets = setup.terminal;
    setup.correction_scale = 2.0;
    setup.use_factors = false;
  } else {
    setup.basis = build_initial_basis(config.basis_mode, n, m);
    setup.init_states = setup.basis.states;
    setup.targets = final_targets(target, setup.basis, m);
    setup.terminal = setup.targets;
    setup.correction_scale = 1.0;
    setup.use_factors = true;
  }
  return setup;
}

// Recovers the forward gate columns U(t,0)|k> from the propagated basis
// states; for the phase-corrected basis the last column is the rescaled
// superposition minus the other states.
Eigen::MatrixXcd gate_columns(const Eigen::MatrixXcd& evolved,
                              const InitialBasis& basis) {
  if (basis.mode == BasisMode::orthonormal) return evolved;
  const int n = static_cast<int>(evolved.cols());
  Eigen::MatrixXcd cols = evolved;
  Eigen::VectorXcd last =
      std::sqrt(static_cast<double>(n)) * evolved.col(n - 1);
  for (int l = 0; l + 1 < n; ++l) last -= evolved.col(l);
  cols.col(n - 1) = last;
  return cols;
}

struct Objectives {
  GateOverlap overlap;
  double eta;
  double fidelity;   // stop metric of the configured approach
};

Objectives evaluate(const RunSetup& setup, const TargetGate& target,
                    const OptimizerConfig& config,
                    const Eigen::MatrixXcd& evolved_at_horizon) {
  Objectives obj{};
  obj.overlap =
      gate_overlap(target, gate_columns(evolved_at_horizon, setup.basis));
  obj.eta = transfer_objective(evolved_at_horizon, setup.targets);
  const double n = target.dim();
  obj.fidelity = config.approach == Approach::evolution
                     ? gate_fidelity(obj.overlap)
                     : obj.eta / n;
  return obj;
}

void require_finite(const ControlField& field, const Objectives& obj, int iter) {
  if (!field.finite() || !std::isfinite(obj.eta) ||
      !std::isfinite(obj.overlap.value.real()) ||
      !std::isfinite(obj.overlap.value.imag())) {
    throw DivergenceError(
        "non-finite values at iteration " + std::to_string(iter) +
        "; lambda may be too small or the gradient step too large");
  }
}

}  // namespace

double field_update_norm(const ControlField& before, const ControlField& after,
                         const TimeGrid& grid) {
  if (before.samples.size() != after.samples.size()) {
    throw std::invalid_argument("fields live on different grids");
  }
  double acc = 0.0;
  for (size_t j = 0; j < before.samples.size(); ++j) {
    const double d = after.samples[j] - before.samples[j];
    acc += d * d;
  }
  return acc * grid.dt();
}

ControlField default_initial_guess(const SystemModel& model,
                                   const TimeGrid& grid, unsigned seed) {
  const int n = model.relevant_dim;
  std::set<double> gaps;
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      gaps.insert(std::abs(model.energies[k] - model.energies[j]));
    }
  }
  if (gaps.empty() && model.levels > 1) {
    // single relevant level: fall back to the first out-of-block gap
    gaps.insert(std::abs(model.energies[1] - model.energies[0]));
  }

  std::mt19937_64 rng(seed);
  auto uniform = [&rng]() { return (rng() >> 11) * 0x1.0p-53; };

  struct Component {
    double freq, amp, phase;
  };
  std::vector<Component> components;
  const double base_amp =
      0.05 / std::sqrt(static_cast<double>(std::max<size_t>(gaps.size(), 1)));
  for (double freq : gaps) {
    components.push_back(Component{freq, base_amp * (0.75 + 0.5 * uniform()),
                                   2.0 * std::numbers::pi * uniform()});
  }

  ControlField guess = ControlField::zero(grid);
  for (int j = 0; j < grid.steps; ++j) {
    const double t = grid.midpoint_time(j);
    const double envelope =
        std::pow(std::sin(std::numbers::pi * t / grid.horizon), 2);
    double value = 0.0;
    for (const auto& c : components) {
      value += c.amp * std::cos(c.freq * t + c.phase);
    }
    guess.samples[j] = envelope * value;
  }
  return guess;
}

OptimizationResult optimize(const SystemModel& model, const TargetGate& target,
                            const TimeGrid& grid,
                            const OptimizerConfig& config) {
  validate_config(config, grid);
  const RunSetup setup = make_setup(model, target, config);
  const int n_steps = grid.steps;
  const double dt = grid.dt();

  ControlField field = config.initial_field
                           ? *config.initial_field
                           : default_initial_guess(model, grid, config.rng_seed);
  if (!field.finite()) {
    throw std::invalid_argument("initial field contains non-finite samples");
  }

  const StepPropagator prop(model, dt);

  // Forward trajectory under the current field; the Krotov sweep rebuilds it
  // in place with the updating field.
  RowTrajectory fwd =
      propagate_rows_forward(model, field, grid, setup.init_states);

  OptimizationResult result;
  result.reason = StopReason::max_iterations;

  for (int iter = 1; iter <= config.max_iters; ++iter) {
    const auto started = clock_type::now();

    const RowTrajectory bwd =
        propagate_rows_backward(model, field, grid, setup.terminal);
    Eigen::VectorXcd factors;
    if (setup.use_factors) {
      factors = overlap_factors(fwd.final(), setup.targets);
    }

    ControlField updated = field;
    double update_norm = 0.0;
    if (config.scheme == Scheme::krotov) {
      for (int j = 0; j < n_steps; ++j) {
        const double integrand = pair_integrand(model.dipole, bwd.at_node(j),
                                                fwd.at_node(j), factors);
        const double deps =
            -integrand / (setup.correction_scale * config.lambda);
        updated.samples[j] = field.samples[j] + deps;
        if (!std::isfinite(updated.samples[j])) {
          throw DivergenceError(
              "non-finite field sample at iteration " + std::to_string(iter) +
              ", interval " + std::to_string(j) +
              "; lambda may be too small or the gradient step too large");
        }
        update_norm += deps * deps;
        fwd.nodes[j + 1] = prop.at(updated.samples[j]) * fwd.nodes[j];
      }
      update_norm *= dt;
    } else {
      const std::vector<double> grad =
          config.approach == Approach::evolution
              ? gradient_re_overlap(model, field, grid, target)
              : gradient_transfer(model, field, grid, target, setup.basis);
      for (int j = 0; j < n_steps; ++j) {
        const double deps = config.gradient_step * grad[j];
        updated.samples[j] = field.samples[j] + deps;
        update_norm += deps * deps;
      }
      update_norm *= dt;
      fwd = propagate_rows_forward(model, updated, grid, setup.init_states);
    }
    field = updated;

    const Objectives obj = evaluate(setup, target, config, fwd.final());
    require_finite(field, obj, iter);

    IterationRecord record;
    record.iter = iter;
    record.re_tau = obj.overlap.value.real();
    record.abs_tau = std::abs(obj.overlap.value);
    record.fidelity = gate_fidelity(obj.overlap);
    record.eta = obj.eta;
    record.fluence = field.fluence(grid);
    record.update_norm = update_norm;
    record.wall_ms = elapsed_ms(started);
    result.trace.records.push_back(record);

    if (obj.fidelity >= config.stop_fidelity) {
      result.reason = StopReason::fidelity_reached;
      break;
    }
    if (update_norm <= config.stop_update_norm) {
      result.reason = StopReason::update_norm;
      break;
    }
  }

  result.field = field;
  const Objectives final_obj = evaluate(setup, target, config, fwd.final());
  result.overlap = final_obj.overlap;
  result.eta = final_obj.eta;
  result.residual_evolution = residual_evolution(model, field, grid, target);
  const InitialBasis residual_basis =
      config.approach == Approach::state_to_state
          ? setup.basis
          : build_initial_basis(BasisMode::phase_corrected, model.relevant_dim,
                                model.levels);
  result.residual_s2s =
      residual_s2s(model, field, grid, target, residual_basis);
  return result;
}

}  // namespace gateforge
