#include "gateforge/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gateforge {

namespace {

void require_lambda(double lambda) {
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("lambda must be positive");
  }
}

double max_abs(const std::vector<double>& values) {
  double acc = 0.0;
  for (double v : values) acc = std::max(acc, std::abs(v));
  return acc;
}

}  // namespace

GateOverlap gate_overlap(const TargetGate& target,
                         const Eigen::MatrixXcd& forward_at_horizon) {
  const int n = target.dim();
  if (forward_at_horizon.cols() != n || forward_at_horizon.rows() < n) {
    throw std::invalid_argument("forward block does not match target dimensions");
  }
  // sum_k (O|k>)^dag U(T,0)|k> = Tr[O^dag U_rel]
  const complexd value =
      (target.block.adjoint() * forward_at_horizon.topRows(n)).trace();
  return GateOverlap{value, n};
}

double gate_fidelity(const GateOverlap& overlap) {
  return std::abs(overlap.value) / overlap.subspace_dim;
}

double transfer_objective(const Eigen::MatrixXcd& evolved_at_horizon,
                          const Eigen::MatrixXcd& final_targets) {
  if (evolved_at_horizon.cols() != final_targets.cols() ||
      evolved_at_horizon.rows() != final_targets.rows()) {
    throw std::invalid_argument("evolved states do not match targets");
  }
  double acc = 0.0;
  for (int l = 0; l < final_targets.cols(); ++l) {
    acc += std::norm(evolved_at_horizon.col(l).dot(final_targets.col(l)));
  }
  return acc;
}

Eigen::VectorXcd overlap_factors(const Eigen::MatrixXcd& evolved_at_horizon,
                                 const Eigen::MatrixXcd& final_targets) {
  if (evolved_at_horizon.cols() != final_targets.cols() ||
      evolved_at_horizon.rows() != final_targets.rows()) {
    throw std::invalid_argument("evolved states do not match targets");
  }
  Eigen::VectorXcd factors(final_targets.cols());
  for (int l = 0; l < final_targets.cols(); ++l) {
    factors[l] = evolved_at_horizon.col(l).dot(final_targets.col(l));
  }
  return factors;
}

double pair_integrand(const Eigen::MatrixXcd& dipole,
                      const Eigen::MatrixXcd& backward_at_t,
                      const Eigen::MatrixXcd& forward_at_t,
                      const Eigen::VectorXcd& weights) {
  if (backward_at_t.cols() != forward_at_t.cols() ||
      backward_at_t.rows() != forward_at_t.rows()) {
    throw std::invalid_argument("trajectory slices are not co-located");
  }
  const Eigen::MatrixXcd coupled = dipole * forward_at_t;
  complexd acc = 0.0;
  for (int l = 0; l < forward_at_t.cols(); ++l) {
    const complexd element = backward_at_t.col(l).dot(coupled.col(l));
    acc += weights.size() ? weights[l] * element : element;
  }
  return acc.imag();
}

double field_correction_evolution(const Eigen::MatrixXcd& dipole,
                                  const Eigen::MatrixXcd& forward_at_t,
                                  const Eigen::MatrixXcd& backward_at_t,
                                  double lambda) {
  require_lambda(lambda);
  return -pair_integrand(dipole, backward_at_t, forward_at_t) / (2.0 * lambda);
}

double field_correction_s2s(const Eigen::MatrixXcd& dipole,
                            const Eigen::MatrixXcd& forward_at_t,
                            const Eigen::MatrixXcd& backward_at_t,
                            const Eigen::VectorXcd& factors,
                            double lambda) {
  require_lambda(lambda);
  if (factors.size() != forward_at_t.cols()) {
    throw std::invalid_argument("one overlap factor per transition required");
  }
  return -pair_integrand(dipole, backward_at_t, forward_at_t, factors) / lambda;
}

std::vector<double> residual_evolution_profile(const SystemModel& model,
                                               const ControlField& field,
                                               const TimeGrid& grid,
                                               const TargetGate& target) {
  const auto fwd = propagate_rows_forward(
      model, field, grid, identity_rows(model.levels, model.relevant_dim));
  const auto bwd = propagate_rows_backward(
      model, field, grid, target.padded_columns(model.levels));
  std::vector<double> profile(grid.steps + 1);
  for (int j = 0; j <= grid.steps; ++j) {
    profile[j] =
        std::abs(pair_integrand(model.dipole, bwd.at_node(j), fwd.at_node(j)));
  }
  return profile;
}

double residual_evolution(const SystemModel& model, const ControlField& field,
                          const TimeGrid& grid, const TargetGate& target) {
  return max_abs(residual_evolution_profile(model, field, grid, target));
}

Eigen::MatrixXcd final_targets(const TargetGate& target,
                               const InitialBasis& basis, int levels) {
  const int n = target.dim();
  if (basis.states.rows() != levels || basis.states.cols() != n) {
    throw std::invalid_argument("basis does not match target and system size");
  }
  Eigen::MatrixXcd targets = Eigen::MatrixXcd::Zero(levels, n);
  targets.topRows(n) = target.block * basis.states.topRows(n);
  return targets;
}

std::vector<double> residual_s2s_profile(const SystemModel& model,
                                         const ControlField& field,
                                         const TimeGrid& grid,
                                         const TargetGate& target,
                                         const InitialBasis& basis) {
  const auto fwd = propagate_rows_forward(model, field, grid, basis.states);
  const Eigen::MatrixXcd targets = final_targets(target, basis, model.levels);
  const auto bwd = propagate_rows_backward(model, field, grid, targets);
  const Eigen::VectorXcd factors = overlap_factors(fwd.final(), targets);
  std::vector<double> profile(grid.steps + 1);
  for (int j = 0; j <= grid.steps; ++j) {
    profile[j] = std::abs(
        pair_integrand(model.dipole, bwd.at_node(j), fwd.at_node(j), factors));
  }
  return profile;
}

double residual_s2s(const SystemModel& model, const ControlField& field,
                    const TimeGrid& grid, const TargetGate& target,
                    const InitialBasis& basis) {
  return max_abs(residual_s2s_profile(model, field, grid, target, basis));
}

namespace {

// Midpoint slices of both trajectories on interval j share one half-step
// propagator: u(t_j) = P_half u(node j), b(t_j) = P_half^dag b(node j+1).
struct MidpointSlices {
  Eigen::MatrixXcd forward;
  Eigen::MatrixXcd backward;
};

MidpointSlices midpoint_slices(const StepPropagator& prop, double eps,
                               const RowTrajectory& fwd,
                               const RowTrajectory& bwd, int interval) {
  const Eigen::MatrixXcd half = prop.half_step(eps);
  return MidpointSlices{half * fwd.at_node(interval),
                        half.adjoint() * bwd.at_node(interval + 1)};
}

}  // namespace

std::vector<double> gradient_re_overlap(const SystemModel& model,
                                        const ControlField& field,
                                        const TimeGrid& grid,
                                        const TargetGate& target) {
  const auto fwd = propagate_rows_forward(
      model, field, grid, identity_rows(model.levels, model.relevant_dim));
  const auto bwd = propagate_rows_backward(
      model, field, grid, target.padded_columns(model.levels));
  const StepPropagator prop(model, grid.dt());
  std::vector<double> grad(grid.steps);
  for (int j = 0; j < grid.steps; ++j) {
    const auto mid = midpoint_slices(prop, field.samples[j], fwd, bwd, j);
    grad[j] = -grid.dt() * pair_integrand(model.dipole, mid.backward, mid.forward);
  }
  return grad;
}

std::vector<double> gradient_transfer(const SystemModel& model,
                                      const ControlField& field,
                                      const TimeGrid& grid,
                                      const TargetGate& target,
                                      const InitialBasis& basis) {
  const auto fwd = propagate_rows_forward(model, field, grid, basis.states);
  const Eigen::MatrixXcd targets = final_targets(target, basis, model.levels);
  const auto bwd = propagate_rows_backward(model, field, grid, targets);
  const Eigen::VectorXcd factors = overlap_factors(fwd.final(), targets);
  const StepPropagator prop(model, grid.dt());
  std::vector<double> grad(grid.steps);
  for (int j = 0; j < grid.steps; ++j) {
    const auto mid = midpoint_slices(prop, field.samples[j], fwd, bwd, j);
    grad[j] = -2.0 * grid.dt() *
              pair_integrand(model.dipole, mid.backward, mid.forward, factors);
  }
  return grad;
}

}  // namespace gateforge
