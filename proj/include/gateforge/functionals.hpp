#pragma once

#include <vector>

#include <Eigen/Dense>

#include "gateforge/model.hpp"
#include "gateforge/propagation.hpp"

namespace gateforge {

// Complex gate overlap sum_k <k| O^dag U(T,0) |k> over the relevant
// subspace. Its modulus is bounded by N and reaches N exactly when the
// realized evolution matches the target up to a global phase; -arg(value)
// is that phase.
struct GateOverlap {
  complexd value;
  int subspace_dim;
};

// Overlap from the target block and the forward vectors at the horizon
// (columns U(T,0)|k>, k = 1..N).
GateOverlap gate_overlap(const TargetGate& target,
                         const Eigen::MatrixXcd& forward_at_horizon);

// |overlap| / N, in [0, 1].
double gate_fidelity(const GateOverlap& overlap);

// Sum of squared final-state overlaps sum_l |<psi_l(T)|phi_l>|^2 for the N
// simultaneous transitions; phase-blind per transition, maximum N.
double transfer_objective(const Eigen::MatrixXcd& evolved_at_horizon,
                          const Eigen::MatrixXcd& final_targets);

// Per-transition factors c_l = <psi_l(T)|phi_l> entering the
// state-to-state field correction.
Eigen::VectorXcd overlap_factors(const Eigen::MatrixXcd& evolved_at_horizon,
                                 const Eigen::MatrixXcd& final_targets);

// Im sum_l w_l <b_l(t)| mu |u_l(t)>, the time-local pairing both field
// corrections and both stationarity residuals are built from. Weights may
// be empty (all ones).
double pair_integrand(const Eigen::MatrixXcd& dipole,
                      const Eigen::MatrixXcd& backward_at_t,
                      const Eigen::MatrixXcd& forward_at_t,
                      const Eigen::VectorXcd& weights = {});

// Field correction of the evolution-operator formulation:
//   -1/(2 lambda) Im sum_k <k| B(t,T) mu U(t,0) |k>.
double field_correction_evolution(const Eigen::MatrixXcd& dipole,
                                  const Eigen::MatrixXcd& forward_at_t,
                                  const Eigen::MatrixXcd& backward_at_t,
                                  double lambda);

// Field correction of the state-to-state formulation:
//   -1/lambda Im sum_l c_l <psi_fl(t)| mu |psi_il(t)>,
// with c_l the overlap factors of the same field's forward propagation.
double field_correction_s2s(const Eigen::MatrixXcd& dipole,
                            const Eigen::MatrixXcd& forward_at_t,
                            const Eigen::MatrixXcd& backward_at_t,
                            const Eigen::VectorXcd& factors,
                            double lambda);

// Stationarity residual of the evolution formulation along the grid:
// |Im sum_k <k| O^dag U^dag(t,T) mu U(t,0) |k>| at every node.
std::vector<double> residual_evolution_profile(const SystemModel& model,
                                               const ControlField& field,
                                               const TimeGrid& grid,
                                               const TargetGate& target);
double residual_evolution(const SystemModel& model, const ControlField& field,
                          const TimeGrid& grid, const TargetGate& target);

// Stationarity residual of the state-to-state formulation for a given
// initial basis, overlap factors included.
std::vector<double> residual_s2s_profile(const SystemModel& model,
                                         const ControlField& field,
                                         const TimeGrid& grid,
                                         const TargetGate& target,
                                         const InitialBasis& basis);
double residual_s2s(const SystemModel& model, const ControlField& field,
                    const TimeGrid& grid, const TargetGate& target,
                    const InitialBasis& basis);

// Final targets phi_fl = O phi_il for every basis column, padded to full
// dimension.
Eigen::MatrixXcd final_targets(const TargetGate& target,
                               const InitialBasis& basis, int levels);

// Unpenalized gradient of Re(overlap) with respect to each field sample,
// integrand co-located at interval midpoints:
//   g_j = -dt * Im sum_k <k| B(t_j,T) mu U(t_j,0) |k>.
std::vector<double> gradient_re_overlap(const SystemModel& model,
                                        const ControlField& field,
                                        const TimeGrid& grid,
                                        const TargetGate& target);

// Unpenalized gradient of the transfer objective, overlap factors included:
//   g_j = -2 dt * Im sum_l c_l <psi_fl(t_j)| mu |psi_il(t_j)>.
std::vector<double> gradient_transfer(const SystemModel& model,
                                      const ControlField& field,
                                      const TimeGrid& grid,
                                      const TargetGate& target,
                                      const InitialBasis& basis);

}  // namespace gateforge
