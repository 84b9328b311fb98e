#pragma once

#include <vector>

#include <Eigen/Dense>

#include "gateforge/model.hpp"

namespace gateforge {

// Builds diag(E) - mu * eps, the generator on one constant-field interval.
Eigen::MatrixXcd step_hamiltonian(const SystemModel& model, double eps_value);

// Exact one-interval propagator exp(-i H dt) computed through the Hermitian
// eigendecomposition of H. Holds the model by reference; the zero-field
// propagator is precomputed once and reused on exact eps == 0 samples.
class StepPropagator {
 public:
  StepPropagator(const SystemModel& model, double dt);

  // exp(-i H(eps) dt)
  Eigen::MatrixXcd at(double eps_value) const;
  // exp(-i H(eps) dt/2), used for midpoint evaluations.
  Eigen::MatrixXcd half_step(double eps_value) const;
  // Derivative of at(eps) with respect to eps (exact, via divided
  // differences of the exponential on the eigenbasis).
  Eigen::MatrixXcd derivative(double eps_value) const;

  double dt() const { return dt_; }

 private:
  Eigen::MatrixXcd exponential(double eps_value, double span) const;

  const SystemModel& model_;
  double dt_;
  Eigen::MatrixXcd zero_field_;
};

// Trajectory of the N propagated vectors at every grid node. Column k of
// nodes[j] is the action of the evolving operator on basis state |k> at
// node time j*dt: U(t,0)|k> going forward, or the target gate carried to
// time t going backward.
struct RowTrajectory {
  enum class Direction { forward, backward };

  Direction direction;
  std::vector<Eigen::MatrixXcd> nodes;   // steps+1 entries, each M x N

  const Eigen::MatrixXcd& at_node(int node) const { return nodes.at(node); }
  const Eigen::MatrixXcd& initial() const { return nodes.front(); }
  const Eigen::MatrixXcd& final() const { return nodes.back(); }
  // Largest deviation of any stored column norm from 1.
  double max_norm_drift() const;
};

// Forward propagation of init_rows (M x N) across the whole grid.
RowTrajectory propagate_rows_forward(const SystemModel& model,
                                     const ControlField& field,
                                     const TimeGrid& grid,
                                     const Eigen::MatrixXcd& init_rows);

// Backward propagation: terminal_rows is pinned at t = horizon and carried
// to every earlier node with the adjoint step propagators.
RowTrajectory propagate_rows_backward(const SystemModel& model,
                                      const ControlField& field,
                                      const TimeGrid& grid,
                                      const Eigen::MatrixXcd& terminal_rows);

// Full M x M evolution operator at the horizon.
Eigen::MatrixXcd propagate_full_unitary(const SystemModel& model,
                                        const ControlField& field,
                                        const TimeGrid& grid);

// Single normalized state carried across the grid; returns all steps+1 nodes.
std::vector<Eigen::VectorXcd> evolve_state(const SystemModel& model,
                                           const ControlField& field,
                                           const TimeGrid& grid,
                                           const Eigen::VectorXcd& psi0);

// M x N identity columns, the forward initial condition for gate runs.
Eigen::MatrixXcd identity_rows(int levels, int relevant_dim);

}  // namespace gateforge
