#include "gateforge/propagation.hpp"

#include <cmath>
#include <stdexcept>

namespace gateforge {

namespace {

constexpr complexd kImag{0.0, 1.0};

void require_field_matches(const ControlField& field, const TimeGrid& grid) {
  if (static_cast<int>(field.samples.size()) != grid.steps) {
    throw std::invalid_argument("field length does not match grid step count");
  }
  if (!field.finite()) {
    throw std::invalid_argument("field contains non-finite samples");
  }
}

void require_rows(const SystemModel& model, const Eigen::MatrixXcd& rows) {
  if (rows.rows() != model.levels) {
    throw std::invalid_argument("row vectors must have system dimension");
  }
  if (rows.cols() < 1 || rows.cols() > model.levels) {
    throw std::invalid_argument("row count must be in [1, M]");
  }
}

}  // namespace

Eigen::MatrixXcd step_hamiltonian(const SystemModel& model, double eps_value) {
  Eigen::MatrixXcd h = (-eps_value) * model.dipole;
  h += model.energies.asDiagonal();
  return h;
}

StepPropagator::StepPropagator(const SystemModel& model, double dt)
    : model_(model), dt_(dt) {
  zero_field_ = exponential(0.0, dt_);
}

Eigen::MatrixXcd StepPropagator::exponential(double eps_value, double span) const {
  const Eigen::MatrixXcd h = step_hamiltonian(model_, eps_value);
  const double herm = (h - h.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-12) {
    throw std::runtime_error("step Hamiltonian lost Hermiticity");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  const Eigen::VectorXcd phases =
      (-kImag * span * es.eigenvalues().array()).exp();
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

Eigen::MatrixXcd StepPropagator::at(double eps_value) const {
  if (eps_value == 0.0) return zero_field_;
  return exponential(eps_value, dt_);
}

Eigen::MatrixXcd StepPropagator::half_step(double eps_value) const {
  return exponential(eps_value, 0.5 * dt_);
}

Eigen::MatrixXcd StepPropagator::derivative(double eps_value) const {
  const Eigen::MatrixXcd h = step_hamiltonian(model_, eps_value);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  const Eigen::VectorXd lam = es.eigenvalues();
  const Eigen::MatrixXcd v = es.eigenvectors();
  const int m = model_.levels;

  // dH/deps = -mu in the eigenbasis, scaled entrywise by the divided
  // differences of x -> exp(-i x dt).
  const Eigen::MatrixXcd dh = v.adjoint() * (-model_.dipole) * v;
  Eigen::MatrixXcd scaled(m, m);
  for (int a = 0; a < m; ++a) {
    const complexd fa = std::exp(-kImag * lam[a] * dt_);
    for (int b = 0; b < m; ++b) {
      complexd weight;
      const double gap = lam[a] - lam[b];
      if (std::abs(gap) < 1e-12) {
        weight = -kImag * dt_ * fa;
      } else {
        weight = (fa - std::exp(-kImag * lam[b] * dt_)) / gap;
      }
      scaled(a, b) = weight * dh(a, b);
    }
  }
  return v * scaled * v.adjoint();
}

double RowTrajectory::max_norm_drift() const {
  double drift = 0.0;
  for (const auto& mat : nodes) {
    for (int c = 0; c < mat.cols(); ++c) {
      drift = std::max(drift, std::abs(mat.col(c).norm() - 1.0));
    }
  }
  return drift;
}

RowTrajectory propagate_rows_forward(const SystemModel& model,
                                     const ControlField& field,
                                     const TimeGrid& grid,
                                     const Eigen::MatrixXcd& init_rows) {
  require_field_matches(field, grid);
  require_rows(model, init_rows);

  RowTrajectory traj{RowTrajectory::Direction::forward, {}};
  traj.nodes.reserve(grid.steps + 1);
  traj.nodes.push_back(init_rows);
  const StepPropagator prop(model, grid.dt());
  for (int j = 0; j < grid.steps; ++j) {
    traj.nodes.push_back(prop.at(field.samples[j]) * traj.nodes.back());
  }
  return traj;
}

RowTrajectory propagate_rows_backward(const SystemModel& model,
                                      const ControlField& field,
                                      const TimeGrid& grid,
                                      const Eigen::MatrixXcd& terminal_rows) {
  require_field_matches(field, grid);
  require_rows(model, terminal_rows);

  RowTrajectory traj{RowTrajectory::Direction::backward, {}};
  traj.nodes.assign(grid.steps + 1, Eigen::MatrixXcd());
  traj.nodes[grid.steps] = terminal_rows;
  const StepPropagator prop(model, grid.dt());
  for (int j = grid.steps - 1; j >= 0; --j) {
    traj.nodes[j] = prop.at(field.samples[j]).adjoint() * traj.nodes[j + 1];
  }
  return traj;
}

Eigen::MatrixXcd propagate_full_unitary(const SystemModel& model,
                                        const ControlField& field,
                                        const TimeGrid& grid) {
  require_field_matches(field, grid);
  Eigen::MatrixXcd u =
      Eigen::MatrixXcd::Identity(model.levels, model.levels);
  const StepPropagator prop(model, grid.dt());
  for (int j = 0; j < grid.steps; ++j) {
    u = prop.at(field.samples[j]) * u;
  }
  return u;
}

std::vector<Eigen::VectorXcd> evolve_state(const SystemModel& model,
                                           const ControlField& field,
                                           const TimeGrid& grid,
                                           const Eigen::VectorXcd& psi0) {
  if (psi0.size() != model.levels) {
    throw std::invalid_argument("state dimension does not match system");
  }
  if (std::abs(psi0.norm() - 1.0) > 1e-10) {
    throw std::invalid_argument("initial state is not normalized");
  }
  const RowTrajectory traj = propagate_rows_forward(model, field, grid, psi0);
  std::vector<Eigen::VectorXcd> states;
  states.reserve(traj.nodes.size());
  for (const auto& node : traj.nodes) states.push_back(node.col(0));
  return states;
}

Eigen::MatrixXcd identity_rows(int levels, int relevant_dim) {
  Eigen::MatrixXcd rows = Eigen::MatrixXcd::Zero(levels, relevant_dim);
  for (int k = 0; k < relevant_dim; ++k) rows(k, k) = 1.0;
  return rows;
}

}  // namespace gateforge
