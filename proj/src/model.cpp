#include "gateforge/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace gateforge {

namespace {

std::string entry_tag(int row, int col) {
  std::ostringstream os;
  os << "(" << row + 1 << "," << col + 1 << ")";
  return os.str();
}

}  // namespace

ValidationReport validate_model(const SystemModel& model) {
  ValidationReport report;
  const int m = model.levels;
  const int n = model.relevant_dim;

  if (m < 1) report.errors.push_back("level count must be positive");
  if (n < 1) report.errors.push_back("relevant dimension must be positive");
  if (n > m) report.errors.push_back("N exceeds M");

  if (model.energies.size() != m) {
    report.errors.push_back("energy list length does not match level count");
  } else {
    for (int k = 0; k < m; ++k) {
      if (!std::isfinite(model.energies[k])) {
        report.errors.push_back("non-finite energy at k=" + std::to_string(k + 1));
      }
    }
    for (int k = 0; k + 1 < m; ++k) {
      if (model.energies[k] > model.energies[k + 1]) {
        report.warnings.push_back("energies not sorted ascending at k=" +
                                  std::to_string(k + 1));
        break;
      }
    }
  }

  if (model.dipole.rows() != m || model.dipole.cols() != m) {
    report.errors.push_back("dipole matrix is not M x M");
    return report;
  }
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < m; ++k) {
      const complexd v = model.dipole(j, k);
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
        report.errors.push_back("non-finite dipole entry at " + entry_tag(j, k));
      }
    }
  }
  for (int j = 0; j < m; ++j) {
    for (int k = j; k < m; ++k) {
      const complexd diff = model.dipole(j, k) - std::conj(model.dipole(k, j));
      if (std::abs(diff) > 1e-12) {
        report.errors.push_back("dipole not Hermitian at " + entry_tag(j, k));
      }
    }
  }
  for (int k = 0; k < m; ++k) {
    if (std::abs(model.dipole(k, k)) > 1e-12) {
      report.errors.push_back("nonzero diagonal at k=" + std::to_string(k + 1));
    }
  }

  return report;
}

Eigen::MatrixXcd TargetGate::padded_columns(int levels) const {
  const int n = dim();
  if (levels < n) throw std::invalid_argument("target block larger than system");
  Eigen::MatrixXcd cols = Eigen::MatrixXcd::Zero(levels, n);
  cols.topRows(n) = block;
  return cols;
}

bool is_unitary(const Eigen::MatrixXcd& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const Eigen::MatrixXcd gram = m.adjoint() * m;
  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(m.rows(), m.cols());
  return (gram - eye).cwiseAbs().maxCoeff() <= tol;
}

TimeGrid::TimeGrid(double horizon_, int steps_) : horizon(horizon_), steps(steps_) {
  if (steps < 1) throw std::invalid_argument("grid needs at least one step");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("grid horizon must be positive and finite");
  }
}

bool ControlField::finite() const {
  for (double v : samples) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double ControlField::fluence(const TimeGrid& grid) const {
  double acc = 0.0;
  for (double v : samples) acc += v * v;
  return acc * grid.dt();
}

InitialBasis build_initial_basis(BasisMode mode, int relevant_dim, int levels) {
  if (relevant_dim < 1 || relevant_dim > levels) {
    throw std::invalid_argument("initial basis needs 1 <= N <= M");
  }
  Eigen::MatrixXcd states = Eigen::MatrixXcd::Zero(levels, relevant_dim);
  for (int l = 0; l < relevant_dim; ++l) states(l, l) = 1.0;
  if (mode == BasisMode::phase_corrected) {
    const double amp = 1.0 / std::sqrt(static_cast<double>(relevant_dim));
    states.col(relevant_dim - 1).setZero();
    for (int k = 0; k < relevant_dim; ++k) states(k, relevant_dim - 1) = amp;
  }
  return InitialBasis{mode, std::move(states)};
}

double spectrum_phase_raw(const SystemModel& model, double horizon) {
  return model.energies.sum() * horizon / model.levels;
}

double spectrum_phase(const SystemModel& model, double horizon) {
  return wrap_angle(spectrum_phase_raw(model, horizon));
}

double wrap_angle(double angle) {
  const double two_pi = 2.0 * std::numbers::pi;
  double wrapped = std::remainder(angle, two_pi);
  // remainder lands in [-pi, pi]; fold -pi onto +pi.
  if (wrapped <= -std::numbers::pi) wrapped += two_pi;
  return wrapped;
}

}  // namespace gateforge
