#include "gateforge/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "gateforge/propagation.hpp"

namespace gateforge {

namespace {

using clock_type = std::chrono::steady_clock;

double elapsed_ms(clock_type::time_point start) {
  return std::chrono::duration<double, std::milli>(clock_type::now() - start)
      .count();
}

bool compare(const std::string& comparator, double measured, double threshold) {
  if (comparator == "<=") return measured <= threshold;
  if (comparator == ">=") return measured >= threshold;
  if (comparator == "<") return measured < threshold;
  if (comparator == ">") return measured > threshold;
  return true;   // "info"
}

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string digest(const SystemModel& model, const TargetGate& target,
                   const TimeGrid& grid, const std::vector<unsigned>& seeds) {
  std::ostringstream os;
  os.precision(17);
  os << model.levels << "|" << model.relevant_dim << "|";
  for (int k = 0; k < model.energies.size(); ++k) os << model.energies[k] << ",";
  os << "|" << model.dipole.sum() << "|" << target.block.sum() << "|"
     << grid.horizon << "|" << grid.steps << "|";
  for (unsigned s : seeds) os << s << ",";
  std::ostringstream hex;
  hex << std::hex << fnv1a(os.str());
  return hex.str();
}

ExperimentCurve trace_curve(const std::string& name,
                            const OptimizationTrace& trace) {
  ExperimentCurve curve;
  curve.name = name;
  curve.columns = {"iter",    "re_tau",      "abs_tau", "fidelity",
                   "eta",     "fluence",     "update_norm", "wall_ms"};
  for (const auto& r : trace.records) {
    curve.rows.push_back({static_cast<double>(r.iter), r.re_tau, r.abs_tau,
                          r.fidelity, r.eta, r.fluence, r.update_norm,
                          r.wall_ms});
  }
  return curve;
}

ExperimentCurve residual_curve(const std::string& name, const TimeGrid& grid,
                               const std::vector<double>& evolution,
                               const std::vector<double>& s2s) {
  ExperimentCurve curve;
  curve.name = name;
  curve.columns = {"time", "residual_evolution", "residual_s2s"};
  for (int j = 0; j < static_cast<int>(evolution.size()); ++j) {
    curve.rows.push_back({grid.node_time(j), evolution[j], s2s[j]});
  }
  return curve;
}

// Best-fit diagonal correction: with G = O^dag U_rel, the per-column phases
// arg(G_ll) align U to O D, and sum_l |G_ll| / N is the fidelity against
// that best-fit member of the O D family.
struct DiagonalFit {
  Eigen::VectorXd phases;
  double family_fidelity;
  double phase_spread;
};

DiagonalFit fit_diagonal(const TargetGate& target,
                         const Eigen::MatrixXcd& forward_at_horizon) {
  const int n = target.dim();
  const Eigen::MatrixXcd g =
      target.block.adjoint() * forward_at_horizon.topRows(n);
  DiagonalFit fit;
  fit.phases.resize(n);
  double moduli = 0.0;
  for (int l = 0; l < n; ++l) {
    fit.phases[l] = std::arg(g(l, l));
    moduli += std::abs(g(l, l));
  }
  fit.family_fidelity = moduli / n;
  double spread = 0.0;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      spread = std::max(spread,
                        std::abs(wrap_angle(fit.phases[a] - fit.phases[b])));
    }
  }
  fit.phase_spread = spread;
  return fit;
}

TargetGate composed_with_diagonal(const TargetGate& target,
                                  const DiagonalUnitary& d) {
  return TargetGate{target.block * d.matrix()};
}

double max_abs_value(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc = std::max(acc, std::abs(x));
  return acc;
}

}  // namespace

Eigen::MatrixXcd DiagonalUnitary::matrix() const {
  const int n = static_cast<int>(phases.size());
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(n, n);
  for (int l = 0; l < n; ++l) {
    d(l, l) = std::polar(1.0, phases[l]);
  }
  return d;
}

bool ExperimentReport::passed() const {
  for (const auto& check : checks) {
    if (!check.informational && !check.pass) return false;
  }
  return true;
}

void ExperimentReport::add_check(const std::string& check_name,
                                 double measured_value,
                                 const std::string& comparator,
                                 double threshold, bool informational) {
  ExperimentCheck check;
  check.name = check_name;
  check.measured = measured_value;
  check.threshold = threshold;
  check.comparator = comparator;
  check.informational = informational || comparator == "info";
  check.pass = compare(comparator, measured_value, threshold);
  checks.push_back(check);
}

void ExperimentReport::add_measurement(const std::string& key, double value) {
  measured.emplace_back(key, value);
}

std::string ExperimentReport::summary() const {
  std::ostringstream os;
  os << "experiment " << name << " [" << inputs_digest << "]  "
     << (passed() ? "PASS" : "FAIL") << "\n";
  for (const auto& check : checks) {
    os.precision(6);
    os << "  [" << (check.informational ? "info" : (check.pass ? "pass" : "FAIL"))
       << "] " << check.name << ": " << std::scientific << check.measured;
    if (!check.informational) {
      os << " " << check.comparator << " " << check.threshold;
    }
    os << "\n";
  }
  return os.str();
}

namespace instances {

SystemModel two_level() {
  SystemModel model;
  model.levels = 2;
  model.relevant_dim = 2;
  model.energies = Eigen::Vector2d(0.0, 1.0);
  model.dipole = Eigen::MatrixXcd::Zero(2, 2);
  model.dipole(0, 1) = 1.0;
  model.dipole(1, 0) = 1.0;
  return model;
}

SystemModel embedded_qubit() {
  SystemModel model;
  model.levels = 8;
  model.relevant_dim = 2;
  model.energies.resize(8);
  model.energies << 0.0, 1.0, 2.15, 3.45, 4.9, 6.5, 8.25, 10.15;
  model.dipole = Eigen::MatrixXcd::Zero(8, 8);
  model.dipole(0, 1) = 1.0;
  model.dipole(1, 2) = 0.7;
  for (int k = 2; k + 1 < 8; ++k) model.dipole(k, k + 1) = 0.6;
  model.dipole = (model.dipole + model.dipole.adjoint()).eval();
  return model;
}

SystemModel ladder(int levels, int relevant, unsigned seed) {
  SystemModel model;
  model.levels = levels;
  model.relevant_dim = relevant;
  std::mt19937_64 rng(seed);
  auto uniform = [&rng]() { return (rng() >> 11) * 0x1.0p-53; };
  model.energies.resize(levels);
  double e = 0.0;
  for (int k = 0; k < levels; ++k) {
    model.energies[k] = e;
    e += 0.9 + 0.4 * uniform();
  }
  model.dipole = Eigen::MatrixXcd::Zero(levels, levels);
  for (int k = 0; k + 1 < levels; ++k) {
    const complexd coupling =
        std::polar(0.5 + uniform(), 2.0 * std::numbers::pi * uniform());
    model.dipole(k, k + 1) = coupling;
    model.dipole(k + 1, k) = std::conj(coupling);
  }
  return model;
}

TargetGate not_gate() {
  Eigen::MatrixXcd block(2, 2);
  block << 0.0, 1.0, 1.0, 0.0;
  return TargetGate{block};
}

TargetGate hadamard_like() {
  const double s = 1.0 / std::sqrt(2.0);
  Eigen::MatrixXcd block(2, 2);
  block << s, s, s, -s;
  return TargetGate{block};
}

TargetGate diagonal_flip() {
  Eigen::MatrixXcd block(2, 2);
  block << 1.0, 0.0, 0.0, -1.0;
  return TargetGate{block};
}

TargetGate identity_gate(int dim) {
  return TargetGate{Eigen::MatrixXcd::Identity(dim, dim)};
}

}  // namespace instances

ControlField seeded_probe_field(const TimeGrid& grid, double amplitude,
                                unsigned seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&rng]() { return (rng() >> 11) * 0x1.0p-53; };
  ControlField field = ControlField::zero(grid);
  for (int j = 0; j < grid.steps; ++j) {
    const double t = grid.midpoint_time(j);
    const double envelope =
        std::pow(std::sin(std::numbers::pi * t / grid.horizon), 2);
    field.samples[j] = amplitude * envelope * (2.0 * uniform() - 1.0);
  }
  return field;
}

ExperimentReport exp_phase_ambiguity(const SystemModel& model,
                                     const TargetGate& target,
                                     const TimeGrid& grid,
                                     const DiagonalUnitary& ambiguity,
                                     const std::vector<unsigned>& seeds) {
  const auto started = clock_type::now();
  ExperimentReport report;
  report.name = "phase_ambiguity";
  report.inputs_digest = digest(model, target, grid, seeds);

  const int n = target.dim();
  const TargetGate shifted = composed_with_diagonal(target, ambiguity);
  const InitialBasis ortho =
      build_initial_basis(BasisMode::orthonormal, n, model.levels);

  double best_direct_or_shifted = 0.0;
  double best_phase_spread = 0.0;

  for (unsigned seed : seeds) {
    const std::string tag = "[seed " + std::to_string(seed) + "]";

    OptimizerConfig config;
    config.approach = Approach::state_to_state;
    config.basis_mode = BasisMode::orthonormal;
    config.lambda = 1.0;
    config.max_iters = 2000;
    config.stop_fidelity = 0.999;
    config.rng_seed = seed;

    const OptimizationResult ortho_run = optimize(model, target, grid, config);
    report.add_check("orthonormal eta/N " + tag, ortho_run.eta / n, ">=", 0.999);
    report.curves.push_back(trace_curve(
        "phase_ambiguity_orthonormal_seed" + std::to_string(seed),
        ortho_run.trace));

    // Exact diagonal ambiguity of the phase-blind objective on this field.
    const auto fwd =
        propagate_rows_forward(model, ortho_run.field, grid, ortho.states);
    const double eta_direct = transfer_objective(
        fwd.final(), final_targets(target, ortho, model.levels));
    const double eta_shifted = transfer_objective(
        fwd.final(), final_targets(shifted, ortho, model.levels));
    report.add_check("eta identity under diagonal shift " + tag,
                     std::abs(eta_direct - eta_shifted), "<=", 1e-12);

    const double fid_direct = gate_fidelity(gate_overlap(target, fwd.final()));
    const double fid_shifted =
        gate_fidelity(gate_overlap(shifted, fwd.final()));
    report.add_check("orthonormal fidelity vs target " + tag, fid_direct,
                     "info", 0.0);
    report.add_check("orthonormal fidelity vs shifted target " + tag,
                     fid_shifted, "info", 0.0);
    best_direct_or_shifted =
        std::max(best_direct_or_shifted, std::max(fid_direct, fid_shifted));

    const DiagonalFit fit = fit_diagonal(target, fwd.final());
    report.add_check("orthonormal best-fit family fidelity " + tag,
                     fit.family_fidelity, ">=", 0.99);
    report.add_check("orthonormal best-fit phase spread " + tag,
                     fit.phase_spread, "info", 0.0);
    best_phase_spread = std::max(best_phase_spread, fit.phase_spread);

    config.basis_mode = BasisMode::phase_corrected;
    const OptimizationResult corrected_run =
        optimize(model, target, grid, config);
    report.add_check("phase-corrected eta/N " + tag, corrected_run.eta / n,
                     ">=", 0.999);
    report.add_check("phase-corrected gate fidelity " + tag,
                     gate_fidelity(corrected_run.overlap), ">=", 0.99);
    report.curves.push_back(trace_curve(
        "phase_ambiguity_corrected_seed" + std::to_string(seed),
        corrected_run.trace));
  }

  // The orthonormal runs converge to the target family with the realized
  // diagonal member left to the dynamics; only family membership is
  // asserted, the per-member fidelities stay informational.
  report.add_check("best fidelity vs target or shifted target across seeds",
                   best_direct_or_shifted, "info", 0.0);
  report.add_check("some orthonormal run has nontrivial best-fit diagonal",
                   best_phase_spread, ">", 0.1);

  report.wall_ms = elapsed_ms(started);
  return report;
}

ExperimentReport exp_spurious_diagonal(const SystemModel& model,
                                       const TargetGate& diagonal_target,
                                       const TimeGrid& grid, unsigned seed) {
  const auto started = clock_type::now();
  ExperimentReport report;
  report.name = "spurious_diagonal";
  report.inputs_digest = digest(model, diagonal_target, grid, {seed});

  const int m = model.levels;
  const int n = model.relevant_dim;
  const ControlField zero = ControlField::zero(grid);

  // Field-correction profiles at zero field, all three update flavours.
  const auto fwd_gate =
      propagate_rows_forward(model, zero, grid, identity_rows(m, n));
  const auto bwd_gate = propagate_rows_backward(
      model, zero, grid, diagonal_target.padded_columns(m));
  double max_ev = 0.0;
  for (int j = 0; j <= grid.steps; ++j) {
    max_ev = std::max(max_ev, std::abs(field_correction_evolution(
                                  model.dipole, fwd_gate.at_node(j),
                                  bwd_gate.at_node(j), 1.0)));
  }
  report.add_check("zero-field update, evolution", max_ev, "<=", 1e-12);

  for (BasisMode mode : {BasisMode::orthonormal, BasisMode::phase_corrected}) {
    const InitialBasis basis = build_initial_basis(mode, n, m);
    const auto fwd = propagate_rows_forward(model, zero, grid, basis.states);
    const Eigen::MatrixXcd targets = final_targets(diagonal_target, basis, m);
    const auto bwd = propagate_rows_backward(model, zero, grid, targets);
    const Eigen::VectorXcd factors = overlap_factors(fwd.final(), targets);
    double max_ss = 0.0;
    for (int j = 0; j <= grid.steps; ++j) {
      max_ss = std::max(
          max_ss, std::abs(field_correction_s2s(model.dipole, fwd.at_node(j),
                                                bwd.at_node(j), factors, 1.0)));
    }
    report.add_check("zero-field update, state-to-state " + to_string(mode),
                     max_ss, "<=", 1e-12);
    report.add_check(
        "zero-field residual_s2s " + to_string(mode),
        residual_s2s(model, zero, grid, diagonal_target, basis), "<=", 1e-12);
  }

  report.add_check("zero-field residual_evolution",
                   residual_evolution(model, zero, grid, diagonal_target),
                   "<=", 1e-12);

  const double zero_fidelity =
      gate_fidelity(gate_overlap(diagonal_target, fwd_gate.final()));
  report.add_check("zero-field fidelity stays below stop threshold",
                   zero_fidelity, "<", 0.999);

  // Free evolution already maximizes the phase-blind objective on the
  // orthonormal basis (it realizes some diagonal-family member), which is
  // the ambiguity in miniature.
  {
    const InitialBasis ortho =
        build_initial_basis(BasisMode::orthonormal, n, m);
    const auto fwd = propagate_rows_forward(model, zero, grid, ortho.states);
    const double eta_zero = transfer_objective(
        fwd.final(), final_targets(diagonal_target, ortho, m));
    report.add_check("zero-field transfer objective, orthonormal basis",
                     eta_zero / n, "info", 0.0);
  }

  // The optimizer parks immediately on this stationary point. The
  // state-to-state run uses the phase-corrected basis, whose objective is
  // genuinely short of its maximum here.
  for (Approach approach : {Approach::evolution, Approach::state_to_state}) {
    OptimizerConfig config;
    config.approach = approach;
    config.basis_mode = BasisMode::phase_corrected;
    config.lambda = 1.0;
    config.max_iters = 50;
    config.stop_fidelity = 0.999;
    config.stop_update_norm = 1e-20;
    config.initial_field = zero;
    const OptimizationResult run = optimize(model, diagonal_target, grid, config);
    const bool stopped = run.reason == StopReason::update_norm;
    report.add_check(
        "zero-field run stops on update norm, " + to_string(approach),
        stopped ? 1.0 : 0.0, ">=", 1.0);
    report.add_check(
        "zero-field run iterations, " + to_string(approach),
        static_cast<double>(run.trace.records.size()), "<=", 1.0);
  }

  // A weak broadband guess escapes the stationary point.
  OptimizerConfig escape;
  escape.approach = Approach::evolution;
  escape.lambda = 1.0;
  escape.max_iters = 3000;
  escape.stop_fidelity = 0.99;
  escape.rng_seed = seed;
  const ControlField guess = default_initial_guess(model, grid, seed);
  escape.initial_field = guess;
  const OptimizationResult escaped =
      optimize(model, diagonal_target, grid, escape);
  report.add_check("escape-run first update norm",
                   escaped.trace.records.front().update_norm, ">", 0.0);
  report.add_check("escape-run fidelity", gate_fidelity(escaped.overlap),
                   ">=", 0.99);
  report.curves.push_back(trace_curve("spurious_diagonal_escape",
                                      escaped.trace));

  report.add_measurement("zero_field_fidelity", zero_fidelity);
  report.add_measurement("escape_iterations",
                         static_cast<double>(escaped.trace.records.size()));
  report.wall_ms = elapsed_ms(started);
  return report;
}

ExperimentReport exp_equivalence(const SystemModel& model,
                                 const TargetGate& target, const TimeGrid& grid,
                                 unsigned seed) {
  const auto started = clock_type::now();
  ExperimentReport report;
  report.name = "equivalence";
  report.inputs_digest = digest(model, target, grid, {seed});

  const int m = model.levels;
  const int n = model.relevant_dim;

  // (a) On shared trajectories, forcing unit overlap factors and halving
  // lambda on the evolution side makes the two update rules identical.
  const ControlField probe = seeded_probe_field(grid, 0.25, seed);
  const auto fwd =
      propagate_rows_forward(model, probe, grid, identity_rows(m, n));
  const auto bwd =
      propagate_rows_backward(model, probe, grid, target.padded_columns(m));
  const Eigen::VectorXcd unit_factors = Eigen::VectorXcd::Ones(n);
  const double lambda = 1.0;
  double max_gap = 0.0;
  for (int j = 0; j <= grid.steps; ++j) {
    const double ss = field_correction_s2s(model.dipole, fwd.at_node(j),
                                           bwd.at_node(j), unit_factors, lambda);
    const double ev = field_correction_evolution(
        model.dipole, fwd.at_node(j), bwd.at_node(j), lambda / 2.0);
    max_gap = std::max(max_gap, std::abs(ss - ev));
  }
  report.add_check("update rules agree with unit factors", max_gap, "<=", 1e-12);

  // (b, c) Converge the evolution objective hard, then check the
  // state-to-state stationarity condition on the same field.
  OptimizerConfig config;
  config.approach = Approach::evolution;
  config.lambda = 1.0;
  config.max_iters = 5000;
  config.stop_fidelity = 1.0;
  config.stop_update_norm = 1e-14;
  config.rng_seed = seed;
  const OptimizationResult run = optimize(model, target, grid, config);
  const double fidelity = gate_fidelity(run.overlap);
  report.add_check("evolution run fidelity", fidelity, ">=", 1.0 - 1e-6);

  const InitialBasis corrected =
      build_initial_basis(BasisMode::phase_corrected, n, m);
  const auto profile_ev =
      residual_evolution_profile(model, run.field, grid, target);
  const auto profile_ss =
      residual_s2s_profile(model, run.field, grid, target, corrected);
  const auto fwd_corrected =
      propagate_rows_forward(model, run.field, grid, corrected.states);
  const double eta_corrected = transfer_objective(
      fwd_corrected.final(), final_targets(target, corrected, m));
  report.add_check("converged field transfer objective / N", eta_corrected / n,
                   ">=", 1.0 - 1e-5);
  report.add_check("converged field residual_s2s", max_abs_value(profile_ss),
                   "<=", 1e-4);
  report.add_check("converged field residual_evolution (tight)",
                   max_abs_value(profile_ev), "<=", 1e-5);
  report.add_check("converged field residual_s2s (tight)",
                   max_abs_value(profile_ss), "<=", 1e-5);
  report.curves.push_back(
      residual_curve("equivalence_residuals", grid, profile_ev, profile_ss));
  report.curves.push_back(trace_curve("equivalence_trace", run.trace));
  report.add_measurement("realized_global_phase", -std::arg(run.overlap.value));
  report.add_measurement("iterations",
                         static_cast<double>(run.trace.records.size()));

  // Identity target at a horizon where the free phases realign: the zero
  // field already implements the gate and both residuals vanish.
  {
    const SystemModel& free_model = model;
    const TimeGrid realign(2.0 * std::numbers::pi, 50);
    const TargetGate identity = instances::identity_gate(n);
    const ControlField zero = ControlField::zero(realign);
    const auto fwd_zero = propagate_rows_forward(free_model, zero, realign,
                                                 identity_rows(m, n));
    const double fid_zero =
        gate_fidelity(gate_overlap(identity, fwd_zero.final()));
    report.add_check("identity target free-evolution fidelity", fid_zero, ">=",
                     1.0 - 1e-12);
    report.add_check(
        "identity target residual_evolution",
        residual_evolution(free_model, zero, realign, identity), "<=", 1e-12);
    report.add_check(
        "identity target residual_s2s",
        residual_s2s(free_model, zero, realign, identity, corrected), "<=",
        1e-12);
  }

  report.wall_ms = elapsed_ms(started);
  return report;
}

ExperimentReport exp_row_vs_full(const SystemModel& model,
                                 const ControlField& field,
                                 const TimeGrid& grid) {
  const auto started = clock_type::now();
  ExperimentReport report;
  report.name = "row_vs_full";
  report.inputs_digest = digest(model, TargetGate{Eigen::MatrixXcd::Identity(
                                    model.relevant_dim, model.relevant_dim)},
                                grid, {});

  const int m = model.levels;
  const int n = model.relevant_dim;
  const Eigen::MatrixXcd init = identity_rows(m, n);

  // Warm up once, then time the best of three repetitions of each path.
  auto time_rows = [&]() {
    const auto t0 = clock_type::now();
    const auto traj = propagate_rows_forward(model, field, grid, init);
    const double ms = elapsed_ms(t0);
    return std::make_pair(ms, traj.final());
  };
  auto time_full = [&]() {
    const auto t0 = clock_type::now();
    const Eigen::MatrixXcd u = propagate_full_unitary(model, field, grid);
    const double ms = elapsed_ms(t0);
    return std::make_pair(ms, u);
  };

  auto [warm_rows_ms, rows_final] = time_rows();
  auto [warm_full_ms, unitary] = time_full();
  double rows_ms = warm_rows_ms;
  double full_ms = warm_full_ms;
  for (int rep = 0; rep < 5; ++rep) {
    rows_ms = std::min(rows_ms, time_rows().first);
    full_ms = std::min(full_ms, time_full().first);
  }

  const double agreement =
      (rows_final - unitary.leftCols(n)).cwiseAbs().maxCoeff();
  report.add_check("row vs full propagation agreement", agreement, "<=", 1e-10);
  report.add_check("full unitary stays unitary",
                   (unitary.adjoint() * unitary -
                    Eigen::MatrixXcd::Identity(m, m))
                       .cwiseAbs()
                       .maxCoeff(),
                   "<=", 1e-10);

  const double ratio = full_ms / rows_ms;
  report.add_check("wall-time ratio full/rows", ratio, ">", 1.0);
  report.add_measurement("rows_ms", rows_ms);
  report.add_measurement("full_ms", full_ms);

  // Degenerate M = N case: both paths perform the same matrix products.
  {
    const SystemModel square = instances::ladder(4, 4, 99);
    const TimeGrid small_grid(grid.horizon, std::min(grid.steps, 100));
    const ControlField probe = seeded_probe_field(small_grid, 0.2, 99);
    const auto traj = propagate_rows_forward(square, probe, small_grid,
                                             identity_rows(4, 4));
    const Eigen::MatrixXcd u = propagate_full_unitary(square, probe, small_grid);
    report.add_check("square case agreement",
                     (traj.final() - u).cwiseAbs().maxCoeff(), "<=", 1e-12);
  }

  report.wall_ms = elapsed_ms(started);
  return report;
}

ExperimentReport exp_gradient_fd(const SystemModel& model,
                                 const TargetGate& target, const TimeGrid& grid,
                                 unsigned seed) {
  const auto started = clock_type::now();
  ExperimentReport report;
  report.name = "gradient_fd";
  report.inputs_digest = digest(model, target, grid, {seed});

  const int m = model.levels;
  const int n = model.relevant_dim;
  const double h = 1e-6;
  const InitialBasis corrected =
      build_initial_basis(BasisMode::phase_corrected, n, m);
  const Eigen::MatrixXcd targets = final_targets(target, corrected, m);

  auto re_overlap_of = [&](const ControlField& f) {
    const auto fwd = propagate_rows_forward(model, f, grid, identity_rows(m, n));
    return gate_overlap(target, fwd.final()).value.real();
  };
  auto transfer_of = [&](const ControlField& f) {
    const auto fwd = propagate_rows_forward(model, f, grid, corrected.states);
    return transfer_objective(fwd.final(), targets);
  };

  // 20 distinct sampled intervals.
  std::mt19937_64 rng(seed);
  std::vector<int> intervals(grid.steps);
  for (int j = 0; j < grid.steps; ++j) intervals[j] = j;
  std::shuffle(intervals.begin(), intervals.end(), rng);
  const int samples = std::min(20, grid.steps);
  intervals.resize(samples);

  auto central_diff = [&](auto&& objective, const ControlField& base, int j) {
    ControlField plus = base;
    ControlField minus = base;
    plus.samples[j] += h;
    minus.samples[j] -= h;
    return (objective(plus) - objective(minus)) / (2.0 * h);
  };

  // Relative error with a floor tied to the gradient scale, so sampled
  // zero crossings do not blow up the quotient.
  auto max_rel_error = [&](const std::vector<double>& analytic,
                           auto&& objective, const ControlField& base,
                           ExperimentCurve& curve) {
    const double scale = max_abs_value(analytic);
    double worst = 0.0;
    for (int j : intervals) {
      const double fd = central_diff(objective, base, j);
      const double denom =
          std::max({std::abs(analytic[j]), std::abs(fd), 1e-6 * scale});
      const double rel = denom > 0.0 ? std::abs(fd - analytic[j]) / denom : 0.0;
      worst = std::max(worst, rel);
      curve.rows.push_back({static_cast<double>(j), fd, analytic[j], rel});
    }
    return worst;
  };

  const ControlField base = seeded_probe_field(grid, 0.3, seed);

  ExperimentCurve overlap_curve;
  overlap_curve.name = "gradient_fd_re_overlap";
  overlap_curve.columns = {"interval", "finite_difference", "analytic", "rel_error"};
  const auto grad_overlap = gradient_re_overlap(model, base, grid, target);
  report.add_check(
      "Re overlap gradient max relative error",
      max_rel_error(grad_overlap, re_overlap_of, base, overlap_curve), "<=",
      1e-4);

  ExperimentCurve transfer_curve;
  transfer_curve.name = "gradient_fd_transfer";
  transfer_curve.columns = {"interval", "finite_difference", "analytic", "rel_error"};
  const auto grad_transfer =
      gradient_transfer(model, base, grid, target, corrected);
  report.add_check(
      "transfer gradient max relative error",
      max_rel_error(grad_transfer, transfer_of, base, transfer_curve), "<=",
      1e-4);

  // Doubling the field changes the gradients but not the agreement.
  ControlField doubled = base;
  for (double& v : doubled.samples) v *= 2.0;
  ExperimentCurve doubled_curve;
  doubled_curve.name = "gradient_fd_re_overlap_doubled";
  doubled_curve.columns = {"interval", "finite_difference", "analytic", "rel_error"};
  const auto grad_doubled = gradient_re_overlap(model, doubled, grid, target);
  report.add_check(
      "doubled-field gradient max relative error",
      max_rel_error(grad_doubled, re_overlap_of, doubled, doubled_curve), "<=",
      1e-4);
  double gradient_shift = 0.0;
  for (int j = 0; j < grid.steps; ++j) {
    gradient_shift =
        std::max(gradient_shift, std::abs(grad_doubled[j] - grad_overlap[j]));
  }
  report.add_check("doubled field shifts the gradient", gradient_shift, ">",
                   1e-10);

  // Zero field with a diagonal target: both gradients vanish identically.
  {
    const TargetGate diag = instances::diagonal_flip();
    const ControlField zero = ControlField::zero(grid);
    const auto g1 = gradient_re_overlap(model, zero, grid, diag);
    const InitialBasis ortho =
        build_initial_basis(BasisMode::orthonormal, n, m);
    const auto g2 = gradient_transfer(model, zero, grid, diag, ortho);
    report.add_check("zero-field diagonal-target overlap gradient",
                     max_abs_value(g1), "<=", 1e-12);
    report.add_check("zero-field diagonal-target transfer gradient",
                     max_abs_value(g2), "<=", 1e-12);
    auto diag_overlap_of = [&](const ControlField& f) {
      const auto fwd =
          propagate_rows_forward(model, f, grid, identity_rows(m, n));
      return gate_overlap(diag, fwd.final()).value.real();
    };
    double max_fd = 0.0;
    for (int j : intervals) {
      max_fd = std::max(max_fd, std::abs(central_diff(diag_overlap_of, zero, j)));
    }
    report.add_check("zero-field diagonal-target finite differences", max_fd,
                     "<=", 1e-8);
  }

  report.curves.push_back(overlap_curve);
  report.curves.push_back(transfer_curve);
  report.curves.push_back(doubled_curve);
  report.wall_ms = elapsed_ms(started);
  return report;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "phase_ambiguity", "spurious_diagonal", "equivalence", "row_vs_full",
      "gradient_fd"};
  return names;
}

ExperimentReport run_experiment(const std::string& name,
                                std::optional<unsigned> seed) {
  if (name == "phase_ambiguity") {
    const unsigned base = seed.value_or(1);
    return exp_phase_ambiguity(instances::two_level(),
                               instances::hadamard_like(), TimeGrid(20.0, 400),
                               DiagonalUnitary{Eigen::Vector2d(0.0,
                                                               std::numbers::pi)},
                               {base, base + 1, base + 2});
  }
  if (name == "spurious_diagonal") {
    // Horizon where free evolution is close to (but short of) the diagonal
    // target, so the escape run has a gradient-accessible path; the
    // zero-field stationarity is exact for any horizon.
    return exp_spurious_diagonal(instances::two_level(),
                                 instances::diagonal_flip(),
                                 TimeGrid(21.0, 420), seed.value_or(7));
  }
  if (name == "equivalence") {
    return exp_equivalence(instances::two_level(), instances::not_gate(),
                           TimeGrid(20.0, 400), seed.value_or(11));
  }
  if (name == "row_vs_full") {
    const unsigned s = seed.value_or(5);
    const SystemModel model = instances::ladder(32, 2, s);
    const TimeGrid grid(10.0, 400);
    return exp_row_vs_full(model, seeded_probe_field(grid, 0.2, s), grid);
  }
  if (name == "gradient_fd") {
    // dt small enough that the midpoint co-location of the continuous
    // integrands stays well inside the finite-difference tolerance.
    return exp_gradient_fd(instances::two_level(), instances::not_gate(),
                           TimeGrid(0.8, 100), seed.value_or(3));
  }
  throw std::invalid_argument("unknown experiment: " + name);
}

}  // namespace gateforge
