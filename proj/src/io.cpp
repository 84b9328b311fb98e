#include "gateforge/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gateforge/functionals.hpp"

namespace gateforge {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ModelFileError("cannot open file: " + path.string());
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& err) {
    throw ModelFileError(path.string() + ": " + err.what());
  }
}

complexd parse_complex(const json& value, const std::string& where,
                       std::vector<std::string>& issues) {
  if (!value.is_array() || value.size() != 2 || !value[0].is_number() ||
      !value[1].is_number()) {
    issues.push_back(where + " must be a [re, im] pair");
    return {};
  }
  return complexd(value[0].get<double>(), value[1].get<double>());
}

Eigen::MatrixXcd parse_complex_matrix(const json& value, int rows, int cols,
                                      const std::string& name,
                                      std::vector<std::string>& issues) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(rows, cols);
  if (!value.is_array() || static_cast<int>(value.size()) != rows) {
    issues.push_back(name + " must be a " + std::to_string(rows) + "x" +
                     std::to_string(cols) + " array");
    return out;
  }
  for (int r = 0; r < rows; ++r) {
    const json& row = value[r];
    if (!row.is_array() || static_cast<int>(row.size()) != cols) {
      issues.push_back(name + " row " + std::to_string(r + 1) + " must have " +
                       std::to_string(cols) + " entries");
      continue;
    }
    for (int c = 0; c < cols; ++c) {
      out(r, c) = parse_complex(row[c],
                                name + "(" + std::to_string(r + 1) + "," +
                                    std::to_string(c + 1) + ")",
                                issues);
    }
  }
  return out;
}

}  // namespace

LoadedModel load_model(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  std::vector<std::string> issues;

  for (const char* key : {"M", "N", "energies", "mu", "target", "grid"}) {
    if (!doc.contains(key)) {
      issues.push_back(std::string("missing field: ") + key);
    }
  }
  if (!issues.empty()) {
    throw ModelFileError(path.string() + ": malformed model file", issues);
  }

  const int m = doc["M"].get<int>();
  const int n = doc["N"].get<int>();
  if (m < 1) issues.push_back("M must be positive");
  if (n < 1) issues.push_back("N must be positive");
  if (!issues.empty()) {
    throw ModelFileError(path.string() + ": malformed model file", issues);
  }

  SystemModel model;
  model.levels = m;
  model.relevant_dim = n;
  model.energies.resize(m);
  const json& energies = doc["energies"];
  if (!energies.is_array() || static_cast<int>(energies.size()) != m) {
    issues.push_back("energies must be an array of M reals");
  } else {
    for (int k = 0; k < m; ++k) {
      if (!energies[k].is_number()) {
        issues.push_back("energies[" + std::to_string(k + 1) + "] must be a real");
      } else {
        model.energies[k] = energies[k].get<double>();
      }
    }
  }
  model.dipole = parse_complex_matrix(doc["mu"], m, m, "mu", issues);

  if (doc["target"].is_array() && static_cast<int>(doc["target"].size()) != n) {
    issues.push_back("target must be N x N (N=" + std::to_string(n) +
                     ", got " + std::to_string(doc["target"].size()) + " rows)");
    throw ModelFileError(path.string() + ": invalid model", issues);
  }
  TargetGate target{parse_complex_matrix(doc["target"], n, n, "target", issues)};

  const json& grid_obj = doc["grid"];
  if (!grid_obj.contains("T") || !grid_obj.contains("steps")) {
    issues.push_back("grid must carry T and steps");
    throw ModelFileError(path.string() + ": invalid model", issues);
  }
  const double horizon = grid_obj["T"].get<double>();
  const int steps = grid_obj["steps"].get<int>();
  if (!(horizon > 0.0)) issues.push_back("grid.T must be positive");
  if (steps < 1) issues.push_back("grid.steps must be positive");

  const ValidationReport report = validate_model(model);
  issues.insert(issues.end(), report.errors.begin(), report.errors.end());
  if (issues.empty() && !is_unitary(target.block)) {
    issues.push_back("target block is not unitary within 1e-12");
  }
  if (!issues.empty()) {
    throw ModelFileError(path.string() + ": invalid model", issues);
  }
  for (const auto& warning : report.warnings) {
    std::cerr << path.string() << ": warning: " << warning << "\n";
  }

  return LoadedModel{std::move(model), std::move(target),
                     TimeGrid(horizon, steps)};
}

void save_field(const std::filesystem::path& path, const ControlField& field,
                const TimeGrid& grid) {
  json doc;
  doc["grid"] = {{"T", grid.horizon}, {"steps", grid.steps}};
  doc["samples"] = field.samples;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

ControlField load_field(const std::filesystem::path& path,
                        const TimeGrid& grid) {
  const json doc = read_json_file(path);
  std::vector<std::string> issues;
  if (!doc.contains("samples") || !doc["samples"].is_array()) {
    throw ModelFileError(path.string() + ": field file needs a samples array");
  }
  if (doc.contains("grid")) {
    const double horizon = doc["grid"].value("T", -1.0);
    const int steps = doc["grid"].value("steps", -1);
    if (std::abs(horizon - grid.horizon) > 1e-12 || steps != grid.steps) {
      throw ModelFileError(path.string() +
                           ": field grid does not match the model grid");
    }
  }
  ControlField field;
  field.samples = doc["samples"].get<std::vector<double>>();
  if (static_cast<int>(field.samples.size()) != grid.steps) {
    throw ModelFileError(path.string() + ": field length does not match grid");
  }
  return field;
}

namespace {

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (size_t c = 0; c < columns.size(); ++c) {
    out << columns[c] << (c + 1 < columns.size() ? "," : "\n");
  }
  for (const auto& row : rows) {
    for (size_t c = 0; c < row.size(); ++c) {
      out << fmt(row[c]) << (c + 1 < row.size() ? "," : "\n");
    }
  }
}

}  // namespace

void write_trace_csv(const std::filesystem::path& path,
                     const OptimizationTrace& trace) {
  std::vector<std::vector<double>> rows;
  rows.reserve(trace.records.size());
  for (const auto& r : trace.records) {
    rows.push_back({static_cast<double>(r.iter), r.re_tau, r.abs_tau,
                    r.fidelity, r.eta, r.fluence, r.update_norm, r.wall_ms});
  }
  write_csv(path,
            {"iter", "re_tau", "abs_tau", "fidelity", "eta", "fluence",
             "update_norm", "wall_ms"},
            rows);
}

void write_residual_csv(const std::filesystem::path& path, const TimeGrid& grid,
                        const std::vector<double>& evolution,
                        const std::vector<double>& s2s) {
  std::vector<std::vector<double>> rows;
  for (size_t j = 0; j < evolution.size(); ++j) {
    rows.push_back({grid.node_time(static_cast<int>(j)), evolution[j],
                    j < s2s.size() ? s2s[j] : 0.0});
  }
  write_csv(path, {"time", "residual_evolution", "residual_s2s"}, rows);
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const TimeGrid& grid,
                          const RowTrajectory& trajectory) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "step,time,row_index,component_index,re,im\n";
  for (int node = 0; node < static_cast<int>(trajectory.nodes.size()); ++node) {
    const auto& mat = trajectory.nodes[node];
    for (int l = 0; l < mat.cols(); ++l) {
      for (int c = 0; c < mat.rows(); ++c) {
        out << node << "," << fmt(grid.node_time(node)) << "," << l + 1 << ","
            << c + 1 << "," << fmt(mat(c, l).real()) << ","
            << fmt(mat(c, l).imag()) << "\n";
      }
    }
  }
}

void write_report_json(const std::filesystem::path& path,
                       const ExperimentReport& report) {
  json doc;
  doc["name"] = report.name;
  doc["inputs_digest"] = report.inputs_digest;
  doc["passed"] = report.passed();
  doc["wall_ms"] = report.wall_ms;
  doc["checks"] = json::array();
  for (const auto& check : report.checks) {
    doc["checks"].push_back({{"name", check.name},
                             {"measured", check.measured},
                             {"comparator", check.comparator},
                             {"threshold", check.threshold},
                             {"pass", check.pass},
                             {"informational", check.informational}});
  }
  doc["measured"] = json::object();
  for (const auto& [key, value] : report.measured) {
    doc["measured"][key] = value;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

void write_report_curves(const std::filesystem::path& directory,
                         const ExperimentReport& report) {
  for (const auto& curve : report.curves) {
    write_csv(directory / (curve.name + ".csv"), curve.columns, curve.rows);
  }
}

namespace {

unsigned env_seed_or(unsigned fallback) {
  const char* raw = std::getenv("GATEFORGE_SEED");
  if (!raw) return fallback;
  char* end = nullptr;
  const unsigned long value = std::strtoul(raw, &end, 10);
  if (end == raw || *end != '\0') {
    std::cerr << "warning: ignoring non-numeric GATEFORGE_SEED\n";
    return fallback;
  }
  return static_cast<unsigned>(value);
}

struct CliOptions {
  std::string model_path;
  std::string field_path;
  std::string initial_field_path;
  std::string trajectory_path;
  std::string out_dir = ".";
  std::string approach = "evolution";
  std::string basis = "phase_corrected";
  std::string scheme = "krotov";
  std::string experiment = "all";
  double lambda = 1.0;
  int max_iters = 200;
  double stop_fidelity = 0.999;
  double stop_update_norm = 0.0;
  double alpha = 0.5;
  unsigned seed = 0;
  int verbosity = 0;
};

Approach parse_approach(const std::string& name) {
  if (name == "evolution") return Approach::evolution;
  if (name == "state_to_state" || name == "s2s") return Approach::state_to_state;
  throw std::invalid_argument("unknown approach: " + name);
}

BasisMode parse_basis(const std::string& name) {
  if (name == "orthonormal") return BasisMode::orthonormal;
  if (name == "phase_corrected") return BasisMode::phase_corrected;
  throw std::invalid_argument("unknown basis: " + name);
}

Scheme parse_scheme(const std::string& name) {
  if (name == "krotov") return Scheme::krotov;
  if (name == "gradient") return Scheme::gradient;
  throw std::invalid_argument("unknown scheme: " + name);
}

int cmd_validate(const CliOptions& opts) {
  try {
    const LoadedModel loaded = load_model(opts.model_path);
    std::cout << "model ok: M=" << loaded.model.levels
              << " N=" << loaded.model.relevant_dim
              << " T=" << loaded.grid.horizon
              << " steps=" << loaded.grid.steps << "\n";
    return 0;
  } catch (const ModelFileError& err) {
    std::cerr << err.what() << "\n";
    for (const auto& issue : err.issues) std::cerr << "  - " << issue << "\n";
    return 1;
  }
}

int cmd_propagate(const CliOptions& opts) {
  const LoadedModel loaded = load_model(opts.model_path);
  const ControlField field =
      opts.field_path.empty() ? ControlField::zero(loaded.grid)
                              : load_field(opts.field_path, loaded.grid);
  const auto fwd = propagate_rows_forward(
      loaded.model, field, loaded.grid,
      identity_rows(loaded.model.levels, loaded.model.relevant_dim));
  const GateOverlap overlap = gate_overlap(loaded.target, fwd.final());

  std::cout << "re_tau=" << fmt(overlap.value.real())
            << " im_tau=" << fmt(overlap.value.imag())
            << " fidelity=" << fmt(gate_fidelity(overlap))
            << " realized_phase=" << fmt(-std::arg(overlap.value))
            << " spectrum_phase=" << fmt(spectrum_phase(loaded.model,
                                                        loaded.grid.horizon))
            << " norm_drift=" << fmt(fwd.max_norm_drift()) << "\n";

  if (!opts.trajectory_path.empty()) {
    write_trajectory_csv(opts.trajectory_path, loaded.grid, fwd);
  }
  return 0;
}

int cmd_optimize(const CliOptions& opts) {
  const LoadedModel loaded = load_model(opts.model_path);
  OptimizerConfig config;
  config.approach = parse_approach(opts.approach);
  config.basis_mode = parse_basis(opts.basis);
  config.scheme = parse_scheme(opts.scheme);
  config.lambda = opts.lambda;
  config.max_iters = opts.max_iters;
  config.stop_fidelity = opts.stop_fidelity;
  config.stop_update_norm = opts.stop_update_norm;
  config.gradient_step = opts.alpha;
  config.rng_seed = env_seed_or(opts.seed);
  if (!opts.initial_field_path.empty()) {
    config.initial_field = load_field(opts.initial_field_path, loaded.grid);
  }

  const OptimizationResult result =
      optimize(loaded.model, loaded.target, loaded.grid, config);

  const std::filesystem::path out_dir(opts.out_dir);
  std::filesystem::create_directories(out_dir);
  save_field(out_dir / "field.json", result.field, loaded.grid);
  write_trace_csv(out_dir / "trace.csv", result.trace);

  std::cout << "stopped=" << to_string(result.reason)
            << " iterations=" << result.trace.records.size()
            << " re_tau=" << fmt(result.overlap.value.real())
            << " abs_tau=" << fmt(std::abs(result.overlap.value))
            << " fidelity=" << fmt(gate_fidelity(result.overlap))
            << " eta=" << fmt(result.eta)
            << " realized_phase=" << fmt(-std::arg(result.overlap.value))
            << " residual_evolution=" << fmt(result.residual_evolution)
            << " residual_s2s=" << fmt(result.residual_s2s) << "\n";
  return 0;
}

int cmd_residual(const CliOptions& opts) {
  const LoadedModel loaded = load_model(opts.model_path);
  if (opts.field_path.empty()) {
    throw std::invalid_argument("residual requires --field");
  }
  const ControlField field = load_field(opts.field_path, loaded.grid);
  const auto profile_ev =
      residual_evolution_profile(loaded.model, field, loaded.grid,
                                 loaded.target);
  const InitialBasis basis = build_initial_basis(
      parse_basis(opts.basis), loaded.model.relevant_dim, loaded.model.levels);
  const auto profile_ss = residual_s2s_profile(loaded.model, field, loaded.grid,
                                               loaded.target, basis);

  const std::filesystem::path out_dir(opts.out_dir);
  std::filesystem::create_directories(out_dir);
  write_residual_csv(out_dir / "residuals.csv", loaded.grid, profile_ev,
                     profile_ss);

  double max_ev = 0.0, max_ss = 0.0;
  for (double v : profile_ev) max_ev = std::max(max_ev, v);
  for (double v : profile_ss) max_ss = std::max(max_ss, v);
  std::cout << "residual_evolution=" << fmt(max_ev)
            << " residual_s2s=" << fmt(max_ss) << "\n";
  return 0;
}

int cmd_experiment(const CliOptions& opts) {
  std::vector<std::string> names;
  if (opts.experiment == "all") {
    names = experiment_names();
  } else {
    names.push_back(opts.experiment);
  }
  const std::filesystem::path out_dir(opts.out_dir);
  std::filesystem::create_directories(out_dir);

  const char* env = std::getenv("GATEFORGE_SEED");
  std::optional<unsigned> seed;
  if (opts.seed != 0 || env) seed = env_seed_or(opts.seed);

  bool all_passed = true;
  for (const auto& name : names) {
    const ExperimentReport report = run_experiment(name, seed);
    std::cout << report.summary();
    write_report_json(out_dir / (name + "_report.json"), report);
    write_report_curves(out_dir, report);
    all_passed = all_passed && report.passed();
  }
  return all_passed ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"pulse synthesis for subspace unitary gates"};
  app.require_subcommand(1);
  CliOptions opts;

  auto* validate = app.add_subcommand("validate", "check a model file");
  validate->add_option("model", opts.model_path, "model JSON file")->required();

  auto* propagate =
      app.add_subcommand("propagate", "forward propagation report");
  propagate->add_option("model", opts.model_path)->required();
  propagate->add_option("--field", opts.field_path, "field JSON (default: zero)");
  propagate->add_option("--trajectory", opts.trajectory_path,
                        "dump trajectory CSV to this path");

  auto* optimize_cmd =
      app.add_subcommand("optimize", "run the iterative field construction");
  optimize_cmd->add_option("model", opts.model_path)->required();
  optimize_cmd->add_option("--approach", opts.approach,
                           "evolution | state_to_state");
  optimize_cmd->add_option("--basis", opts.basis,
                           "orthonormal | phase_corrected");
  optimize_cmd->add_option("--scheme", opts.scheme, "krotov | gradient");
  optimize_cmd->add_option("--lambda", opts.lambda, "correction penalty weight");
  optimize_cmd->add_option("--max-iters", opts.max_iters);
  optimize_cmd->add_option("--stop-fidelity", opts.stop_fidelity);
  optimize_cmd->add_option("--stop-update-norm", opts.stop_update_norm);
  optimize_cmd->add_option("--alpha", opts.alpha, "gradient-scheme step size");
  optimize_cmd->add_option("--seed", opts.seed, "initial-guess seed");
  optimize_cmd->add_option("--initial-field", opts.initial_field_path);
  optimize_cmd->add_option("--out", opts.out_dir, "output directory");

  auto* residual =
      app.add_subcommand("residual", "stationarity residual profiles");
  residual->add_option("model", opts.model_path)->required();
  residual->add_option("--field", opts.field_path)->required();
  residual->add_option("--basis", opts.basis);
  residual->add_option("--out", opts.out_dir);

  auto* experiment = app.add_subcommand("experiment", "run a named experiment");
  experiment->add_option("name", opts.experiment,
                         "experiment name or 'all'");
  experiment->add_option("--seed", opts.seed);
  experiment->add_option("--out", opts.out_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& help) {
    return app.exit(help);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return 2;
  }

  try {
    if (validate->parsed()) return cmd_validate(opts);
    if (propagate->parsed()) return cmd_propagate(opts);
    if (optimize_cmd->parsed()) return cmd_optimize(opts);
    if (residual->parsed()) return cmd_residual(opts);
    if (experiment->parsed()) return cmd_experiment(opts);
    return 2;
  } catch (const ModelFileError& err) {
    std::cerr << err.what() << "\n";
    for (const auto& issue : err.issues) std::cerr << "  - " << issue << "\n";
    return 2;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}

}  // namespace gateforge
