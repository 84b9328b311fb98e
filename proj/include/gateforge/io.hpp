#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "gateforge/experiments.hpp"
#include "gateforge/model.hpp"
#include "gateforge/optimizer.hpp"
#include "gateforge/propagation.hpp"

namespace gateforge {

// Model file problems: missing file, malformed JSON, or invariant
// violations. All issues found are carried together.
struct ModelFileError : std::runtime_error {
  ModelFileError(const std::string& what, std::vector<std::string> issues_ = {})
      : std::runtime_error(what), issues(std::move(issues_)) {}
  std::vector<std::string> issues;
};

struct LoadedModel {
  SystemModel model;
  TargetGate target;
  TimeGrid grid;
};

// JSON object with fields M, N, energies, mu (M x M of [re, im]), target
// (N x N of [re, im]) and grid {T, steps}. The model is validated on load;
// every violation is reported at once.
LoadedModel load_model(const std::filesystem::path& path);

// Field files carry the grid they were produced on plus the raw samples,
// serialized value-exact.
void save_field(const std::filesystem::path& path, const ControlField& field,
                const TimeGrid& grid);
ControlField load_field(const std::filesystem::path& path,
                        const TimeGrid& grid);

void write_trace_csv(const std::filesystem::path& path,
                     const OptimizationTrace& trace);
void write_residual_csv(const std::filesystem::path& path, const TimeGrid& grid,
                        const std::vector<double>& evolution,
                        const std::vector<double>& s2s);
void write_trajectory_csv(const std::filesystem::path& path,
                          const TimeGrid& grid, const RowTrajectory& trajectory);
void write_report_json(const std::filesystem::path& path,
                       const ExperimentReport& report);
void write_report_curves(const std::filesystem::path& directory,
                         const ExperimentReport& report);

// Entry point behind the command-line binary. Returns 0 on success or a
// passing report, 1 on assertion/runtime failure, 2 on usage or parse
// errors.
int run_cli(int argc, const char* const* argv);

}  // namespace gateforge
