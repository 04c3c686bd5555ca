#pragma once

#include "hhj/postprocess.hpp"
#include "hhj/solver.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace hhj {

enum class TableFormat { Csv, Markdown };
std::string to_string(TableFormat format);
TableFormat table_format_from_string(const std::string& name);

struct StudyConfig {
  int dim = 2;
  int order = 2;
  std::vector<int> levels;  ///< empty: default_levels(dim, order)
  double nu = 1e-6;
  double tol = 1e-10;
  TableFormat format = TableFormat::Csv;
  unsigned long long seed = 1;
  int threads = 1;
  bool perturbation = true;  ///< run the f -> f + grad(theta) check
  SolverMethod method = SolverMethod::Direct;
  bool timing = true;        ///< false writes 0 to wall_time_s (byte-stable output)

  /// Throws hhj::Error on an unsupported (dim, k), non-increasing levels or
  /// out-of-range tolerance. Fills default levels.
  void validate();
};

/// n = 4..64 (2D k=2), 4..32 (2D k=3), 2..16 (2D k=4), 1..4 (3D k=2), 1..2 (3D k=3).
std::vector<int> default_levels(int dim, int order);

/// Reads keys dim, order, levels, nu, tol, format, seed, threads, perturbation,
/// method, timing from a JSON object; missing keys keep the values in `base`.
StudyConfig config_from_json(const std::string& text, StudyConfig base = {});
StudyConfig load_config(const std::string& path, StudyConfig base = {});

struct LevelResult {
  int n = 0;
  ErrorReport errors;
  double solver_residual = 0.0;
  double wall_time_s = 0.0;
  double multiplier_ratio = 0.0;  ///< ||grad lambda_h|| / ||f||, 3D
  double pressure_w = 0.0;        ///< relative ||w_h||_{1,h} of the recovery
};

struct Rates {
  double h1semi_u = 0.0;
  double l2_sigma = 0.0;
  double l2_p = 0.0;
  double l2_u = 0.0;
};
/// eoc of level i against level i - 1 (i >= 1).
Rates rates(const std::vector<LevelResult>& levels, std::size_t i);

struct StudyResult {
  StudyConfig config;
  std::vector<LevelResult> levels;
};

/// Solves one level: assemble, solve, recover the pressure, measure errors.
LevelResult run_level(const StudyConfig& config, int n);

/// Runs every level and streams the table to `out`, one row per finished
/// level. A solver failure propagates after the rows so far are flushed.
StudyResult run_study(StudyConfig config, std::ostream& out);

void write_header(const StudyConfig& config, std::ostream& out);
void write_row(const StudyConfig& config, const std::vector<LevelResult>& levels, std::size_t i,
               std::ostream& out);

struct CheckResult {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
  std::string detail;
};

struct CheckReport {
  std::vector<CheckResult> checks;
  [[nodiscard]] bool passed() const;
};

/// Invariant suite on the coarsest configured level: exact sequence,
/// representation equivalence, multiplier vanishing (3D), pressure
/// robustness, viscosity independence, pressure-recovery self-check and
/// nt-continuity of a seeded random stress. Results are written to `out`.
CheckReport run_checks(StudyConfig config, std::ostream& out);

/// Largest nt-trace mismatch across interior facets, relative to the largest
/// nt value, for the given stress function.
double nt_jump(const FEFunction& sigma_h);

}  // namespace hhj
