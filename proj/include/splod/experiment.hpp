#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "splod/coefficient.hpp"
#include "splod/field.hpp"

namespace splod {

/// Flat key=value experiment configuration. Every key can also come
/// from the environment with the SPLOD_ prefix (SPLOD_FINE_LEVEL=6
/// overrides fine_level, and so on).
struct ExperimentConfig {
  std::string method = "splod"; // splod | plod | prototype | fem
  std::vector<int> p_list = {0};
  std::vector<int> ells;    // empty with ell_rule=true -> coupled to H
  bool ell_rule = true;
  std::vector<int> coarse_levels = {2, 3, 4};
  int fine_level = 7;
  std::string coef_family = "a1"; // a1 | a2 | file
  int coef_level = 5;
  std::string coef_file;
  std::uint64_t seed = 1;
  std::string rhs = "default"; // default | one | sine
  std::string out_dir = ".";
  int threads = 1;

  void validate() const;
};

/// Reads key=value lines; '#' starts a comment.
ExperimentConfig load_config(const std::string& path);
void apply_env_overrides(ExperimentConfig& config);
void apply_override(ExperimentConfig& config, const std::string& key,
                    const std::string& value);

/// Right-hand side selector.
double rhs_value(const std::string& selector, double x, double y);

CoefficientField make_coefficient(const ExperimentConfig& config);

/// One row of the convergence CSV.
struct ResultRow {
  std::string method;
  int p = 0;
  int ell = 0;
  double H = 0.0;
  double fine_h = 0.0;
  double err_energy_rel = 0.0;
  double err_l2_rel = 0.0;
  std::int64_t coarse_dofs = 0;
  long corrector_solves = 0;
  double wall_ms = 0.0;
  std::uint64_t seed = 0;
};

extern const char* kConvergenceHeader; // CSV schema, stable
extern const char* kDecayHeader;

std::string format_result_row(const ResultRow& row);

/// Convergence study: one reference solve per fine level, one
/// multiscale solve per (p, coarse level, ell) combination. Rows are
/// streamed to `csv` as they complete. Throws on the first solve
/// failure after writing a failure row.
void run_convergence(const ExperimentConfig& config, std::ostream& csv);

/// Localization study at fixed H: errors of the localized solution
/// against the full-patch solution for each (p, ell); the right-hand
/// side is fixed to f = 1.
void run_decay(const ExperimentConfig& config, std::ostream& csv);

/// Single solve; returns the result row and optionally the solution.
ResultRow run_single_solve(const ExperimentConfig& config, int p,
                           int coarse_level, int ell,
                           FineField* solution_out = nullptr);

/// Field export (basis | bubble | coefficient | solution).
void run_export(const ExperimentConfig& config, const std::string& what,
                ElementId T, int j, const std::string& path);

} // namespace splod
