#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rompc/bounds.hpp"
#include "rompc/problem.hpp"

namespace rompc::pipeline {

enum class CheckStatus { Pass, Fail, Skipped };

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::Skipped;
  std::string detail;
};

struct StageTiming {
  std::string name;
  double seconds = 0.0;
};

/// Machine-readable synthesis summary: dimensions, spectral radius, model
/// error, the bound report, per-invariant checks, and per-stage timings.
struct RunReport {
  Index nf = 0, n = 0, m = 0, p = 0, o = 0, mw = 0;
  double rho_Aeps = 0.0;
  std::optional<double> r_h2;        // relative model error, stable plants
  std::optional<double> h2_reduced;  // reduced closed-loop norm
  Vector hankel_singular_values;
  bounds::BoundReport bound_report;
  std::vector<CheckResult> checks;
  std::vector<StageTiming> timings;

  bool all_checks_pass() const;
};

struct SynthesisOptions {
  std::optional<int> tau;
  std::optional<double> eta;
  std::optional<bool> skip_delta1;
  std::optional<int> horizon;
  std::optional<double> gamma_reg;
  int jobs = 1;
};

struct SynthesisResult {
  RompcDesign design;
  RunReport report;
};

/// The offline synthesis sequence: model reduction, gain synthesis, error
/// bounds, constraint tightening, terminal ingredients. Throws with the
/// failing stage named; a gain pair that fails the stability check is
/// reported with remediation guidance rather than returned silently.
SynthesisResult run_synthesis(const ProblemSpec& problem, const SynthesisOptions& opts = {});

/// Re-runs only the error-bound stage (and the downstream tightening and
/// terminal ingredients) on an existing design, e.g. with a new tau.
SynthesisResult rerun_bounds(const ProblemSpec& problem, const RompcDesign& design,
                             const SynthesisOptions& opts = {});

}  // namespace rompc::pipeline
