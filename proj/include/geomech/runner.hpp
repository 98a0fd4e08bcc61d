#pragma once

#include <geomech/config.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace geomech::cli {

/// Exit codes of the command-line front end.
enum ExitCode : int {
    exit_ok = 0,
    exit_validation = 2,
    exit_numerical = 3,
    exit_tolerance = 4,
};

/// One named verification with its measured value and threshold.
struct CheckResult {
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double tol = 0.0;
    std::string detail;

    std::string line() const;
};

struct RunOutcome {
    int code = exit_ok;
    std::vector<std::string> report;
    std::vector<CheckResult> checks;
};

/// Execute the configured mode; trajectory CSV and the effective-config
/// sidecar land under `outdir`. Exceptions are mapped to exit codes by the
/// CLI wrapper, not here.
RunOutcome run_mode(const RunConfig& cfg, const std::string& outdir, int jobs = 1);

/// Write a trajectory in the stable CSV schema
/// t,q1..qn,v1..vn,p1..pn,<diagnostics...> with 17 significant digits.
void write_csv(const integrate::Trajectory& traj, const std::string& path);

/// The invariant suite for one configured system (mode "check").
std::vector<CheckResult> run_checks(const RunConfig& cfg, const BuiltSystem& built, int jobs = 1);

}  // namespace geomech::cli
