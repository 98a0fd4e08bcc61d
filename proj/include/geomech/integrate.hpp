#pragma once

#include <geomech/mech.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace geomech::integrate {

using mech::LagrangianSystem;

/// Sampled solution curve with momenta along the canonical section and named
/// diagnostic channels. Times are uniformly spaced.
struct Trajectory {
    int n = 0;
    std::vector<double> times;
    std::vector<Vec> q, v, p;
    std::map<std::string, std::vector<double>> diagnostics;
    std::vector<std::size_t> events;  // samples at which the state was remapped
    bool aborted = false;
    std::string abort_reason;

    std::size_t size() const { return times.size(); }
    mech::CartanPoint point(std::size_t k) const { return {times[k], q[k], v[k], p[k]}; }
};

using Deriv = std::function<Vec(double, const Vec&)>;

/// Classical RK4 stage combination. Throws NumericalError on non-finite
/// stage values.
Vec rk4_step(const Deriv& deriv, const Vec& s, double t, double dt);

/// Named per-sample diagnostic.
struct Diagnostic {
    std::string name;
    std::function<double(double, const Vec&, const Vec&)> eval;
};

struct SimOptions {
    std::vector<Diagnostic> diagnostics;
    /// Called after each accepted step; may remap (q, v) (chart recentering).
    /// Return true when the state changed, so the sample is flagged.
    std::function<bool(double, Vec&, Vec&)> post_step;
    /// Abort instead of throwing on numerical failure (partial trajectory).
    bool abort_on_error = false;
};

/// Fixed-step RK4 integration of the explicit second-order equations from
/// solve_accel. Momenta are recorded through the canonical section.
Trajectory simulate(const LagrangianSystem& sys, const Vec& q0, const Vec& v0, double t0,
                    double t1, double dt, const SimOptions& opts = {});

/// Windows of five consecutive samples centered at k (k-2..k+2), skipping
/// windows that overlap remap events.
std::optional<std::array<mech::CartanPoint, 5>> residual_window(const Trajectory& traj,
                                                                std::size_t k);

/// Max quasi-EL residuals over all valid windows of a trajectory.
mech::ELResiduals max_residuals(const LagrangianSystem& sys, const mech::Frame& frame,
                                const Trajectory& traj, std::size_t stride = 1);

}  // namespace geomech::integrate
