#include <geomech/integrate.hpp>

#include <geomech/errors.hpp>

#include <algorithm>
#include <cmath>

namespace geomech::integrate {

Vec rk4_step(const Deriv& deriv, const Vec& s, double t, double dt) {
    auto eval = [&](double tt, const Vec& ss) {
        Vec d = deriv(tt, ss);
        if (!d.allFinite()) throw NumericalError("non-finite RK4 stage");
        return d;
    };
    Vec k1 = eval(t, s);
    Vec k2 = eval(t + 0.5 * dt, s + 0.5 * dt * k1);
    Vec k3 = eval(t + 0.5 * dt, s + 0.5 * dt * k2);
    Vec k4 = eval(t + dt, s + dt * k3);
    return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Trajectory simulate(const LagrangianSystem& sys, const Vec& q0, const Vec& v0, double t0,
                    double t1, double dt, const SimOptions& opts) {
    if (!(dt > 0.0) || !(t1 > t0)) throw PreconditionError("simulate requires dt > 0, t1 > t0");
    const int n = sys.n;
    const auto steps = static_cast<std::size_t>(std::floor((t1 - t0) / dt));

    Trajectory traj;
    traj.n = n;
    traj.times.reserve(steps + 1);
    traj.q.reserve(steps + 1);
    traj.v.reserve(steps + 1);
    traj.p.reserve(steps + 1);
    for (const auto& d : opts.diagnostics) traj.diagnostics[d.name].reserve(steps + 1);

    Deriv deriv = [&sys, n](double t, const Vec& s) {
        Vec q = s.head(n), v = s.tail(n);
        Vec out(2 * n);
        out.head(n) = v;
        out.tail(n) = mech::solve_accel(sys, t, q, v);
        return out;
    };

    Vec q = q0, v = v0;
    auto record = [&](double t) {
        traj.times.push_back(t);
        traj.q.push_back(q);
        traj.v.push_back(v);
        traj.p.push_back(mech::fiber_derivative(sys, t, q, v));
        for (const auto& d : opts.diagnostics) traj.diagnostics[d.name].push_back(d.eval(t, q, v));
    };

    record(t0);
    for (std::size_t k = 1; k <= steps; ++k) {
        double t = t0 + static_cast<double>(k - 1) * dt;
        Vec s(2 * n);
        s.head(n) = q;
        s.tail(n) = v;
        try {
            s = rk4_step(deriv, s, t, dt);
        } catch (const Error& e) {
            if (!opts.abort_on_error) throw;
            traj.aborted = true;
            traj.abort_reason = e.what();
            return traj;
        }
        q = s.head(n);
        v = s.tail(n);
        double tk = t0 + static_cast<double>(k) * dt;
        bool remapped = opts.post_step && opts.post_step(tk, q, v);
        record(tk);
        if (remapped) traj.events.push_back(traj.size() - 1);
    }
    return traj;
}

std::optional<std::array<mech::CartanPoint, 5>> residual_window(const Trajectory& traj,
                                                                std::size_t k) {
    if (k < 2 || k + 2 >= traj.size()) return std::nullopt;
    // A remap at sample j breaks chart continuity between j-1 and j.
    for (std::size_t e : traj.events)
        if (e >= k - 1 && e <= k + 2) return std::nullopt;
    std::array<mech::CartanPoint, 5> w;
    for (std::size_t i = 0; i < 5; ++i) w[i] = traj.point(k - 2 + i);
    return w;
}

mech::ELResiduals max_residuals(const LagrangianSystem& sys, const mech::Frame& frame,
                                const Trajectory& traj, std::size_t stride) {
    mech::ELResiduals worst;
    worst.r_dyn = Vec::Zero(sys.n);
    worst.r_leg = Vec::Zero(sys.n);
    worst.r_con = Vec::Zero(sys.n);
    for (std::size_t k = 2; k + 2 < traj.size(); k += stride) {
        auto w = residual_window(traj, k);
        if (!w) continue;
        mech::ELResiduals r = mech::el_residuals(sys, frame, *w);
        worst.r_dyn = worst.r_dyn.cwiseAbs().cwiseMax(r.r_dyn.cwiseAbs());
        worst.r_leg = worst.r_leg.cwiseAbs().cwiseMax(r.r_leg.cwiseAbs());
        worst.r_con = worst.r_con.cwiseAbs().cwiseMax(r.r_con.cwiseAbs());
    }
    return worst;
}

}  // namespace geomech::integrate
