#include <geomech/runner.hpp>

#include <geomech/errors.hpp>
#include <geomech/rng.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

namespace geomech::cli {

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

double channel_drift(const std::vector<double>& xs) {
    double m = 0.0;
    for (double x : xs) m = std::max(m, std::fabs(x - xs.front()));
    return m;
}

integrate::SimOptions diagnostics_for(const RunConfig& cfg, const BuiltSystem& built) {
    integrate::SimOptions opts;
    auto sys = built.sys;
    for (const auto& name : cfg.diagnostics.empty()
                                ? std::vector<std::string>{"energy"}
                                : cfg.diagnostics) {
        if (name == "energy") {
            opts.diagnostics.push_back({"energy", [sys](double t, const Vec& q, const Vec& v) {
                                            return mech::energy(sys, t, q, v);
                                        }});
        } else if (name == "J" && built.action) {
            auto action = *built.action;
            for (int a = 0; a < action.m; ++a)
                opts.diagnostics.push_back(
                    {"J" + std::to_string(a + 1), [sys, action, a](double t, const Vec& q, const Vec& v) {
                         return symmetry::momentum_map(sys, action, t, q, v)[a];
                     }});
        }
    }
    return opts;
}

// Random polynomial frame near the identity, well-conditioned by construction.
mech::Frame random_polynomial_frame(int n, Rng& rng) {
    mech::Frame f;
    for (int i = 0; i < n; ++i) {
        std::vector<double> lin(static_cast<std::size_t>(n) * n);
        std::vector<double> quad(static_cast<std::size_t>(n) * n);
        for (auto& c : lin) c = rng.uniform(-0.15, 0.15);
        for (auto& c : quad) c = rng.uniform(-0.1, 0.1);
        f.fields.push_back(VectorFieldSpec{n, [n, i, lin, quad](const Vec& q) {
                                               Vec out = Vec::Zero(n);
                                               out[i] = 1.0;
                                               for (int k = 0; k < n; ++k) {
                                                   double acc = 0.0;
                                                   for (int j = 0; j < n; ++j) {
                                                       acc += lin[static_cast<std::size_t>(k * n + j)] * q[j];
                                                       acc += quad[static_cast<std::size_t>(k * n + j)] * q[j] * q[j];
                                                   }
                                                   out[k] += 0.5 * acc;
                                               }
                                               return out;
                                           }});
    }
    return f;
}

std::vector<mech::CartanPoint> sample_states(const BuiltSystem& built, int count, Rng& rng) {
    std::vector<mech::CartanPoint> out;
    for (int k = 0; k < count; ++k) {
        Vec q = built.q0, v = built.v0;
        for (int i = 0; i < q.size(); ++i) {
            q[i] += rng.uniform(-0.3, 0.3);
            v[i] += rng.uniform(-0.3, 0.3);
        }
        out.push_back({0.0, q, v, Vec()});
    }
    return out;
}

CheckResult residual_check(const std::string& name, const mech::LagrangianSystem& sys,
                           const integrate::Trajectory& traj, double tol, Rng& rng) {
    auto coord = integrate::max_residuals(sys, mech::coordinate_frame(sys.n), traj, 7);
    auto frame = random_polynomial_frame(sys.n, rng);
    auto custom = integrate::max_residuals(sys, frame, traj, 7);
    CheckResult r;
    r.name = name;
    r.tol = tol;
    r.measured = std::max(coord.max_abs(), custom.max_abs());
    r.pass = r.measured <= tol;
    r.detail = "coordinate and random polynomial frames";
    return r;
}

std::vector<CheckResult> aks_checks(const RunConfig& cfg, const BuiltSystem& built) {
    std::vector<CheckResult> out;
    const auto& params = *built.aks_params;
    aks::FeherSystem fs(params);
    Rng rng(checks_seed());

    {
        CheckResult r;
        r.name = "feher_two_forms";
        r.tol = tolerance(cfg, "feher_two_forms", 1e-12);
        double worst = 0.0;
        for (int it = 0; it < 1000; ++it) {
            aks::FeherState s;
            Mat m(params.d, params.d);
            for (int i = 0; i < params.d; ++i)
                for (int j = 0; j < params.d; ++j) m(i, j) = rng.uniform(-0.5, 0.5);
            m.diagonal().array() -= m.trace() / params.d;
            s.g = liegroup::mat_exp(m);
            Mat z(params.d, params.d);
            for (int i = 0; i < params.d; ++i)
                for (int j = 0; j < params.d; ++j) z(i, j) = rng.uniform(-1, 1);
            z.diagonal().array() -= z.trace() / params.d;
            s.zeta = z;
            s.alpha = liegroup::project_plus(z * 0.7);
            s.alpha.diagonal().array() -= s.alpha.trace() / params.d;
            s.beta = liegroup::project_minus(Mat(z.transpose()));
            worst = std::max(worst, std::fabs(fs.lagrangian(s) - fs.lagrangian_six_term(s)));
        }
        r.measured = worst;
        r.pass = worst <= r.tol;
        out.push_back(r);
    }

    auto ic = fs.level_state(params.g0);
    auto run = fs.simulate(ic, cfg.t1 - cfg.t0, cfg.dt);
    auto ref = fs.reference_run(ic, cfg.t1 - cfg.t0, 1e-5, 10000);
    for (const char* ch : {"lam_tr2", "lam_tr3"}) {
        CheckResult r;
        r.name = std::string("isospectral_") + ch;
        r.tol = tolerance(cfg, "isospectral", 1e-6);
        r.measured = channel_drift(run.traj.diagnostics.at(ch));
        double refdrift = channel_drift(ref.traj.diagnostics.at(ch));
        r.pass = r.measured <= r.tol && refdrift <= 1e-8;
        r.detail = "reference dt=1e-5 drift " + fmt(refdrift);
        out.push_back(r);
    }

    {
        CheckResult r;
        r.name = "unreduced_residuals";
        r.tol = tolerance(cfg, "unreduced_residuals", 1e-9);
        std::vector<aks::UnreducedState> samples;
        for (int k = 0; k <= 1000; ++k) samples.push_back(aks::unreduced_exact(params, k * 1e-3));
        auto res = aks::check_unreduced(params, samples, 1e-3);
        r.measured = std::max(res.sigma_const, res.max_constraint());
        r.pass = r.measured <= r.tol && res.momentum_drift <= 1e-8;
        r.detail = "momentum drift " + fmt(res.momentum_drift);
        out.push_back(r);
    }

    {
        CheckResult r;
        r.name = "phi_equivalence";
        r.tol = tolerance(cfg, "phi_equivalence", 1e-4);
        aks::ReducedAKS red(params);
        double T = std::min(5.0, cfg.t1 - cfg.t0);
        auto samples = red.integrate(red.initial_state(params.g0), T, cfg.dt, 10);
        auto feher = fs.simulate(red.phi_map(samples.front()), T, cfg.dt);
        double dev = 0.0;
        for (const auto& smp : samples) {
            auto k = static_cast<std::size_t>(std::llround(smp.t / cfg.dt));
            if (k >= feher.states.size()) continue;
            auto mapped = red.phi_map(smp);
            dev = std::max(dev, (mapped.g - feher.states[k].g).cwiseAbs().maxCoeff());
            dev = std::max(dev, (mapped.zeta - feher.states[k].zeta).cwiseAbs().maxCoeff());
            dev = std::max(dev, (mapped.alpha - feher.states[k].alpha).cwiseAbs().maxCoeff());
            dev = std::max(dev, (mapped.beta - feher.states[k].beta).cwiseAbs().maxCoeff());
        }
        r.measured = dev;
        r.pass = dev <= r.tol;
        out.push_back(r);
    }

    {
        CheckResult r;
        r.name = "phi_pullback_identity";
        r.tol = tolerance(cfg, "phi_pullback_identity", 1e-8);
        aks::ReducedAKS red(params);
        double worst = 0.0;
        for (int it = 0; it < 100; ++it) {
            aks::FeherState X;
            Mat m(params.d, params.d);
            for (int i = 0; i < params.d; ++i)
                for (int j = 0; j < params.d; ++j) m(i, j) = rng.uniform(-0.4, 0.4);
            m.diagonal().array() -= m.trace() / params.d;
            X.g = liegroup::mat_exp(m);
            Mat z(params.d, params.d);
            for (int i = 0; i < params.d; ++i)
                for (int j = 0; j < params.d; ++j) z(i, j) = rng.uniform(-1, 1);
            z.diagonal().array() -= z.trace() / params.d;
            X.zeta = z;
            X.alpha = liegroup::project_plus(z);
            X.alpha.diagonal().array() -= X.alpha.trace() / params.d;
            X.beta = liegroup::project_minus(Mat(z.transpose()));
            Mat cpa = liegroup::project_plus(m * 0.5);
            cpa.diagonal().array() -= cpa.trace() / params.d;
            Mat cma = liegroup::project_minus(Mat(m.transpose() * 0.5));
            Mat A = liegroup::project_plus(Mat(z * 0.3));
            A.diagonal().array() -= A.trace() / params.d;
            Mat B = liegroup::project_minus(Mat(z.transpose() * 0.3));
            worst = std::max(worst, std::fabs(red.phi_pullback_gap(
                                        X, liegroup::mat_exp(cpa), A, liegroup::mat_exp(cma), B)));
        }
        r.measured = worst;
        r.pass = worst <= r.tol;
        out.push_back(r);
    }
    return out;
}

}  // namespace

std::string CheckResult::line() const {
    std::string s = pass ? "[PASS] " : "[FAIL] ";
    s += name + ": measured " + fmt(measured) + ", tolerance " + fmt(tol);
    if (!detail.empty()) s += " (" + detail + ")";
    return s;
}

void write_csv(const integrate::Trajectory& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open CSV output '" + path + "'");
    out << "t";
    for (int i = 1; i <= traj.n; ++i) out << ",q" << i;
    for (int i = 1; i <= traj.n; ++i) out << ",v" << i;
    for (int i = 1; i <= traj.n; ++i) out << ",p" << i;
    for (const auto& [name, ch] : traj.diagnostics) out << "," << name;
    out << "\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        out << fmt(traj.times[k]);
        for (int i = 0; i < traj.n; ++i) out << "," << fmt(traj.q[k][i]);
        for (int i = 0; i < traj.n; ++i) out << "," << fmt(traj.v[k][i]);
        for (int i = 0; i < traj.n; ++i) out << "," << fmt(traj.p[k][i]);
        for (const auto& [name, ch] : traj.diagnostics) out << "," << fmt(ch[k]);
        out << "\n";
    }
}

std::vector<CheckResult> run_checks(const RunConfig& cfg, const BuiltSystem& built, int jobs) {
    if (built.is_aks) return aks_checks(cfg, built);

    std::vector<CheckResult> out;
    Rng rng(checks_seed());
    const auto& sys = built.sys;

    integrate::SimOptions opts = diagnostics_for(cfg, built);
    if (built.action) {
        auto action = *built.action;
        auto bsys = sys;
        opts.diagnostics.push_back(
            {"Jdrift", [bsys, action](double t, const Vec& q, const Vec& v) {
                 return symmetry::momentum_map(bsys, action, t, q, v).cwiseAbs().maxCoeff();
             }});
    }

    auto traj = integrate::simulate(sys, built.q0, built.v0, cfg.t0, cfg.t1, cfg.dt, opts);

    if (built.action) {
        CheckResult r;
        r.name = "noether";
        r.tol = tolerance(cfg, "noether", 1e-6);
        Vec J0 = symmetry::momentum_map(sys, *built.action, cfg.t0, built.q0, built.v0);
        double worst = 0.0;
        for (std::size_t k = 0; k < traj.size(); ++k)
            worst = std::max(worst, (symmetry::momentum_map(sys, *built.action, traj.times[k],
                                                            traj.q[k], traj.v[k]) -
                                     J0)
                                        .cwiseAbs()
                                        .maxCoeff());
        r.measured = worst;
        r.pass = worst <= r.tol;
        out.push_back(r);

        CheckResult inv;
        inv.name = "invariance";
        inv.tol = tolerance(cfg, "invariance", 1e-6);
        auto rep = symmetry::check_invariance(sys, *built.action, sample_states(built, 20, rng),
                                              inv.tol);
        inv.measured = std::max(rep.max_dL, rep.max_F);
        inv.pass = rep.pass;
        out.push_back(inv);
    }

    if (!sys.F) {
        CheckResult r;
        r.name = "energy";
        r.tol = tolerance(cfg, "energy", 1e-6);
        r.measured = channel_drift(traj.diagnostics.at("energy"));
        r.pass = r.measured <= r.tol;
        out.push_back(r);
    }

    out.push_back(residual_check("residuals", sys, traj,
                                 tolerance(cfg, "residuals", 1e-5), rng));

    if (built.action && built.conn && built.mu.size() &&
        (built.mu.cwiseAbs().maxCoeff() > 0 || built.sys.label == "central_force")) {
        CheckResult r;
        r.name = "routh_equivalence";
        r.tol = tolerance(cfg, "routh_equivalence", 1e-5);
        try {
            auto rep = symmetry::equivalence_check(sys, *built.action, *built.conn, built.mu,
                                                   built.q0, built.v0, cfg.t1 - cfg.t0, cfg.dt);
            r.measured = rep.max_base_dev;
            r.pass = rep.max_base_dev <= r.tol && rep.max_J_drift <= 1e-8;
            r.detail = "momentum drift " + fmt(rep.max_J_drift);
        } catch (const Error& e) {
            r.pass = false;
            r.detail = e.what();
        }
        out.push_back(r);
    }

    if (sys.label == "harmonic") {
        CheckResult r;
        r.name = "convergence_order";
        auto err = [&](double dt) {
            auto tr = integrate::simulate(sys, built.q0, built.v0, 0.0, 2.0 * M_PI, dt);
            double tb = tr.times.back();
            return std::hypot(tr.q.back()[0] - std::cos(tb), tr.v.back()[0] + std::sin(tb));
        };
        double e1, e2;
        if (jobs > 1) {
            auto f1 = std::async(std::launch::async, err, 0.05);
            e2 = err(0.025);
            e1 = f1.get();
        } else {
            e1 = err(0.05);
            e2 = err(0.025);
        }
        r.measured = e1 / e2;
        r.tol = 0.0;
        r.pass = r.measured >= 12.0 && r.measured <= 20.0;
        r.detail = "halving ratio, expected in [12, 20]";
        out.push_back(r);
    }
    return out;
}

RunOutcome run_mode(const RunConfig& cfg, const std::string& outdir, int jobs) {
    namespace fs = std::filesystem;
    RunOutcome out;
    fs::create_directories(outdir);

    BuiltSystem built = build_system(cfg);

    // Echo the effective configuration (defaults and resolved ic applied).
    RunConfig eff = cfg;
    eff.q0.assign(built.q0.data(), built.q0.data() + built.q0.size());
    eff.v0.assign(built.v0.data(), built.v0.data() + built.v0.size());
    if (eff.csv.empty() && (cfg.mode == "simulate" || cfg.mode == "reduce" || cfg.mode == "aks"))
        eff.csv = cfg.mode + "_" + (cfg.builtin.empty() ? "custom" : cfg.builtin) + ".csv";
    {
        std::ofstream sidecar(fs::path(outdir) / "effective_config.json");
        sidecar << effective_config(eff) << "\n";
    }

    if (cfg.mode == "simulate") {
        if (built.is_aks)
            throw ConfigError("the factorizable-group systems are degenerate as chart "
                              "Lagrangians; run them through mode 'aks'");
        auto opts = diagnostics_for(eff, built);
        opts.abort_on_error = true;  // keep the partial trajectory on failure
        auto traj = integrate::simulate(built.sys, built.q0, built.v0, cfg.t0, cfg.t1, cfg.dt,
                                        opts);
        write_csv(traj, (fs::path(outdir) / eff.csv).string());
        out.report.push_back("trajectory written to " + eff.csv + " (" +
                             std::to_string(traj.size()) + " samples)");
        if (traj.aborted) {
            out.code = exit_numerical;
            out.report.push_back("integration aborted: " + traj.abort_reason);
        }
        return out;
    }

    if (cfg.mode == "reduce") {
        if (!built.action || !built.conn)
            throw ConfigError("mode 'reduce' requires a symmetry block");
        symmetry::ReducedBuildOptions ropts;
        Rng rng(checks_seed());
        ropts.invariance_samples = sample_states(built, 10, rng);
        auto red = symmetry::build_reduced_system(built.sys, *built.action, *built.conn, built.mu,
                                                  ropts);
        Vec s0(static_cast<int>(red.base_coords.size())), sd0(s0.size());
        for (std::size_t i = 0; i < red.base_coords.size(); ++i) {
            s0[static_cast<int>(i)] = built.q0[red.base_coords[i]];
            sd0[static_cast<int>(i)] = built.v0[red.base_coords[i]];
        }
        integrate::SimOptions ropts2;
        auto rsys = red.sys;
        ropts2.diagnostics.push_back({"energy", [rsys](double t, const Vec& q, const Vec& v) {
                                          return mech::energy(rsys, t, q, v);
                                      }});
        auto traj = integrate::simulate(red.sys, s0, sd0, cfg.t0, cfg.t1, cfg.dt, ropts2);
        write_csv(traj, (fs::path(outdir) / eff.csv).string());
        out.report.push_back("reduced trajectory written to " + eff.csv);
        return out;
    }

    if (cfg.mode == "compare") {
        if (!built.action || !built.conn)
            throw ConfigError("mode 'compare' requires a symmetry block");
        auto rep = symmetry::equivalence_check(built.sys, *built.action, *built.conn, built.mu,
                                               built.q0, built.v0, cfg.t1 - cfg.t0, cfg.dt);
        double tol_base = tolerance(cfg, "routh_equivalence", 1e-5);
        double tol_J = tolerance(cfg, "momentum_drift", 1e-8);
        out.report.push_back("max base deviation " + fmt(rep.max_base_dev) + " (tolerance " +
                             fmt(tol_base) + ")");
        out.report.push_back("max momentum drift " + fmt(rep.max_J_drift) + " (tolerance " +
                             fmt(tol_J) + ")");
        if (rep.max_base_dev > tol_base || rep.max_J_drift > tol_J) out.code = exit_tolerance;
        return out;
    }

    if (cfg.mode == "check") {
        out.checks = run_checks(cfg, built, jobs);
        for (const auto& c : out.checks) {
            out.report.push_back(c.line());
            if (!c.pass) out.code = exit_tolerance;
        }
        return out;
    }

    if (cfg.mode == "aks") {
        if (!built.is_aks) throw ConfigError("mode 'aks' requires an aks builtin system");
        aks::FeherSystem fsys(*built.aks_params);
        auto run = fsys.simulate(fsys.level_state(built.aks_params->g0), cfg.t1 - cfg.t0, cfg.dt);
        write_csv(run.traj, (fs::path(outdir) / eff.csv).string());
        out.report.push_back("aks trajectory written to " + eff.csv);
        out.report.push_back("tr(Lambda^2) drift " +
                             fmt(channel_drift(run.traj.diagnostics.at("lam_tr2"))));
        out.report.push_back("tr(Lambda^3) drift " +
                             fmt(channel_drift(run.traj.diagnostics.at("lam_tr3"))));
        return out;
    }

    throw ConfigError("unknown mode '" + cfg.mode + "'");
}

}  // namespace geomech::cli
