#include <geomech/aks.hpp>

#include <geomech/errors.hpp>

#include <cmath>
#include <mutex>

namespace geomech::aks {

using liegroup::adjoint;
using liegroup::bracket;
using liegroup::dexp_left;
using liegroup::dexp_right;
using liegroup::inverse;
using liegroup::mat_exp;
using liegroup::mat_log_near;
using liegroup::pairing;
using liegroup::project_minus;
using liegroup::project_plus;
using liegroup::sl_basis;
using liegroup::sl_coords;
using liegroup::sl_from_coords;

namespace {

Mat unit(int d, int i, int j) {
    Mat e = Mat::Zero(d, d);
    e(i, j) = 1.0;
    return e;
}

Vec flatten(std::initializer_list<const Mat*> ms) {
    int total = 0;
    for (const Mat* m : ms) total += static_cast<int>(m->size());
    Vec out(total);
    int at = 0;
    for (const Mat* m : ms)
        for (int j = 0; j < m->cols(); ++j)
            for (int i = 0; i < m->rows(); ++i) out[at++] = (*m)(i, j);
    return out;
}

Mat unflatten(const Vec& s, int d, int block) {
    Mat m(d, d);
    int at = block * d * d;
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) m(i, j) = s[at++];
    return m;
}

// Solve <z, B_i> = r_i over z in sl(d) for a spanning set {B_i}.
Mat dual_solve(const std::vector<Mat>& B, const Vec& r, int d) {
    auto basis = sl_basis(d);
    const int n = static_cast<int>(basis.size());
    Mat A(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            A(i, k) = pairing(basis[static_cast<std::size_t>(k)], B[static_cast<std::size_t>(i)]);
    Eigen::FullPivLU<Mat> lu(A);
    if (!lu.isInvertible()) throw NumericalError("dual-basis system is singular");
    Vec x = lu.solve(r);
    return sl_from_coords(x, d);
}

// 4th-order central difference of matrix samples at window position c.
Mat fd4_mat(const std::vector<Mat>& w, std::size_t c, double dt) {
    return (-w[c + 2] + 8.0 * w[c + 1] - 8.0 * w[c - 1] + w[c - 2]) / (12.0 * dt);
}

}  // namespace

AKSParams sl2_params() {
    AKSParams p;
    p.d = 2;
    // rotational spectrum (bounded flow) slow enough that the orbit stays
    // clear of the cell boundary g11 = 0 (first crossing at omega t = pi/2)
    // over the T = 10 acceptance runs
    p.mu = 0.24 * unit(2, 0, 1);
    p.nu = -0.07 * unit(2, 1, 0);
    p.g0 = Mat::Identity(2, 2);
    p.zeta0 = 0.24 * unit(2, 0, 1) - 0.07 * unit(2, 1, 0);
    Mat a(2, 2);
    a << 0.15, 0.0, 0.3, -0.15;
    p.alpha0 = a;
    p.beta0 = 0.25 * unit(2, 0, 1);
    return p;
}

AKSParams sl3_params() {
    AKSParams p;
    p.d = 3;
    // the rotation 0.18*sqrt(2) keeps the orbit inside the Gram-regular cell
    // over T = 10 (the t*omega = pi orientation degenerates Ad_g k- against k+)
    p.mu = 0.18 * (unit(3, 0, 1) + unit(3, 1, 2));
    p.nu = -0.18 * (unit(3, 1, 0) + unit(3, 2, 1));
    p.g0 = Mat::Identity(3, 3);
    p.zeta0 = 0.18 * (unit(3, 0, 1) + unit(3, 1, 2)) - 0.18 * (unit(3, 1, 0) + unit(3, 2, 1));
    Mat a = Mat::Zero(3, 3);
    a(1, 0) = 0.2;
    a(2, 1) = -0.1;
    a(0, 0) = 0.1;
    a(2, 2) = -0.1;
    p.alpha0 = a;
    p.beta0 = 0.15 * unit(3, 0, 2);
    return p;
}

std::pair<Mat, Mat> connection_value(const Mat& alpha_slot, const Mat& beta_slot) {
    return {Mat(-alpha_slot), beta_slot};
}

UnreducedState horizontal_lift(const Mat& gprime, const Mat& zetaprime, const Mat& gp,
                               const Mat& gm) {
    UnreducedState s;
    s.gp = gp;
    s.gm = gm;
    s.g = inverse(gp) * gprime * inverse(gm);
    s.zeta = adjoint(inverse(gp), zetaprime);
    s.alpha = Mat::Zero(gp.rows(), gp.cols());
    s.beta = Mat::Zero(gm.rows(), gm.cols());
    return s;
}

std::pair<Mat, Mat> tangent_projection(const UnreducedState& s) {
    Mat base = s.gp * s.g * s.gm;
    Mat vel = adjoint(s.gp, Mat(s.zeta + s.alpha + adjoint(s.g, s.beta)));
    return {base, vel};
}

FeherSystem::FeherSystem(AKSParams p) : p_(std::move(p)) {
    basis_ = sl_basis(p_.d);
    bplus_ = sl_basis(p_.d, AlgTag::plus);
    bminus_ = sl_basis(p_.d, AlgTag::minus);
}

std::pair<Mat, Mat> FeherSystem::stationarity(const Mat& g, const Mat& zeta) const {
    const int np = static_cast<int>(bplus_.size());
    const int nm = static_cast<int>(bminus_.size());
    const int n = np + nm;
    std::vector<Mat> B;
    B.reserve(static_cast<std::size_t>(n));
    for (const Mat& e : bplus_) B.push_back(e);
    for (const Mat& f : bminus_) B.push_back(adjoint(g, f));

    Mat G(n, n);
    Vec rhs(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
            G(i, j) = pairing(B[static_cast<std::size_t>(i)], B[static_cast<std::size_t>(j)]);
        double target = (i < np) ? pairing(p_.mu, bplus_[static_cast<std::size_t>(i)])
                                 : pairing(p_.nu, bminus_[static_cast<std::size_t>(i - np)]);
        rhs[i] = target - pairing(zeta, B[static_cast<std::size_t>(i)]);
    }
    Eigen::JacobiSVD<Mat> svd(G, Eigen::ComputeThinU | Eigen::ComputeThinV);
    double smin = svd.singularValues()(n - 1), smax = svd.singularValues()(0);
    if (!(smin > 1e-10 * smax))
        throw NumericalError("fiber stationarity solve: pairing Gram condition exceeds 1e10");
    Vec c = svd.solve(rhs);

    Mat alpha = Mat::Zero(p_.d, p_.d), beta = Mat::Zero(p_.d, p_.d);
    for (int k = 0; k < np; ++k) alpha += c[k] * bplus_[static_cast<std::size_t>(k)];
    for (int k = 0; k < nm; ++k) beta += c[np + k] * bminus_[static_cast<std::size_t>(k)];
    return {alpha, beta};
}

Mat FeherSystem::lax(const FeherState& s) const {
    return s.zeta + s.alpha + adjoint(s.g, s.beta);
}

double FeherSystem::lagrangian(const FeherState& s) const {
    Mat L = lax(s);
    return 0.5 * pairing(L, L) - pairing(s.alpha, p_.mu) - pairing(s.beta, p_.nu);
}

double FeherSystem::lagrangian_six_term(const FeherState& s) const {
    // 1/2<z,z> + 1/2<a,a> + 1/2<b,b> + <a, z - mu> + <b, g^-1 gdot - nu> + <a, Ad_g b>
    Mat adb = adjoint(s.g, s.beta);
    Mat zl = adjoint(inverse(s.g), s.zeta);  // left-trivialized velocity
    return 0.5 * pairing(s.zeta, s.zeta) + 0.5 * pairing(s.alpha, s.alpha) +
           0.5 * pairing(s.beta, s.beta) + pairing(s.alpha, Mat(s.zeta - p_.mu)) +
           pairing(s.beta, Mat(zl - p_.nu)) + pairing(s.alpha, adb);
}

Mat FeherSystem::level_velocity(const Mat& g) const {
    const int np = static_cast<int>(bplus_.size());
    const int nm = static_cast<int>(bminus_.size());
    std::vector<Mat> B;
    Vec r(np + nm);
    for (int i = 0; i < np; ++i) {
        B.push_back(bplus_[static_cast<std::size_t>(i)]);
        r[i] = pairing(p_.mu, bplus_[static_cast<std::size_t>(i)]);
    }
    for (int j = 0; j < nm; ++j) {
        B.push_back(adjoint(g, bminus_[static_cast<std::size_t>(j)]));
        r[np + j] = pairing(p_.nu, bminus_[static_cast<std::size_t>(j)]);
    }
    return dual_solve(B, r, p_.d);
}

FeherState FeherSystem::level_state(const Mat& g) const {
    return FeherState{g, level_velocity(g), Mat::Zero(p_.d, p_.d), Mat::Zero(p_.d, p_.d)};
}

double FeherSystem::level_gap(const Mat& g, const Mat& zeta) const {
    double gap = 0.0;
    for (const Mat& e : bplus_) gap = std::max(gap, std::fabs(pairing(Mat(zeta - p_.mu), e)));
    Mat zl = adjoint(inverse(g), zeta);
    for (const Mat& f : bminus_) gap = std::max(gap, std::fabs(pairing(Mat(zl - p_.nu), f)));
    return gap;
}

Mat FeherSystem::chart_point(const Mat& center, const Vec& x) const {
    return mat_exp(sl_from_coords(x, p_.d)) * center;
}

Mat FeherSystem::chart_velocity(const Mat& center, const Vec& x, const Vec& xdot) const {
    (void)center;  // right-trivialized velocities do not see the center
    Mat X = sl_from_coords(x, p_.d);
    Mat zeta = Mat::Zero(p_.d, p_.d);
    for (int k = 0; k < chart_dim(); ++k)
        zeta += xdot[k] * dexp_right(X, basis_[static_cast<std::size_t>(k)]);
    return zeta;
}

Vec FeherSystem::velocity_coords(const Mat& zeta) const { return sl_coords(zeta); }

Vec FeherSystem::velocity_coords_at(const Vec& x, const Mat& zeta) const {
    const int n = chart_dim();
    Mat X = sl_from_coords(x, p_.d);
    Mat A(n, n);
    for (int k = 0; k < n; ++k)
        A.col(k) = sl_coords(dexp_right(X, basis_[static_cast<std::size_t>(k)]));
    Vec xdot = A.fullPivLu().solve(sl_coords(zeta));
    if (!xdot.allFinite()) throw NumericalError("chart velocity solve failed");
    return xdot;
}

namespace {

// Per-position chart data shared by the Lagrangian evaluations of one run.
// Keyed on both the chart coordinates and the (recenterable) chart center.
struct ChartCache {
    std::mutex lock;
    bool valid = false;
    Vec x;
    Mat center;
    Mat g;
    std::vector<Mat> T;  // right-trivialized coordinate fields
};

}  // namespace

mech::LagrangianSystem FeherSystem::chart_system(std::shared_ptr<const Mat> center,
                                                 std::shared_ptr<const Frozen> frozen) const {
    const int n = chart_dim();
    const int d = p_.d;
    auto basis = basis_;
    Mat mu = p_.mu, nu = p_.nu;
    auto cache = std::make_shared<ChartCache>();

    auto with_cache = [cache, basis, center, d](const Vec& x, auto&& fn) {
        std::scoped_lock guard(cache->lock);
        if (!cache->valid || cache->x.size() != x.size() ||
            (cache->x - x).cwiseAbs().maxCoeff() != 0.0 ||
            (cache->center - *center).cwiseAbs().maxCoeff() != 0.0) {
            Mat X = sl_from_coords(x, d);
            cache->center = *center;
            cache->g = mat_exp(X) * (*center);
            cache->T.clear();
            for (const Mat& E : basis) cache->T.push_back(dexp_right(X, E));
            cache->x = x;
            cache->valid = true;
        }
        return fn(cache->g, cache->T);
    };

    mech::LagrangianSystem sys;
    sys.n = n;
    sys.label = "feher_chart_sl" + std::to_string(d);
    sys.L.dim = n;
    sys.L.eval = [with_cache, frozen, mu, nu, n, d](double, const Vec& x, const Vec& xdot) {
        return with_cache(x, [&](const Mat& g, const std::vector<Mat>& T) {
            Mat zeta = Mat::Zero(d, d);
            for (int k = 0; k < n; ++k) zeta += xdot[k] * T[static_cast<std::size_t>(k)];
            Mat L = zeta + frozen->alpha + adjoint(g, frozen->beta);
            return 0.5 * pairing(L, L) - pairing(frozen->alpha, mu) - pairing(frozen->beta, nu);
        });
    };
    sys.L.dv = [with_cache, frozen, n, d](double, const Vec& x, const Vec& xdot) {
        return with_cache(x, [&](const Mat& g, const std::vector<Mat>& T) {
            Mat zeta = Mat::Zero(d, d);
            for (int k = 0; k < n; ++k) zeta += xdot[k] * T[static_cast<std::size_t>(k)];
            Mat L = zeta + frozen->alpha + adjoint(g, frozen->beta);
            Vec p(n);
            for (int k = 0; k < n; ++k) p[k] = pairing(L, T[static_cast<std::size_t>(k)]);
            return p;
        });
    };
    // 4th-order position gradient; the second-order default's truncation bias
    // would accumulate across the 1e4-step acceptance runs.
    auto evalL = sys.L.eval;
    sys.L.dq = [evalL, n](double t, const Vec& x, const Vec& xdot) {
        Vec g(n);
        for (int i = 0; i < n; ++i) {
            double h = 1e-4 * std::max(1.0, std::fabs(x[i]));
            Vec xp = x, xm = x, xpp = x, xmm = x;
            xp[i] += h;
            xm[i] -= h;
            xpp[i] += 2.0 * h;
            xmm[i] -= 2.0 * h;
            g[i] = (-evalL(t, xpp, xdot) + 8.0 * evalL(t, xp, xdot) - 8.0 * evalL(t, xm, xdot) +
                    evalL(t, xmm, xdot)) /
                   (12.0 * h);
        }
        return g;
    };
    sys.L.dt = [](double, const Vec&, const Vec&) { return 0.0; };
    return sys;
}

mech::LagrangianSystem FeherSystem::full_chart_system(const Mat& center) const {
    const int n = chart_dim();
    const int np = static_cast<int>(bplus_.size());
    const int nm = static_cast<int>(bminus_.size());
    const int d = p_.d;
    auto basis = basis_;
    auto bp = bplus_;
    auto bm = bminus_;
    Mat mu = p_.mu, nu = p_.nu;
    Mat c = center;

    mech::LagrangianSystem sys;
    sys.n = n + np + nm;
    sys.label = "feher_full_chart_sl" + std::to_string(d);
    sys.L.dim = sys.n;
    sys.L.eval = [basis, bp, bm, mu, nu, c, n, np, nm, d](double, const Vec& q, const Vec& v) {
        Mat X = sl_from_coords(q.head(n), d);
        Mat g = mat_exp(X) * c;
        Mat zeta = Mat::Zero(d, d);
        for (int k = 0; k < n; ++k)
            zeta += v[k] * dexp_right(X, basis[static_cast<std::size_t>(k)]);
        Mat alpha = Mat::Zero(d, d), beta = Mat::Zero(d, d);
        for (int k = 0; k < np; ++k) alpha += q[n + k] * bp[static_cast<std::size_t>(k)];
        for (int k = 0; k < nm; ++k) beta += q[n + np + k] * bm[static_cast<std::size_t>(k)];
        Mat L = zeta + alpha + adjoint(g, beta);
        return 0.5 * pairing(L, L) - pairing(alpha, mu) - pairing(beta, nu);
    };
    return sys;
}

FeherSystem::Run FeherSystem::simulate(const FeherState& ic, double T, double dt) const {
    const int n = chart_dim();
    const int d = p_.d;
    if (level_gap(ic.g, ic.zeta) > 1e-8)
        throw PreconditionError("Feher initial data violates the momentum level conditions");

    auto center = std::make_shared<Mat>(ic.g);
    auto frozen = std::make_shared<Frozen>(Frozen{Mat::Zero(d, d), Mat::Zero(d, d)});
    auto sys = chart_system(center, frozen);

    Vec x = Vec::Zero(n);
    Vec xdot = velocity_coords(ic.zeta);
    double t = 0.0;

    integrate::Deriv deriv = [&](double tt, const Vec& s) {
        Vec sx = s.head(n);
        // Per-stage projection: the level conditions pin the velocity given g,
        // so each stage is evaluated on the constraint graph. The fiber solve
        // then supplies the (vanishing) stationary values to the chart system.
        Mat g = chart_point(*center, sx);
        Vec sv = velocity_coords_at(sx, level_velocity(g));
        Mat zeta = chart_velocity(*center, sx, sv);
        auto [a, b] = stationarity(g, zeta);
        frozen->alpha = a;
        frozen->beta = b;
        Vec out(2 * n);
        out.head(n) = sv;
        out.tail(n) = mech::solve_accel(sys, tt, sx, sv);
        return out;
    };

    Run run;
    run.traj.n = n;
    const auto steps = static_cast<std::size_t>(std::floor(T / dt));

    auto record = [&]() {
        Mat g = chart_point(*center, x);
        Mat zeta = chart_velocity(*center, x, xdot);
        auto [a, b] = stationarity(g, zeta);
        FeherState st{g, zeta, a, b};
        Mat L = lax(st);
        frozen->alpha = a;
        frozen->beta = b;
        run.traj.times.push_back(t);
        run.traj.q.push_back(x);
        run.traj.v.push_back(xdot);
        run.traj.p.push_back(partial_v(sys.L, t, x, xdot));
        run.traj.diagnostics["lam_tr2"].push_back(pairing(L, L));
        run.traj.diagnostics["lam_tr3"].push_back((L * L * L).trace());
        run.traj.diagnostics["energy"].push_back(run.traj.p.back().dot(xdot) -
                                                 sys.L.eval(t, x, xdot));
        run.states.push_back(std::move(st));
    };

    record();
    for (std::size_t k = 1; k <= steps; ++k) {
        Vec s(2 * n);
        s.head(n) = x;
        s.tail(n) = xdot;
        s = integrate::rk4_step(deriv, s, t, dt);
        x = s.head(n);
        xdot = s.tail(n);
        t = static_cast<double>(k) * dt;
        // Constraint projection: the momentum level conditions pin the whole
        // velocity given g, and transverse deviations are dynamically unstable.
        // Re-projecting the velocity each step keeps the run on the level set.
        xdot = velocity_coords_at(x, level_velocity(chart_point(*center, x)));
        if (x.norm() >= 0.5) {
            Mat zeta = chart_velocity(*center, x, xdot);
            *center = chart_point(*center, x);
            x.setZero();
            xdot = velocity_coords(zeta);
            record();
            run.traj.events.push_back(run.traj.size() - 1);
        } else {
            record();
        }
    }
    return run;
}

FeherSystem::Run FeherSystem::reference_run(const FeherState& ic, double T, double dt,
                                            std::size_t stride) const {
    const int d = p_.d;
    if (level_gap(ic.g, ic.zeta) > 1e-8)
        throw PreconditionError("Feher initial data violates the momentum level conditions");

    integrate::Deriv deriv = [d](double, const Vec& s) {
        Mat g = unflatten(s, d, 0);
        Mat zeta = unflatten(s, d, 1);
        Mat gdot = zeta * g;
        Mat zdot = Mat::Zero(d, d);
        return flatten({&gdot, &zdot});
    };

    Run run;
    run.traj.n = 2 * d * d;
    Vec s = flatten({&ic.g, &ic.zeta});
    const auto steps = static_cast<std::size_t>(std::floor(T / dt));

    auto record = [&](double t) {
        Mat g = unflatten(s, d, 0);
        Mat zeta = unflatten(s, d, 1);
        auto [a, b] = stationarity(g, zeta);
        FeherState st{g, zeta, a, b};
        Mat L = lax(st);
        run.traj.times.push_back(t);
        run.traj.diagnostics["lam_tr2"].push_back(pairing(L, L));
        run.traj.diagnostics["lam_tr3"].push_back((L * L * L).trace());
        run.traj.diagnostics["energy"].push_back(pairing(L, zeta) - lagrangian(st));
        run.states.push_back(std::move(st));
    };

    record(0.0);
    for (std::size_t k = 1; k <= steps; ++k) {
        s = integrate::rk4_step(deriv, s, static_cast<double>(k - 1) * dt, dt);
        if (k % stride == 0 || k == steps) record(static_cast<double>(k) * dt);
    }
    return run;
}

UnreducedState unreduced_exact(const AKSParams& p, double t) {
    UnreducedState s;
    s.zeta = p.zeta0;
    s.alpha = p.alpha0;
    s.beta = p.beta0;
    s.g = mat_exp(Mat(t * p.zeta0)) * p.g0;
    s.gp = mat_exp(Mat(t * p.alpha0));
    s.gm = mat_exp(Mat(t * p.beta0));
    return s;
}

double UnreducedResiduals::max_constraint() const {
    return std::max(std::max(g_constraint, gp_constraint), gm_constraint);
}

UnreducedResiduals check_unreduced(const AKSParams& p, const std::vector<UnreducedState>& samples,
                                   double dt) {
    UnreducedResiduals out;
    const int d = p.d;
    auto bp = sl_basis(d, AlgTag::plus);
    auto bm = sl_basis(d, AlgTag::minus);

    std::vector<Mat> gs, gps, gms, zetas;
    for (const auto& s : samples) {
        gs.push_back(s.g);
        gps.push_back(s.gp);
        gms.push_back(s.gm);
        zetas.push_back(s.zeta);
    }

    Vec J0;
    for (std::size_t c = 0; c < samples.size(); ++c) {
        const auto& s = samples[c];
        // K+ x K- momentum: <zeta, a1> - <Ad_g^-1 zeta, b1> over basis generators
        Mat zl = adjoint(inverse(s.g), s.zeta);
        Vec J(static_cast<int>(bp.size() + bm.size()));
        for (std::size_t i = 0; i < bp.size(); ++i) J[static_cast<int>(i)] = pairing(s.zeta, bp[i]);
        for (std::size_t j = 0; j < bm.size(); ++j)
            J[static_cast<int>(bp.size() + j)] = -pairing(zl, bm[j]);
        if (c == 0)
            J0 = J;
        else
            out.momentum_drift = std::max(out.momentum_drift, (J - J0).cwiseAbs().maxCoeff());

        if (c < 2 || c + 2 >= samples.size()) continue;
        Mat gdot = fd4_mat(gs, c, dt);
        Mat gpdot = fd4_mat(gps, c, dt);
        Mat gmdot = fd4_mat(gms, c, dt);
        Mat zdot = fd4_mat(zetas, c, dt);
        out.sigma_const = std::max(out.sigma_const, zdot.cwiseAbs().maxCoeff());
        out.g_constraint =
            std::max(out.g_constraint, (gdot * inverse(s.g) - s.zeta).cwiseAbs().maxCoeff());
        out.gp_constraint =
            std::max(out.gp_constraint, (inverse(s.gp) * gpdot - s.alpha).cwiseAbs().maxCoeff());
        out.gm_constraint =
            std::max(out.gm_constraint, (gmdot * inverse(s.gm) - s.beta).cwiseAbs().maxCoeff());
    }
    return out;
}

namespace {

// Solve sum_k c_k fields_k = w in the tag's coordinate system.
Vec solve_in_basis(const std::vector<Mat>& fields, const Mat& w, AlgTag tag) {
    const int n = static_cast<int>(fields.size());
    Vec rhs = sl_coords(w, tag);
    Mat A(rhs.size(), n);
    for (int k = 0; k < n; ++k) A.col(k) = sl_coords(fields[static_cast<std::size_t>(k)], tag);
    Eigen::FullPivLU<Mat> lu(A);
    Vec c = lu.solve(rhs);
    if (!c.allFinite()) throw NumericalError("trivialized basis solve failed");
    return c;
}

}  // namespace

Vec UnreducedChart::to_chart_q(const UnreducedState& s) const {
    Vec q(dim_g + dim_p + dim_m);
    q.head(dim_g) = sl_coords(mat_log_near(s.g * inverse(cg)));
    q.segment(dim_g, dim_p) = sl_coords(mat_log_near(inverse(cp) * s.gp), AlgTag::plus);
    q.tail(dim_m) = sl_coords(mat_log_near(s.gm * inverse(cm)), AlgTag::minus);
    return q;
}

Vec UnreducedChart::to_chart_v(const UnreducedState& s) const {
    const int d = static_cast<int>(cg.rows());
    Vec q = to_chart_q(s);
    Mat Xg = sl_from_coords(q.head(dim_g), d);
    Mat Xp = sl_from_coords(q.segment(dim_g, dim_p), d, AlgTag::plus);
    Mat Xm = sl_from_coords(q.tail(dim_m), d, AlgTag::minus);

    std::vector<Mat> Tg, Lp, Rm;
    for (const Mat& E : bfull) Tg.push_back(dexp_right(Xg, E));
    for (const Mat& E : bplus) Lp.push_back(dexp_left(Xp, E));
    for (const Mat& E : bminus) Rm.push_back(dexp_right(Xm, E));

    Vec v(dim_g + dim_p + dim_m);
    v.head(dim_g) = solve_in_basis(Tg, s.zeta, AlgTag::full);
    v.segment(dim_g, dim_p) = solve_in_basis(Lp, s.alpha, AlgTag::plus);
    v.tail(dim_m) = solve_in_basis(Rm, s.beta, AlgTag::minus);
    return v;
}

UnreducedChart unreduced_chart(const AKSParams& p, const Mat& cg, const Mat& cp, const Mat& cm) {
    UnreducedChart chart;
    const int d = p.d;
    chart.cg = cg;
    chart.cp = cp;
    chart.cm = cm;
    chart.bfull = sl_basis(d);
    chart.bplus = sl_basis(d, AlgTag::plus);
    chart.bminus = sl_basis(d, AlgTag::minus);
    chart.dim_g = static_cast<int>(chart.bfull.size());
    chart.dim_p = static_cast<int>(chart.bplus.size());
    chart.dim_m = static_cast<int>(chart.bminus.size());
    const int ng = chart.dim_g, np = chart.dim_p, nm = chart.dim_m;

    auto bfull = chart.bfull;
    chart.sys.n = ng + np + nm;
    chart.sys.label = "aks_unreduced_sl" + std::to_string(d);
    chart.sys.L.dim = chart.sys.n;
    chart.sys.L.eval = [bfull, ng, d](double, const Vec& q, const Vec& v) {
        Mat Xg = sl_from_coords(q.head(ng), d);
        Mat zeta = Mat::Zero(d, d);
        for (int k = 0; k < ng; ++k)
            zeta += v[k] * dexp_right(Xg, bfull[static_cast<std::size_t>(k)]);
        return 0.5 * pairing(zeta, zeta);
    };
    chart.sys.L.dv = [bfull, ng, np, nm, d](double, const Vec& q, const Vec& v) {
        Mat Xg = sl_from_coords(q.head(ng), d);
        std::vector<Mat> T;
        Mat zeta = Mat::Zero(d, d);
        for (int k = 0; k < ng; ++k) {
            T.push_back(dexp_right(Xg, bfull[static_cast<std::size_t>(k)]));
            zeta += v[k] * T.back();
        }
        Vec out = Vec::Zero(ng + np + nm);
        for (int k = 0; k < ng; ++k) out[k] = pairing(zeta, T[static_cast<std::size_t>(k)]);
        return out;
    };

    // K+ x K- generators as chart fields: a1 in k+ gives slots (a1, -a1, 0);
    // b1 in k- gives (-Ad_g b1, 0, b1).
    struct GenData {
        Mat cg;
        std::vector<Mat> bfull, bplus, bminus;
        int ng, np, nm, d;
    };
    auto gd = std::make_shared<GenData>(
        GenData{cg, chart.bfull, chart.bplus, chart.bminus, ng, np, nm, d});
    auto make_gen = [gd](Mat a1, Mat b1) {
        VectorFieldSpec f;
        f.dim = gd->ng + gd->np + gd->nm;
        f.comps = [gd, a1, b1](const Vec& q) {
            Mat Xg = sl_from_coords(q.head(gd->ng), gd->d);
            Mat Xp = sl_from_coords(q.segment(gd->ng, gd->np), gd->d, AlgTag::plus);
            Mat Xm = sl_from_coords(q.tail(gd->nm), gd->d, AlgTag::minus);
            Mat g = mat_exp(Xg) * gd->cg;
            Mat wg = a1 - adjoint(g, b1);
            std::vector<Mat> Tg, Lp, Rm;
            for (const Mat& E : gd->bfull) Tg.push_back(dexp_right(Xg, E));
            for (const Mat& E : gd->bplus) Lp.push_back(dexp_left(Xp, E));
            for (const Mat& E : gd->bminus) Rm.push_back(dexp_right(Xm, E));
            Vec out(gd->ng + gd->np + gd->nm);
            out.head(gd->ng) = solve_in_basis(Tg, wg, AlgTag::full);
            out.segment(gd->ng, gd->np) = solve_in_basis(Lp, Mat(-a1), AlgTag::plus);
            out.tail(gd->nm) = solve_in_basis(Rm, b1, AlgTag::minus);
            return out;
        };
        return f;
    };
    Mat zero = Mat::Zero(d, d);
    for (const Mat& e : chart.bplus) chart.generators.push_back(make_gen(e, zero));
    for (const Mat& f : chart.bminus) chart.generators.push_back(make_gen(zero, f));
    return chart;
}

ReducedAKS::ReducedAKS(AKSParams p) : p_(std::move(p)) {
    mu_ = p_.mu;
    nu_ = -p_.nu;  // sign that makes phi_map land on Feher trajectories
    basis_ = sl_basis(p_.d);
    bplus_ = sl_basis(p_.d, AlgTag::plus);
    bminus_ = sl_basis(p_.d, AlgTag::minus);
}

double ReducedAKS::routhian(const Mat& gY, const Mat& zetaY, const Mat& eta_p, const Mat& eta_m,
                            const Mat& alpha, const Mat& beta) const {
    Mat L = zetaY + alpha - adjoint(gY, beta);
    return 0.5 * pairing(L, L) - pairing(eta_p, alpha) - pairing(eta_m, beta);
}

double ReducedAKS::routhian_via_connection(const Mat& gY, const Mat& zetaY, const Mat& cp,
                                           const Mat& cm, const Mat& alpha,
                                           const Mat& beta) const {
    // Unreduced tangent = horizontal lift + infinitesimal generator of
    // (Ad_cp^-1 alpha, Ad_cm beta) at the fiber point (cp^-1 gY cm^-1, cp, cm).
    UnreducedState tangent = horizontal_lift(gY, zetaY, cp, cm);
    Mat a = adjoint(inverse(cp), alpha);
    Mat b = adjoint(cm, beta);
    tangent.zeta = tangent.zeta + a - adjoint(tangent.g, b);
    tangent.alpha = -a;
    tangent.beta = b;
    double Lprime = 0.5 * pairing(tangent.zeta, tangent.zeta);
    auto [wp, wm] = connection_value(tangent.alpha, tangent.beta);
    return Lprime - (pairing(mu_, wp) + pairing(nu_, wm));
}

double ReducedAKS::connection_force(const Mat& u1, const Mat& v1, const Mat& u2,
                                    const Mat& v2) const {
    return pairing(mu_, bracket(u1, u2)) - pairing(nu_, bracket(v1, v2));
}

Mat ReducedAKS::eta_plus(const Mat& cp) const { return adjoint(cp, mu_); }

Mat ReducedAKS::eta_minus(const Mat& cm) const { return adjoint(inverse(cm), nu_); }

ReducedAKS::State ReducedAKS::initial_state(const Mat& gY) const {
    // Lambda solves <Lam, e_i> = <mu_red, e_i>, <Ad_gY^-1 Lam, f_j> = -<nu_red, f_j>.
    const int np = static_cast<int>(bplus_.size());
    const int nm = static_cast<int>(bminus_.size());
    std::vector<Mat> B;
    Vec r(np + nm);
    for (int i = 0; i < np; ++i) {
        B.push_back(bplus_[static_cast<std::size_t>(i)]);
        r[i] = pairing(mu_, bplus_[static_cast<std::size_t>(i)]);
    }
    for (int j = 0; j < nm; ++j) {
        B.push_back(adjoint(gY, bminus_[static_cast<std::size_t>(j)]));
        r[np + j] = -pairing(nu_, bminus_[static_cast<std::size_t>(j)]);
    }
    State s;
    s.gY = gY;
    s.Lambda = dual_solve(B, r, p_.d);
    s.cp = Mat::Identity(p_.d, p_.d);
    s.cm = Mat::Identity(p_.d, p_.d);
    return s;
}

std::vector<ReducedAKS::Sample> ReducedAKS::integrate(const State& ic, double T, double dt,
                                                      std::size_t stride) const {
    const int d = p_.d;
    const double kappa = 0.05;  // transport gauge scale, kept inside the section domain

    auto transports = [&](const Mat& gY, const Mat& Lam) {
        Mat alpha = kappa * project_plus(Lam);
        Mat beta = kappa * project_minus(adjoint(inverse(gY), Lam));
        return std::make_pair(alpha, beta);
    };

    integrate::Deriv deriv = [&, d](double, const Vec& s) {
        Mat gY = unflatten(s, d, 0);
        Mat Lam = unflatten(s, d, 1);
        Mat cp = unflatten(s, d, 2);
        Mat cm = unflatten(s, d, 3);
        auto [alpha, beta] = transports(gY, Lam);
        Mat zetaY = Lam - alpha + adjoint(gY, beta);
        Mat dg = zetaY * gY;
        Mat dL = bracket(Lam, alpha);
        Mat dcp = -alpha * cp;
        Mat dcm = cm * beta;
        return flatten({&dg, &dL, &dcp, &dcm});
    };

    std::vector<Sample> out;
    Vec s = flatten({&ic.gY, &ic.Lambda, &ic.cp, &ic.cm});
    const auto steps = static_cast<std::size_t>(std::floor(T / dt));
    auto record = [&](double t) {
        Sample smp;
        smp.t = t;
        smp.s.gY = unflatten(s, d, 0);
        smp.s.Lambda = unflatten(s, d, 1);
        smp.s.cp = unflatten(s, d, 2);
        smp.s.cm = unflatten(s, d, 3);
        auto [alpha, beta] = transports(smp.s.gY, smp.s.Lambda);
        smp.alpha = alpha;
        smp.beta = beta;
        out.push_back(std::move(smp));
    };
    record(0.0);
    for (std::size_t k = 1; k <= steps; ++k) {
        s = integrate::rk4_step(deriv, s, static_cast<double>(k - 1) * dt, dt);
        if (k % stride == 0 || k == steps) record(static_cast<double>(k) * dt);
    }
    return out;
}

FeherState ReducedAKS::phi_map(const Sample& smp) const {
    const auto& s = smp.s;
    const int d = p_.d;
    Mat I = Mat::Identity(d, d);
    if ((s.cp - I).norm() > 0.9 || (s.cm - I).norm() > 0.9)
        throw PreconditionError("phi_map: transports left the section domain");

    // Section velocities along the trajectory: A = d(cp)/dt cp^-1, B = cm^-1 d(cm)/dt.
    Mat A = -smp.alpha;
    Mat B = smp.beta;
    Mat zetaY = s.Lambda - smp.alpha + adjoint(s.gY, smp.beta);

    FeherState f;
    f.g = inverse(s.cp) * s.gY * inverse(s.cm);
    f.zeta = adjoint(inverse(s.cp), Mat(zetaY - A - adjoint(s.gY, B)));
    f.alpha = adjoint(inverse(s.cp), Mat(smp.alpha + A));
    f.beta = adjoint(s.cm, Mat(B - smp.beta));
    return f;
}

double ReducedAKS::phi_pullback_gap(const FeherState& X, const Mat& cp, const Mat& A,
                                    const Mat& cm, const Mat& B) const {
    // Forward correspondence (Feher -> reduced) with section data (cp, A), (cm, B).
    Mat gY = cp * X.g * cm;
    Mat zetaY = adjoint(cp, X.zeta) + A + adjoint(gY, B);
    Mat alpha_t = adjoint(cp, X.alpha) - A;
    Mat beta_t = B - adjoint(inverse(cm), X.beta);
    Mat eta_p = eta_plus(cp);
    Mat eta_m = eta_minus(cm);
    double L_red = routhian(gY, zetaY, eta_p, eta_m, alpha_t, beta_t);

    FeherSystem fs(p_);
    double L_F = fs.lagrangian(X);
    double corr = pairing(p_.mu, adjoint(inverse(cp), A)) + pairing(p_.nu, adjoint(cm, B));
    return L_red - (L_F + corr);
}

}  // namespace geomech::aks
