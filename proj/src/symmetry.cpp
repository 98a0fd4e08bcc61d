#include <geomech/symmetry.hpp>

#include <geomech/errors.hpp>

#include <cmath>
#include <future>

namespace geomech::symmetry {

GroupAction translation_action(int n, const std::vector<int>& group_coords) {
    GroupAction a;
    a.m = static_cast<int>(group_coords.size());
    for (int gc : group_coords) a.generators.push_back(coordinate_field(n, gc));
    a.c.assign(static_cast<std::size_t>(a.m) * a.m * a.m, 0.0);
    return a;
}

void validate_action(const GroupAction& action, const std::vector<Vec>& samples) {
    const int m = action.m;
    for (const Vec& q : samples)
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) {
                Vec lhs = lie_bracket(action.generators[static_cast<std::size_t>(a)],
                                      action.generators[static_cast<std::size_t>(b)], q);
                Vec rhs = Vec::Zero(q.size());
                for (int k = 0; k < m; ++k)
                    rhs -= action.structure(k, a, b) * action.generators[static_cast<std::size_t>(k)](q);
                if ((lhs - rhs).cwiseAbs().maxCoeff() > 1e-6)
                    throw InvarianceFailure("generator brackets disagree with structure constants");
            }
}

std::vector<int> PrincipalConnection::base_coords() const {
    std::vector<int> base;
    for (int i = 0; i < n; ++i)
        if (std::find(group_coords.begin(), group_coords.end(), i) == group_coords.end())
            base.push_back(i);
    return base;
}

PrincipalConnection make_connection(int n, const std::vector<int>& group_coords,
                                    const std::function<Mat(const Vec&)>& A) {
    PrincipalConnection conn;
    conn.n = n;
    conn.m = static_cast<int>(group_coords.size());
    conn.group_coords = group_coords;
    std::vector<int> base = conn.base_coords();
    conn.coeff = [n, group_coords, base, A](const Vec& q) {
        const int m = static_cast<int>(group_coords.size());
        Mat w = Mat::Zero(m, n);
        for (int a = 0; a < m; ++a) w(a, group_coords[static_cast<std::size_t>(a)]) = 1.0;
        if (A) {
            Vec s(static_cast<int>(base.size()));
            for (std::size_t i = 0; i < base.size(); ++i) s[static_cast<int>(i)] = q[base[i]];
            Mat Am = A(s);
            for (int a = 0; a < m; ++a)
                for (std::size_t i = 0; i < base.size(); ++i)
                    w(a, base[i]) = Am(a, static_cast<int>(i));
        }
        return w;
    };
    return conn;
}

PrincipalConnection flat_connection(int n, const std::vector<int>& group_coords) {
    return make_connection(n, group_coords, nullptr);
}

void validate_connection(const PrincipalConnection& conn, const GroupAction& action,
                         const std::vector<Vec>& samples) {
    for (const Vec& q : samples) {
        Mat w = conn.coeff(q);
        for (int a = 0; a < conn.m; ++a)
            for (int b = 0; b < action.m; ++b) {
                double val = w.row(a).dot(action.generators[static_cast<std::size_t>(b)](q));
                if (std::fabs(val - (a == b ? 1.0 : 0.0)) > 1e-8)
                    throw InvarianceFailure("connection does not reproduce the generators");
            }
    }
}

Vec momentum_map(const LagrangianSystem& sys, const GroupAction& action, double t, const Vec& q,
                 const Vec& v) {
    Vec p = mech::fiber_derivative(sys, t, q, v);
    Vec J(action.m);
    for (int a = 0; a < action.m; ++a)
        J[a] = p.dot(action.generators[static_cast<std::size_t>(a)](q));
    return J;
}

InvarianceReport check_invariance(const LagrangianSystem& sys, const GroupAction& action,
                                  const std::vector<mech::CartanPoint>& samples, double tol) {
    InvarianceReport rep;
    for (const auto& s : samples) {
        Vec dLq = partial_q(sys.L, s.t, s.q, s.v);
        Vec dLv = partial_v(sys.L, s.t, s.q, s.v);
        Vec F = sys.force(s.t, s.q, s.v);
        for (int a = 0; a < action.m; ++a) {
            const auto& xi = action.generators[static_cast<std::size_t>(a)];
            Vec xq = xi(s.q);
            double act = dLq.dot(xq);
            for (int j = 0; j < sys.n; ++j) {
                auto xj = [&](const Vec& p) { return xi(p)[j]; };
                double fiber_j = 0.0;
                for (int k = 0; k < sys.n; ++k) fiber_j += s.v[k] * fd_partial(xj, s.q, k);
                act += dLv[j] * fiber_j;
            }
            rep.max_dL = std::max(rep.max_dL, std::fabs(act));
            rep.max_F = std::max(rep.max_F, std::fabs(F.dot(xq)));
        }
    }
    rep.pass = rep.max_dL <= tol && rep.max_F <= tol;
    return rep;
}

ScalarField routhian(const LagrangianSystem& sys, const PrincipalConnection& conn, const Vec& mu) {
    ScalarField R;
    R.dim = sys.n;
    ScalarField L = sys.L;
    auto coeff = conn.coeff;
    R.eval = [L, coeff, mu](double t, const Vec& q, const Vec& v) {
        return L.eval(t, q, v) - mu.dot(coeff(q) * v);
    };
    if (L.dv)
        R.dv = [L, coeff, mu](double t, const Vec& q, const Vec& v) {
            return Vec(L.dv(t, q, v) - coeff(q).transpose() * mu);
        };
    if (L.dq)
        R.dq = [L, coeff, mu, n = sys.n](double t, const Vec& q, const Vec& v) {
            Vec g = L.dq(t, q, v);
            auto wmu = [&](const Vec& qq) { return mu.dot(coeff(qq) * v); };
            for (int i = 0; i < n; ++i) g[i] -= fd_partial(wmu, q, i);
            return g;
        };
    return R;
}

namespace {

OneFormSpec omega_mu_form(const PrincipalConnection& conn, const Vec& mu) {
    OneFormSpec w;
    w.dim = conn.n;
    w.comps = [coeff = conn.coeff, mu](const Vec& q) { return Vec(coeff(q).transpose() * mu); };
    return w;
}

}  // namespace

Vec gyro_force(const PrincipalConnection& conn, const Vec& mu, const Vec& q, const Vec& v) {
    Mat D = d_oneform(omega_mu_form(conn, mu), q);
    return D * v;
}

RouthDecomposition routh_decompose(const Vec& alpha, const PrincipalConnection& conn,
                                   const Vec& q) {
    Mat w = conn.coeff(q);
    const auto& gc = conn.group_coords;
    const int m = conn.m;
    // sigma solves the group-coordinate block: alpha_theta = w_theta^T sigma.
    Mat wg(m, m);
    Vec ag(m);
    for (int a = 0; a < m; ++a) {
        ag[a] = alpha[gc[static_cast<std::size_t>(a)]];
        for (int b = 0; b < m; ++b) wg(a, b) = w(b, gc[static_cast<std::size_t>(a)]);
    }
    Eigen::FullPivLU<Mat> lu(wg);
    if (!lu.isInvertible())
        throw PreconditionError("connection coefficient matrix not full rank on group block");
    RouthDecomposition d;
    d.sigma = lu.solve(ag);
    std::vector<int> base = conn.base_coords();
    d.base = Vec(static_cast<int>(base.size()));
    for (std::size_t i = 0; i < base.size(); ++i)
        d.base[static_cast<int>(i)] = alpha[base[i]] - d.sigma.dot(w.col(base[i]));
    return d;
}

Vec routh_recompose(const RouthDecomposition& d, const PrincipalConnection& conn, const Vec& q) {
    Vec alpha = Vec::Zero(conn.n);
    std::vector<int> base = conn.base_coords();
    for (std::size_t i = 0; i < base.size(); ++i) alpha[base[i]] = d.base[static_cast<int>(i)];
    alpha += conn.coeff(q).transpose() * d.sigma;
    return alpha;
}

namespace {

struct Embedding {
    int n, m;
    std::vector<int> base, group;

    Vec full_q(const Vec& s) const {
        Vec q = Vec::Zero(n);
        for (std::size_t i = 0; i < base.size(); ++i) q[base[i]] = s[static_cast<int>(i)];
        return q;  // group coordinates pinned to 0 (invariance makes them immaterial)
    }

    Vec full_v(const Vec& sdot, const Vec& gdot) const {
        Vec v = Vec::Zero(n);
        for (std::size_t i = 0; i < base.size(); ++i) v[base[i]] = sdot[static_cast<int>(i)];
        for (std::size_t a = 0; a < group.size(); ++a) v[group[a]] = gdot[static_cast<int>(a)];
        return v;
    }

    Vec base_part(const Vec& x) const {
        Vec s(static_cast<int>(base.size()));
        for (std::size_t i = 0; i < base.size(); ++i) s[static_cast<int>(i)] = x[base[i]];
        return s;
    }

    Vec group_part(const Vec& x) const {
        Vec g(static_cast<int>(group.size()));
        for (std::size_t a = 0; a < group.size(); ++a) g[static_cast<int>(a)] = x[group[a]];
        return g;
    }
};

// Solve J(s, sdot, thetadot) = mu for the group velocities by Newton with the
// group block of the mass matrix as Jacobian (dJ_a/dthetadot_b by central
// differences of the momentum itself). Exact in one step for
// velocity-quadratic Lagrangians.
Vec eliminate_group_velocity(const LagrangianSystem& sys, const GroupAction& action,
                             const Embedding& emb, const Vec& mu, double t, const Vec& s,
                             const Vec& sdot) {
    Vec gdot = Vec::Zero(emb.m);
    Vec q = emb.full_q(s);
    auto J_at = [&](const Vec& gd) {
        return momentum_map(sys, action, t, q, emb.full_v(sdot, gd));
    };
    for (int iter = 0; iter < 50; ++iter) {
        Vec r = J_at(gdot) - mu;
        if (r.cwiseAbs().maxCoeff() < 1e-13) return gdot;
        Mat Mg(emb.m, emb.m);
        for (int b = 0; b < emb.m; ++b) {
            double h = fd_step(gdot[b]);
            Vec gp = gdot, gm = gdot;
            gp[b] += h;
            gm[b] -= h;
            Mg.col(b) = (J_at(gp) - J_at(gm)) / (2.0 * h);
        }
        Eigen::FullPivLU<Mat> lu(Mg);
        if (!lu.isInvertible())
            throw ConstraintSolveFailure("group block of the mass matrix is singular");
        gdot -= lu.solve(r);
    }
    if ((J_at(gdot) - mu).cwiseAbs().maxCoeff() > 1e-10)
        throw ConstraintSolveFailure("momentum constraint solve did not converge");
    return gdot;
}

}  // namespace

ReducedSystem build_reduced_system(const LagrangianSystem& sys, const GroupAction& action,
                                   const PrincipalConnection& conn, const Vec& mu,
                                   const ReducedBuildOptions& opts) {
    if (!opts.invariance_samples.empty()) {
        auto rep = check_invariance(sys, action, opts.invariance_samples);
        if (!rep.pass)
            throw InvarianceFailure("system is not invariant under the declared action");
    }

    Embedding emb{sys.n, conn.m, conn.base_coords(), conn.group_coords};
    const int nb = static_cast<int>(emb.base.size());

    auto gvel = [sys, action, emb, mu](double t, const Vec& s, const Vec& sdot) {
        return eliminate_group_velocity(sys, action, emb, mu, t, s, sdot);
    };

    ScalarField Rmu = routhian(sys, conn, mu);

    ReducedSystem red;
    red.mu = mu;
    red.conn = conn;
    red.base_coords = emb.base;
    red.group_velocity = gvel;
    red.sys.n = nb;
    red.sys.label = sys.label + "/reduced";
    red.sys.L.dim = nb;
    red.sys.L.eval = [Rmu, emb, gvel](double t, const Vec& s, const Vec& sdot) {
        Vec gdot = gvel(t, s, sdot);
        return Rmu.eval(t, emb.full_q(s), emb.full_v(sdot, gdot));
    };
    if (sys.L.dv) {
        // Envelope: on the constraint J = mu, dRbar/dsdot is the base part of
        // dR_mu/dv evaluated at the eliminated velocity.
        red.sys.L.dv = [Rmu, emb, gvel](double t, const Vec& s, const Vec& sdot) {
            Vec gdot = gvel(t, s, sdot);
            Vec full = Rmu.dv(t, emb.full_q(s), emb.full_v(sdot, gdot));
            return emb.base_part(full);
        };
    }

    double sign = opts.flip_gyro_sign ? -1.0 : 1.0;
    auto F = sys.F;
    auto cconn = conn;
    Vec cmu = mu;
    red.sys.F = [F, cconn, cmu, emb, gvel, sign](double t, const Vec& s, const Vec& sdot) {
        Vec q = emb.full_q(s);
        Vec v = emb.full_v(sdot, gvel(t, s, sdot));
        Vec f = Vec::Zero(emb.n);
        if (F) f = F(t, q, v);
        f += sign * gyro_force(cconn, cmu, q, v);
        return emb.base_part(f);
    };
    return red;
}

EquivalenceReport equivalence_check(const LagrangianSystem& sys, const GroupAction& action,
                                    const PrincipalConnection& conn, const Vec& mu, const Vec& q0,
                                    const Vec& v0, double T, double dt,
                                    const ReducedBuildOptions& opts) {
    Vec J0 = momentum_map(sys, action, 0.0, q0, v0);
    if ((J0 - mu).cwiseAbs().maxCoeff() > 1e-10)
        throw PreconditionError("initial data violates J(ic) = mu");

    ReducedSystem red = build_reduced_system(sys, action, conn, mu, opts);
    Embedding emb{sys.n, conn.m, red.base_coords, conn.group_coords};

    integrate::SimOptions full_opts;
    full_opts.diagnostics.push_back({"Jdrift", [&sys, &action, mu](double t, const Vec& q, const Vec& v) {
                                         return (momentum_map(sys, action, t, q, v) - mu)
                                             .cwiseAbs()
                                             .maxCoeff();
                                     }});

    // The two integrations are independent; run them concurrently.
    auto full_fut = std::async(std::launch::async, [&] {
        return integrate::simulate(sys, q0, v0, 0.0, T, dt, full_opts);
    });
    Vec s0 = emb.base_part(q0), sdot0 = emb.base_part(v0);
    auto red_fut = std::async(std::launch::async, [&] {
        return integrate::simulate(red.sys, s0, sdot0, 0.0, T, dt);
    });

    EquivalenceReport rep;
    rep.full = full_fut.get();
    rep.reduced = red_fut.get();

    for (std::size_t k = 0; k < rep.full.size() && k < rep.reduced.size(); ++k) {
        Vec base_full = emb.base_part(rep.full.q[k]);
        rep.max_base_dev =
            std::max(rep.max_base_dev, (base_full - rep.reduced.q[k]).cwiseAbs().maxCoeff());
    }
    for (double d : rep.full.diagnostics.at("Jdrift")) rep.max_J_drift = std::max(rep.max_J_drift, d);
    return rep;
}

}  // namespace geomech::symmetry
