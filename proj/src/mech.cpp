#include <geomech/mech.hpp>

#include <geomech/errors.hpp>

#include <cmath>
#include <limits>

namespace geomech::mech {

Mat Frame::matrix(const Vec& q) const {
    const int n = static_cast<int>(fields.size());
    Mat Z(n, n);
    for (int i = 0; i < n; ++i) Z.col(i) = fields[static_cast<std::size_t>(i)](q);
    return Z;
}

Frame coordinate_frame(int n) {
    Frame f;
    f.coordinate = true;
    for (int i = 0; i < n; ++i) f.fields.push_back(coordinate_field(n, i));
    return f;
}

double ELResiduals::max_abs() const {
    double m = 0.0;
    if (r_dyn.size()) m = std::max(m, r_dyn.cwiseAbs().maxCoeff());
    if (r_leg.size()) m = std::max(m, r_leg.cwiseAbs().maxCoeff());
    if (r_con.size()) m = std::max(m, r_con.cwiseAbs().maxCoeff());
    return m;
}

Vec fiber_derivative(const LagrangianSystem& sys, double t, const Vec& q, const Vec& v) {
    return partial_v(sys.L, t, q, v);
}

double energy(const LagrangianSystem& sys, double t, const Vec& q, const Vec& v) {
    return fiber_derivative(sys, t, q, v).dot(v) - sys.L(t, q, v);
}

Mat mass_matrix_raw(const LagrangianSystem& sys, double t, const Vec& q, const Vec& v) {
    const int n = sys.n;
    Mat M(n, n);
    if (sys.L.dv) {
        for (int j = 0; j < n; ++j) {
            double h = fd_step(v[j]);
            Vec vp = v, vm = v;
            vp[j] += h;
            vm[j] -= h;
            M.col(j) = (sys.L.dv(t, q, vp) - sys.L.dv(t, q, vm)) / (2.0 * h);
        }
    } else {
        auto f = [&](const Vec& vv) { return sys.L(t, q, vv); };
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j) {
                M(i, j) = fd_partial2(f, v, i, j);
                M(j, i) = M(i, j);
            }
    }
    if (!M.allFinite()) throw NumericalError("non-finite mass matrix");
    return 0.5 * (M + M.transpose().eval());
}

namespace {

double condition_number(const Mat& M) {
    Eigen::JacobiSVD<Mat> svd(M);
    double smin = svd.singularValues()(M.rows() - 1);
    double smax = svd.singularValues()(0);
    if (smin == 0.0) return std::numeric_limits<double>::infinity();
    return smax / smin;
}

}  // namespace

Mat mass_matrix(const LagrangianSystem& sys, double t, const Vec& q, const Vec& v) {
    Mat M = mass_matrix_raw(sys, t, q, v);
    Eigen::JacobiSVD<Mat> svd(M);
    double smax = svd.singularValues()(0);
    double smin = svd.singularValues()(M.rows() - 1);
    // Degenerate when cond >= 1e12 or when the smallest singular value sits
    // below the noise floor of the differentiation path (nested differences
    // resolve second derivatives only to ~5e-7 of the Lagrangian's scale).
    double noise = (sys.L.dv ? 1e-10 : 5e-7) * std::max(1.0, std::fabs(sys.L(t, q, v)));
    if (!(smin > 1e-12 * smax) || !(smin > noise))
        throw DegenerateLagrangian("mass matrix condition number >= 1e12 for system '" +
                                   sys.label + "'");
    return M;
}

CartanPoint canonical_section(const LagrangianSystem& sys, double t, const Vec& q, const Vec& v) {
    return CartanPoint{t, q, v, fiber_derivative(sys, t, q, v)};
}

bool is_on_FL(const LagrangianSystem& sys, const CartanPoint& pt, double tol) {
    Vec p = fiber_derivative(sys, pt.t, pt.q, pt.v);
    return (p - pt.p).cwiseAbs().maxCoeff() <= tol;
}

CartanCoeffs cartan_form_coeffs(const LagrangianSystem& sys, const CartanPoint& pt) {
    double L = sys.L(pt.t, pt.q, pt.v);
    return CartanCoeffs{L - pt.p.dot(pt.v), pt.p};
}

namespace {

// 4th-order central difference at the center of a 5-sample uniform window.
double fd4(const std::array<double, 5>& f, double dt) {
    return (-f[4] + 8.0 * f[3] - 8.0 * f[1] + f[0]) / (12.0 * dt);
}

// Z^C . L for a base vector field Z.
double complete_lift_action(const LagrangianSystem& sys, const VectorFieldSpec& Z, double t,
                            const Vec& q, const Vec& v) {
    Vec zq = Z(q);
    Vec dLq = partial_q(sys.L, t, q, v);
    Vec dLv = partial_v(sys.L, t, q, v);
    double acc = dLq.dot(zq);
    for (int j = 0; j < sys.n; ++j) {
        auto zj = [&](const Vec& p) { return Z(p)[j]; };
        double fiber_j = 0.0;
        for (int k = 0; k < sys.n; ++k) fiber_j += v[k] * fd_partial(zj, q, k);
        acc += dLv[j] * fiber_j;
    }
    return acc;
}

}  // namespace

ELResiduals el_residuals(const LagrangianSystem& sys, const Frame& frame,
                         const std::array<CartanPoint, 5>& window) {
    const int n = sys.n;
    const double dt = window[1].t - window[0].t;
    for (std::size_t k = 1; k < 5; ++k)
        if (std::fabs(window[k].t - window[k - 1].t - dt) > 1e-12 * std::max(1.0, dt))
            throw PreconditionError("el_residuals window must be uniformly spaced");

    const CartanPoint& c = window[2];
    Mat Zc = frame.matrix(c.q);
    if (condition_number(Zc) >= 1e12)
        throw PreconditionError("frame is singular at the window center");
    Eigen::PartialPivLU<Mat> lu(Zc);

    ELResiduals out;
    out.r_dyn = Vec::Zero(n);
    out.r_leg = Vec::Zero(n);
    out.r_con = Vec::Zero(n);

    // d/dt of the quasi-momenta Zbar_i = p . Z_i(q) along the window.
    for (int i = 0; i < n; ++i) {
        const auto& Zi = frame.fields[static_cast<std::size_t>(i)];
        std::array<double, 5> zbar{};
        for (std::size_t k = 0; k < 5; ++k) zbar[k] = window[k].p.dot(Zi(window[k].q));
        double rhs = complete_lift_action(sys, Zi, c.t, c.q, c.v) +
                     sys.force(c.t, c.q, c.v).dot(Zi(c.q));
        out.r_dyn[i] = fd4(zbar, dt) - rhs;
    }

    // Legendre residuals Zbar_i - Z_i^V . L = (p - dL/dv) . Z_i.
    Vec dLv = partial_v(sys.L, c.t, c.q, c.v);
    for (int i = 0; i < n; ++i)
        out.r_leg[i] = (c.p - dLv).dot(frame.fields[static_cast<std::size_t>(i)](c.q));

    // Contact residuals: dual-coframe coefficients of (dq/dt - v).
    Vec qdot(n);
    for (int j = 0; j < n; ++j) {
        std::array<double, 5> qs{};
        for (std::size_t k = 0; k < 5; ++k) qs[k] = window[k].q[j];
        qdot[j] = fd4(qs, dt);
    }
    out.r_con = lu.solve(qdot - c.v);

    if (!out.r_dyn.allFinite() || !out.r_leg.allFinite() || !out.r_con.allFinite())
        throw NumericalError("non-finite residuals");
    return out;
}

Vec solve_accel(const LagrangianSystem& sys, double t, const Vec& q, const Vec& v) {
    const int n = sys.n;
    Mat M = mass_matrix(sys, t, q, v);

    Vec rhs = partial_q(sys.L, t, q, v) + sys.force(t, q, v);

    auto dLv_at = [&](double tt, const Vec& qq, const Vec& vv) {
        return partial_v(sys.L, tt, qq, vv);
    };
    // - (d2L/dq dv) v
    for (int j = 0; j < n; ++j) {
        double h = sys.L.dv ? fd_step(q[j]) : fd_step2(q[j]);
        Vec qp = q, qm = q;
        qp[j] += h;
        qm[j] -= h;
        rhs -= v[j] * Vec((dLv_at(t, qp, v) - dLv_at(t, qm, v)) / (2.0 * h));
    }
    // - d2L/dt dv
    {
        double h = sys.L.dv ? fd_step(t) : fd_step2(t);
        rhs -= Vec((dLv_at(t + h, q, v) - dLv_at(t - h, q, v)) / (2.0 * h));
    }

    Vec a = M.ldlt().solve(rhs);
    if (!a.allFinite()) {
        a = M.fullPivLu().solve(rhs);
        if (!a.allFinite()) throw NumericalError("acceleration solve failed");
    }
    return a;
}

LiftCoefficients lift_coefficients(const LagrangianSystem& sys, const ProjectableField& Z,
                                   const CartanPoint& pt) {
    const int n = sys.n;
    bool shift = std::fabs(sys.L(pt.t, pt.q, pt.v)) <= 1e-10;
    double L = sys.L(pt.t, pt.q, pt.v) + (shift ? 1.0 : 0.0);
    double E = L - pt.p.dot(pt.v);
    Vec dLq = partial_q(sys.L, pt.t, pt.q, pt.v);
    Vec dLv = partial_v(sys.L, pt.t, pt.q, pt.v);
    Vec Zq = Z.Z(pt.t, pt.q);
    Vec W = Z.W(pt.t, pt.q, pt.v);

    double ht = fd_step(pt.t);
    double dUdt = (Z.U(pt.t + ht, pt.q) - Z.U(pt.t - ht, pt.q)) / (2.0 * ht);
    Vec dZdt = (Z.Z(pt.t + ht, pt.q) - Z.Z(pt.t - ht, pt.q)) / (2.0 * ht);

    Vec dUdq(n);
    Mat dZdq(n, n);  // (k, i) = dZ^k / dq^i
    for (int i = 0; i < n; ++i) {
        auto u = [&](const Vec& qq) { return Z.U(pt.t, qq); };
        dUdq[i] = fd_partial(u, pt.q, i);
        for (int k = 0; k < n; ++k) {
            auto z = [&](const Vec& qq) { return Z.Z(pt.t, qq)[k]; };
            dZdq(k, i) = fd_partial(z, pt.q, i);
        }
    }
    double DtU = dUdt + dUdq.dot(pt.v);
    Vec DtZ = dZdt + dZdq * pt.v;

    LiftCoefficients out;
    out.shifted = shift;
    out.mu = (Zq.dot(dLq) + W.dot(dLv - pt.p) + E * DtU + pt.p.dot(DtZ)) / L;
    out.R = Vec::Zero(n);
    for (int i = 0; i < n; ++i)
        out.R[i] = out.mu * pt.p[i] - E * dUdq[i] - pt.p.dot(dZdq.col(i));
    if (!std::isfinite(out.mu) || !out.R.allFinite())
        throw NumericalError("non-finite lift coefficients");
    return out;
}

Vec lift_vector(const LagrangianSystem& sys, const ProjectableField& Z, const CartanPoint& pt) {
    const int n = sys.n;
    LiftCoefficients lc = lift_coefficients(sys, Z, pt);
    Vec out(1 + 3 * n);
    out[0] = Z.U(pt.t, pt.q);
    out.segment(1, n) = Z.Z(pt.t, pt.q);
    out.segment(1 + n, n) = Z.W(pt.t, pt.q, pt.v);
    out.segment(1 + 2 * n, n) = lc.R;
    return out;
}

Vec cartan_form_components(const LagrangianSystem& sys, const Vec& state) {
    const int n = sys.n;
    double t = state[0];
    Vec q = state.segment(1, n), v = state.segment(1 + n, n), p = state.segment(1 + 2 * n, n);
    Vec comps = Vec::Zero(1 + 3 * n);
    comps[0] = sys.L(t, q, v) - p.dot(v);
    comps.segment(1, n) = p;
    return comps;
}

}  // namespace geomech::mech
