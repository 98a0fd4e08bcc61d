#include <geomech/fields.hpp>

#include <cmath>

namespace geomech {

namespace {

double checked(double r, const char* what) {
    if (!std::isfinite(r)) throw NumericalError(std::string("non-finite value in ") + what);
    return r;
}

}  // namespace

double fd_partial(const std::function<double(const Vec&)>& f, const Vec& x, int i) {
    double h = fd_step(x[i]);
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    return checked((f(xp) - f(xm)) / (2.0 * h), "fd_partial");
}

double fd_partial2(const std::function<double(const Vec&)>& f, const Vec& x, int i, int j) {
    double h = fd_step2(x[i]);
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    auto inner = [&](const Vec& y) { return fd_partial(f, y, j); };
    return checked((inner(xp) - inner(xm)) / (2.0 * h), "fd_partial2");
}

double partial_t(const ScalarField& f, double t, const Vec& q, const Vec& v) {
    if (f.dt) return f.dt(t, q, v);
    double h = fd_step(t);
    return checked((f.eval(t + h, q, v) - f.eval(t - h, q, v)) / (2.0 * h), "partial_t");
}

Vec partial_q(const ScalarField& f, double t, const Vec& q, const Vec& v) {
    if (f.dq) return f.dq(t, q, v);
    Vec g(q.size());
    auto fq = [&](const Vec& qq) { return f.eval(t, qq, v); };
    for (int i = 0; i < q.size(); ++i) g[i] = fd_partial(fq, q, i);
    return g;
}

Vec partial_v(const ScalarField& f, double t, const Vec& q, const Vec& v) {
    if (f.dv) return f.dv(t, q, v);
    Vec g(v.size());
    auto fv = [&](const Vec& vv) { return f.eval(t, q, vv); };
    for (int i = 0; i < v.size(); ++i) g[i] = fd_partial(fv, v, i);
    return g;
}

void validate_partials(const ScalarField& f, const std::vector<ChartSample>& samples, double tol) {
    ScalarField bare{f.dim, f.eval, nullptr, nullptr, nullptr};
    for (const auto& s : samples) {
        if (f.dq) {
            Vec a = f.dq(s.t, s.q, s.v), b = partial_q(bare, s.t, s.q, s.v);
            if ((a - b).cwiseAbs().maxCoeff() > tol)
                throw NumericalError("analytic dq disagrees with finite differences");
        }
        if (f.dv) {
            Vec a = f.dv(s.t, s.q, s.v), b = partial_v(bare, s.t, s.q, s.v);
            if ((a - b).cwiseAbs().maxCoeff() > tol)
                throw NumericalError("analytic dv disagrees with finite differences");
        }
        if (f.dt) {
            double a = f.dt(s.t, s.q, s.v), b = partial_t(bare, s.t, s.q, s.v);
            if (std::fabs(a - b) > tol)
                throw NumericalError("analytic dt disagrees with finite differences");
        }
    }
}

Vec lie_bracket(const VectorFieldSpec& X, const VectorFieldSpec& Y, const Vec& q) {
    const int n = static_cast<int>(q.size());
    Vec xq = X(q), yq = Y(q);
    Vec out = Vec::Zero(n);
    for (int k = 0; k < n; ++k) {
        auto yk = [&](const Vec& p) { return Y(p)[k]; };
        auto xk = [&](const Vec& p) { return X(p)[k]; };
        double acc = 0.0;
        for (int j = 0; j < n; ++j)
            acc += xq[j] * fd_partial(yk, q, j) - yq[j] * fd_partial(xk, q, j);
        out[k] = checked(acc, "lie_bracket");
    }
    return out;
}

PhaseVectorField complete_lift(const VectorFieldSpec& X) {
    PhaseVectorField Z;
    Z.dim = X.dim;
    Z.base = [X](const Vec& q, const Vec&) { return X(q); };
    Z.fiber = [X](const Vec& q, const Vec& v) {
        const int n = static_cast<int>(q.size());
        Vec out = Vec::Zero(n);
        for (int j = 0; j < n; ++j) {
            auto xj = [&](const Vec& p) { return X(p)[j]; };
            double acc = 0.0;
            for (int k = 0; k < n; ++k) acc += v[k] * fd_partial(xj, q, k);
            out[j] = acc;
        }
        return out;
    };
    return Z;
}

PhaseVectorField vertical_lift(const VectorFieldSpec& X) {
    PhaseVectorField Z;
    Z.dim = X.dim;
    Z.base = [n = X.dim](const Vec&, const Vec&) { return Vec::Zero(n); };
    Z.fiber = [X](const Vec& q, const Vec&) { return X(q); };
    return Z;
}

ScalarField fiber_linear(const OneFormSpec& gamma) {
    ScalarField f;
    f.dim = gamma.dim;
    f.eval = [gamma](double, const Vec& q, const Vec& v) { return gamma(q).dot(v); };
    f.dv = [gamma](double, const Vec& q, const Vec&) { return gamma(q); };
    return f;
}

Mat d_oneform(const OneFormSpec& omega, const Vec& q) {
    const int n = static_cast<int>(q.size());
    Mat J(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            auto wj = [&](const Vec& p) { return omega(p)[j]; };
            J(i, j) = fd_partial(wj, q, i);
        }
    // D_ij = d_i w_j - d_j w_i; the difference of transposes is exactly
    // antisymmetric in floating point.
    Mat D = J - J.transpose().eval();
    return 0.5 * (D - D.transpose().eval());
}

VectorFieldSpec as_vectorfield(const PhaseVectorField& Z) {
    VectorFieldSpec f;
    f.dim = 2 * Z.dim;
    f.comps = [Z](const Vec& x) {
        const int n = Z.dim;
        Vec q = x.head(n), v = x.tail(n);
        Vec out(2 * n);
        out.head(n) = Z.base(q, v);
        out.tail(n) = Z.fiber(q, v);
        return out;
    };
    return f;
}

VectorFieldSpec coordinate_field(int dim, int i) {
    VectorFieldSpec f;
    f.dim = dim;
    f.comps = [dim, i](const Vec&) {
        Vec e = Vec::Zero(dim);
        e[i] = 1.0;
        return e;
    };
    return f;
}

VectorFieldSpec constant_field(const Vec& c) {
    VectorFieldSpec f;
    f.dim = static_cast<int>(c.size());
    f.comps = [c](const Vec&) { return c; };
    return f;
}

}  // namespace geomech
