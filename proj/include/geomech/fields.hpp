#pragma once

#include <geomech/errors.hpp>

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace geomech {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Central-difference step for first derivatives.
inline double fd_step(double x) { return 1e-5 * std::max(1.0, std::fabs(x)); }
/// Step for nested second differences.
inline double fd_step2(double x) { return 1e-4 * std::max(1.0, std::fabs(x)); }

/// Central difference (f(x+h e_i) - f(x-h e_i)) / 2h with h = fd_step(x_i).
double fd_partial(const std::function<double(const Vec&)>& f, const Vec& x, int i);

/// Second partial d2f/dx_i dx_j by nested central differences (h2 step rule).
double fd_partial2(const std::function<double(const Vec&)>& f, const Vec& x, int i, int j);

/// Scalar field on a chart, evaluated as f(t, q, v). Analytic partials are
/// optional; when present they take precedence over finite differences.
struct ScalarField {
    int dim = 0;
    std::function<double(double, const Vec&, const Vec&)> eval;
    std::function<Vec(double, const Vec&, const Vec&)> dq;  // optional
    std::function<Vec(double, const Vec&, const Vec&)> dv;  // optional
    std::function<double(double, const Vec&, const Vec&)> dt;  // optional

    double operator()(double t, const Vec& q, const Vec& v) const { return eval(t, q, v); }
};

/// Sample point used to validate analytic partials against finite differences.
struct ChartSample {
    double t;
    Vec q, v;
};

/// Check the field's analytic partials against central differences at the
/// given samples; throws NumericalError beyond tolerance.
void validate_partials(const ScalarField& f, const std::vector<ChartSample>& samples,
                       double tol = 1e-5);

/// Partial derivatives of a ScalarField; analytic evaluators win when present.
double partial_t(const ScalarField& f, double t, const Vec& q, const Vec& v);
Vec partial_q(const ScalarField& f, double t, const Vec& q, const Vec& v);
Vec partial_v(const ScalarField& f, double t, const Vec& q, const Vec& v);

/// Vector field on the base chart: q -> components.
struct VectorFieldSpec {
    int dim = 0;
    std::function<Vec(const Vec&)> comps;

    Vec operator()(const Vec& q) const { return comps(q); }
};

/// 1-form on the base chart: q -> covector coefficients.
struct OneFormSpec {
    int dim = 0;
    std::function<Vec(const Vec&)> comps;

    Vec operator()(const Vec& q) const { return comps(q); }
};

/// Vector field on the velocity phase (q,v) split into base/fiber components.
struct PhaseVectorField {
    int dim = 0;
    std::function<Vec(const Vec&, const Vec&)> base;
    std::function<Vec(const Vec&, const Vec&)> fiber;
};

/// [X,Y] = (X.d)Y - (Y.d)X at q, partials by central differences.
Vec lie_bracket(const VectorFieldSpec& X, const VectorFieldSpec& Y, const Vec& q);

/// X^C: base X^i(q), fiber v^k dX^j/dq^k.
PhaseVectorField complete_lift(const VectorFieldSpec& X);

/// X^V: base 0, fiber X^i(q).
PhaseVectorField vertical_lift(const VectorFieldSpec& X);

/// The fiber-linear function (q,v) -> sum_i gamma_i(q) v^i.
ScalarField fiber_linear(const OneFormSpec& gamma);

/// Exterior derivative of a 1-form: D_ij = d_i w_j - d_j w_i, antisymmetrized
/// exactly as (D - D^T)/2.
Mat d_oneform(const OneFormSpec& omega, const Vec& q);

/// View a phase field as a plain vector field on the doubled (q,v) chart.
VectorFieldSpec as_vectorfield(const PhaseVectorField& Z);

/// Coordinate field d/dq^i.
VectorFieldSpec coordinate_field(int dim, int i);

/// Zero / constant-component fields.
VectorFieldSpec constant_field(const Vec& c);

}  // namespace geomech
