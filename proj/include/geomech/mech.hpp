#pragma once

#include <geomech/fields.hpp>

#include <array>
#include <functional>
#include <string>

namespace geomech::mech {

/// External force covector field F(t, q, v).
using ForceField = std::function<Vec(double, const Vec&, const Vec&)>;

/// A Lagrangian system (Q, L, F) on an n-dimensional chart of Q.
/// F == nullptr means no force.
struct LagrangianSystem {
    int n = 0;
    ScalarField L;
    ForceField F;
    std::string label;

    Vec force(double t, const Vec& q, const Vec& v) const {
        return F ? F(t, q, v) : Vec(Vec::Zero(n));
    }
};

/// Point of W_L under the identification with R x (TQ (+) T*Q).
struct CartanPoint {
    double t = 0.0;
    Vec q, v, p;
};

/// Local frame {Z_i} of vector fields on Q. The component matrix has
/// column i equal to the components of Z_i.
struct Frame {
    std::vector<VectorFieldSpec> fields;
    bool coordinate = false;

    Mat matrix(const Vec& q) const;
};

Frame coordinate_frame(int n);

/// Residuals of the implicit quasi-velocity equations at a trajectory sample.
struct ELResiduals {
    Vec r_dyn, r_leg, r_con;

    double max_abs() const;
};

/// p_i = dL/dv^i.
Vec fiber_derivative(const LagrangianSystem& sys, double t, const Vec& q, const Vec& v);

/// Classical energy sum_i (dL/dv^i) v^i - L (the s0 section's -dt coefficient).
double energy(const LagrangianSystem& sys, double t, const Vec& q, const Vec& v);

/// Velocity Hessian M_ij = d2L/dv^i dv^j, symmetrized exactly. Throws
/// DegenerateLagrangian when the condition number reaches 1e12.
Mat mass_matrix(const LagrangianSystem& sys, double t, const Vec& q, const Vec& v);

/// Condition-check-free variant used by callers that handle degeneracy.
Mat mass_matrix_raw(const LagrangianSystem& sys, double t, const Vec& q, const Vec& v);

/// The canonical section s0: (t, q, v) -> (t, q, v, dL/dv), whose image is the
/// Legendre submanifold F_L.
CartanPoint canonical_section(const LagrangianSystem& sys, double t, const Vec& q, const Vec& v);

/// Whether the point lies on F_L (p = dL/dv within tol).
bool is_on_FL(const LagrangianSystem& sys, const CartanPoint& pt, double tol = 1e-8);

/// Coefficients of the Cartan form lambda_L = (L - p.v) dt + p_i dq^i.
struct CartanCoeffs {
    double dt_coeff;
    Vec dq_coeffs;
};
CartanCoeffs cartan_form_coeffs(const LagrangianSystem& sys, const CartanPoint& pt);

/// Quasi-velocity Euler-Lagrange residuals at the center of a uniformly spaced
/// five-sample window; the time derivative uses 4th-order central differences.
ELResiduals el_residuals(const LagrangianSystem& sys, const Frame& frame,
                         const std::array<CartanPoint, 5>& window);

/// Explicit accelerations for regular L:
///   M a = dL/dq + F - (d2L/dqdv) v - d2L/dtdv.
Vec solve_accel(const LagrangianSystem& sys, double t, const Vec& q, const Vec& v);

/// Projectable vector field on R x TQ: U,Z depend on (t,q) only, W may use v.
struct ProjectableField {
    std::function<double(double, const Vec&)> U;
    std::function<Vec(double, const Vec&)> Z;
    std::function<Vec(double, const Vec&, const Vec&)> W;
};

struct LiftCoefficients {
    double mu = 0.0;  // the conformal factor mu_Z
    Vec R;            // momentum components of Z^{1_L}
    bool shifted = false;  // computed with the shifted Lagrangian L+1
};

/// Coefficients (mu_Z, R) of the lift Z^{1_L} at a Cartan point. Falls back to
/// the shifted Lagrangian L+1 when |L| <= 1e-10 at the point.
LiftCoefficients lift_coefficients(const LagrangianSystem& sys, const ProjectableField& Z,
                                   const CartanPoint& pt);

/// Evaluate the lift Z^{1_L} as a tangent vector (dt, dq, dv, dp) at pt.
Vec lift_vector(const LagrangianSystem& sys, const ProjectableField& Z, const CartanPoint& pt);

/// Components of lambda_L over the (t,q,v,p) chart basis (dt first, then dq,
/// dv, dp blocks); used by the flow-pullback symmetry check.
Vec cartan_form_components(const LagrangianSystem& sys, const Vec& state);

}  // namespace geomech::mech
