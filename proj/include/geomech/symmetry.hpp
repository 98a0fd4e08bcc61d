#pragma once

#include <geomech/integrate.hpp>
#include <geomech/mech.hpp>

#include <vector>

namespace geomech::symmetry {

using mech::LagrangianSystem;

/// Lie group action on the chart: infinitesimal generators and structure
/// constants c^k_ab (antisymmetric in a,b; all zero for abelian groups).
/// Convention: lie_bracket(xi_a, xi_b) = -sum_k c^k_ab xi_k.
struct GroupAction {
    int m = 0;
    std::vector<VectorFieldSpec> generators;
    std::vector<double> c;  // c[k*m*m + a*m + b]

    double structure(int k, int a, int b) const { return c[static_cast<std::size_t>((k * m + a) * m + b)]; }
};

/// Abelian action by translations in the listed chart coordinates.
GroupAction translation_action(int n, const std::vector<int>& group_coords);

/// Validate the generator bracket relations at sample points (tol 1e-6).
void validate_action(const GroupAction& action, const std::vector<Vec>& samples);

/// Principal connection on the trivial bundle Q = S x G in the normal form
/// w^a = dtheta^a + sum_i A^a_i(s) ds^i. `group_coords` lists which chart
/// coordinates are group coordinates (m of them).
struct PrincipalConnection {
    int n = 0, m = 0;
    std::vector<int> group_coords;
    /// Full coefficient matrix w^a_i(q), m x n.
    std::function<Mat(const Vec&)> coeff;

    std::vector<int> base_coords() const;
    Vec value(const Vec& q, const Vec& v) const { return coeff(q) * v; }
};

/// Build the normal-form connection from base-coordinate A coefficients:
/// A(s) is m x (n-m) over the base coordinates in chart order.
PrincipalConnection make_connection(int n, const std::vector<int>& group_coords,
                                    const std::function<Mat(const Vec&)>& A);

/// Flat normal-form connection (A = 0).
PrincipalConnection flat_connection(int n, const std::vector<int>& group_coords);

/// Check w^a(xi_b) = delta^a_b at samples (tol 1e-8).
void validate_connection(const PrincipalConnection& conn, const GroupAction& action,
                         const std::vector<Vec>& samples);

/// Momentum J_a = dL/dv . xi_a(q).
Vec momentum_map(const LagrangianSystem& sys, const GroupAction& action, double t, const Vec& q,
                 const Vec& v);

struct InvarianceReport {
    double max_dL = 0.0;  // max |xi_a^C . L|
    double max_F = 0.0;   // max |<F, xi_a>|
    bool pass = false;
};

/// Invariance of L and annihilation of generators by F over sample states.
InvarianceReport check_invariance(const LagrangianSystem& sys, const GroupAction& action,
                                  const std::vector<mech::CartanPoint>& samples,
                                  double tol = 1e-6);

/// Routhian R_mu = L - <mu, w(v)> as a scalar field on the full chart.
ScalarField routhian(const LagrangianSystem& sys, const PrincipalConnection& conn, const Vec& mu);

/// Gyroscopic force G = -v ⌟ d(w_mu), i.e. G_i = sum_j D_ij v^j with
/// D = d_oneform(w_mu). Work-free by antisymmetry.
Vec gyro_force(const PrincipalConnection& conn, const Vec& mu, const Vec& q, const Vec& v);

struct RouthDecomposition {
    Vec base;   // hat-alpha components over the base coordinates
    Vec sigma;  // g*-components
};

/// Split a covector alpha = hat-alpha o Tp + <sigma, w(q)>; recomposition
/// reproduces alpha within 1e-10.
RouthDecomposition routh_decompose(const Vec& alpha, const PrincipalConnection& conn,
                                   const Vec& q);

/// Reassemble the covector from its Routh decomposition.
Vec routh_recompose(const RouthDecomposition& d, const PrincipalConnection& conn, const Vec& q);

/// Forced Lagrangian system on the base chart S obtained by eliminating the
/// group velocities at momentum level mu.
struct ReducedSystem {
    LagrangianSystem sys;  // on the base chart, force = reduced F + gyroscopic
    Vec mu;
    PrincipalConnection conn;
    std::vector<int> base_coords;

    /// Group velocities solving J(s, sdot, thetadot) = mu (theta = 0).
    std::function<Vec(double, const Vec&, const Vec&)> group_velocity;
};

struct ReducedBuildOptions {
    std::vector<mech::CartanPoint> invariance_samples;  // empty: skip the check
    bool flip_gyro_sign = false;  // negative-control hook for the sign oracle
};

ReducedSystem build_reduced_system(const LagrangianSystem& sys, const GroupAction& action,
                                   const PrincipalConnection& conn, const Vec& mu,
                                   const ReducedBuildOptions& opts = {});

struct EquivalenceReport {
    double max_base_dev = 0.0;
    double max_J_drift = 0.0;
    integrate::Trajectory full, reduced;
};

/// Integrate the full and reduced systems from matching initial data and
/// report the maximal base-coordinate deviation and momentum drift.
/// Precondition: J(ic) = mu within 1e-10.
EquivalenceReport equivalence_check(const LagrangianSystem& sys, const GroupAction& action,
                                    const PrincipalConnection& conn, const Vec& mu, const Vec& q0,
                                    const Vec& v0, double T, double dt,
                                    const ReducedBuildOptions& opts = {});

}  // namespace geomech::symmetry
