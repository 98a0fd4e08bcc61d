#pragma once

#include <geomech/integrate.hpp>
#include <geomech/liegroup.hpp>
#include <geomech/mech.hpp>

#include <memory>
#include <utility>
#include <vector>

namespace geomech::aks {

using liegroup::AlgTag;

/// Matrix-size, momentum covectors (as matrices paired by trace) and initial
/// data for the factorizable-group example on K = SL(d).
struct AKSParams {
    int d = 2;
    Mat mu, nu;          // duals of k+ and k-, stored in the complementary patterns
    Mat g0, zeta0;       // initial point and right-trivialized velocity on K
    Mat alpha0, beta0;   // fiber velocities used by unreduced flows (k+, k-)
};

/// Desk-scale defaults: bounded flows on SL(2) and SL(3).
AKSParams sl2_params();
AKSParams sl3_params();

/// State of the singular system on TK x k+ x k-.
struct FeherState {
    Mat g, zeta;   // group point, right-trivialized velocity
    Mat alpha;     // k+ component
    Mat beta;      // k- component
};

/// Point of the unreduced configuration M = K x K+ x K- with trivialized
/// velocities (right for K and K-, left for K+).
struct UnreducedState {
    Mat g, zeta;
    Mat gp, alpha;
    Mat gm, beta;
};

/// Connection value (-alpha, beta) of the K+ x K- principal bundle p: M -> K.
std::pair<Mat, Mat> connection_value(const Mat& alpha_slot, const Mat& beta_slot);

/// Horizontal lift of (g', zeta') in T K to the fiber point
/// (gp^-1 g' gm^-1, gp, gm).
UnreducedState horizontal_lift(const Mat& gprime, const Mat& zetaprime, const Mat& gp,
                               const Mat& gm);

/// Bundle projection Tp: (g, zeta, gp, alpha, gm, beta) ->
/// (gp g gm, Ad_gp(zeta + alpha + Ad_g beta)).
std::pair<Mat, Mat> tangent_projection(const UnreducedState& s);

/// The Fehér system: the Lagrangian of the factorizable-group example, its
/// stationarity structure, and integrators on exponential charts of K.
class FeherSystem {
  public:
    explicit FeherSystem(AKSParams p);

    const AKSParams& params() const { return p_; }
    int chart_dim() const { return static_cast<int>(basis_.size()); }

    /// Fiber stationarity at (g, zeta): the unique (alpha, beta) making the
    /// Lagrangian critical in the fiber directions. Throws NumericalError when
    /// the Gram matrix of the pairing on k+ and Ad_g k- exceeds condition 1e10.
    std::pair<Mat, Mat> stationarity(const Mat& g, const Mat& zeta) const;

    /// Lax matrix zeta + alpha + Ad_g beta.
    Mat lax(const FeherState& s) const;

    /// Compact form (1/2)<Lam,Lam> - <alpha,mu> - <beta,nu>.
    double lagrangian(const FeherState& s) const;
    /// Expanded six-term form; agrees with the compact form to roundoff.
    double lagrangian_six_term(const FeherState& s) const;

    /// The velocity on the momentum level set through g (solves the dual-basis
    /// system <z, e_i> = <mu, e_i>, <z, Ad_g f_j> = <nu, f_j>).
    Mat level_velocity(const Mat& g) const;
    /// Geodesic-gauge initial state: zeta = level_velocity(g), alpha = beta = 0.
    FeherState level_state(const Mat& g) const;
    /// Max violation of the two level conditions at (g, zeta).
    double level_gap(const Mat& g, const Mat& zeta) const;

    /// Chart Lagrangian system around `center` with the fiber values held in
    /// `frozen` (updated by the integrator before each stage). Regular in the
    /// chart velocities; evaluations cache per-position group data.
    struct Frozen {
        Mat alpha, beta;
    };
    mech::LagrangianSystem chart_system(std::shared_ptr<const Mat> center,
                                        std::shared_ptr<const Frozen> frozen) const;

    /// Degenerate full-chart system with fiber coordinates appended to the
    /// chart: q = (x, a, b). The mass matrix rows of a and b vanish.
    mech::LagrangianSystem full_chart_system(const Mat& center) const;

    /// Chart <-> group helpers (right-trivialized exponential chart).
    Mat chart_point(const Mat& center, const Vec& x) const;
    Mat chart_velocity(const Mat& center, const Vec& x, const Vec& xdot) const;
    Vec velocity_coords(const Mat& zeta) const;  // at x = 0
    Vec velocity_coords_at(const Vec& x, const Mat& zeta) const;

    struct Run {
        integrate::Trajectory traj;
        std::vector<FeherState> states;
    };

    /// Integrate through the generic chart machinery with per-stage fiber
    /// projection and chart recentering at |x| >= 0.5.
    Run simulate(const FeherState& ic, double T, double dt) const;

    /// Independent first-order reference integration on matrix states
    /// (gdot = zeta g, zetadot = 0) sampled every `stride` steps.
    Run reference_run(const FeherState& ic, double T, double dt,
                      std::size_t stride = 1) const;

    const std::vector<Mat>& basis() const { return basis_; }
    const std::vector<Mat>& basis_plus() const { return bplus_; }
    const std::vector<Mat>& basis_minus() const { return bminus_; }

  private:
    AKSParams p_;
    std::vector<Mat> basis_, bplus_, bminus_;
};

/// Exact unreduced solution through t: g = exp(t zeta0) g0 with constant
/// fiber velocities (gp = gp0 exp(t alpha0), gm = exp(t beta0) gm0).
UnreducedState unreduced_exact(const AKSParams& p, double t);

/// Residuals of the unreduced equations over a uniformly sampled trajectory:
/// sigma-constancy, the three trivialized constraint equations, and the drift
/// of the K+ x K- momentum <zeta, a1> - <Ad_g^-1 zeta, b1>.
struct UnreducedResiduals {
    double sigma_const = 0.0;
    double g_constraint = 0.0;
    double gp_constraint = 0.0;
    double gm_constraint = 0.0;
    double momentum_drift = 0.0;

    double max_constraint() const;
};
UnreducedResiduals check_unreduced(const AKSParams& p,
                                   const std::vector<UnreducedState>& samples, double dt);

/// Chart Lagrangian system of the unreduced triple (M, p1* L', 0) around the
/// given centers, plus the K+ x K- generators as chart vector fields (for the
/// generic momentum-map path).
struct UnreducedChart {
    mech::LagrangianSystem sys;
    std::vector<VectorFieldSpec> generators;  // one per basis element of k+ then k-
    int dim_g, dim_p, dim_m;

    /// Chart coordinates of an unreduced state near the centers.
    Vec to_chart_q(const UnreducedState& s) const;
    Vec to_chart_v(const UnreducedState& s) const;

    Mat cg, cp, cm;  // chart centers
    std::vector<Mat> bfull, bplus, bminus;
};
UnreducedChart unreduced_chart(const AKSParams& p, const Mat& cg, const Mat& cp, const Mat& cm);

/// Routh-reduced side of the example. Parameters are the Fehér (mu, nu); the
/// reduced Routhian internally carries (mu, -nu) so that its trajectories map
/// onto Fehér trajectories under phi_map (the sign is pinned by the
/// trajectory-equivalence oracle in the tests).
class ReducedAKS {
  public:
    explicit ReducedAKS(AKSParams p);

    const AKSParams& params() const { return p_; }
    const Mat& mu_reduced() const { return mu_; }
    const Mat& nu_reduced() const { return nu_; }

    /// Closed-form reduced Routhian
    ///   (1/2)<L,L> - <eta+, alpha> - <eta-, beta>, L = zeta + alpha - Ad_g beta.
    double routhian(const Mat& gY, const Mat& zetaY, const Mat& eta_p, const Mat& eta_m,
                    const Mat& alpha, const Mat& beta) const;

    /// Same value through the generic connection machinery: rebuild the
    /// unreduced tangent (horizontal lift plus generator) and evaluate
    /// L' - <(mu,nu), omega>.
    double routhian_via_connection(const Mat& gY, const Mat& zetaY, const Mat& cp, const Mat& cm,
                                   const Mat& alpha, const Mat& beta) const;

    /// Connection-induced force two-form <mu,[u1,u2]> - <nu,[v1,v2]> on the
    /// algebra lifts of orbit tangents.
    double connection_force(const Mat& u1, const Mat& v1, const Mat& u2, const Mat& v2) const;

    /// Orbit points from the transport group elements.
    Mat eta_plus(const Mat& cp) const;   // Ad_cp mu_reduced
    Mat eta_minus(const Mat& cm) const;  // Ad_cm^-1 nu_reduced

    struct State {
        Mat gY;      // base point of the reduced bundle
        Mat Lambda;  // reduced kinetic argument (= Ad_cp of the unreduced velocity)
        Mat cp, cm;  // orbit transports in K+ and K-
    };

    struct Sample {
        double t;
        State s;
        Mat alpha, beta;  // transport values at the sample
    };

    /// Initial reduced state on the momentum level through gY (identity orbit
    /// points).
    State initial_state(const Mat& gY) const;

    /// Integrate the reduced flow: Lambda-dot = [Lambda, alpha~],
    /// gY-dot = zetaY gY, cp-dot = -alpha~ cp, cm-dot = cm beta~, with the
    /// Toda-flavored transport gauge alpha~ = k P+(Lambda),
    /// beta~ = k P-(Ad_gY^-1 Lambda).
    std::vector<Sample> integrate(const State& ic, double T, double dt,
                                  std::size_t stride = 1) const;

    /// Correspondence to the Fehér side. Throws PreconditionError outside the
    /// section domain (transports too far from the identity).
    FeherState phi_map(const Sample& s) const;

    /// Pullback identity gap at one point: the amount by which
    ///   L_red(Phi(X)) - L_F(X) - <mu, Ts+ u> - <nu, Ts- v>
    /// fails to vanish, for section data (cp, A) and (cm, B).
    double phi_pullback_gap(const FeherState& X, const Mat& cp, const Mat& A, const Mat& cm,
                            const Mat& B) const;

  private:
    AKSParams p_;
    Mat mu_, nu_;  // reduced-side parameters (mu, -nu)
    std::vector<Mat> basis_, bplus_, bminus_;
};

}  // namespace geomech::aks
