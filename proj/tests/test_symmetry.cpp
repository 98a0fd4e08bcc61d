#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <geomech/rng.hpp>
#include <geomech/symmetry.hpp>

#include <cmath>

using namespace geomech;
using namespace geomech::symmetry;

namespace {

Vec vx(std::initializer_list<double> xs) {
    Vec v(static_cast<int>(xs.size()));
    int i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

// (q1, q2) = (r, theta), L = r'^2/2 + r^2 th'^2/2 - r^2/2, S^1 acting on theta.
LagrangianSystem central_force() {
    LagrangianSystem sys;
    sys.n = 2;
    sys.label = "central_force";
    sys.L.dim = 2;
    sys.L.eval = [](double, const Vec& q, const Vec& v) {
        return 0.5 * v[0] * v[0] + 0.5 * q[0] * q[0] * v[1] * v[1] - 0.5 * q[0] * q[0];
    };
    sys.L.dq = [](double, const Vec& q, const Vec& v) {
        return vx({q[0] * v[1] * v[1] - q[0], 0.0});
    };
    sys.L.dv = [](double, const Vec& q, const Vec& v) {
        return vx({v[0], q[0] * q[0] * v[1]});
    };
    return sys;
}

// (q1, q2, q3) = (x, y, theta), L = (x'^2+y'^2)/2 + (th' + A.q')^2/2 with
// A = (-y/2, x/2); S^1 acting on theta.
LagrangianSystem magnetic_kk() {
    LagrangianSystem sys;
    sys.n = 3;
    sys.label = "magnetic_kk";
    auto wv = [](const Vec& q, const Vec& v) {
        return v[2] - 0.5 * q[1] * v[0] + 0.5 * q[0] * v[1];
    };
    sys.L.dim = 3;
    sys.L.eval = [wv](double, const Vec& q, const Vec& v) {
        double w = wv(q, v);
        return 0.5 * (v[0] * v[0] + v[1] * v[1]) + 0.5 * w * w;
    };
    sys.L.dq = [wv](double, const Vec& q, const Vec& v) {
        double w = wv(q, v);
        return vx({w * 0.5 * v[1], w * (-0.5) * v[0], 0.0});
    };
    sys.L.dv = [wv](double, const Vec& q, const Vec& v) {
        double w = wv(q, v);
        return vx({v[0] - 0.5 * q[1] * w, v[1] + 0.5 * q[0] * w, w});
    };
    return sys;
}

PrincipalConnection kk_connection() {
    return make_connection(3, {2}, [](const Vec& s) {
        Mat A(1, 2);
        A << -0.5 * s[1], 0.5 * s[0];
        return A;
    });
}

}  // namespace

TEST_CASE("actions and connections validate") {
    auto act = translation_action(3, {2});
    validate_action(act, {vx({0.3, -0.2, 0.9}), vx({1.0, 2.0, -1.0})});

    auto conn = kk_connection();
    validate_connection(conn, act, {vx({0.5, -1.5, 0.2}), vx({0, 0, 0})});

    GroupAction bad;
    bad.m = 2;
    bad.generators.push_back(coordinate_field(2, 0));
    bad.generators.push_back(VectorFieldSpec{2, [](const Vec& q) { return vx({-q[1], q[0]}); }});
    bad.c.assign(8, 0.0);  // claims abelian, but [d/dx, rot] = d/dy
    CHECK_THROWS_AS(validate_action(bad, {vx({0.7, 0.3})}), InvarianceFailure);
}

TEST_CASE("momentum_map") {
    auto cf = central_force();
    auto act = translation_action(2, {1});
    Vec J = momentum_map(cf, act, 0, vx({2.0, 0.0}), vx({0.0, 0.25}));
    CHECK(std::fabs(J[0] - 1.0) < 1e-9);  // r^2 thetadot

    CHECK(momentum_map(cf, act, 0, vx({2.0, 0.0}), vx({0, 0})).cwiseAbs().maxCoeff() < 1e-12);

    LagrangianSystem fp;
    fp.n = 2;
    fp.L.dim = 2;
    fp.L.eval = [](double, const Vec&, const Vec& v) { return 0.5 * v.squaredNorm(); };
    auto trans = translation_action(2, {0, 1});
    Vec Jf = momentum_map(fp, trans, 0, vx({0.3, 0.4}), vx({1.5, -2.5}));
    CHECK((Jf - vx({1.5, -2.5})).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("check_invariance") {
    auto cf = central_force();
    auto act = translation_action(2, {1});
    std::vector<mech::CartanPoint> samples;
    Rng rng(checks_seed());
    for (int i = 0; i < 20; ++i)
        samples.push_back({0.0, vx({rng.uniform(0.5, 2), rng.uniform(-3, 3)}),
                           vx({rng.uniform(-1, 1), rng.uniform(-1, 1)}), Vec()});
    CHECK(check_invariance(cf, act, samples).pass);

    // L = q1 v1 under x-translations: |xi^C.L| = |v1|
    LagrangianSystem bad;
    bad.n = 1;
    bad.L.dim = 1;
    bad.L.eval = [](double, const Vec& q, const Vec& v) { return q[0] * v[0]; };
    auto tr = translation_action(1, {0});
    auto rep = check_invariance(bad, tr, {{0.0, vx({0.4}), vx({0.7}), Vec()}});
    CHECK(!rep.pass);
    CHECK(rep.max_dL == doctest::Approx(0.7).epsilon(1e-6));

    auto cf2 = central_force();
    cf2.F = [](double, const Vec&, const Vec&) { return vx({0.0, 0.1}); };
    auto rep2 = check_invariance(cf2, act, samples);
    CHECK(!rep2.pass);
    CHECK(rep2.max_F == doctest::Approx(0.1));
}

TEST_CASE("routhian") {
    auto cf = central_force();
    auto conn = flat_connection(2, {1});
    Vec mu = vx({1.0});
    auto R = routhian(cf, conn, mu);
    Vec q = vx({1.3, 0.4}), v = vx({0.2, 0.7});
    CHECK(R.eval(0, q, v) == doctest::Approx(cf.L.eval(0, q, v) - v[1]));

    auto R0 = routhian(cf, conn, vx({0.0}));
    CHECK(R0.eval(0, q, v) == doctest::Approx(cf.L.eval(0, q, v)));

    // fiber-affine shift: mass matrices of L and R_mu coincide
    LagrangianSystem rsys;
    rsys.n = 2;
    rsys.L = R;
    Mat ML = mech::mass_matrix(cf, 0, q, v);
    Mat MR = mech::mass_matrix(rsys, 0, q, v);
    CHECK((ML - MR).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("gyro_force") {
    auto flat = flat_connection(2, {1});
    CHECK(gyro_force(flat, vx({1.0}), vx({1.2, 0.3}), vx({0.5, 0.6})).cwiseAbs().maxCoeff() <
          1e-9);

    // magnetic connection: G = -v ⌟ d(w_mu) = (0, -1, 0) at v = e_x, mu = 1
    auto conn = kk_connection();
    Vec G = gyro_force(conn, vx({1.0}), vx({0.4, -0.7, 0.0}), vx({1.0, 0.0, 0.0}));
    CHECK(std::fabs(G[0]) < 1e-9);
    CHECK(std::fabs(G[1] + 1.0) < 1e-9);
    CHECK(std::fabs(G[2]) < 1e-9);

    // gyroscopic forces do no work
    Rng rng(checks_seed());
    for (int it = 0; it < 20; ++it) {
        Vec q = vx({rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-3, 3)});
        Vec v = vx({rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)});
        CHECK(std::fabs(gyro_force(conn, vx({1.3}), q, v).dot(v)) < 1e-12);
    }
}

TEST_CASE("routh_decompose") {
    auto flat = flat_connection(2, {1});
    Vec q = vx({1.1, 0.2});

    auto d1 = routh_decompose(vx({0.0, 1.0}), flat, q);  // alpha = dtheta
    CHECK(d1.sigma[0] == doctest::Approx(1.0));
    CHECK(d1.base.cwiseAbs().maxCoeff() < 1e-12);

    auto d2 = routh_decompose(vx({1.0, 0.0}), flat, q);  // alpha = dr
    CHECK(d2.sigma[0] == doctest::Approx(0.0));
    CHECK(d2.base[0] == doctest::Approx(1.0));

    // alpha = 2 dr + 3 dtheta with w = dtheta + A(r) dr
    auto connA = make_connection(2, {1}, [](const Vec& s) {
        Mat A(1, 1);
        A << 0.7 * s[0];
        return A;
    });
    auto d3 = routh_decompose(vx({2.0, 3.0}), connA, q);
    CHECK(d3.sigma[0] == doctest::Approx(3.0));
    CHECK(d3.base[0] == doctest::Approx(2.0 - 3.0 * 0.7 * q[0]));

    Rng rng(checks_seed());
    auto kk = kk_connection();
    Vec q3 = vx({0.4, -0.8, 1.1});
    for (int it = 0; it < 100; ++it) {
        Vec a2 = vx({rng.uniform(-2, 2), rng.uniform(-2, 2)});
        CHECK((routh_recompose(routh_decompose(a2, connA, q), connA, q) - a2)
                  .cwiseAbs()
                  .maxCoeff() < 1e-10);
        Vec a3 = vx({rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)});
        CHECK((routh_recompose(routh_decompose(a3, kk, q3), kk, q3) - a3).cwiseAbs().maxCoeff() <
              1e-10);
    }
}

TEST_CASE("reduced central force") {
    auto cf = central_force();
    auto act = translation_action(2, {1});
    auto conn = flat_connection(2, {1});
    Vec mu = vx({1.0});

    auto red = build_reduced_system(cf, act, conn, mu);
    Vec s = vx({1.0}), sdot = vx({0.0});
    Vec gv = red.group_velocity(0.0, s, sdot);
    CHECK(gv[0] == doctest::Approx(1.0));  // thetadot = mu / r^2

    // circular orbit r = 1 stays put over [0, 10]
    auto traj = integrate::simulate(red.sys, s, sdot, 0.0, 10.0, 1e-3);
    double dev = 0.0;
    for (const auto& qk : traj.q) dev = std::max(dev, std::fabs(qk[0] - 1.0));
    CHECK(dev <= 1e-6);

    // eliminated Lagrangian matches the hand Routhian r'^2/2 - mu^2/(2 r^2) - r^2/2
    Rng rng(checks_seed());
    for (int it = 0; it < 20; ++it) {
        double r = rng.uniform(0.7, 1.5), rdot = rng.uniform(-0.5, 0.5);
        double expect = 0.5 * rdot * rdot - 0.5 / (r * r) - 0.5 * r * r;
        CHECK(red.sys.L.eval(0, vx({r}), vx({rdot})) == doctest::Approx(expect).epsilon(1e-9));
    }

    // mu = 0 with the flat connection: horizontal restriction, no extra force
    auto red0 = build_reduced_system(cf, act, conn, vx({0.0}));
    CHECK(red0.group_velocity(0.0, vx({1.2}), vx({0.1}))[0] == doctest::Approx(0.0));
    CHECK(red0.sys.L.eval(0, vx({1.2}), vx({0.4})) ==
          doctest::Approx(cf.L.eval(0, vx({1.2, 0.0}), vx({0.4, 0.0}))));
    CHECK(red0.sys.force(0.0, vx({1.2}), vx({0.4})).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("reduced magnetic system is the planar Lorentz force") {
    auto kk = magnetic_kk();
    auto act = translation_action(3, {2});
    auto conn = kk_connection();
    Vec mu = vx({1.0});

    auto red = build_reduced_system(kk, act, conn, mu);
    auto traj =
        integrate::simulate(red.sys, vx({0.0, 0.0}), vx({1.0, 0.0}), 0.0, 2.0 * M_PI, 1e-3);
    double dev_speed = 0.0, dev_radius = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        dev_speed = std::max(dev_speed, std::fabs(traj.v[k].norm() - 1.0));
        double r = std::hypot(traj.q[k][0], traj.q[k][1] + 1.0);
        dev_radius = std::max(dev_radius, std::fabs(r - 1.0));
    }
    CHECK(dev_speed <= 1e-6);
    CHECK(dev_radius <= 1e-4);
}

TEST_CASE("invariance gate and constraint failures") {
    LagrangianSystem bad;
    bad.n = 2;
    bad.label = "breaks_symmetry";
    bad.L.dim = 2;
    bad.L.eval = [](double, const Vec& q, const Vec& v) {
        return 0.5 * v.squaredNorm() - q[1];  // depends on the group coordinate
    };
    auto act = translation_action(2, {1});
    auto conn = flat_connection(2, {1});
    ReducedBuildOptions opts;
    opts.invariance_samples = {{0.0, vx({0.3, 0.1}), vx({0.2, 0.4}), Vec()}};
    CHECK_THROWS_AS(build_reduced_system(bad, act, conn, vx({1.0}), opts), InvarianceFailure);

    // group-degenerate Lagrangian: no thetadot^2 term anywhere
    LagrangianSystem deg;
    deg.n = 2;
    deg.label = "group_degenerate";
    deg.L.dim = 2;
    deg.L.eval = [](double, const Vec&, const Vec& v) { return 0.5 * v[0] * v[0]; };
    auto red = build_reduced_system(deg, act, conn, vx({1.0}));
    CHECK_THROWS_AS(red.group_velocity(0.0, vx({1.0}), vx({0.0})), ConstraintSolveFailure);
}

TEST_CASE("equivalence of full and reduced dynamics") {
    auto cf = central_force();
    auto act = translation_action(2, {1});
    auto conn = flat_connection(2, {1});
    Vec mu = vx({1.0});

    Vec q0 = vx({1.0, 0.0}), v0 = vx({0.3, 1.0});  // J = r^2 thetadot = 1
    auto rep = equivalence_check(cf, act, conn, mu, q0, v0, 10.0, 1e-3);
    CHECK(rep.max_base_dev <= 1e-5);
    CHECK(rep.max_J_drift <= 1e-8);

    auto kk = magnetic_kk();
    auto kkconn = kk_connection();
    Vec kq0 = vx({0.0, 0.0, 0.0}), kv0 = vx({1.0, 0.0, 1.0});  // J = v3 at the origin
    auto rep2 =
        equivalence_check(kk, translation_action(3, {2}), kkconn, mu, kq0, kv0, 10.0, 1e-3);
    CHECK(rep2.max_base_dev <= 1e-5);
    CHECK(rep2.max_J_drift <= 1e-8);

    // negative control: flipped gyroscopic sign breaks magnetic_kk by O(1)
    ReducedBuildOptions flip;
    flip.flip_gyro_sign = true;
    auto rep3 =
        equivalence_check(kk, translation_action(3, {2}), kkconn, mu, kq0, kv0, 10.0, 1e-3, flip);
    CHECK(rep3.max_base_dev >= 1e-1);

    // violating J = mu is a precondition error
    CHECK_THROWS_AS(
        equivalence_check(cf, act, conn, mu, vx({1.0, 0.0}), vx({0.3, 1.5}), 1.0, 1e-3),
        PreconditionError);
}

TEST_CASE("Noether drift along trajectories, cross-checked at dt/10") {
    auto cf = central_force();
    auto act = translation_action(2, {1});
    auto run = [&](double T, double dt) {
        integrate::SimOptions opts;
        opts.diagnostics.push_back({"J", [&](double t, const Vec& q, const Vec& v) {
                                        return momentum_map(cf, act, t, q, v)[0];
                                    }});
        auto traj =
            integrate::simulate(cf, vx({1.0, 0.0}), vx({0.3, 1.0}), 0.0, T, dt, opts);
        const auto& J = traj.diagnostics.at("J");
        double drift = 0.0;
        for (double x : J) drift = std::max(drift, std::fabs(x - J.front()));
        return drift;
    };
    CHECK(run(10.0, 1e-3) <= 1e-8);
    CHECK(run(1.0, 1e-4) <= 1e-8);
}
