#include <catch2/catch_amalgamated.hpp>

#include "bhlab/astlo.hpp"

using namespace bhlab;

TEST_CASE("cutoff endpoints and midpoint") {
    CutoffFunction chi = make_cutoff(2.0);
    REQUIRE(chi.eval(0.0) == 0.0);
    REQUIRE(chi.eval(1.0) == 0.0);  // eps/2
    REQUIRE(chi.eval(2.0) == 1.0);
    REQUIRE(chi.eval(-5.0) == 0.0);
    REQUIRE(chi.eval(7.0) == 1.0);
    REQUIRE(chi.eval(1.5) == Catch::Approx(0.5).margin(1e-9));  // weight symmetric about 3eps/4

    REQUIRE_THROWS_AS(make_cutoff(0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(make_cutoff(-1.0), std::invalid_argument);
}

TEST_CASE("cutoff derivative integrates to one") {
    CutoffFunction chi = make_cutoff(1.0);
    // Simpson quadrature on the grid, independent of the construction integral
    const int n = 8192;
    double h = 1.0 / n, mass = 0;
    for (int i = 0; i < n; ++i) {
        double a = i * h;
        mass += h / 6.0 * (chi.derivative(a) + 4 * chi.derivative(a + h / 2) + chi.derivative(a + h));
    }
    REQUIRE(mass == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("cutoff sandwich and monotonicity") {
    CutoffFunction chi = make_cutoff(0.5);
    double eps = chi.epsilon();
    double prev = -1;
    for (int i = 0; i <= 5000; ++i) {
        double x = -eps + 3 * eps * i / 5000.0;
        double c = chi.eval(x);
        REQUIRE(c >= (x >= eps ? 1.0 : 0.0) - 1e-6);
        REQUIRE(c <= (x >= eps / 2 ? 1.0 : 0.0) + 1e-6);
        REQUIRE(c >= prev - 1e-12);
        prev = c;
    }
}

TEST_CASE("analytic sqrt(chi') matches the finite-difference oracle") {
    CutoffFunction chi = make_cutoff(1.0);
    for (double x : {0.55, 0.6, 0.7, 0.8, 0.9, 0.95}) {
        double h = 1e-5;
        double fd = (chi.eval(x + h) - chi.eval(x - h)) / (2 * h);
        REQUIRE(fd >= -1e-12);
        REQUIRE(std::sqrt(std::max(fd, 0.0)) ==
                Catch::Approx(chi.sqrt_derivative(x)).margin(2e-4).epsilon(1e-3));
    }
}

TEST_CASE("velocity_params bookkeeping") {
    VelocityParams vp = velocity_params(1.0, 1, 4.0);
    REQUIRE(vp.kappa == 2.0);
    REQUIRE(vp.v_tilde == 3.0);
    REQUIRE(vp.epsilon == 1.0);

    REQUIRE_THROWS_AS(velocity_params(1.0, 2, 4.0), std::invalid_argument);  // v = kappa boundary

    VelocityParams vp2 = velocity_params(0.5, 1, 2.0);
    REQUIRE(vp2.kappa == 1.0);
    REQUIRE(vp2.v_tilde == 1.5);
    REQUIRE(vp2.epsilon == 0.5);

    VelocityParams g = with_gap(vp, 4.0, 1.0);
    REQUIRE(g.s == Catch::Approx(0.75));
    REQUIRE_THROWS_AS(with_gap(vp, 1.0, 4.0), std::invalid_argument);
}

TEST_CASE("eval_rescaled") {
    VelocityParams vp = with_gap(velocity_params(1.0, 1, 4.0), 8.0, 0.0);  // s = 2, eps = 1
    CutoffFunction chi = make_cutoff(vp.epsilon);

    // at the origin and t = 0 the argument is R/s = 4 >= eps
    REQUIRE(eval_rescaled(chi, vp, 8.0, 0.0, 0.0) == 1.0);
    // far sites: argument <= eps/2
    REQUIRE(eval_rescaled(chi, vp, 8.0, 0.0, 7.5) == 0.0);

    // strictly monotone where the argument crosses the transition region
    double prev = 2.0;
    bool interior_seen = false;
    for (double radius = 0.0; radius <= 8.0; radius += 0.05) {
        double val = eval_rescaled(chi, vp, 8.0, 0.5, radius);
        REQUIRE(val <= prev + 1e-12);
        if (val > 0.0 && val < 1.0) {
            if (interior_seen) REQUIRE(val < prev);
            interior_seen = true;
        }
        prev = val;
    }
    REQUIRE(interior_seen);

    VelocityParams no_s = velocity_params(1.0, 1, 4.0);
    REQUIRE_THROWS_AS(eval_rescaled(chi, no_s, 8.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("astlo operator is sandwiched between ball number operators") {
    auto basis = enumerate_basis(make_lattice(1, {9}), 2, 2);
    auto lat = basis->lattice();
    VelocityParams vp = velocity_params(1.0, 1, 4.0);
    CutoffFunction chi = make_cutoff(vp.epsilon);
    double r = 1.0, R = 4.0;
    double s = (R - r) / vp.v;

    DiagonalOperator NR = number_operator(basis, ball(lat, lat->origin_index(), R));
    DiagonalOperator Nr = number_operator(basis, ball(lat, lat->origin_index(), r));

    DiagonalOperator a0 = astlo_operator(basis, chi, vp, R, r, 0.0);
    REQUIRE((a0.values - NR.values).maxCoeff() <= 1e-6);
    for (double t : {0.0, s / 4, s / 2, s}) {
        DiagonalOperator at = astlo_operator(basis, chi, vp, R, r, t);
        REQUIRE((Nr.values - at.values).maxCoeff() <= 1e-6);
    }

    auto vacuum = enumerate_basis(make_lattice(1, {9}), 0, 2);
    DiagonalOperator av = astlo_operator(vacuum, chi, vp, R, r, 0.0);
    REQUIRE(av.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("symmetrized expansion order") {
    CutoffFunction chi = make_cutoff(1.0);

    // x = y and flat-region pairs give exactly zero residual
    std::vector<std::pair<double, double>> trivial = {{0.7, 0.7}, {1.5, 1.2}, {2.0, 1.05}};
    TaylorReport rep0 = taylor_expansion_check(chi, 1, trivial);
    REQUIRE(rep0.zero_gap_dropped == 1);
    double res_flat = chi.eval(1.5) - chi.eval(1.2) -
                      (1.5 - 1.2) * chi.sqrt_derivative(1.5) * chi.sqrt_derivative(1.2);
    REQUIRE(res_flat == 0.0);

    auto pairs = make_taylor_samples(chi, 32, 32, 12345);
    REQUIRE(pairs.size() == 1024);
    TaylorReport rep = taylor_expansion_check(chi, 1, pairs);
    REQUIRE(rep.pairs_used == 1024);
    REQUIRE(rep.fit_exponent >= 1.9);
    REQUIRE(std::isfinite(rep.max_coefficient));
    REQUIRE(rep.max_coefficient > 0.0);

    // beta >= 2 runs the same residual-order check
    TaylorReport rep2 = taylor_expansion_check(chi, 2, pairs);
    REQUIRE(rep2.fit_exponent >= 1.9);

    REQUIRE_THROWS_AS(taylor_expansion_check(chi, 0, pairs), std::invalid_argument);
}
