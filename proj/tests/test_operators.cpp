#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "bhlab/operators.hpp"

using namespace bhlab;

TEST_CASE("build_hopping on two sites, one particle") {
    auto basis = enumerate_basis(make_lattice(1, {2}), 1, 1);
    SparseOperator T = build_hopping(basis, full_set(basis->lattice()), 1.0);
    CMat dense = T.dense();
    REQUIRE(dense.rows() == 2);
    // lexicographic states (0,1), (1,0); both ordered hops give the off-diagonal
    REQUIRE(dense(0, 0) == cplx(0, 0));
    REQUIRE(dense(0, 1) == cplx(1, 0));
    REQUIRE(dense(1, 0) == cplx(1, 0));
    REQUIRE(dense(1, 1) == cplx(0, 0));

    SparseOperator single = build_hopping(basis, make_site_set(basis->lattice(), {0}), 1.0);
    REQUIRE(max_abs_entry(single.mat) == 0.0);

    SparseOperator zero = build_hopping(basis, full_set(basis->lattice()), 0.0);
    REQUIRE(max_abs_entry(zero.mat) == 0.0);
}

TEST_CASE("build_potential, both forms") {
    auto basis = enumerate_basis(make_lattice(1, {2}), 3, 3);
    SiteSet all = full_set(basis->lattice());
    int idx = basis->rank_of({2, 1});

    DiagonalOperator pw = build_potential(basis, all, PairwisePotential{1.0, 2.0, 0.0});
    REQUIRE(pw.values[idx] == Catch::Approx(4.0));  // both ordered pairs of U * n0 * n1

    DiagonalOperator on = build_potential(basis, all, OnsitePotential{1.0, 0.0});
    REQUIRE(on.values[idx] == Catch::Approx(2.0));  // n(n-1): 2*1 + 0

    int vac = basis->rank_of({0, 3});
    DiagonalOperator mu_only = build_potential(basis, make_site_set(basis->lattice(), {0}),
                                               OnsitePotential{0.0, 0.0});
    REQUIRE(mu_only.values[vac] == 0.0);

    REQUIRE_THROWS_AS(build_potential(basis, all, PairwisePotential{1.0, 0.5, 0.0}),
                      std::invalid_argument);
}

TEST_CASE("build_hamiltonian combines hopping and potential") {
    auto basis = enumerate_basis(make_lattice(1, {4}), 2, 2);
    SiteSet all = full_set(basis->lattice());

    SparseOperator h_free = build_hamiltonian(basis, all, {1.0, OnsitePotential{0.0, 0.0}});
    SparseOperator t_only = build_hopping(basis, all, 1.0);
    REQUIRE(max_abs_entry(SpMat(h_free.mat - t_only.mat)) == 0.0);

    SparseOperator h_diag = build_hamiltonian(basis, all, {0.0, OnsitePotential{1.0, 0.3}});
    CMat d = h_diag.dense();
    for (int i = 0; i < basis->dim(); ++i)
        for (int j = 0; j < basis->dim(); ++j)
            if (i != j) REQUIRE(d(i, j) == cplx(0, 0));

    // dense commutator oracle for Hermiticity and number conservation
    SparseOperator H = build_hamiltonian(basis, all, {1.0, OnsitePotential{0.7, 0.2}});
    CMat Hd = H.dense();
    REQUIRE((Hd - Hd.adjoint()).cwiseAbs().maxCoeff() == 0.0);
    DiagonalOperator N = second_quantize(basis, [](int) { return 1.0; });
    CMat Nd = N.dense();
    REQUIRE((Hd * Nd - Nd * Hd).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("second_quantize of site functions") {
    auto basis = enumerate_basis(make_lattice(1, {3}), 3, 3);
    DiagonalOperator N = second_quantize(basis, [](int) { return 1.0; });
    for (int i = 0; i < basis->dim(); ++i) REQUIRE(N.values[i] == 3.0);

    double a = 0.3, b = -1.2, c = 2.5;
    DiagonalOperator f = second_quantize(basis, [&](int x) { return x == 0 ? a : (x == 1 ? b : c); });
    REQUIRE(f.values[basis->rank_of({1, 0, 2})] == Catch::Approx(a + 2 * c));

    SiteSet B = make_site_set(basis->lattice(), {0, 1});
    DiagonalOperator NB = number_operator(basis, B);
    DiagonalOperator NB2 = second_quantize(basis, [&](int x) { return B.contains(x) ? 1.0 : 0.0; });
    REQUIRE((NB.values - NB2.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("commutator basics") {
    auto basis = enumerate_basis(make_lattice(1, {4}), 2, 2);
    SiteSet all = full_set(basis->lattice());
    SparseOperator H = build_hamiltonian(basis, all, {1.0, OnsitePotential{0.5, 0.1}});

    REQUIRE(max_abs_entry(commutator(H, H).mat) == 0.0);

    DiagonalOperator N = second_quantize(basis, [](int) { return 1.0; });
    REQUIRE(max_abs_entry(commutator(H, N.sparse()).mat) == 0.0);

    DiagonalOperator g = second_quantize(basis, [](int x) { return 0.5 * x; });
    DiagonalOperator V = build_potential(basis, all, OnsitePotential{1.0, 0.0});
    REQUIRE(max_abs_entry(commutator(g.sparse(), V.sparse()).mat) == 0.0);

    auto other = enumerate_basis(make_lattice(1, {4}), 1, 1);
    SparseOperator H2 = build_hamiltonian(other, full_set(other->lattice()), {1.0, OnsitePotential{}});
    REQUIRE_THROWS_AS(commutator(H, H2), std::invalid_argument);
}

TEST_CASE("hopping commutator identity holds to machine precision") {
    HamiltonianParams params{1.3, OnsitePotential{0.8, 0.2}};

    auto basis = enumerate_basis(make_lattice(1, {4}), 2, 2);
    REQUIRE(commutator_expansion_residual(basis, [](int) { return 0.7; }, params) == 0.0);
    REQUIRE(commutator_expansion_residual(basis, [](int x) { return x == 1 ? 1.0 : 0.0; }, params) <=
            1e-12);

    auto basis2d = enumerate_basis(make_lattice(2, {3, 3}), 2, 2);
    auto ramp = [&](int x) {
        return static_cast<double>(basis2d->lattice()->coord(x)[0]) +
               0.5 * static_cast<double>(basis2d->lattice()->coord(x)[1]);
    };
    REQUIRE(commutator_expansion_residual(basis2d, ramp, params) <= 1e-12);

    // dense evaluation of both sides, independent of the sparse route
    auto lat = basis->lattice();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(-1, 1);
    std::vector<double> g(4);
    for (auto& v : g) v = uni(rng);
    auto gf = [&](int x) { return g[static_cast<std::size_t>(x)]; };

    CMat Hd = build_hamiltonian(basis, full_set(lat), params).dense();
    CMat Gd = second_quantize(basis, gf).dense();
    CMat lhs = Hd * Gd - Gd * Hd;
    CMat rhs = CMat::Zero(basis->dim(), basis->dim());
    for (int col = 0; col < basis->dim(); ++col)
        for (auto [x, y] : edges(full_set(lat))) {
            auto hop = apply_hop(*basis, basis->state(col), x, y);
            if (!hop) continue;
            rhs(basis->rank_of(hop->first), col) += -params.J * (gf(x) - gf(y)) * hop->second;
        }
    REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
    REQUIRE(commutator_expansion_residual(basis, gf, params) <= 1e-12);
}
