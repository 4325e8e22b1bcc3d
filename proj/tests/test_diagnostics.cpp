#include <catch2/catch_amalgamated.hpp>

#include "bhlab/diagnostics.hpp"

using namespace bhlab;

namespace {
const HamiltonianParams kParams{1.0, OnsitePotential{0.5, 0.0}};
}

TEST_CASE("trace_norm") {
    REQUIRE(trace_norm(CMat::Zero(3, 3)) == 0.0);

    CVec u(2), v(2);
    u << cplx(1, 0), cplx(2, 0);
    v << cplx(0, 1), cplx(2, 0);
    CMat rank1 = u * v.adjoint();
    REQUIRE(trace_norm(rank1) == Catch::Approx(u.norm() * v.norm()).margin(1e-12));

    CMat diag = CMat::Zero(3, 3);
    diag(0, 0) = 1;
    diag(1, 1) = -2;
    diag(2, 2) = 3;
    REQUIRE(trace_norm(diag) == Catch::Approx(6.0).margin(1e-12));
}

TEST_CASE("particle_sweep on a single-particle chain") {
    auto lat = make_lattice(1, {9});
    auto basis = enumerate_basis(lat, 1, 1);
    SparseOperator H = build_hamiltonian(basis, full_set(lat), kParams);
    QuantumState psi = product_fock_state(basis, {0, 0, 0, 0, 1, 0, 0, 0, 0});

    auto res = particle_sweep(H, kParams.J, psi, lat->origin_index(), 1.0, 4.0, 0.5, 1.0, {2.0},
                              {4.0}, {0.0, 0.25}, {});
    REQUIRE(res.records.size() == 2);
    REQUIRE(res.cd_report.passed);

    const auto& at0 = res.records[0];
    REQUIRE(at0.t == 0.0);
    REQUIRE(at0.value == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(at0.value <= at0.bound_first_term + 1e-12);

    // v|t| = 1 < r = 2: the particle has essentially not left the ball
    const auto& later = res.records[1];
    REQUIRE(later.flag == "ok");
    REQUIRE(later.value >= 1.0 - 1e-3);
    REQUIRE(later.value <= 1.0 + 1e-12);

    // grid point outside the cone regime is flagged, not an error
    auto skipped = particle_sweep(H, kParams.J, psi, lat->origin_index(), 1.0, 4.0, 0.5, 1.0, {1.0},
                                  {3.0}, {1.0}, {});
    REQUIRE(skipped.records.size() == 1);
    REQUIRE(skipped.records[0].flag == "skipped_lightcone");
    REQUIRE(std::isnan(skipped.records[0].value));

    auto hyp = particle_sweep(H, kParams.J, psi, lat->origin_index(), 1.0, 4.0, 0.5, 1.0, {3.0},
                              {3.5}, {0.0}, {});
    REQUIRE(hyp.records[0].flag == "skipped_hypothesis");

    // the velocity precondition is a hard error
    REQUIRE_THROWS_AS(particle_sweep(H, kParams.J, psi, lat->origin_index(), 1.0, 1.0, 0.5, 1.0,
                                     {1.0}, {3.0}, {0.0}, {}),
                      std::invalid_argument);
}

TEST_CASE("occupation far outside the light cone is tiny") {
    auto lat = make_lattice(1, {11});
    auto basis = enumerate_basis(lat, 1, 1);
    SparseOperator H = build_hamiltonian(basis, full_set(lat), kParams);
    OccupationVector occ(11, 0);
    occ[static_cast<std::size_t>(lat->origin_index())] = 1;
    QuantumState psi = product_fock_state(basis, occ);

    QuantumState evolved = evolve_state(H, psi, 0.5);
    double far = moment(evolved, ball(lat, lat->index_of({4}), 0.0), 1.0);
    REQUIRE(far <= 1e-2);
}

TEST_CASE("lr_sweep") {
    auto lat = make_lattice(1, {6});
    auto basis = enumerate_basis(lat, 2, 2);
    SiteSet X = make_site_set(lat, {lat->origin_index()});
    LocalOperator A = capped_number_observable(basis, X, 1);
    QuantumState rho = spread_state(basis, [](int) { return 1.0; });

    auto recs = lr_sweep(basis, kParams, rho, A, {1.0, 20.0}, {0.0, 0.5});
    REQUIRE(recs.size() == 4);

    for (const auto& r : recs)
        if (r.t == 0.0) REQUIRE(r.value <= 1e-12);
    for (const auto& r : recs)
        if (r.R == 20.0) REQUIRE(r.value <= 1e-10);  // X[R] = Lambda

    // boundary at distance 1 leaves a real difference at t > 0
    double near = 0;
    for (const auto& r : recs)
        if (r.R == 1.0 && r.t == 0.5) near = r.value;
    REQUIRE(near > 1e-4);

    for (const auto& r : recs) REQUIRE(r.flag == ((r.R > 2) ? "ok" : "small_R"));
}

TEST_CASE("commutator_lightcone") {
    auto lat = make_lattice(1, {8});
    auto basis = enumerate_basis(lat, 2, 2);
    LocalOperator A = capped_number_observable(basis, make_site_set(lat, {lat->index_of({-2})}), 1);
    LocalOperator B = capped_number_observable(basis, make_site_set(lat, {lat->index_of({2})}), 1);

    auto recs = commutator_lightcone(basis, kParams, A, B, {0.0, 0.4});
    REQUIRE(recs.size() == 2);
    REQUIRE(recs[0].value <= 1e-12);  // disjoint supports at t = 0
    REQUIRE(recs[0].r == 4.0);

    double bound = 2.0 * spectral_norm(A.mat) * spectral_norm(B.mat);
    for (const auto& r : recs) REQUIRE(r.value <= bound + 1e-9);

    auto trunc = commutator_lightcone(basis, kParams, A, B, {0.4}, TruncationSpec{full_set(lat), 1});
    REQUIRE(trunc[0].value <= bound + 1e-9);

    LocalOperator C = capped_number_observable(basis, make_site_set(lat, {lat->index_of({-2})}), 1);
    REQUIRE_THROWS_AS(commutator_lightcone(basis, kParams, A, C, {0.1}), std::invalid_argument);
}

TEST_CASE("lightcone_fit") {
    // exact power law in the gap
    std::vector<SweepRecord> pow_records;
    for (double gap : {1.0, 2.0, 3.0, 5.0, 8.0}) {
        SweepRecord rec;
        rec.r = 1.0;
        rec.R = 1.0 + gap;
        rec.t = 1.0;
        rec.value = std::pow(gap, -3.0);
        pow_records.push_back(rec);
    }
    LightconeFit fit = lightcone_fit(pow_records, FitMode::DecayInGap);
    REQUIRE(fit.slope == Catch::Approx(-3.0).margin(1e-6));
    REQUIRE(fit.r_squared >= 1.0 - 1e-12);

    // synthetic exponential front saturating at 1: the threshold crossing
    // moves as R(t) ~ 2t + const
    std::vector<SweepRecord> front;
    for (double t : {1.0, 2.0, 3.0, 4.0, 5.0})
        for (double R = 0.0; R <= 40.0; R += 0.5) {
            SweepRecord rec;
            rec.R = R;
            rec.t = t;
            rec.value = std::min(1.0, std::exp(-(R - 2.0 * t)));
            front.push_back(rec);
        }
    LightconeFit speed = lightcone_fit(front, FitMode::FrontSpeed, 1e-3);
    REQUIRE(speed.slope == Catch::Approx(2.0).margin(0.05));

    std::vector<SweepRecord> few(pow_records.begin(), pow_records.begin() + 3);
    REQUIRE_THROWS_AS(lightcone_fit(few, FitMode::DecayInGap), insufficient_data);

    // zeros are dropped with a count
    pow_records[0].value = 0.0;
    LightconeFit fit2 = lightcone_fit(pow_records, FitMode::DecayInGap);
    REQUIRE(fit2.zeros_dropped == 1);
    REQUIRE(fit2.points_used == 4);
}

TEST_CASE("truncation ladder") {
    auto lat = make_lattice(1, {5});
    auto basis = enumerate_basis(lat, 2, 2);
    SiteSet X = make_site_set(lat, {lat->origin_index()});
    LocalOperator A = capped_number_observable(basis, X, 1);
    QuantumState rho = spread_state(basis, [](int) { return 1.0; });

    // nu >= N_tot and X[R] = Lambda: every term collapses
    LadderReport all_zero = truncation_ladder(basis, kParams, rho, A, 10.0, 2, 0.8);
    for (double term : all_zero.terms) REQUIRE(term <= 1e-10);
    REQUIRE(all_zero.direct <= 1e-10);

    LadderReport rep = truncation_ladder(basis, kParams, rho, A, 1.0, 1, 0.8);
    REQUIRE(rep.sum >= rep.direct - 1e-12);
    for (double term : rep.terms) REQUIRE(term >= -1e-12);

    // J = 0: the dynamics-comparison terms (2) and (4) vanish
    HamiltonianParams frozen{0.0, OnsitePotential{0.6, 0.1}};
    LadderReport diag = truncation_ladder(basis, frozen, rho, A, 1.0, 1, 0.8);
    REQUIRE(diag.terms[1] <= 1e-10);
    REQUIRE(diag.terms[3] <= 1e-10);
}
