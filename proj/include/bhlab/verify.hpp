#pragma once

#include <random>
#include <string>
#include <vector>

#include "bhlab/astlo.hpp"
#include "bhlab/common.hpp"
#include "bhlab/diagnostics.hpp"
#include "bhlab/dynamics.hpp"
#include "bhlab/fock.hpp"
#include "bhlab/operators.hpp"
#include "bhlab/states.hpp"

namespace bhlab {

struct CheckResult {
    std::string name;
    double residual = 0;
    double tol = 0;
    bool pass = false;
};

inline CheckResult check_leq(std::string name, double residual, double tol) {
    return CheckResult{std::move(name), residual, tol, residual <= tol};
}

inline CheckResult check_geq(std::string name, double value, double floor_value) {
    return CheckResult{std::move(name), value, floor_value, value >= floor_value};
}

/// Exact identities of the assembled operators: Hermiticity, global number
/// conservation (and its local failure), the hopping commutator identity for
/// randomized site functions, and linearity of second quantization.
inline std::vector<CheckResult> operator_identity_suite(const FockBasisPtr& basis,
                                                        const HamiltonianParams& params,
                                                        std::uint64_t seed, int n_random_g = 20) {
    std::vector<CheckResult> out;
    const LatticePtr& lat = basis->lattice();
    SiteSet all = full_set(lat);
    SparseOperator H = build_hamiltonian(basis, all, params);

    out.push_back(check_leq("hermiticity", hermiticity_defect(H), 0.0));

    DiagonalOperator N = second_quantize(basis, [](int) { return 1.0; });
    out.push_back(check_leq("number_conservation", max_abs_entry(commutator(H, N.sparse()).mat), 0.0));

    if (lat->num_sites() >= 2 && basis->n_tot() >= 1 && params.J != 0.0) {
        std::vector<int> half;
        for (int i = 0; i < lat->num_sites() / 2; ++i) half.push_back(i);
        DiagonalOperator NX = number_operator(basis, make_site_set(lat, half));
        double local = max_abs_entry(commutator(H, NX.sparse()).mat);
        out.push_back(check_geq("local_number_nonconservation", local, 1e-6));
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    double worst = 0;
    for (int k = 0; k < n_random_g; ++k) {
        std::vector<double> g(static_cast<std::size_t>(lat->num_sites()));
        for (auto& v : g) v = uni(rng);
        worst = std::max(worst, commutator_expansion_residual(
                                    basis, [&](int x) { return g[static_cast<std::size_t>(x)]; }, params));
    }
    out.push_back(check_leq("commutator_expansion_randomized_g", worst, 1e-12));

    {
        std::vector<double> f(static_cast<std::size_t>(lat->num_sites())), g(f.size());
        for (auto& v : f) v = uni(rng);
        for (auto& v : g) v = uni(rng);
        double a = uni(rng), b = uni(rng);
        DiagonalOperator lhs = second_quantize(basis, [&](int x) {
            return a * f[static_cast<std::size_t>(x)] + b * g[static_cast<std::size_t>(x)];
        });
        DiagonalOperator df = second_quantize(basis, [&](int x) { return f[static_cast<std::size_t>(x)]; });
        DiagonalOperator dg = second_quantize(basis, [&](int x) { return g[static_cast<std::size_t>(x)]; });
        double lin = (lhs.values - a * df.values - b * dg.values).cwiseAbs().maxCoeff();
        out.push_back(check_leq("second_quantize_linearity", lin, 1e-12));
    }
    return out;
}

/// Cutoff-function and ASTLO checks: the indicator sandwich, exact endpoints,
/// derivative normalization, the per-basis-state diagonal inequalities against
/// N_{B_R} and N_{B_r}, monotonicity in t, and the symmetrized-expansion order.
inline std::vector<CheckResult> astlo_suite(const FockBasisPtr& basis, double J, std::uint64_t seed) {
    std::vector<CheckResult> out;
    const LatticePtr& lat = basis->lattice();
    const int d = lat->dimension();
    const double kappa = 2.0 * d * std::abs(J);

    {
        CutoffFunction chi = make_cutoff(1.0);
        const double eps = chi.epsilon();
        double sandwich = 0, monotone = 0, prev = -1;
        for (int i = 0; i <= 20000; ++i) {
            double x = -0.5 * eps + 2.5 * eps * i / 20000.0;
            double c = chi.eval(x);
            double lower = (x >= eps) ? 1.0 : 0.0;
            double upper = (x >= eps / 2) ? 1.0 : 0.0;
            sandwich = std::max(sandwich, std::max(lower - c, c - upper));
            if (i > 0 && x <= eps) monotone = std::max(monotone, prev - c);
            prev = c;
        }
        out.push_back(check_leq("cutoff_sandwich", sandwich, 1e-6));
        out.push_back(check_leq("cutoff_monotone", monotone, 1e-12));
        out.push_back(check_leq("cutoff_midpoint", std::abs(chi.eval(0.75 * eps) - 0.5), 1e-9));

        // Simpson quadrature of chi' over [0, eps]
        const int n = 4096;
        double h = eps / n, mass = 0;
        for (int i = 0; i < n; ++i) {
            double a = i * h;
            mass += h / 6.0 *
                    (chi.derivative(a) + 4.0 * chi.derivative(a + h / 2) + chi.derivative(a + h));
        }
        out.push_back(check_leq("cutoff_derivative_mass", std::abs(mass - 1.0), 1e-8));

        auto pairs = make_taylor_samples(chi, 32, 32, seed);
        TaylorReport rep = taylor_expansion_check(chi, 1, pairs);
        out.push_back(check_geq("taylor_order_fit", rep.fit_exponent, 1.9));
    }

    {
        // per-basis-state inequalities dG(chi_0s) <= N_{B_R}, dG(chi_ts) >= N_{B_r}
        double violation = 0, t_monotone = 0;
        int combos = 0;
        for (double r : {1.0, 2.0})
            for (double R : {4.0, 6.0})
                for (double vmul : {1.5, 2.0, 2.5}) {
                    double v = vmul * std::max(kappa, 1.0);
                    if (!(v > kappa)) continue;
                    ++combos;
                    VelocityParams vp = velocity_params(J, d, v);
                    CutoffFunction chi = make_cutoff(vp.epsilon);
                    double s = (R - r) / v;
                    DiagonalOperator NR = number_operator(basis, ball(lat, lat->origin_index(), R));
                    DiagonalOperator Nr = number_operator(basis, ball(lat, lat->origin_index(), r));
                    RVec prev_diag;
                    for (double t : {0.0, s / 4, s / 2, s}) {
                        DiagonalOperator astlo = astlo_operator(basis, chi, vp, R, r, t);
                        if (t == 0.0)
                            violation = std::max(violation, (astlo.values - NR.values).maxCoeff());
                        violation = std::max(violation, (Nr.values - astlo.values).maxCoeff());
                        if (prev_diag.size() > 0)
                            t_monotone = std::max(t_monotone, (astlo.values - prev_diag).maxCoeff());
                        prev_diag = astlo.values;
                    }
                }
        out.push_back(check_geq("geom_prop_combos", static_cast<double>(combos), 12.0));
        out.push_back(check_leq("geom_prop_diagonal", violation, 1e-6));
        out.push_back(check_leq("astlo_nonincreasing_t", t_monotone, 1e-12));
    }
    return out;
}

/// Projector and propagator identities: complement, frozen complement under
/// the truncated flow, commuting truncations of disjointly supported
/// operators, unitarity, the group law, Krylov against the dense oracle, the
/// reduction of the truncated flow at large nu, and the interaction picture.
inline std::vector<CheckResult> dynamics_suite(const FockBasisPtr& basis,
                                               const HamiltonianParams& params, int nu,
                                               std::uint64_t seed) {
    std::vector<CheckResult> out;
    const LatticePtr& lat = basis->lattice();
    SiteSet all = full_set(lat);
    SparseOperator H = build_hamiltonian(basis, all, params);
    const double tJ = params.J != 0.0 ? 1.0 / std::abs(params.J) : 1.0;

    DiagonalOperator P = projector(basis, all, nu);
    {
        RVec sum = P.values;
        for (Eigen::Index i = 0; i < sum.size(); ++i) sum[i] += (1.0 - P.values[i]);
        out.push_back(check_leq("projector_complement", (sum.array() - 1.0).abs().maxCoeff(), 0.0));
    }
    {
        SparseOperator Hbar = truncate(H, all, nu);
        CMat U = expm_i_hermitian(Hbar.dense(), tJ);
        CMat Pperp = CMat::Zero(basis->dim(), basis->dim());
        for (int i = 0; i < basis->dim(); ++i) Pperp(i, i) = 1.0 - P.values[i];
        out.push_back(check_leq("frozen_complement", (Pperp * U - Pperp).cwiseAbs().maxCoeff(), 1e-10));
    }
    if (lat->num_sites() >= 4) {
        std::vector<int> left, right;
        for (int i = 0; i < lat->num_sites(); ++i) (i < lat->num_sites() / 2 ? left : right).push_back(i);
        SparseOperator HX = build_hamiltonian(basis, make_site_set(lat, left), params);
        SparseOperator HZ = build_hamiltonian(basis, make_site_set(lat, right), params);
        SparseOperator Abar = truncate(HX, all, nu);
        SparseOperator Bbar = truncate(HZ, all, nu);
        out.push_back(check_leq("truncated_disjoint_commute", max_abs_entry(commutator(Abar, Bbar).mat), 1e-12));
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    CVec psi(basis->dim());
    for (Eigen::Index i = 0; i < psi.size(); ++i) psi[i] = cplx(gauss(rng), gauss(rng));
    psi /= psi.norm();
    QuantumState state = QuantumState::pure(basis, psi);

    PropagatorOptions kry;
    kry.method = PropagatorMethod::Krylov;
    kry.krylov_dim = std::min(12, basis->dim());
    PropagatorOptions dense;
    dense.method = PropagatorMethod::Dense;

    {
        Propagator pk(H, kry);
        CVec w = pk.apply(psi, tJ);
        out.push_back(check_leq("unitarity", std::abs(w.norm() - 1.0), 1e-10));

        CVec w2 = pk.apply(pk.apply(psi, 0.4 * tJ), 0.6 * tJ);
        CVec w1 = pk.apply(psi, tJ);
        out.push_back(check_leq("group_law", (w2 - w1).norm(), 1e-8));

        Propagator pd(H, dense);
        out.push_back(check_leq("krylov_vs_dense", (pk.apply(psi, 2.0 * tJ) - pd.apply(psi, 2.0 * tJ)).norm(), 1e-8));
    }

    {
        LocalOperator A = capped_number_observable(basis, ball(lat, lat->origin_index(), 0.0), 1);
        CMat full = heisenberg(H, A.mat, tJ);
        CMat trunc_full = truncated_dynamics(basis, all, std::min(basis->n_max(), basis->n_tot()),
                                             params, A.mat, tJ);
        out.push_back(check_leq("truncated_equals_full_large_nu", (full - trunc_full).cwiseAbs().maxCoeff(), 1e-10));

        CMat restr = restricted_dynamics(basis, ball(lat, lat->origin_index(), 0.0),
                                         2.0 * diameter(all), params, A.mat, tJ);
        out.push_back(check_leq("restricted_equals_full_large_R", (full - restr).cwiseAbs().maxCoeff(), 1e-10));
    }

    if (basis->dim() <= 256)
        out.push_back(check_leq("interaction_picture",
                                interaction_picture_check(basis, all, nu, params, tJ), 1e-6));
    return out;
}

}  // namespace bhlab
