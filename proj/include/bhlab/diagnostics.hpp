#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bhlab/astlo.hpp"
#include "bhlab/common.hpp"
#include "bhlab/dynamics.hpp"
#include "bhlab/linalg.hpp"
#include "bhlab/operators.hpp"
#include "bhlab/states.hpp"

namespace bhlab {

struct insufficient_data : std::runtime_error {
    explicit insufficient_data(const std::string& what) : std::runtime_error(what) {}
};

/// One grid point of an experiment sweep. Unset parameters stay NaN; `value`
/// is NaN exactly when the point was skipped (flag != "ok").
struct SweepRecord {
    double r = std::numeric_limits<double>::quiet_NaN();
    double R = std::numeric_limits<double>::quiet_NaN();
    double t = std::numeric_limits<double>::quiet_NaN();
    double s = std::numeric_limits<double>::quiet_NaN();
    double value = std::numeric_limits<double>::quiet_NaN();
    double bound_first_term = std::numeric_limits<double>::quiet_NaN();
    std::string flag = "ok";
};

inline double trace_norm(const CMat& M) { return trace_norm_dense(M); }
inline double trace_norm(const SparseOperator& M) { return trace_norm_dense(M.dense()); }

/// Operator with a declared support, for locality diagnostics.
struct LocalOperator {
    CMat mat;
    SiteSet support;
};

/// Pi_{X,nu} N_X Pi_{X,nu}: bounded, number-conserving, supported on X.
inline LocalOperator capped_number_observable(const FockBasisPtr& basis, const SiteSet& X, int nu) {
    DiagonalOperator P = projector(basis, X, nu);
    DiagonalOperator N = number_operator(basis, X);
    CMat m = CMat::Zero(basis->dim(), basis->dim());
    for (int i = 0; i < basis->dim(); ++i) m(i, i) = P.values[i] * N.values[i] * P.values[i];
    return LocalOperator{std::move(m), X};
}

namespace detail {

inline void require_number_conserving(const FockBasisPtr& basis, const CMat& A, const char* who) {
    // On a fixed-N sector N acts as N_tot * identity, so the commutator
    // vanishes identically for any sector operator; the check guards against
    // operators assembled over a different space.
    DiagonalOperator N = second_quantize(basis, [](int) { return 1.0; });
    CMat comm = A * N.dense() - N.dense() * A;
    if (comm.cwiseAbs().maxCoeff() > 1e-9)
        throw std::invalid_argument(std::string(who) + ": observable does not conserve particle number");
}

}  // namespace detail

struct ParticleSweepResult {
    std::vector<SweepRecord> records;
    ControlledDensityReport cd_report;
    double max_cap_weight = 0;  // largest weight on states with a saturated site
};

/// Moments Tr[N_{B_r(x)}^eta rho(t)] on a grid of (r, R, t). Points outside
/// the regime v|t| <= R - r or with R - r < max(1, delta0 * r) are recorded
/// with a skip flag instead of a value. Each record also carries the t = 0
/// moment at radius R. Requires v > 2d|J|.
inline ParticleSweepResult particle_sweep(const SparseOperator& H, double J, const QuantumState& state,
                                          int x, double eta, double v, double delta0, double lambda,
                                          const std::vector<double>& r_grid,
                                          const std::vector<double>& R_grid,
                                          const std::vector<double>& t_grid,
                                          const PropagatorOptions& opts = {}) {
    const FockBasisPtr& basis = state.basis();
    if (H.basis != basis) throw std::invalid_argument("particle_sweep: basis mismatch");
    const LatticePtr& lat = basis->lattice();
    velocity_params(J, lat->dimension(), v);  // enforces v > 2d|J|

    ParticleSweepResult out;
    out.cd_report = check_controlled_density(state, lambda, std::max(1.0, eta));

    Propagator prop(H, opts);
    for (double t : t_grid) {
        QuantumState evolved = state;
        if (state.is_pure()) {
            CVec psi = prop.apply(state.vector(), t);
            psi /= psi.norm();
            evolved = QuantumState::pure(basis, std::move(psi));
        } else {
            CMat U = expm_i_hermitian(H.dense(), -t);
            evolved = QuantumState::density(basis, CMat(U * state.density_matrix() * U.adjoint()));
        }
        out.max_cap_weight = std::max(out.max_cap_weight, cap_saturation_weight(evolved));

        for (double r : r_grid)
            for (double R : R_grid) {
                SweepRecord rec;
                rec.r = r;
                rec.R = R;
                rec.t = t;
                rec.s = (R > r && v > 0) ? (R - r) / v : std::numeric_limits<double>::quiet_NaN();
                rec.bound_first_term = moment(state, ball(lat, x, R), eta);
                if (!(R - r >= std::max(1.0, delta0 * r))) {
                    rec.flag = "skipped_hypothesis";
                } else if (!(v * std::abs(t) <= R - r)) {
                    rec.flag = "skipped_lightcone";
                } else {
                    rec.value = moment(evolved, ball(lat, x, r), eta);
                }
                out.records.push_back(std::move(rec));
            }
    }
    return out;
}

/// Trace-norm distance ||(tau_t(A) - tau^R_t(A)) rho||_1 on a grid of (R, t).
/// Values are computed for every R; records with R <= 2 carry a regime note.
inline std::vector<SweepRecord> lr_sweep(const FockBasisPtr& basis, const HamiltonianParams& params,
                                         const QuantumState& state, const LocalOperator& A,
                                         const std::vector<double>& R_grid,
                                         const std::vector<double>& t_grid, int dense_threshold = 2048) {
    if (state.basis() != basis) throw std::invalid_argument("lr_sweep: basis mismatch");
    detail::require_number_conserving(basis, A.mat, "lr_sweep");
    SparseOperator H = build_hamiltonian(basis, full_set(basis->lattice()), params);
    CMat rho = state.density_matrix();

    std::vector<SweepRecord> records;
    for (double t : t_grid) {
        CMat At = heisenberg(H, A.mat, t, dense_threshold);
        for (double R : R_grid) {
            CMat AtR = restricted_dynamics(basis, A.support, R, params, A.mat, t, dense_threshold);
            SweepRecord rec;
            rec.R = R;
            rec.t = t;
            rec.value = trace_norm(CMat((At - AtR) * rho));
            rec.flag = (R > 2) ? "ok" : "small_R";
            records.push_back(std::move(rec));
        }
    }
    return records;
}

struct TruncationSpec {
    SiteSet Y;
    int nu = 1;
};

/// Operator norm of [tau_t(A), B] for disjointly supported A, B; with a
/// truncation spec the commutator is [tau-bar_t(A-bar), B-bar] under the
/// truncated generator. The record's r field holds the support separation.
inline std::vector<SweepRecord> commutator_lightcone(const FockBasisPtr& basis,
                                                     const HamiltonianParams& params,
                                                     const LocalOperator& A, const LocalOperator& B,
                                                     const std::vector<double>& t_grid,
                                                     const std::optional<TruncationSpec>& trunc = {},
                                                     int dense_threshold = 2048) {
    if (intersects(A.support, B.support))
        throw std::invalid_argument("commutator_lightcone: supports must be disjoint");
    double sep = set_distance(A.support, B.support);

    SparseOperator H = build_hamiltonian(basis, full_set(basis->lattice()), params);
    CMat Amat = A.mat, Bmat = B.mat;
    if (trunc) {
        H = truncate(H, trunc->Y, trunc->nu);
        DiagonalOperator P = projector(basis, trunc->Y, trunc->nu);
        Amat = truncate_dense(Amat, P);
        Bmat = truncate_dense(Bmat, P);
    }

    std::vector<SweepRecord> records;
    for (double t : t_grid) {
        CMat At = heisenberg(H, Amat, t, dense_threshold);
        SweepRecord rec;
        rec.r = sep;
        rec.t = t;
        rec.value = spectral_norm(CMat(At * Bmat - Bmat * At));
        records.push_back(std::move(rec));
    }
    return records;
}

enum class FitMode { DecayInGap, FrontSpeed };

struct LightconeFit {
    double slope = 0;
    double intercept = 0;
    double r_squared = 0;
    int points_used = 0;
    int zeros_dropped = 0;
};

namespace detail {

inline LightconeFit least_squares(const std::vector<double>& xs, const std::vector<double>& ys) {
    LightconeFit fit;
    double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
        syy += ys[i] * ys[i];
    }
    fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss_tot = syy - sy * sy / n;
    double ss_res = ss_tot - fit.slope * (sxy - sx * sy / n);
    fit.r_squared = (ss_tot > 0) ? 1.0 - ss_res / ss_tot : 1.0;
    fit.points_used = static_cast<int>(xs.size());
    return fit;
}

}  // namespace detail

/// DecayInGap: least-squares log(value) vs log(R - r). FrontSpeed: per time,
/// the smallest radius at which the (optionally complemented) value drops
/// below threshold_rel times the reference, then slope of radius vs t. The
/// radius is taken from r when it varies, else from R.
inline LightconeFit lightcone_fit(const std::vector<SweepRecord>& records, FitMode mode,
                                  double threshold_rel = 1e-3,
                                  std::optional<double> complement_total = {}) {
    LightconeFit fit;
    if (mode == FitMode::DecayInGap) {
        std::vector<double> xs, ys;
        for (const auto& rec : records) {
            if (rec.flag.rfind("skipped", 0) == 0 || !std::isfinite(rec.value)) continue;
            double gap = rec.R - rec.r;
            if (!(gap > 0)) continue;
            if (rec.value <= 0) {
                ++fit.zeros_dropped;
                continue;
            }
            xs.push_back(std::log(gap));
            ys.push_back(std::log(rec.value));
        }
        if (xs.size() < 4) throw insufficient_data("lightcone_fit: fewer than 4 usable points");
        int zeros = fit.zeros_dropped;
        fit = detail::least_squares(xs, ys);
        fit.zeros_dropped = zeros;
        return fit;
    }

    // FrontSpeed
    bool r_varies = false;
    {
        std::optional<double> first;
        for (const auto& rec : records)
            if (std::isfinite(rec.r)) {
                if (!first) first = rec.r;
                else if (rec.r != *first) r_varies = true;
            }
    }
    std::map<double, std::vector<std::pair<double, double>>> by_t;  // t -> (radius, value)
    for (const auto& rec : records) {
        if (rec.flag.rfind("skipped", 0) == 0 || !std::isfinite(rec.value)) continue;
        double radius = r_varies ? rec.r : rec.R;
        if (!std::isfinite(radius)) continue;
        by_t[rec.t].emplace_back(radius, rec.value);
    }
    std::vector<double> ts, fronts;
    for (auto& [t, series] : by_t) {
        std::sort(series.begin(), series.end());
        double reference = complement_total.value_or(0.0);
        if (!complement_total)
            for (const auto& [rad, val] : series) reference = std::max(reference, val);
        if (reference <= 0) continue;
        for (const auto& [rad, val] : series) {
            double probe = complement_total ? (*complement_total - val) : val;
            if (probe < threshold_rel * reference) {
                ts.push_back(t);
                fronts.push_back(rad);
                break;
            }
        }
    }
    if (ts.size() < 4) throw insufficient_data("lightcone_fit: fewer than 4 usable crossings");
    return detail::least_squares(ts, fronts);
}

/// The five comparison terms between the full and the restricted dynamics,
/// each maximized over unit-norm B via trace-norm duality:
///   (1) rho (tau_t(A)       - tau_t(A-bar))
///   (2) rho (tau_t(A-bar)   - tau-bar_t(A-bar))
///   (3) rho (tau-bar_t(A-bar) - tau-bar^R_t(A-bar))
///   (4) rho (tau-bar^R_t(A-bar) - tau^R_t(A-bar))
///   (5) rho (tau^R_t(A-bar) - tau^R_t(A))
/// with Pi = Pi_{X[R+2],nu}. `direct` is ||rho (tau_t(A) - tau^R_t(A))||_1.
struct LadderReport {
    std::array<double, 5> terms{};
    double sum = 0;
    double direct = 0;
};

inline LadderReport truncation_ladder(const FockBasisPtr& basis, const HamiltonianParams& params,
                                      const QuantumState& state, const LocalOperator& A, double R,
                                      int nu, double t, int dense_threshold = 2048) {
    if (state.basis() != basis) throw std::invalid_argument("truncation_ladder: basis mismatch");
    detail::require_number_conserving(basis, A.mat, "truncation_ladder");

    SiteSet Y = enlarge(A.support, R + 2);
    DiagonalOperator P = projector(basis, Y, nu);
    SiteSet XR = enlarge(A.support, R);

    SparseOperator H = build_hamiltonian(basis, full_set(basis->lattice()), params);
    SparseOperator Hbar = truncate(H, Y, nu);
    SparseOperator HR = build_hamiltonian(basis, XR, params);
    SparseOperator HbarR = truncate(HR, Y, nu);

    CMat Abar = truncate_dense(A.mat, P);
    CMat rho = state.density_matrix();

    CMat tau_A = heisenberg(H, A.mat, t, dense_threshold);
    CMat tau_Abar = heisenberg(H, Abar, t, dense_threshold);
    CMat taubar_Abar = heisenberg(Hbar, Abar, t, dense_threshold);
    CMat taubarR_Abar = heisenberg(HbarR, Abar, t, dense_threshold);
    CMat tauR_Abar = heisenberg(HR, Abar, t, dense_threshold);
    CMat tauR_A = heisenberg(HR, A.mat, t, dense_threshold);

    LadderReport rep;
    rep.terms[0] = trace_norm(CMat(rho * (tau_A - tau_Abar)));
    rep.terms[1] = trace_norm(CMat(rho * (tau_Abar - taubar_Abar)));
    rep.terms[2] = trace_norm(CMat(rho * (taubar_Abar - taubarR_Abar)));
    rep.terms[3] = trace_norm(CMat(rho * (taubarR_Abar - tauR_Abar)));
    rep.terms[4] = trace_norm(CMat(rho * (tauR_Abar - tauR_A)));
    for (double v : rep.terms) rep.sum += v;
    rep.direct = trace_norm(CMat(rho * (tau_A - tauR_A)));
    return rep;
}

}  // namespace bhlab
