#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "bhlab/common.hpp"
#include "bhlab/fock.hpp"
#include "bhlab/operators.hpp"

namespace bhlab {

/// Smooth cutoff with chi = 0 on (-inf, eps/2], chi = 1 on [eps, inf), built as
/// the normalized integral of a squared bump so that sqrt(chi') is itself
/// smooth and compactly supported in (eps/2, eps).
///
/// chi is tabulated on [0, eps] (>= 4096 nodes) and evaluated by cubic Hermite
/// interpolation with the analytic derivative at the nodes; chi' and
/// sqrt(chi') are evaluated analytically. Endpoint values are exact by
/// construction.
class CutoffFunction {
  public:
    explicit CutoffFunction(double epsilon, int n_nodes = 4097) : eps_(epsilon) {
        if (epsilon <= 0) throw std::invalid_argument("make_cutoff: epsilon must be > 0");
        if (n_nodes < 4097) n_nodes = 4097;
        n_ = n_nodes;
        h_ = eps_ / static_cast<double>(n_ - 1);

        // cumulative integral of the squared bump over [0, eps], Gauss-Legendre
        // per interval
        static const double gx[4] = {0.069431844202973712, 0.33000947820757187, 0.66999052179242813,
                                     0.93056815579702623};
        static const double gw[4] = {0.17392742256872693, 0.32607257743127307, 0.32607257743127307,
                                     0.17392742256872693};
        cum_.assign(static_cast<std::size_t>(n_), 0.0);
        double acc = 0.0;
        for (int i = 1; i < n_; ++i) {
            double a = (i - 1) * h_, b = i * h_;
            double seg = 0.0;
            for (int q = 0; q < 4; ++q) seg += gw[q] * weight(a + (b - a) * gx[q]);
            acc += seg * (b - a);
            cum_[static_cast<std::size_t>(i)] = acc;
        }
        norm_ = acc;  // integral over the full support (eps/2, eps)
    }

    double epsilon() const { return eps_; }
    int grid_size() const { return n_; }

    double operator()(double x) const { return eval(x); }

    double eval(double x) const {
        if (x <= eps_ / 2) return 0.0;
        if (x >= eps_) return 1.0;
        // cubic Hermite on the enclosing grid interval, derivative known exactly
        double u = x / h_;
        int i = std::min(static_cast<int>(u), n_ - 2);
        double t = u - i;
        double y0 = cum_[static_cast<std::size_t>(i)] / norm_;
        double y1 = cum_[static_cast<std::size_t>(i) + 1] / norm_;
        double d0 = derivative(i * h_) * h_;
        double d1 = derivative((i + 1) * h_) * h_;
        double t2 = t * t, t3 = t2 * t;
        double val = (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * d0 + (-2 * t3 + 3 * t2) * y1 +
                     (t3 - t2) * d1;
        return std::clamp(val, 0.0, 1.0);
    }

    /// chi'(x), analytic.
    double derivative(double x) const { return weight(x) / norm_; }

    /// sqrt(chi')(x) = bump(x)/sqrt(Z), smooth and compactly supported.
    double sqrt_derivative(double x) const { return bump(x) / std::sqrt(norm_); }

  private:
    double bump(double x) const {
        double u = (x - eps_ / 2) / (eps_ / 2);
        if (u <= 0.0 || u >= 1.0) return 0.0;
        return std::exp(-1.0 / (u * (1.0 - u)));
    }
    double weight(double x) const {
        double b = bump(x);
        return b * b;
    }

    double eps_;
    int n_ = 0;
    double h_ = 0;
    double norm_ = 0;
    std::vector<double> cum_;
};

inline CutoffFunction make_cutoff(double epsilon) { return CutoffFunction(epsilon); }

/// Velocity bookkeeping: kappa = 2d|J| is the minimal admissible speed,
/// v_tilde = (v+kappa)/2, epsilon = v - v_tilde, s = (R-r)/v per experiment.
struct VelocityParams {
    double J = 0;
    int d = 1;
    double v = 0;
    double kappa = 0;
    double v_tilde = 0;
    double epsilon = 0;
    double s = 0;  // unset until a gap (R, r) is chosen
};

inline VelocityParams velocity_params(double J, int d, double v) {
    double kappa = 2.0 * d * std::abs(J);
    if (!(v > kappa)) throw std::invalid_argument("velocity_params: requires v > 2d|J|");
    VelocityParams vp;
    vp.J = J;
    vp.d = d;
    vp.v = v;
    vp.kappa = kappa;
    vp.v_tilde = (v + kappa) / 2.0;
    vp.epsilon = v - vp.v_tilde;
    return vp;
}

inline VelocityParams with_gap(VelocityParams vp, double R, double r) {
    if (!(R > r) || r < 0) throw std::invalid_argument("with_gap: requires R > r >= 0");
    vp.s = (R - r) / vp.v;
    return vp;
}

/// chi_ts at a site a distance |x| from the origin: chi((R - v_tilde t - |x|)/s).
inline double eval_rescaled(const CutoffFunction& chi, const VelocityParams& vp, double R, double t,
                            double site_radius) {
    if (!(vp.s > 0)) throw std::invalid_argument("eval_rescaled: s must be set and positive");
    return chi.eval((R - vp.v_tilde * t - site_radius) / vp.s);
}

inline double eval_rescaled(const CutoffFunction& chi, const VelocityParams& vp, double R, double t,
                            const Lattice& lat, int site) {
    return eval_rescaled(chi, vp, R, t, lat.radius(site));
}

/// ASTLO: dGamma(chi_ts) over the basis, with s = (R-r)/v.
inline DiagonalOperator astlo_operator(const FockBasisPtr& basis, const CutoffFunction& chi,
                                       const VelocityParams& vp, double R, double r, double t) {
    VelocityParams vps = with_gap(vp, R, r);
    const Lattice& lat = *basis->lattice();
    return second_quantize(basis,
                           [&](int x) { return eval_rescaled(chi, vps, R, t, lat.radius(x)); });
}

struct TaylorReport {
    double max_coefficient = 0;  // smallest C with |residual| <= C (x-y)^2 over the samples
    double fit_exponent = 0;     // log-log slope of mean |residual| vs gap
    double fit_r2 = 0;
    int pairs_used = 0;
    int zero_gap_dropped = 0;
};

/// Log-spaced-gap sample pairs for the expansion check; per gap many base
/// points are drawn so the fitted order is read off the gap scaling.
inline std::vector<std::pair<double, double>> make_taylor_samples(const CutoffFunction& chi,
                                                                  int n_gaps, int per_gap,
                                                                  std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const double eps = chi.epsilon();
    std::uniform_real_distribution<double> ux(eps / 2, eps);
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(static_cast<std::size_t>(n_gaps) * static_cast<std::size_t>(per_gap));
    const double h_lo = 1e-3 * eps, h_hi = 0.05 * eps;
    for (int gi = 0; gi < n_gaps; ++gi) {
        double f = (n_gaps == 1) ? 0.0 : static_cast<double>(gi) / (n_gaps - 1);
        double h = h_lo * std::pow(h_hi / h_lo, f);
        for (int k = 0; k < per_gap; ++k) {
            double x = ux(rng);
            pairs.emplace_back(x, x - h);
        }
    }
    return pairs;
}

/// Numeric check of the symmetrized expansion
///   chi(x) - chi(y) = (x-y) u(x) u(y) + R1(x,y) (x-y)^2,   u = sqrt(chi').
/// Reports the smallest uniform constant bounding |R1| over the samples and a
/// log-log fit of the residual order in the gap (expected ~2).
inline TaylorReport taylor_expansion_check(const CutoffFunction& chi, int beta,
                                           std::span<const std::pair<double, double>> sample_pairs) {
    if (beta < 1) throw std::invalid_argument("taylor_expansion_check: beta must be >= 1");
    TaylorReport rep;

    std::map<double, std::pair<double, int>> by_gap;  // gap -> (sum |residual|, count)
    for (const auto& [x, y] : sample_pairs) {
        double gap = std::abs(x - y);
        if (gap == 0.0) {
            ++rep.zero_gap_dropped;
            continue;
        }
        double res = chi.eval(x) - chi.eval(y) -
                     (x - y) * chi.sqrt_derivative(x) * chi.sqrt_derivative(y);
        rep.max_coefficient = std::max(rep.max_coefficient, std::abs(res) / (gap * gap));
        auto& slot = by_gap[gap];
        slot.first += std::abs(res);
        slot.second += 1;
        ++rep.pairs_used;
    }

    // merge gaps that differ only by rounding of x - y, then least squares on
    // (log gap, log mean |residual|); the per-gap mean keeps the flat-region
    // pairs with vanishing residual from dominating the log fit
    std::vector<std::pair<double, std::pair<double, int>>> merged;
    for (const auto& [gap, sc] : by_gap) {
        if (!merged.empty() && gap <= merged.back().first * (1.0 + 1e-9)) {
            merged.back().second.first += sc.first;
            merged.back().second.second += sc.second;
        } else {
            merged.emplace_back(gap, sc);
        }
    }
    std::vector<double> lx, ly;
    for (const auto& [gap, sc] : merged) {
        double mean = sc.first / sc.second;
        if (mean <= 0) continue;
        lx.push_back(std::log(gap));
        ly.push_back(std::log(mean));
    }
    if (lx.size() >= 2) {
        double n = static_cast<double>(lx.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sx += lx[i];
            sy += ly[i];
            sxx += lx[i] * lx[i];
            sxy += lx[i] * ly[i];
            syy += ly[i] * ly[i];
        }
        double denom = n * sxx - sx * sx;
        rep.fit_exponent = (n * sxy - sx * sy) / denom;
        double ss_tot = syy - sy * sy / n;
        double ss_res = ss_tot - rep.fit_exponent * (sxy - sx * sy / n);
        rep.fit_r2 = (ss_tot > 0) ? 1.0 - ss_res / ss_tot : 1.0;
    }
    return rep;
}

}  // namespace bhlab
