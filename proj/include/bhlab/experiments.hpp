#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "bhlab/config.hpp"
#include "bhlab/diagnostics.hpp"
#include "bhlab/verify.hpp"

namespace bhlab {

namespace csv {

inline std::string fmt(double v) {
    if (std::isnan(v)) return "";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string fmt_int(long v) { return std::to_string(v); }

inline std::string extents_string(const std::vector<int>& extents) {
    std::string s;
    for (std::size_t i = 0; i < extents.size(); ++i) {
        if (i) s += 'x';
        s += std::to_string(extents[i]);
    }
    return s;
}

inline std::string coord_string(const Coord& c) {
    std::string s;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (i) s += '|';
        s += std::to_string(c[i]);
    }
    return s;
}

}  // namespace csv

/// One CSV line in the fixed column order
///   experiment_id,d,L_extents,N_tot,n_max,J,U,mu,potential_form,eta,nu,lambda,
///   x,r,R,t,s,value,flag
struct CsvRow {
    std::string experiment_id;
    std::string eta, nu, lambda, x, r, R, t, s, value;
    std::string flag = "ok";
};

struct RunOutput {
    int exit_code = 0;
    std::string csv_path;
    std::string sidecar_path;
    std::vector<std::string> messages;
};

namespace detail {

template <class F>
inline void parallel_for(int n, int threads, F&& f) {
    threads = std::max(1, std::min(threads, n));
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) f(i);
        });
    for (auto& th : pool) th.join();
}

inline void write_csv(const std::string& path, const ExperimentConfig& c,
                      const std::vector<CsvRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(c.config_hash()));
    out << "# bhlab " << kVersion << " config=" << hash << "\n";
    out << "experiment_id,d,L_extents,N_tot,n_max,J,U,mu,potential_form,eta,nu,lambda,x,r,R,t,s,value,flag\n";
    const std::string common = csv::fmt_int(c.d) + "," + csv::extents_string(c.extents) + "," +
                               csv::fmt_int(c.n_tot) + "," + csv::fmt_int(c.n_max) + "," +
                               csv::fmt(c.J) + "," + csv::fmt(c.U) + "," + csv::fmt(c.mu) + "," +
                               c.potential_form;
    for (const auto& r : rows)
        out << r.experiment_id << "," << common << "," << r.eta << "," << r.nu << "," << r.lambda
            << "," << r.x << "," << r.r << "," << r.R << "," << r.t << "," << r.s << "," << r.value
            << "," << r.flag << "\n";
}

inline CsvRow row_from_record(const ExperimentConfig& c, const SweepRecord& rec,
                              const std::string& x_label) {
    CsvRow row;
    row.experiment_id = c.id;
    row.eta = csv::fmt(c.eta);
    row.lambda = csv::fmt(c.lambda);
    row.x = x_label;
    row.r = csv::fmt(rec.r);
    row.R = csv::fmt(rec.R);
    row.t = csv::fmt(rec.t);
    row.s = csv::fmt(rec.s);
    row.value = csv::fmt(rec.value);
    row.flag = rec.flag;
    return row;
}

inline LocalOperator observable_from_config(const ExperimentConfig& c, const Workspace& w) {
    std::vector<int> idx;
    for (const auto& site : c.observable_sites) {
        if (!w.lattice->contains(site)) throw config_error("config: observable site not on lattice");
        idx.push_back(w.lattice->index_of(site));
    }
    return capped_number_observable(w.basis, make_site_set(w.lattice, idx), c.nu_A);
}

}  // namespace detail

inline std::vector<std::string> experiment_kinds() {
    return {"particle", "lr", "commutator", "ladder", "verify"};
}

inline std::string describe_experiment(const std::string& kind) {
    if (kind == "particle")
        return "particle: sweeps the moments Tr[N_{B_r(x)}^eta rho(t)] of the number operator on\n"
               "balls around a site x under the full dynamics, on a grid of (r, R, t). Valid for\n"
               "velocities v > 2d|J|; grid points outside the regime v|t| <= R - r (or with\n"
               "R - r < max(1, delta0*r)) are flagged and skipped. Each record also carries the\n"
               "t = 0 moment at radius R, the comparison term of the propagation bound. The JSON\n"
               "sidecar reports a front-speed fit of the light cone.";
    if (kind == "lr")
        return "lr: measures the state-dependent trace norm ||(tau_t(A) - tau^R_t(A)) rho||_1,\n"
               "comparing the full Heisenberg evolution tau_t with the restricted evolution\n"
               "tau^R_t generated by H_{X[R]} on the R-enlargement of the observable's support.\n"
               "A is the capped number observable Pi_{X,nu_A} N_X Pi_{X,nu_A}. Decay in R at\n"
               "fixed t exhibits the effective light cone; rows with R <= 2 are marked small_R.";
    if (kind == "commutator")
        return "commutator: operator norm ||[tau_t(A), B]|| for disjointly supported observables\n"
               "as a function of their separation, optionally under the occupation-truncated\n"
               "dynamics tau-bar generated by Pi H Pi (bounded interactions, nu bosons per\n"
               "site). The log-linear decay in separation at fixed t is the exponential tail of\n"
               "the bounded-interaction light cone.";
    if (kind == "ladder")
        return "ladder: the five-term decomposition bridging tau_t(A) to tau^R_t(A) through the\n"
               "truncation A -> A-bar = Pi A Pi and the truncated dynamics tau-bar, reporting\n"
               "each trace-norm term, their sum, and the direct difference (the sum dominates\n"
               "it by the triangle inequality). Swept over the truncation level nu.";
    if (kind == "verify")
        return "verify: runs the exact-identity suites (operator assembly, cutoff/ASTLO\n"
               "inequalities, projector and propagator identities) on the configured lattice\n"
               "and sector; any violation makes the run exit nonzero.";
    throw config_error("unknown experiment kind '" + kind + "'");
}

inline RunOutput run_experiment(const ExperimentConfig& c, const std::string& out_dir, int threads,
                                std::optional<std::uint64_t> seed_override = {}) {
    const auto t_start = std::chrono::steady_clock::now();
    const std::uint64_t seed = seed_override.value_or(c.seed);

    Workspace w = build_workspace(c);
    std::vector<CsvRow> rows;
    json sidecar;
    sidecar["id"] = c.id;
    sidecar["kind"] = kind_name(c.kind);
    sidecar["version"] = kVersion;
    {
        char hash[32];
        std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(c.config_hash()));
        sidecar["config_hash"] = hash;
    }
    sidecar["basis_dim"] = w.basis->dim();
    sidecar["lattice"] = {{"d", c.d}, {"extents", c.extents}};
    sidecar["sector"] = {{"N_tot", c.n_tot}, {"n_max", c.n_max}};
    sidecar["seed"] = seed;
    sidecar["config"] = c.echo;
    json warnings = json::array();

    RunOutput out;

    switch (c.kind) {
        case ExperimentKind::Particle: {
            SparseOperator H = build_hamiltonian(w.basis, full_set(w.lattice), c.ham);
            int center = c.center ? w.lattice->index_of(*c.center) : w.lattice->origin_index();
            std::string x_label = csv::coord_string(w.lattice->coord(center));

            std::vector<ParticleSweepResult> parts(c.grid_t.size());
            detail::parallel_for(static_cast<int>(c.grid_t.size()), threads, [&](int i) {
                parts[static_cast<std::size_t>(i)] =
                    particle_sweep(H, c.J, *w.state, center, c.eta, c.v, c.delta0, c.lambda, c.grid_r,
                                   c.grid_R, {c.grid_t[static_cast<std::size_t>(i)]}, c.prop);
            });
            std::vector<SweepRecord> records;
            double max_cap = 0;
            for (auto& p : parts) {
                for (auto& rec : p.records) records.push_back(std::move(rec));
                max_cap = std::max(max_cap, p.max_cap_weight);
            }
            const auto& cd = parts.front().cd_report;
            if (!cd.passed)
                warnings.push_back("controlled-density check failed: worst ratio " +
                                   std::to_string(cd.worst_ratio) + " at site " +
                                   csv::coord_string(w.lattice->coord(cd.witness_site)) + ", r=" +
                                   std::to_string(cd.witness_radius) + ", zeta=" +
                                   std::to_string(cd.witness_zeta));
            sidecar["cd_report"] = {{"passed", cd.passed},
                                    {"worst_ratio", cd.worst_ratio},
                                    {"witness_site", w.lattice->coord(cd.witness_site)},
                                    {"witness_radius", cd.witness_radius},
                                    {"witness_zeta", cd.witness_zeta}};
            sidecar["max_cap_weight"] = max_cap;
            {
                VelocityParams vp = velocity_params(c.J, c.d, c.v);
                CutoffFunction cut = make_cutoff(vp.epsilon);
                sidecar["astlo"] = {{"v", vp.v},
                                    {"kappa", vp.kappa},
                                    {"v_tilde", vp.v_tilde},
                                    {"epsilon", vp.epsilon},
                                    {"cutoff_grid_points", cut.grid_size()}};
            }

            for (const auto& rec : records) rows.push_back(detail::row_from_record(c, rec, x_label));
            try {
                LightconeFit fit = lightcone_fit(records, FitMode::FrontSpeed, 1e-3,
                                                 std::pow(static_cast<double>(c.n_tot), c.eta));
                sidecar["front_speed_fit"] = {{"slope", fit.slope},
                                              {"intercept", fit.intercept},
                                              {"r_squared", fit.r_squared},
                                              {"points_used", fit.points_used}};
            } catch (const insufficient_data& e) {
                warnings.push_back(std::string("front-speed fit skipped: ") + e.what());
            }
            break;
        }

        case ExperimentKind::Lr: {
            LocalOperator A = detail::observable_from_config(c, w);
            if (c.lambda > 0) {
                auto cd = check_controlled_density(*w.state, c.lambda, std::max(1.0, c.eta));
                if (!cd.passed)
                    warnings.push_back("controlled-density check failed: worst ratio " +
                                       std::to_string(cd.worst_ratio));
                sidecar["cd_report"] = {{"passed", cd.passed}, {"worst_ratio", cd.worst_ratio}};
            }
            sidecar["max_cap_weight"] = cap_saturation_weight(*w.state);
            std::vector<std::vector<SweepRecord>> parts(c.grid_t.size());
            detail::parallel_for(static_cast<int>(c.grid_t.size()), threads, [&](int i) {
                parts[static_cast<std::size_t>(i)] =
                    lr_sweep(w.basis, c.ham, *w.state, A, c.grid_R,
                             {c.grid_t[static_cast<std::size_t>(i)]});
            });
            std::string x_label = csv::coord_string(c.observable_sites.front());
            for (auto& part : parts)
                for (auto& rec : part) {
                    CsvRow row = detail::row_from_record(c, rec, x_label);
                    row.nu = csv::fmt_int(c.nu_A);
                    rows.push_back(std::move(row));
                }
            break;
        }

        case ExperimentKind::Commutator: {
            LocalOperator A = detail::observable_from_config(c, w);
            if (c.axis < 0 || c.axis >= c.d) throw config_error("config: key 'axis' out of range");
            std::optional<TruncationSpec> trunc;
            if (c.truncated) trunc = TruncationSpec{full_set(w.lattice), c.nu};

            std::vector<std::vector<SweepRecord>> parts(c.grid_sep.size());
            detail::parallel_for(static_cast<int>(c.grid_sep.size()), threads, [&](int i) {
                double sep = c.grid_sep[static_cast<std::size_t>(i)];
                std::vector<int> b_sites;
                for (const auto& site : c.observable_sites) {
                    Coord shifted = site;
                    shifted[static_cast<std::size_t>(c.axis)] += static_cast<int>(sep);
                    if (!w.lattice->contains(shifted))
                        throw config_error("config: separation " + std::to_string(sep) +
                                           " pushes the partner observable off the lattice");
                    b_sites.push_back(w.lattice->index_of(shifted));
                }
                LocalOperator B = capped_number_observable(w.basis, make_site_set(w.lattice, b_sites), c.nu_A);
                parts[static_cast<std::size_t>(i)] =
                    commutator_lightcone(w.basis, c.ham, A, B, c.grid_t, trunc);
            });
            std::string x_label = csv::coord_string(c.observable_sites.front());
            for (auto& part : parts)
                for (auto& rec : part) {
                    CsvRow row = detail::row_from_record(c, rec, x_label);
                    if (c.truncated) row.nu = csv::fmt_int(c.nu);
                    rows.push_back(std::move(row));
                }
            try {
                std::vector<SweepRecord> flat;
                for (const auto& part : parts) flat.insert(flat.end(), part.begin(), part.end());
                // decay in separation at the largest t of the grid
                double t_max = *std::max_element(c.grid_t.begin(), c.grid_t.end());
                std::vector<double> xs, ys;
                for (const auto& rec : flat)
                    if (rec.t == t_max && rec.value > 0) {
                        xs.push_back(rec.r);
                        ys.push_back(std::log(rec.value));
                    }
                if (xs.size() >= 4) {
                    LightconeFit fit = detail::least_squares(xs, ys);
                    sidecar["separation_decay_fit"] = {{"slope", fit.slope},
                                                       {"intercept", fit.intercept},
                                                       {"r_squared", fit.r_squared},
                                                       {"t", t_max}};
                }
            } catch (...) {
            }
            break;
        }

        case ExperimentKind::Ladder: {
            LocalOperator A = detail::observable_from_config(c, w);
            sidecar["max_cap_weight"] = cap_saturation_weight(*w.state);
            std::vector<LadderReport> reports(c.grid_nu.size());
            detail::parallel_for(static_cast<int>(c.grid_nu.size()), threads, [&](int i) {
                reports[static_cast<std::size_t>(i)] =
                    truncation_ladder(w.basis, c.ham, *w.state, A, c.R_scalar,
                                      c.grid_nu[static_cast<std::size_t>(i)], c.t_scalar);
            });
            std::string x_label = csv::coord_string(c.observable_sites.front());
            for (std::size_t i = 0; i < reports.size(); ++i) {
                const auto& rep = reports[i];
                auto emit = [&](const std::string& tag, double value) {
                    CsvRow row;
                    row.experiment_id = c.id;
                    row.eta = csv::fmt(c.eta);
                    row.lambda = csv::fmt(c.lambda);
                    row.nu = csv::fmt_int(c.grid_nu[i]);
                    row.x = x_label;
                    row.R = csv::fmt(c.R_scalar);
                    row.t = csv::fmt(c.t_scalar);
                    row.value = csv::fmt(value);
                    row.flag = tag;
                    rows.push_back(std::move(row));
                };
                for (std::size_t k = 0; k < rep.terms.size(); ++k)
                    emit("term" + std::to_string(k + 1), rep.terms[k]);
                emit("sum", rep.sum);
                emit("direct", rep.direct);
                if (rep.sum + 1e-12 < rep.direct)
                    warnings.push_back("ladder: five-term sum fell below the direct difference at nu=" +
                                       std::to_string(c.grid_nu[i]));
            }
            break;
        }

        case ExperimentKind::Verify: {
            std::vector<CheckResult> checks;
            auto append = [&checks](std::vector<CheckResult> more) {
                for (auto& m : more) checks.push_back(std::move(m));
            };
            append(operator_identity_suite(w.basis, c.ham, seed));
            append(astlo_suite(w.basis, c.J, seed + 1));
            append(dynamics_suite(w.basis, c.ham, std::min(c.nu, w.basis->n_max()), seed + 2));

            json jchecks = json::array();
            for (const auto& chk : checks) {
                CsvRow row;
                row.experiment_id = c.id + "/" + chk.name;
                row.value = csv::fmt(chk.residual);
                row.flag = chk.pass ? "pass" : "fail";
                rows.push_back(std::move(row));
                jchecks.push_back({{"name", chk.name},
                                   {"residual", chk.residual},
                                   {"tol", chk.tol},
                                   {"pass", chk.pass}});
                if (!chk.pass) out.exit_code = 4;
            }
            sidecar["checks"] = jchecks;
            break;
        }
    }

    std::filesystem::create_directories(out_dir);
    out.csv_path = (std::filesystem::path(out_dir) / c.out_csv).string();
    detail::write_csv(out.csv_path, c, rows);

    sidecar["warnings"] = warnings;
    sidecar["timing_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - t_start)
                               .count();
    out.sidecar_path = out.csv_path.substr(0, out.csv_path.size() - 4) + ".json";
    {
        std::ofstream js(out.sidecar_path, std::ios::binary);
        js << sidecar.dump(2) << "\n";
    }
    for (const auto& wmsg : warnings) out.messages.push_back(wmsg.get<std::string>());
    return out;
}

}  // namespace bhlab
