#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bhlab/common.hpp"
#include "bhlab/dynamics.hpp"
#include "bhlab/fock.hpp"
#include "bhlab/lattice.hpp"
#include "bhlab/operators.hpp"
#include "bhlab/states.hpp"

namespace bhlab {

using json = nlohmann::json;

/// Schema or parse problem; the message carries the offending key path.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

enum class ExperimentKind { Particle, Lr, Commutator, Ladder, Verify };

inline const char* kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Particle: return "particle";
        case ExperimentKind::Lr: return "lr";
        case ExperimentKind::Commutator: return "commutator";
        case ExperimentKind::Ladder: return "ladder";
        case ExperimentKind::Verify: return "verify";
    }
    return "?";
}

struct StateSpec {
    std::string type;                                  // "fock" | "spread"
    std::vector<int> occupations;                      // fock
    std::vector<std::pair<Coord, double>> profile;     // spread
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Verify;
    std::string id;

    int d = 1;
    std::vector<int> extents;
    int n_tot = 0;
    int n_max = 1;
    HamiltonianParams ham;
    std::string potential_form = "onsite";
    double J = 1.0, U = 0.0, mu = 0.0, p = 2.0;

    StateSpec state;

    PropagatorOptions prop;
    std::string prop_method = "auto";

    double eta = 1.0;
    double v = 0.0;
    double lambda = 1.0;
    double delta0 = 0.5;
    int nu = 1;
    int nu_A = 1;
    bool truncated = false;
    int axis = 0;

    std::optional<Coord> center;
    std::vector<Coord> observable_sites;

    std::vector<double> grid_r, grid_R, grid_t, grid_sep;
    std::vector<int> grid_nu;
    double R_scalar = 0.0;
    double t_scalar = 0.0;

    std::uint64_t seed = 1;
    std::string out_csv;

    json echo;  // canonical config echo for the sidecar

    std::string canonical_text() const { return echo.dump(); }
    std::uint64_t config_hash() const { return fnv1a(canonical_text()); }
};

namespace cfgdetail {

inline const json* find(const json& root, const std::string& path) {
    const json* cur = &root;
    std::stringstream ss(path);
    std::string key;
    while (std::getline(ss, key, '.')) {
        if (!cur->is_object() || !cur->contains(key)) return nullptr;
        cur = &(*cur)[key];
    }
    return cur;
}

inline const json& require(const json& root, const std::string& path) {
    const json* p = find(root, path);
    if (!p) throw config_error("config: missing required key '" + path + "'");
    return *p;
}

inline double require_number(const json& root, const std::string& path) {
    const json& v = require(root, path);
    if (!v.is_number()) throw config_error("config: key '" + path + "' must be a number");
    return v.get<double>();
}

inline long require_integer(const json& root, const std::string& path) {
    const json& v = require(root, path);
    if (!v.is_number_integer()) throw config_error("config: key '" + path + "' must be an integer");
    return v.get<long>();
}

inline std::string require_string(const json& root, const std::string& path) {
    const json& v = require(root, path);
    if (!v.is_string()) throw config_error("config: key '" + path + "' must be a string");
    return v.get<std::string>();
}

inline std::vector<double> require_number_array(const json& root, const std::string& path) {
    const json& v = require(root, path);
    if (!v.is_array() || v.empty()) throw config_error("config: key '" + path + "' must be a nonempty array");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw config_error("config: key '" + path + "' must hold numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

inline std::vector<int> require_int_array(const json& root, const std::string& path) {
    const json& v = require(root, path);
    if (!v.is_array() || v.empty()) throw config_error("config: key '" + path + "' must be a nonempty array");
    std::vector<int> out;
    for (const auto& e : v) {
        if (!e.is_number_integer()) throw config_error("config: key '" + path + "' must hold integers");
        out.push_back(e.get<int>());
    }
    return out;
}

inline Coord coord_from(const json& v, const std::string& path, int d) {
    if (!v.is_array() || static_cast<int>(v.size()) != d)
        throw config_error("config: key '" + path + "' must be a coordinate array of length " +
                           std::to_string(d));
    Coord c;
    for (const auto& e : v) {
        if (!e.is_number_integer()) throw config_error("config: key '" + path + "' must hold integers");
        c.push_back(e.get<int>());
    }
    return c;
}

}  // namespace cfgdetail

inline ExperimentConfig parse_config(const json& j) {
    namespace cd = cfgdetail;
    ExperimentConfig c;
    c.echo = j;

    std::string kind = cd::require_string(j, "experiment");
    if (kind == "particle") c.kind = ExperimentKind::Particle;
    else if (kind == "lr") c.kind = ExperimentKind::Lr;
    else if (kind == "commutator") c.kind = ExperimentKind::Commutator;
    else if (kind == "ladder") c.kind = ExperimentKind::Ladder;
    else if (kind == "verify") c.kind = ExperimentKind::Verify;
    else throw config_error("config: key 'experiment' must be one of particle|lr|commutator|ladder|verify");

    c.id = j.contains("id") ? cd::require_string(j, "id") : kind;

    c.d = static_cast<int>(cd::require_integer(j, "lattice.d"));
    c.extents = cd::require_int_array(j, "lattice.extents");
    if (c.d < 1) throw config_error("config: key 'lattice.d' must be >= 1");
    if (static_cast<int>(c.extents.size()) != c.d)
        throw config_error("config: key 'lattice.extents' must have length lattice.d");
    for (int e : c.extents)
        if (e < 1) throw config_error("config: key 'lattice.extents' entries must be >= 1");

    c.n_tot = static_cast<int>(cd::require_integer(j, "sector.N_tot"));
    c.n_max = static_cast<int>(cd::require_integer(j, "sector.n_max"));
    if (c.n_tot < 0) throw config_error("config: key 'sector.N_tot' must be >= 0");
    if (c.n_max < 1) throw config_error("config: key 'sector.n_max' must be >= 1");

    c.J = cd::require_number(j, "hamiltonian.J");
    if (cd::find(j, "hamiltonian.U")) c.U = cd::require_number(j, "hamiltonian.U");
    if (cd::find(j, "hamiltonian.mu")) c.mu = cd::require_number(j, "hamiltonian.mu");
    if (cd::find(j, "hamiltonian.form")) c.potential_form = cd::require_string(j, "hamiltonian.form");
    if (cd::find(j, "hamiltonian.p")) c.p = cd::require_number(j, "hamiltonian.p");
    if (c.potential_form == "onsite") {
        c.ham = HamiltonianParams{c.J, OnsitePotential{c.U, c.mu}};
    } else if (c.potential_form == "pairwise") {
        if (c.p < 1) throw config_error("config: key 'hamiltonian.p' must be >= 1");
        c.ham = HamiltonianParams{c.J, PairwisePotential{c.U, c.p, c.mu}};
    } else {
        throw config_error("config: key 'hamiltonian.form' must be onsite|pairwise");
    }

    if (cd::find(j, "propagator.method")) {
        c.prop_method = cd::require_string(j, "propagator.method");
        if (c.prop_method == "auto") c.prop.method = PropagatorMethod::Auto;
        else if (c.prop_method == "dense") c.prop.method = PropagatorMethod::Dense;
        else if (c.prop_method == "krylov") c.prop.method = PropagatorMethod::Krylov;
        else throw config_error("config: key 'propagator.method' must be auto|dense|krylov");
    }
    if (cd::find(j, "propagator.tol")) c.prop.tol = cd::require_number(j, "propagator.tol");
    if (cd::find(j, "propagator.krylov_dim"))
        c.prop.krylov_dim = static_cast<int>(cd::require_integer(j, "propagator.krylov_dim"));

    if (cd::find(j, "seed")) c.seed = static_cast<std::uint64_t>(cd::require_integer(j, "seed"));
    if (cd::find(j, "output.csv")) c.out_csv = cd::require_string(j, "output.csv");
    if (c.out_csv.empty()) c.out_csv = c.id + ".csv";

    const bool needs_state = c.kind == ExperimentKind::Particle || c.kind == ExperimentKind::Lr ||
                             c.kind == ExperimentKind::Ladder;
    if (needs_state) {
        c.state.type = cd::require_string(j, "state.type");
        if (c.state.type == "fock") {
            c.state.occupations = cd::require_int_array(j, "state.occupations");
        } else if (c.state.type == "spread") {
            const json& prof = cd::require(j, "state.profile");
            if (!prof.is_array() || prof.empty())
                throw config_error("config: key 'state.profile' must be a nonempty array");
            for (std::size_t i = 0; i < prof.size(); ++i) {
                const json& entry = prof[i];
                std::string path = "state.profile[" + std::to_string(i) + "]";
                if (!entry.is_object() || !entry.contains("site") || !entry.contains("weight"))
                    throw config_error("config: key '" + path + "' must have 'site' and 'weight'");
                Coord site = cd::coord_from(entry["site"], path + ".site", c.d);
                if (!entry["weight"].is_number())
                    throw config_error("config: key '" + path + ".weight' must be a number");
                c.state.profile.emplace_back(site, entry["weight"].get<double>());
            }
        } else {
            throw config_error("config: key 'state.type' must be fock|spread");
        }
    }

    if (cd::find(j, "center")) c.center = cd::coord_from(*cd::find(j, "center"), "center", c.d);
    if (cd::find(j, "eta")) c.eta = cd::require_number(j, "eta");
    if (cd::find(j, "lambda")) c.lambda = cd::require_number(j, "lambda");
    if (cd::find(j, "delta0")) c.delta0 = cd::require_number(j, "delta0");
    if (cd::find(j, "nu")) c.nu = static_cast<int>(cd::require_integer(j, "nu"));
    if (cd::find(j, "axis")) c.axis = static_cast<int>(cd::require_integer(j, "axis"));
    if (cd::find(j, "truncated")) {
        const json& b = cd::require(j, "truncated");
        if (!b.is_boolean()) throw config_error("config: key 'truncated' must be a boolean");
        c.truncated = b.get<bool>();
    }

    const bool needs_observable = c.kind == ExperimentKind::Lr || c.kind == ExperimentKind::Ladder ||
                                  c.kind == ExperimentKind::Commutator;
    if (needs_observable) {
        const json& sites = cd::require(j, "observable.sites");
        if (!sites.is_array() || sites.empty())
            throw config_error("config: key 'observable.sites' must be a nonempty array");
        for (std::size_t i = 0; i < sites.size(); ++i)
            c.observable_sites.push_back(
                cd::coord_from(sites[i], "observable.sites[" + std::to_string(i) + "]", c.d));
        if (cd::find(j, "observable.nu_A"))
            c.nu_A = static_cast<int>(cd::require_integer(j, "observable.nu_A"));
    }

    switch (c.kind) {
        case ExperimentKind::Particle:
            c.v = cd::require_number(j, "v");
            if (!(c.v > 2.0 * c.d * std::abs(c.J)))
                throw config_error("config: key 'v' must exceed 2d|J| for a particle experiment");
            c.grid_r = cd::require_number_array(j, "grids.r");
            c.grid_R = cd::require_number_array(j, "grids.R");
            c.grid_t = cd::require_number_array(j, "grids.t");
            break;
        case ExperimentKind::Lr:
            c.grid_R = cd::require_number_array(j, "grids.R");
            c.grid_t = cd::require_number_array(j, "grids.t");
            break;
        case ExperimentKind::Commutator:
            c.grid_sep = cd::require_number_array(j, "grids.separation");
            for (double sep : c.grid_sep)
                if (sep < 1 || sep != std::floor(sep))
                    throw config_error(
                        "config: key 'grids.separation' entries must be positive integers (axis "
                        "offsets)");
            c.grid_t = cd::require_number_array(j, "grids.t");
            if (c.truncated && c.nu >= c.n_max)
                throw config_error(
                    "config: key 'nu' must be < sector.n_max so the truncation is nontrivial");
            break;
        case ExperimentKind::Ladder:
            c.grid_nu = cd::require_int_array(j, "grids.nu");
            c.R_scalar = cd::require_number(j, "R");
            c.t_scalar = cd::require_number(j, "t");
            for (int nu : c.grid_nu)
                if (nu < 1 || nu >= c.n_max)
                    throw config_error(
                        "config: key 'grids.nu' entries must be in [1, sector.n_max) so the "
                        "truncation is nontrivial");
            break;
        case ExperimentKind::Verify:
            break;
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot open '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw config_error("config: " + std::string(e.what()));
    }
    return parse_config(j);
}

/// Builds the configured lattice, basis, and initial state.
struct Workspace {
    LatticePtr lattice;
    FockBasisPtr basis;
    std::optional<QuantumState> state;
};

inline Workspace build_workspace(const ExperimentConfig& c) {
    Workspace w;
    w.lattice = make_lattice(c.d, c.extents);
    w.basis = enumerate_basis(w.lattice, c.n_tot, c.n_max);
    if (!c.state.type.empty()) {
        if (c.state.type == "fock") {
            if (static_cast<int>(c.state.occupations.size()) != w.lattice->num_sites())
                throw config_error("config: key 'state.occupations' must list one entry per site");
            w.state = product_fock_state(w.basis, c.state.occupations);
        } else {
            std::vector<double> weights(static_cast<std::size_t>(w.lattice->num_sites()), 0.0);
            for (const auto& [site, wgt] : c.state.profile) {
                if (!w.lattice->contains(site)) throw config_error("config: state.profile site not on lattice");
                weights[static_cast<std::size_t>(w.lattice->index_of(site))] = wgt;
            }
            w.state = spread_state(w.basis, [&](int x) { return weights[static_cast<std::size_t>(x)]; });
        }
    }
    return w;
}

}  // namespace bhlab
