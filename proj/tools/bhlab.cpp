// bhlab: experiment runner for the bosonic-lattice laboratory.
//
// Subcommands:
//   run <config.json> [--out DIR] [--threads N] [--seed S]
//   verify [--seed S]
//   list
//   describe <kind>
//
// Exit codes: 0 ok, 2 bad config/usage, 3 numerical failure, 4 invariant
// violation in a verify run.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "bhlab/bhlab.hpp"

namespace {

int run_builtin_verify(std::uint64_t seed) {
    using namespace bhlab;
    struct Case {
        const char* label;
        int d;
        std::vector<int> extents;
    };
    const std::vector<Case> cases = {{"chain L=5", 1, {5}}, {"grid 3x3", 2, {3, 3}}};

    bool all_pass = true;
    for (const auto& cs : cases) {
        LatticePtr lat = make_lattice(cs.d, cs.extents);
        FockBasisPtr basis = enumerate_basis(lat, 2, 2);
        HamiltonianParams params{1.0, OnsitePotential{0.5, 0.1}};

        std::vector<CheckResult> checks;
        for (auto& c : operator_identity_suite(basis, params, seed)) checks.push_back(c);
        for (auto& c : astlo_suite(basis, params.J, seed + 1)) checks.push_back(c);
        for (auto& c : dynamics_suite(basis, params, 1, seed + 2)) checks.push_back(c);

        std::printf("== %s (dim %d) ==\n", cs.label, basis->dim());
        for (const auto& c : checks) {
            std::printf("  [%s] %-36s residual=%.3e tol=%.3e\n", c.pass ? "pass" : "FAIL",
                        c.name.c_str(), c.residual, c.tol);
            all_pass = all_pass && c.pass;
        }
    }
    std::printf("%s\n", all_pass ? "all invariant suites passed" : "invariant violations detected");
    return all_pass ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bhlab: Bose-Hubbard lattice dynamics laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", describe_kind;
    int threads = 1;
    std::uint64_t seed = 0;
    bool seed_set = false;

    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    run->add_option("config", config_path, "path to the JSON config")->required();
    run->add_option("--out", out_dir, "output directory (default: out)");
    run->add_option("--threads", threads, "worker threads for grid points (default: 1)");
    run->add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
        seed_set = true;
    });

    auto* verify = app.add_subcommand("verify", "run all invariant suites on built-in small systems");
    verify->add_option("--seed", seed, "seed for randomized checks")->each([&](const std::string&) {
        seed_set = true;
    });

    app.add_subcommand("list", "list experiment kinds");

    auto* describe = app.add_subcommand("describe", "explain an experiment kind");
    describe->add_option("kind", describe_kind, "experiment kind")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand("list")) {
            for (const auto& k : bhlab::experiment_kinds()) std::printf("%s\n", k.c_str());
            return 0;
        }
        if (app.got_subcommand("describe")) {
            std::printf("%s\n", bhlab::describe_experiment(describe_kind).c_str());
            return 0;
        }
        if (app.got_subcommand("verify")) {
            return run_builtin_verify(seed_set ? seed : 42);
        }

        bhlab::ExperimentConfig cfg = bhlab::load_config(config_path);
        std::optional<std::uint64_t> seed_override;
        if (seed_set) seed_override = seed;
        bhlab::RunOutput out = bhlab::run_experiment(cfg, out_dir, threads, seed_override);
        for (const auto& msg : out.messages) std::fprintf(stderr, "warning: %s\n", msg.c_str());
        std::printf("wrote %s\n", out.csv_path.c_str());
        std::printf("wrote %s\n", out.sidecar_path.c_str());
        return out.exit_code;
    } catch (const bhlab::config_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const bhlab::numerical_failure& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
