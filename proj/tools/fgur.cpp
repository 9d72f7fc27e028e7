// fgur: generate scenarios, compute bound reports, run the randomized
// verification suite, and sample tests against a channel.
//
// Exit codes: 0 ok, 1 verification failure, 2 usage or input error,
// 3 solver failure. JSON goes to stdout (or --out), diagnostics to stderr.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fgur/fgur.hpp"

namespace {

using fgur::io::json;

constexpr int kOk = 0;
constexpr int kVerifyFailed = 1;
constexpr int kUsage = 2;
constexpr int kSolverFailed = 3;

void emit(const json& j, const std::string& out) {
    const std::string text = fgur::io::to_text(j);
    if (out.empty()) std::cout << text;
    else fgur::io::write_text_file(out, text);
}

fgur::ComplexMatrix fourier_matrix(std::size_t d) {
    const auto basis = fgur::fourier_basis(d);
    fgur::ComplexMatrix f(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < d; ++k) f.col(static_cast<Eigen::Index>(k)) = basis[k].amplitudes();
    return f;
}

struct GenArgs {
    std::string kind;
    std::size_t d = 2;
    std::size_t d_in = 2;
    std::optional<std::size_t> d_out;
    std::string out;
};

fgur::Scenario generate(const GenArgs& a) {
    const std::size_t d_out = a.d_out.value_or(a.d);
    if (a.kind == "state-mub") return fgur::state_measurement_scenario(fgur::fourier_pair(a.d), {0.5, 0.5});
    if (a.kind == "example1") {
        const auto in = fgur::fourier_pair(a.d_in);
        const auto out = fgur::fourier_pair(d_out);
        return fgur::example1_scenario(in[0][0], in[1][0], out[0], out[1]);
    }
    if (a.kind == "example2") return fgur::example2_scenario(a.d, fgur::fourier_pair(a.d), fgur::fourier_pair(d_out));
    if (a.kind == "meb") {
        const auto bell = fgur::generalized_bell_basis(a.d);
        return fgur::meb_scenario(bell, fgur::rotate_output(bell, fourier_matrix(a.d)));
    }
    if (a.kind == "mub-meb-2qubit") {
        const auto [phi1, phi2] = fgur::mub_meb_pair_2qubit();
        return fgur::meb_scenario(phi1, phi2);
    }
    throw CLI::ValidationError("kind", "unknown scenario kind '" + a.kind + "'");
}

int cmd_gen(const GenArgs& a) {
    if (a.d < 1 || a.d_in < 1 || (a.d_out && *a.d_out < 1)) throw fgur::DimensionError("dimensions must be positive");
    if ((a.kind == "meb" || a.kind == "mub-meb-2qubit") && a.d_out && *a.d_out != a.d)
        throw fgur::DimensionError("MEB scenarios have d_out = d");
    emit(fgur::io::scenario_to_json(generate(a)), a.out);
    return kOk;
}

struct BoundArgs {
    std::string scenario;
    double tol = 1e-6;
    std::uint64_t seed = 0;
    std::size_t cap = 4096;
    bool no_cap = false;
    bool no_trivial = false, no_upper = false, no_exact = false;
    std::string out;
};

int cmd_bound(const BoundArgs& a) {
    const fgur::Scenario s = fgur::io::scenario_from_json(fgur::io::read_json_file(a.scenario));
    const std::size_t count = fgur::combination_count(s);
    if (!a.no_cap && count > a.cap) {
        std::cerr << "fgur bound: " << count << " combinations exceed --cap " << a.cap << " (use --no-cap)\n";
        return kUsage;
    }
    fgur::SolverOptions opts;
    opts.tol = a.tol;
    const fgur::BoundFlags flags{!a.no_trivial, !a.no_upper, !a.no_exact};
    const auto reports = fgur::compute_reports(s, flags, opts);
    emit(fgur::io::report_file_to_json(s, reports), a.out);
    std::size_t failed = 0;
    for (const auto& r : reports) failed += r.error ? 1 : 0;
    if (failed) {
        std::cerr << "fgur bound: solver failed on " << failed << " of " << reports.size() << " combinations\n";
        return kSolverFailed;
    }
    return kOk;
}

struct VerifyArgs {
    std::size_t trials = 20;
    std::uint64_t seed = 1;
    std::size_t samples = 1000;
    double tol = 1e-6;
    bool inject_fault = false;
    std::string out;
};

int cmd_verify(const VerifyArgs& a) {
    if (a.trials == 0) {
        std::cerr << "fgur verify: --trials must be at least 1\n";
        return kUsage;
    }
    fgur::verify::SuiteOptions o;
    o.trials = a.trials;
    o.seed = a.seed;
    o.samples = a.samples;
    o.inject_fault = a.inject_fault;
    o.solver.tol = a.tol;
    const auto results = fgur::verify::run_suite(o);
    json checks = json::array();
    bool all = true;
    for (const auto& r : results) {
        checks.push_back(json{{"name", r.name}, {"pass", r.pass}, {"worst_residual", r.worst_residual},
                              {"cases", r.cases}, {"note", r.note}});
        std::cerr << (r.pass ? "PASS " : "FAIL ") << r.name << "  worst residual " << r.worst_residual << "  ("
                  << r.cases << " cases)\n";
        all = all && r.pass;
    }
    emit(json{{"pass", all}, {"trials", a.trials}, {"seed", a.seed}, {"checks", std::move(checks)}}, a.out);
    return all ? kOk : kVerifyFailed;
}

struct SimulateArgs {
    std::string scenario, channel;
    std::uint64_t n = 100000;
    std::uint64_t seed = 1;
    double tol = 1e-6;
    std::size_t cap = 4096;
    bool no_cap = false;
    std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
    if (a.n == 0) {
        std::cerr << "fgur simulate: --n must be at least 1\n";
        return kUsage;
    }
    const fgur::Scenario s = fgur::io::scenario_from_json(fgur::io::read_json_file(a.scenario));
    const fgur::Channel ch = fgur::io::channel_from_json(fgur::io::read_json_file(a.channel));
    if (ch.d_in() != s.d_in() || ch.d_out() != s.d_out())
        throw fgur::DimensionError("channel dimensions do not match the scenario");
    const std::size_t count = fgur::combination_count(s);
    if (!a.no_cap && count > a.cap) {
        std::cerr << "fgur simulate: " << count << " combinations exceed --cap " << a.cap << " (use --no-cap)\n";
        return kUsage;
    }

    const auto hist = fgur::sample_run(s, ch, a.n, a.seed);
    const double n = static_cast<double>(a.n);
    fgur::SolverOptions opts;
    opts.tol = a.tol;

    json rows = json::array();
    std::size_t violations = 0;
    bool solver_failed = false;
    for (const auto& c : fgur::all_combinations(s)) {
        // one outcome per round and disjoint labels, so the LHS is a Bernoulli mean
        std::uint64_t hits = 0;
        double predicted = 0.0;
        for (std::size_t l = 0; l < s.size(); ++l) {
            if (auto it = hist.find(c[l]); it != hist.end()) hits += it->second;
            predicted += s.weights()[l] * fgur::probability(s.testers()[l].element(c[l]), ch);
        }
        const double empirical = static_cast<double>(hits) / n;
        const double sigma = std::sqrt(std::max(empirical * (1.0 - empirical), 1.0 / n) / n);
        json row{{"combination", c}, {"empirical", empirical}, {"sigma", sigma}, {"predicted", predicted}};
        try {
            const auto ex = fgur::exact_bound(s, c, opts);
            const bool violated = empirical > ex.dual_value + 5.0 * sigma;
            violations += violated ? 1 : 0;
            row["bound"] = ex.dual_value;
            row["violation"] = violated;
        } catch (const fgur::SolverError& e) {
            solver_failed = true;
            row["bound"] = nullptr;
            row["error"] = e.what();
        }
        rows.push_back(std::move(row));
    }
    json histogram = json::object();
    for (const auto& [label, k] : hist) histogram[label] = k;
    emit(json{{"n", a.n},
              {"seed", a.seed},
              {"histogram", std::move(histogram)},
              {"combinations", std::move(rows)},
              {"violations", violations}},
         a.out);
    if (violations) {
        std::cerr << "fgur simulate: " << violations << " combinations exceed their bound by more than 5 sigma\n";
        return kVerifyFailed;
    }
    return solver_failed ? kSolverFailed : kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Outcome-wise probability bounds for channel tests"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "Write a scenario file");
    g->add_option("kind", gen.kind, "Scenario kind")
        ->required()
        ->check(CLI::IsMember({"state-mub", "example1", "example2", "meb", "mub-meb-2qubit"}));
    g->add_option("--d", gen.d, "Dimension (output for state-mub/example1, input otherwise)")->check(CLI::Range(1, 64));
    g->add_option("--d-in", gen.d_in, "Input dimension for example1")->check(CLI::Range(1, 64));
    g->add_option("--d-out", gen.d_out, "Output dimension (defaults to --d)")->check(CLI::Range(1, 64));
    g->add_option("--out", gen.out, "Output file (default stdout)");

    BoundArgs bound;
    auto* b = app.add_subcommand("bound", "Compute a bound report for every outcome combination");
    b->add_option("scenario", bound.scenario, "Scenario JSON file")->required();
    b->add_option("--tol", bound.tol, "Duality-gap tolerance")->check(CLI::PositiveNumber);
    b->add_option("--seed", bound.seed, "Seed (the solver is deterministic; recorded for reproducibility)");
    b->add_option("--cap", bound.cap, "Maximum number of combinations")->check(CLI::PositiveNumber);
    b->add_flag("--no-cap", bound.no_cap, "Disable the combination cap");
    b->add_flag("--no-trivial", bound.no_trivial, "Skip the trivial bound");
    b->add_flag("--no-upper", bound.no_upper, "Skip the operator-norm bound");
    b->add_flag("--no-exact", bound.no_exact, "Skip the exact bound");
    b->add_option("--out", bound.out, "Output file (default stdout)");

    VerifyArgs verify;
    auto* v = app.add_subcommand("verify", "Run the randomized invariant suite");
    v->add_option("--trials", verify.trials, "Cases per check");
    v->add_option("--seed", verify.seed, "RNG seed");
    v->add_option("--samples", verify.samples, "Random channels per solver case")->check(CLI::PositiveNumber);
    v->add_option("--tol", verify.tol, "Duality-gap tolerance")->check(CLI::PositiveNumber);
    v->add_flag("--inject-fault", verify.inject_fault, "Corrupt a POVM fixture (negative control)");
    v->add_option("--out", verify.out, "Output file (default stdout)");

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Sample a scenario against a channel and check the bounds");
    s->add_option("scenario", sim.scenario, "Scenario JSON file")->required();
    s->add_option("channel", sim.channel, "Channel JSON file")->required();
    s->add_option("--n", sim.n, "Number of rounds");
    s->add_option("--seed", sim.seed, "RNG seed");
    s->add_option("--tol", sim.tol, "Duality-gap tolerance")->check(CLI::PositiveNumber);
    s->add_option("--cap", sim.cap, "Maximum number of combinations")->check(CLI::PositiveNumber);
    s->add_flag("--no-cap", sim.no_cap, "Disable the combination cap");
    s->add_option("--out", sim.out, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e, std::cerr, std::cerr);
        return kUsage;
    }

    try {
        if (*g) return cmd_gen(gen);
        if (*b) return cmd_bound(bound);
        if (*v) return cmd_verify(verify);
        if (*s) return cmd_simulate(sim);
    } catch (const fgur::SolverError& e) {
        std::cerr << "fgur: solver failure: " << e.what() << "\n";
        return kSolverFailed;
    } catch (const fgur::InvariantError& e) {
        std::cerr << "fgur: invariant violated: " << e.what() << "\n";
        return kVerifyFailed;
    } catch (const fgur::Error& e) {
        std::cerr << "fgur: " << e.what() << "\n";
        return kUsage;
    } catch (const json::exception& e) {
        std::cerr << "fgur: malformed input: " << e.what() << "\n";
        return kUsage;
    } catch (const CLI::Error& e) {
        std::cerr << "fgur: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
