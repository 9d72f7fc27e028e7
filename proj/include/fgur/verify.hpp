#pragma once

// Randomized checks of the structural results (ordering of the bounds, the
// maximally-mixed-marginal bound, MEB closed forms, tester normalization, the
// generalized Born rule, solver certificates). Each check returns the worst
// residual it saw so the CLI can print a summary.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fgur/bounds.hpp"
#include "fgur/channel_opt.hpp"
#include "fgur/random.hpp"
#include "fgur/scenarios.hpp"
#include "fgur/tester.hpp"

namespace fgur::verify {

struct CheckResult {
    std::string name;
    bool pass = true;
    double worst_residual = 0.0;
    std::size_t cases = 0;
    std::string note;

    void record(double residual, bool ok) {
        ++cases;
        worst_residual = std::max(worst_residual, residual);
        pass = pass && ok;
    }
};

struct SuiteOptions {
    std::size_t trials = 20;
    std::uint64_t seed = 1;
    bool inject_fault = false;  // corrupt one POVM in the normalization fixtures
    std::size_t samples = 1000; // random channels per solver-certificate case
    SolverOptions solver;
};

// ---- fixtures ---------------------------------------------------------------

inline std::size_t uniform(random::Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Random state on anc (x) in; with `maximally_mixed` its in-marginal is I/d_in.
inline HermitianOperator random_input(random::Rng& rng, std::size_t d_anc, std::size_t d_in, bool maximally_mixed) {
    HermitianOperator rho = random::random_state(rng, {d_anc, d_in});
    if (!maximally_mixed) return rho;
    const ComplexMatrix marginal = trace_left(rho.matrix(), d_anc, d_in);
    const ComplexMatrix w = kron(ComplexMatrix::Identity(static_cast<Eigen::Index>(d_anc), static_cast<Eigen::Index>(d_anc)),
                                 random::inverse_sqrt_psd(marginal));
    return HermitianOperator::hermitian_part(w * rho.matrix() * w / static_cast<double>(d_in), {d_anc, d_in});
}

/// Random state whose in-marginal is far from I/d_in (requires d_in >= 2).
inline HermitianOperator biased_input(random::Rng& rng, std::size_t d_anc, std::size_t d_in) {
    const HermitianOperator mixed = random_input(rng, d_anc, d_in, true);
    const HermitianOperator skew = kron((1.0 / static_cast<double>(d_anc)) * HermitianOperator::identity({d_anc}),
                                        KetVector::basis({d_in}, 0).projector());
    return HermitianOperator::hermitian_part(0.5 * (mixed.matrix() + skew.matrix()), {d_anc, d_in});
}

inline Test make_test(const HermitianOperator& rho, const std::vector<HermitianOperator>& effects, std::size_t l,
                      std::size_t d_anc, std::size_t d_in, std::size_t d_out) {
    std::vector<LabeledEffect> povm;
    for (std::size_t i = 0; i < effects.size(); ++i) povm.push_back({outcome_label(l, i), effects[i]});
    return Test(rho, std::move(povm), d_anc, d_in, d_out);
}

inline Test random_test(random::Rng& rng, std::size_t l, std::size_t d_anc, std::size_t d_in, std::size_t d_out,
                        std::size_t outcomes, bool maximally_mixed = false) {
    return make_test(random_input(rng, d_anc, d_in, maximally_mixed), random::random_povm(rng, {d_anc, d_out}, outcomes),
                     l, d_anc, d_in, d_out);
}

inline std::vector<double> random_weights(random::Rng& rng, std::size_t n) {
    std::exponential_distribution<double> ex(1.0);
    std::vector<double> w(n);
    double total = 0.0;
    for (auto& x : w) total += (x = ex(rng) + 1e-3);
    for (auto& x : w) x /= total;
    // make the sum exactly 1 within the Scenario check
    double rest = 1.0;
    for (std::size_t k = 0; k + 1 < n; ++k) rest -= w[k];
    w.back() = rest;
    return w;
}

struct ScenarioShape {
    std::size_t tests, d_anc, d_in, d_out, outcomes;
};

inline ScenarioShape random_shape(random::Rng& rng, std::size_t max_dim = 3) {
    return {uniform(rng, 2, 3), uniform(rng, 1, 2), uniform(rng, 1, max_dim), uniform(rng, 1, max_dim), uniform(rng, 2, 3)};
}

inline Scenario random_scenario(random::Rng& rng, const ScenarioShape& shape, bool maximally_mixed = false) {
    std::vector<Test> tests;
    for (std::size_t l = 0; l < shape.tests; ++l)
        tests.push_back(random_test(rng, l, shape.d_anc, shape.d_in, shape.d_out, shape.outcomes, maximally_mixed));
    return Scenario(std::move(tests), random_weights(rng, shape.tests));
}

inline OutcomeCombination random_combination(random::Rng& rng, const Scenario& s) {
    OutcomeCombination c;
    for (std::size_t l = 0; l < s.size(); ++l) {
        const auto labels = s.labels(l);
        c.push_back(labels[uniform(rng, 0, labels.size() - 1)]);
    }
    return c;
}

inline Channel random_channel(random::Rng& rng, std::size_t d_in, std::size_t d_out) {
    switch (uniform(rng, 0, 2)) {
        case 0:
            if (d_in == d_out) return random::random_unitary_channel(rng, d_in);
            [[fallthrough]];
        case 1: {
            const std::size_t k_min = (d_in + d_out - 1) / d_out;
            return random::random_kraus_channel(rng, d_in, d_out, uniform(rng, k_min, k_min + 3));
        }
        default: return Channel::constant(d_in, random::random_state(rng, {d_out}));
    }
}

inline MEB random_meb(random::Rng& rng, std::size_t d) {
    return rotate_output(generalized_bell_basis(d), random::random_unitary(rng, d));
}

/// Largest entry of sum_x d_in T(x) - I over the tester built from (rho, effects),
/// without validating the effects (so a corrupted POVM can be fed in).
inline double completeness_residual(const HermitianOperator& rho, const std::vector<HermitianOperator>& effects,
                                    std::size_t d_anc, std::size_t d_in, std::size_t d_out) {
    const auto dec = detail::spectral_decomposition(rho);
    const auto n = static_cast<Eigen::Index>(d_in * d_out);
    ComplexMatrix sum = ComplexMatrix::Zero(n, n);
    for (const auto& e : effects) sum += detail::dual_map(dec, e.matrix(), d_anc, d_in, d_out);
    return max_abs_diff(static_cast<double>(d_in) * sum, ComplexMatrix::Identity(n, n));
}

inline double marginal_residual(const HermitianOperator& rho, std::size_t d_anc, std::size_t d_in) {
    const auto di = static_cast<Eigen::Index>(d_in);
    return max_abs_diff(trace_left(rho.matrix(), d_anc, d_in),
                        ComplexMatrix::Identity(di, di) / static_cast<double>(d_in));
}

// ---- checks -----------------------------------------------------------------

/// tr[T(x) J] against physically propagating rho through I (x) Lambda.
inline CheckResult check_born_rule(random::Rng& rng, std::size_t trials) {
    CheckResult r;
    r.name = "born_rule";
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t d_anc = uniform(rng, 1, 3), d_in = uniform(rng, 1, 3), d_out = uniform(rng, 1, 3);
        const Test test = random_test(rng, 0, d_anc, d_in, d_out, uniform(rng, 2, 4));
        const Tester tester = tester_from_test(test);
        const Channel ch = random_channel(rng, d_in, d_out);
        const ComplexMatrix out = ch.apply_extended(test.input_state().matrix(), d_anc);
        double diff = 0.0, total = 0.0;
        for (const auto& e : test.povm()) {
            const double via_tester = expectation(tester.element(e.label), ch.choi());
            const double direct = (e.effect.matrix() * out).trace().real();
            diff = std::max(diff, std::abs(via_tester - direct));
            total += via_tester;
        }
        r.record(std::max(diff, std::abs(total - 1.0)), diff <= 1e-10 && std::abs(total - 1.0) <= 1e-9);
    }
    r.note = "tester vs direct <= 1e-10, probabilities sum to 1 within 1e-9";
    return r;
}

/// d_in T is a POVM exactly when the input marginal is maximally mixed, checked both ways.
inline CheckResult check_tester_normalization(random::Rng& rng, std::size_t trials, bool inject_fault) {
    CheckResult r;
    r.name = "tester_normalization";
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t d_anc = uniform(rng, 1, 3), d_in = uniform(rng, 2, 3), d_out = uniform(rng, 1, 3);
        auto effects = random::random_povm(rng, {d_anc, d_out}, uniform(rng, 2, 4));

        const HermitianOperator good = random_input(rng, d_anc, d_in, true);
        auto used = effects;
        if (inject_fault && t == 0) used.front() = 1.25 * used.front();
        const double pos = completeness_residual(good, used, d_anc, d_in, d_out);
        const bool pos_marginal = marginal_residual(good, d_anc, d_in) <= 1e-9;
        r.record(pos, pos_marginal && pos <= 1e-9);

        const HermitianOperator bad = biased_input(rng, d_anc, d_in);
        const double neg = completeness_residual(bad, effects, d_anc, d_in, d_out);
        const bool neg_marginal = marginal_residual(bad, d_anc, d_in) <= 1e-9;
        // converse: the residual must be visible when the marginal is off
        r.record(0.0, !neg_marginal && neg > 1e-9);
    }
    r.note = "worst residual over maximally-mixed fixtures";
    if (inject_fault) r.note += "; faulty POVM injected";
    return r;
}

/// exact <= upper, and equal when the eigenvector condition holds.
inline CheckResult check_ordering(random::Rng& rng, std::size_t trials, const SolverOptions& opts) {
    CheckResult r;
    r.name = "upper_bound_ordering";
    std::size_t fired = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        const Scenario s = random_scenario(rng, random_shape(rng));
        const auto c = random_combination(rng, s);
        const double upper = upper_bound(s, c);
        const auto ex = exact_bound(s, c, opts);
        double residual = std::max(0.0, ex.value - upper);
        bool ok = ex.value <= upper + 1e-8;
        if (tightness_check(s, c).tight) {
            ++fired;
            residual = std::max(residual, std::abs(ex.value - upper));
            ok = ok && std::abs(ex.value - upper) <= agreement_tolerance(ex.gap);
        }
        r.record(residual, ok);
    }
    r.note = "tightness condition held in " + std::to_string(fired) + " cases";
    return r;
}

/// upper <= 1 for maximally mixed marginals; >= 1 for a pure input.
inline CheckResult check_maximally_mixed(random::Rng& rng, std::size_t trials) {
    CheckResult r;
    r.name = "maximally_mixed_upper";
    for (std::size_t t = 0; t < trials; ++t) {
        const Scenario s = random_scenario(rng, random_shape(rng), true);
        const double upper = upper_bound(s, random_combination(rng, s));
        r.record(std::max(0.0, upper - 1.0), upper <= 1.0 + 1e-9);
    }
    for (std::size_t t = 0; t < std::max<std::size_t>(1, trials / 10); ++t) {
        const std::size_t d_out = uniform(rng, 2, 3);
        const Basis b1 = computational_basis(d_out);
        Basis b2;
        const ComplexMatrix v = random::random_unitary(rng, d_out);
        for (Eigen::Index k = 0; k < v.cols(); ++k) b2.emplace_back(ComplexVector(v.col(k)), Dims{d_out});
        const Scenario s = example1_scenario(random::random_ket(rng, {2}), random::random_ket(rng, {2}), b1, b2);
        const double upper = upper_bound(s, random_combination(rng, s));
        r.record(0.0, upper >= 1.0 - 1e-9);
    }
    r.note = "includes pure-input negative controls (upper >= 1)";
    return r;
}

/// For MEB tests with P_+ inputs: t = 1 and upper = (1 + |<Psi_1|Psi_2>|)/2.
inline CheckResult check_meb_upper(random::Rng& rng, std::size_t trials, const SolverOptions& opts) {
    CheckResult r;
    r.name = "meb_upper_closed_form";
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t d = uniform(rng, 2, 3);
        const MEB m1 = random_meb(rng, d), m2 = random_meb(rng, d);
        const std::size_t i = uniform(rng, 0, d * d - 1), j = uniform(rng, 0, d * d - 1);
        const Scenario s = meb_scenario(m1, m2);
        const OutcomeCombination c{outcome_label(0, i), outcome_label(1, j)};
        const double closed = 0.5 * (1.0 + std::abs(m1.kets()[i].inner(m2.kets()[j])));
        const double upper = upper_bound(s, c);
        const double trivial = trivial_bound(s, c, opts);
        const double residual = std::max(std::abs(upper - closed), std::abs(trivial - 1.0));
        r.record(residual, std::abs(upper - closed) <= 1e-9 && std::abs(trivial - 1.0) <= 1e-6);
    }
    return r;
}

/// d = 2: exact = (1 + |<Psi_1|Psi_2>|)/2, attained by the explicit unitary.
inline CheckResult check_qubit_meb(random::Rng& rng, std::size_t trials, const SolverOptions& opts) {
    CheckResult r;
    r.name = "qubit_meb_optimum";
    for (std::size_t t = 0; t < trials; ++t) {
        const MEB m1 = random_meb(rng, 2), m2 = random_meb(rng, 2);
        const std::size_t i = uniform(rng, 0, 3), j = uniform(rng, 0, 3);
        const Scenario s = meb_scenario(m1, m2);
        const auto ex = exact_bound(s, {outcome_label(0, i), outcome_label(1, j)}, opts);
        const double closed = 0.5 * (1.0 + std::abs(m1.kets()[i].inner(m2.kets()[j])));
        const auto opt = qubit_meb_optimizer(m1.kets()[i], m2.kets()[j]);
        const double residual = std::max({std::abs(ex.value - closed), std::abs(opt.value - closed),
                                          opt.unitarity_residual, opt.eigenvector_residual});
        r.record(residual, std::abs(ex.value - closed) <= agreement_tolerance(ex.gap) &&
                               std::abs(opt.value - closed) <= 1e-9 && opt.unitarity_residual <= 1e-9);
    }
    return r;
}

/// Certified gap, dual feasibility, and no random channel beating the certificate.
inline CheckResult check_solver(random::Rng& rng, std::size_t trials, std::size_t samples, const SolverOptions& opts) {
    CheckResult r;
    r.name = "solver_certificate";
    static const std::pair<std::size_t, std::size_t> shapes[] = {{2, 2}, {1, 4}, {4, 1}, {2, 3}, {3, 2}, {2, 4},
                                                                 {4, 2}, {3, 3}, {2, 5}, {5, 2}, {3, 4}, {4, 3},
                                                                 {2, 6}, {6, 2}, {2, 7}, {7, 2}, {4, 4}, {2, 8}};
    for (std::size_t t = 0; t < trials; ++t) {
        const auto [d_in, d_out] = shapes[uniform(rng, 0, std::size(shapes) - 1)];
        const HermitianOperator m = random::random_psd(rng, {d_in, d_out}, uniform(rng, 1, d_in * d_out));
        const auto res = maximize_over_channels(m, d_in, d_out, opts);
        const auto dual = dual_bound(m, res.dual_certificate, d_out);
        const auto sampled = random_channel_lower_bound(m, d_in, d_out, samples, rng());
        const double excess = std::max(0.0, sampled.value - res.dual_value);
        r.record(std::max({res.gap, -std::min(0.0, dual.min_eigenvalue), excess}),
                 res.gap <= opts.tol && dual.feasible && excess <= 1e-8);
    }
    return r;
}

inline std::vector<CheckResult> run_suite(const SuiteOptions& o) {
    if (o.trials == 0) throw ValidationError("verify: trials must be at least 1");
    random::Rng rng(o.seed);
    std::vector<CheckResult> out;
    out.push_back(check_born_rule(rng, o.trials));
    out.push_back(check_tester_normalization(rng, o.trials, o.inject_fault));
    out.push_back(check_ordering(rng, o.trials, o.solver));
    out.push_back(check_maximally_mixed(rng, o.trials));
    out.push_back(check_meb_upper(rng, o.trials, o.solver));
    out.push_back(check_qubit_meb(rng, o.trials, o.solver));
    out.push_back(check_solver(rng, o.trials, o.samples, o.solver));
    return out;
}

}  // namespace fgur::verify
