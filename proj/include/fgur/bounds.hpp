#pragma once

// Trivial, operator-norm and exact bounds on weighted outcome probabilities.
//
// For an outcome combination x = (x_1, ..., x_L) of a scenario:
//   trivial  t(x) = sum_l r_l max_Lambda p_l(x_l | Lambda)
//   upper    c~(x) = d_in * || sum_l r_l T_l(x_l) ||
//   exact    c(x) = max_Lambda sum_l r_l p_l(x_l | Lambda)
// The three are computed independently so that c <= c~ and c <= t are genuine
// cross-checks.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fgur/channel_opt.hpp"
#include "fgur/tester.hpp"

namespace fgur {

/// One outcome label per test, ordered by test index.
using OutcomeCombination = std::vector<std::string>;

namespace detail {

inline void check_combination(const Scenario& s, const OutcomeCombination& c) {
    if (c.size() != s.size())
        throw ValidationError("combination has " + std::to_string(c.size()) + " labels for " +
                              std::to_string(s.size()) + " tests");
}

}  // namespace detail

/// sum_l r_l T_l(x_l)
inline HermitianOperator objective_operator(const Scenario& s, const OutcomeCombination& c) {
    detail::check_combination(s, c);
    const auto n = static_cast<Eigen::Index>(s.d_in() * s.d_out());
    ComplexMatrix m = ComplexMatrix::Zero(n, n);
    for (std::size_t l = 0; l < s.size(); ++l) m += s.weights()[l] * s.testers()[l].element(c[l]).matrix();
    return HermitianOperator::hermitian_part(std::move(m), {s.d_in(), s.d_out()});
}

/// Certified max_Lambda p_l(x | Lambda) of a single tester element.
inline ChannelOptResult single_outcome_maximum(const Scenario& s, std::size_t l, const std::string& label,
                                               const SolverOptions& options = {}) {
    return maximize_over_channels(s.testers().at(l).element(label), s.d_in(), s.d_out(), options);
}

inline double trivial_bound(const Scenario& s, const OutcomeCombination& c, const SolverOptions& options = {}) {
    detail::check_combination(s, c);
    double t = 0.0;
    for (std::size_t l = 0; l < s.size(); ++l) {
        if (s.weights()[l] == 0.0) {
            s.testers()[l].element(c[l]);
            continue;
        }
        t += s.weights()[l] * single_outcome_maximum(s, l, c[l], options).value;
    }
    return t;
}

inline double upper_bound(const Scenario& s, const OutcomeCombination& c) {
    return static_cast<double>(s.d_in()) * operator_norm(objective_operator(s, c));
}

struct ExactBound {
    double value;       // certified primal value
    double dual_value;  // certified upper estimate
    double gap;
    Channel optimizer;
};

inline ExactBound exact_bound(const Scenario& s, const OutcomeCombination& c, const SolverOptions& options = {}) {
    auto r = maximize_over_channels(objective_operator(s, c), s.d_in(), s.d_out(), options);
    return ExactBound{r.value, r.dual_value, r.gap, std::move(r.optimizer)};
}

/// Certified max of sum_l r_l sum_{x in X_l} p_l(x | Lambda) over all channels.
inline ExactBound subset_bound(const Scenario& s, const std::vector<std::vector<std::string>>& subsets,
                               const SolverOptions& options = {}) {
    if (subsets.size() != s.size()) throw ValidationError("subset_bound: one subset per test is required");
    const auto n = static_cast<Eigen::Index>(s.d_in() * s.d_out());
    ComplexMatrix m = ComplexMatrix::Zero(n, n);
    for (std::size_t l = 0; l < s.size(); ++l) {
        std::set<std::string> seen;
        for (const auto& label : subsets[l]) {
            if (!seen.insert(label).second) throw ValidationError("subset_bound: duplicate label '" + label + "'");
            m += s.weights()[l] * s.testers()[l].element(label).matrix();
        }
    }
    auto r = maximize_over_channels(HermitianOperator::hermitian_part(std::move(m), {s.d_in(), s.d_out()}), s.d_in(),
                                    s.d_out(), options);
    return ExactBound{r.value, r.dual_value, r.gap, std::move(r.optimizer)};
}

struct Tightness {
    bool tight = false;
    bool degenerate = false;        // top eigenvalue has multiplicity > 1
    std::size_t eigenspace_dim = 0;
    double marginal_defect = 0.0;   // smallest || tr_out |v><v| - I/d_in || over the checked vectors
};

/// Sufficient condition for c = c~: a top eigenvector of the objective has a
/// maximally mixed input marginal. With a degenerate top eigenspace every
/// basis vector returned by the eigensolver is checked.
inline Tightness tightness_check(const Scenario& s, const OutcomeCombination& c) {
    const HermitianOperator obj = objective_operator(s, c);
    const Eigensystem es = eig_hermitian(obj);
    const auto n = es.values.size();
    const double top = es.values(n - 1);
    const double tie = 1e-9 * std::max(1.0, std::abs(top));
    const auto d_in = s.d_in();
    const ComplexMatrix mixed = detail::identity(d_in) / static_cast<double>(d_in);

    Tightness out;
    out.marginal_defect = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = n - 1; k >= 0 && top - es.values(k) <= tie; --k) {
        ++out.eigenspace_dim;
        const ComplexVector& v = es.vectors[static_cast<std::size_t>(k)].amplitudes();
        const ComplexMatrix marginal = trace_right(v * v.adjoint(), d_in, s.d_out());
        const double defect = std::max(std::abs(min_eigenvalue(detail::herm(marginal - mixed))),
                                       std::abs(max_eigenvalue(detail::herm(marginal - mixed))));
        out.marginal_defect = std::min(out.marginal_defect, defect);
    }
    out.degenerate = out.eigenspace_dim > 1;
    out.tight = out.marginal_defect <= 1e-8;
    return out;
}

/// Tolerance for comparing solver output with a closed form.
inline double agreement_tolerance(double gap) { return std::max(1e-6, 10.0 * gap); }

struct QubitMebOptimum {
    ComplexMatrix unitary;
    double value;                // (1/2) p_1 + (1/2) p_2 for the unitary channel
    Complex hs_inner;            // tr[U_1^dagger U_2]
    bool hs_orthogonal;
    double unitarity_residual;
    double eigenvector_residual; // 0 in the orthogonal branch
};

/// Optimal unitary for two tests with P_+ input and qubit MEB measurements:
///   U = (U_1 + <U_2,U_1>/|<U_1,U_2>| U_2) / sqrt(2 + |<U_1,U_2>|),  or U_1 if <U_1,U_2> = 0,
/// with <A,B> = tr[A^dagger B]. Its value is (1/2)(1 + |<Psi_1|Psi_2>|).
inline QubitMebOptimum qubit_meb_optimizer(const KetVector& psi1, const KetVector& psi2) {
    if (psi1.size() != psi2.size()) throw DimensionError("qubit_meb_optimizer: kets differ in size");
    if (psi1.size() != 4) throw UnsupportedError("qubit_meb_optimizer: only d = 2 is supported");
    for (const auto* psi : {&psi1, &psi2}) {
        if (!psi->is_normalized(1e-9)) throw ValidationError("qubit_meb_optimizer: ket is not normalized");
        const ComplexVector& a = psi->amplitudes();
        const ComplexMatrix rho = a * a.adjoint();
        const ComplexMatrix half = detail::identity(2) / 2.0;
        if (max_abs_diff(trace_right(rho, 2, 2), half) > tolerance::equality ||
            max_abs_diff(trace_left(rho, 2, 2), half) > tolerance::equality)
            throw ValidationError("qubit_meb_optimizer: ket is not maximally entangled");
    }
    const ComplexMatrix u1 = generator_of(psi1);
    const ComplexMatrix u2 = generator_of(psi2);
    const Complex hs = (u1.adjoint() * u2).trace();

    QubitMebOptimum out{u1, 0.0, hs, std::abs(hs) <= 1e-12, 0.0, 0.0};
    if (!out.hs_orthogonal) {
        const double a = std::abs(hs);
        out.unitary = (u1 + (std::conj(hs) / a) * u2) / std::sqrt(2.0 + a);
    }
    out.unitarity_residual = max_abs_diff(out.unitary.adjoint() * out.unitary, detail::identity(2));
    if (out.unitarity_residual > tolerance::equality)
        throw InvariantError("qubit_meb_optimizer: optimizer is not unitary (residual " +
                             std::to_string(out.unitarity_residual) + ")");

    const KetVector chi = ket_from_generator(out.unitary);
    if (!out.hs_orthogonal) {
        const Complex ov = psi1.inner(psi2);
        const double a = std::abs(ov);
        const ComplexVector expected =
            (psi1.amplitudes() + (std::conj(ov) / a) * psi2.amplitudes()) / std::sqrt(2.0 * (1.0 + a));
        out.eigenvector_residual = max_abs_diff(chi.amplitudes(), expected);
        if (out.eigenvector_residual > tolerance::equality)
            throw InvariantError("qubit_meb_optimizer: eigenvector identity fails (residual " +
                                 std::to_string(out.eigenvector_residual) + ")");
    }
    const Channel ch = Channel::from_unitary(out.unitary);
    const HermitianOperator objective = 0.25 * (psi1.projector() + psi2.projector());
    out.value = expectation(HermitianOperator(objective.matrix(), {2, 2}), ch.choi());
    return out;
}

namespace detail {

inline void require_orthonormal(const std::vector<KetVector>& basis, const char* where) {
    if (basis.empty()) throw ValidationError(std::string(where) + ": empty basis");
    const auto d = basis.front().size();
    if (basis.size() != d) throw ValidationError(std::string(where) + ": basis must have d vectors");
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const Complex g = basis[i].inner(basis[j]);
            if (std::abs(g - Complex(i == j ? 1.0 : 0.0)) > tolerance::equality)
                throw ValidationError(std::string(where) + ": basis is not orthonormal");
        }
}

}  // namespace detail

/// b(i, j) = (1/2)(1 + |<e1_i|e2_j>|) for two rank-one PVMs mixed with weights (1/2, 1/2).
inline std::vector<std::vector<double>> closed_form_state_bound(const std::vector<KetVector>& basis1,
                                                                const std::vector<KetVector>& basis2,
                                                                const std::vector<double>& weights = {0.5, 0.5}) {
    if (weights.size() != 2 || std::abs(weights[0] - 0.5) > 1e-12 || std::abs(weights[1] - 0.5) > 1e-12)
        throw UnsupportedError("closed_form_state_bound: the closed form holds for weights (1/2, 1/2)");
    detail::require_orthonormal(basis1, "closed_form_state_bound");
    detail::require_orthonormal(basis2, "closed_form_state_bound");
    if (basis1.size() != basis2.size()) throw DimensionError("closed_form_state_bound: bases differ in dimension");
    std::vector<std::vector<double>> table(basis1.size(), std::vector<double>(basis2.size()));
    for (std::size_t i = 0; i < basis1.size(); ++i)
        for (std::size_t j = 0; j < basis2.size(); ++j) table[i][j] = 0.5 * (1.0 + std::abs(basis1[i].inner(basis2[j])));
    return table;
}

/// (1/2)(1 + 1/sqrt(d)), the value for a pair of mutually unbiased bases.
inline double mub_state_bound(std::size_t d) {
    if (d == 0) throw DimensionError("mub_state_bound: d must be positive");
    return 0.5 * (1.0 + 1.0 / std::sqrt(static_cast<double>(d)));
}

struct BoundFlags {
    bool trivial = true;
    bool upper = true;
    bool exact = true;
};

struct BoundReport {
    OutcomeCombination combination;
    std::optional<double> trivial;
    std::optional<double> upper;
    std::optional<double> exact;
    std::optional<double> dual;  // certified upper estimate of the exact bound
    std::optional<double> gap;
    bool tradeoff = false;
    bool tight = false;
    bool degenerate = false;
    std::optional<Channel> optimizer;
    std::optional<std::string> error;  // set when the solver failed for this combination
};

/// Caches max_Lambda p_l(x | Lambda) per outcome label across combinations.
class TrivialCache {
public:
    struct Entry {
        double value;
        double gap;
    };

    const Entry& get(const Scenario& s, std::size_t l, const std::string& label, const SolverOptions& options) {
        auto it = cache_.find(label);
        if (it == cache_.end()) {
            const auto r = single_outcome_maximum(s, l, label, options);
            it = cache_.emplace(label, Entry{r.value, r.gap}).first;
        }
        return it->second;
    }

private:
    std::map<std::string, Entry> cache_;
};

/// Computes the requested bounds for one combination and cross-checks them.
inline BoundReport compute_report(const Scenario& s, const OutcomeCombination& c, const BoundFlags& flags,
                                  const SolverOptions& options, TrivialCache& cache) {
    detail::check_combination(s, c);
    BoundReport r;
    r.combination = c;
    double trivial_slack = 0.0;
    if (flags.trivial) {
        double t = 0.0;
        for (std::size_t l = 0; l < s.size(); ++l) {
            if (s.weights()[l] == 0.0) continue;
            const auto& e = cache.get(s, l, c[l], options);
            t += s.weights()[l] * e.value;
            trivial_slack += s.weights()[l] * e.gap;
        }
        r.trivial = t;
    }
    if (flags.upper) r.upper = upper_bound(s, c);
    const Tightness tight = tightness_check(s, c);
    r.tight = tight.tight;
    r.degenerate = tight.degenerate;
    if (flags.exact) {
        auto ex = exact_bound(s, c, options);
        r.exact = ex.value;
        r.dual = ex.dual_value;
        r.gap = ex.gap;
        r.optimizer = std::move(ex.optimizer);
    }

    if (r.exact && r.trivial) r.tradeoff = *r.dual < *r.trivial - 1e-8;
    else if (r.upper && r.trivial) r.tradeoff = *r.upper < *r.trivial - 1e-8;

    if (r.exact && r.upper && *r.exact > *r.upper + 1e-8)
        throw InvariantError("exact bound exceeds the operator-norm bound");
    if (r.exact && r.trivial && *r.exact > *r.trivial + 1e-8 + trivial_slack)
        throw InvariantError("exact bound exceeds the trivial bound");
    if (r.exact && r.upper && r.tight && std::abs(*r.exact - *r.upper) > agreement_tolerance(*r.gap))
        throw InvariantError("tightness condition holds but exact and upper bounds differ");
    return r;
}

inline std::size_t combination_count(const Scenario& s) {
    std::size_t n = 1;
    for (const auto& t : s.tests()) n *= t.povm().size();
    return n;
}

/// Every combination in prod_l Omega_l, sorted lexicographically by labels.
inline std::vector<OutcomeCombination> all_combinations(const Scenario& s) {
    std::vector<OutcomeCombination> out{{}};
    for (std::size_t l = 0; l < s.size(); ++l) {
        std::vector<OutcomeCombination> next;
        for (const auto& prefix : out)
            for (const auto& label : s.labels(l)) {
                auto c = prefix;
                c.push_back(label);
                next.push_back(std::move(c));
            }
        out = std::move(next);
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Reports for every combination; solver failures are recorded per report.
inline std::vector<BoundReport> compute_reports(const Scenario& s, const BoundFlags& flags,
                                                const SolverOptions& options = {}) {
    TrivialCache cache;
    std::vector<BoundReport> out;
    for (const auto& c : all_combinations(s)) {
        try {
            out.push_back(compute_report(s, c, flags, options, cache));
        } catch (const SolverError& e) {
            BoundReport failed;
            failed.combination = c;
            failed.error = e.what();
            out.push_back(std::move(failed));
        }
    }
    return out;
}

}  // namespace fgur
