#pragma once

// Tests of quantum channels and their tester (process POVM) representation.
//
// Spaces: input states live on anc (x) in, POVM effects on anc (x) out,
// tester elements and Choi operators on in (x) out.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fgur/linalg.hpp"

namespace fgur {

struct LabeledEffect {
    std::string label;
    HermitianOperator effect;
};

/// A test of a channel: an input state on anc (x) in and a POVM on anc (x) out.
class Test {
public:
    Test(HermitianOperator input_state, std::vector<LabeledEffect> povm, std::size_t d_anc, std::size_t d_in,
         std::size_t d_out)
        : input_(retag(std::move(input_state), {d_anc, d_in}, "input_state")),
          povm_(std::move(povm)),
          d_anc_(d_anc),
          d_in_(d_in),
          d_out_(d_out) {
        if (d_anc == 0 || d_in == 0 || d_out == 0) throw DimensionError("Test: dimensions must be positive");
        require_valid(validate_state(input_), "Test input_state");
        std::set<std::string> seen;
        std::vector<HermitianOperator> effects;
        for (auto& e : povm_) {
            e.effect = retag(std::move(e.effect), {d_anc, d_out}, "POVM effect");
            if (!seen.insert(e.label).second) throw ValidationError("Test: duplicate outcome label '" + e.label + "'");
            effects.push_back(e.effect);
        }
        require_valid(validate_povm(effects), "Test POVM");
    }

    const HermitianOperator& input_state() const noexcept { return input_; }
    const std::vector<LabeledEffect>& povm() const noexcept { return povm_; }
    std::size_t d_anc() const noexcept { return d_anc_; }
    std::size_t d_in() const noexcept { return d_in_; }
    std::size_t d_out() const noexcept { return d_out_; }

    const HermitianOperator& effect(const std::string& label) const {
        for (const auto& e : povm_)
            if (e.label == label) return e.effect;
        throw ValidationError("Test: unknown outcome label '" + label + "'");
    }

private:
    static HermitianOperator retag(HermitianOperator op, Dims dims, const char* what) {
        if (op.size() != dims_product(dims))
            throw DimensionError(std::string("Test: ") + what + " has size " + std::to_string(op.size()) +
                                 ", expected " + std::to_string(dims_product(dims)));
        return HermitianOperator(op.matrix(), std::move(dims));
    }

    HermitianOperator input_;
    std::vector<LabeledEffect> povm_;
    std::size_t d_anc_, d_in_, d_out_;
};

/// Family {T(x)} of positive operators on in (x) out with sum = marginal (x) I_out.
class Tester {
public:
    Tester(std::vector<LabeledEffect> elements, HermitianOperator marginal, std::size_t d_in, std::size_t d_out)
        : elements_(std::move(elements)), marginal_(std::move(marginal)), d_in_(d_in), d_out_(d_out) {
        if (marginal_.size() != d_in) throw DimensionError("Tester: marginal must act on the input space");
        require_valid(validate_state(basis_transpose(marginal_)), "Tester marginal");
        const auto n = static_cast<Eigen::Index>(d_in * d_out);
        ComplexMatrix sum = ComplexMatrix::Zero(n, n);
        for (const auto& e : elements_) {
            if (e.effect.size() != d_in * d_out) throw DimensionError("Tester: element size mismatch");
            const double lo = min_eigenvalue(e.effect.matrix());
            if (lo < -tolerance::psd)
                throw PositivityError("Tester: element '" + e.label + "' has eigenvalue " + std::to_string(lo));
            sum += e.effect.matrix();
        }
        const ComplexMatrix expected = kron(marginal_.matrix(), ComplexMatrix::Identity(
                                                                    static_cast<Eigen::Index>(d_out),
                                                                    static_cast<Eigen::Index>(d_out)));
        const double defect = max_abs_diff(sum, expected);
        if (defect > tolerance::equality)
            throw ValidationError("Tester: elements do not sum to marginal (x) I (residual " + std::to_string(defect) +
                                  ")");
    }

    const std::vector<LabeledEffect>& elements() const noexcept { return elements_; }
    const HermitianOperator& marginal() const noexcept { return marginal_; }
    std::size_t d_in() const noexcept { return d_in_; }
    std::size_t d_out() const noexcept { return d_out_; }

    const HermitianOperator& element(const std::string& label) const {
        for (const auto& e : elements_)
            if (e.label == label) return e.effect;
        throw ValidationError("Tester: unknown outcome label '" + label + "'");
    }

private:
    std::vector<LabeledEffect> elements_;
    HermitianOperator marginal_;
    std::size_t d_in_, d_out_;
};

enum class ChannelKind { unitary, kraus, constant, choi };

inline const char* to_string(ChannelKind k) {
    switch (k) {
        case ChannelKind::unitary: return "unitary";
        case ChannelKind::kraus: return "kraus";
        case ChannelKind::constant: return "constant";
        case ChannelKind::choi: return "choi";
    }
    return "choi";
}

/// |K>> with entry (i, o) = K(o, i), so that |K>><<K| = (I (x) K.K^dagger)(P'_+).
inline ComplexVector choi_vector(const ComplexMatrix& k) {
    const auto d_out = k.rows();
    const auto d_in = k.cols();
    ComplexVector v(d_in * d_out);
    for (Eigen::Index i = 0; i < d_in; ++i)
        for (Eigen::Index o = 0; o < d_out; ++o) v(i * d_out + o) = k(o, i);
    return v;
}

/// A channel in Choi form, J = (I (x) Lambda)(P'_+) on in (x) out, with optional provenance.
class Channel {
public:
    static Channel from_unitary(const ComplexMatrix& u) {
        if (u.rows() != u.cols() || u.rows() == 0) throw DimensionError("channel_from_unitary: U must be square");
        const auto d = u.rows();
        const double defect = max_abs_diff(u.adjoint() * u, ComplexMatrix::Identity(d, d));
        if (defect > tolerance::equality)
            throw ValidationError("channel_from_unitary: U is not unitary (residual " + std::to_string(defect) + ")");
        const ComplexVector v = choi_vector(u);
        const auto dd = static_cast<std::size_t>(d);
        return Channel(HermitianOperator::hermitian_part(v * v.adjoint(), {dd, dd}), dd, dd, ChannelKind::unitary, {u});
    }

    static Channel from_kraus(const std::vector<ComplexMatrix>& kraus) {
        if (kraus.empty()) throw ValidationError("channel_from_kraus: no Kraus operators");
        const auto d_out = kraus.front().rows();
        const auto d_in = kraus.front().cols();
        if (d_out == 0 || d_in == 0) throw DimensionError("channel_from_kraus: empty Kraus operator");
        ComplexMatrix completeness = ComplexMatrix::Zero(d_in, d_in);
        ComplexMatrix j = ComplexMatrix::Zero(d_in * d_out, d_in * d_out);
        for (const auto& k : kraus) {
            if (k.rows() != d_out || k.cols() != d_in) throw DimensionError("channel_from_kraus: shape mismatch");
            completeness += k.adjoint() * k;
            const ComplexVector v = choi_vector(k);
            j += v * v.adjoint();
        }
        const double defect = max_abs_diff(completeness, ComplexMatrix::Identity(d_in, d_in));
        if (defect > tolerance::equality)
            throw ValidationError("channel_from_kraus: sum K^dagger K != I (residual " + std::to_string(defect) + ")");
        const auto di = static_cast<std::size_t>(d_in), dout = static_cast<std::size_t>(d_out);
        return Channel(HermitianOperator::hermitian_part(std::move(j), {di, dout}), di, dout, ChannelKind::kraus,
                       kraus);
    }

    /// Replacement channel: every input is mapped to `sigma`.
    static Channel constant(std::size_t d_in, const HermitianOperator& sigma) {
        if (d_in == 0) throw DimensionError("channel_constant: d_in must be positive");
        require_valid(validate_state(sigma), "channel_constant sigma");
        const auto d_out = sigma.size();
        HermitianOperator j = HermitianOperator::hermitian_part(
            kron(ComplexMatrix::Identity(static_cast<Eigen::Index>(d_in), static_cast<Eigen::Index>(d_in)),
                 sigma.matrix()),
            {d_in, d_out});
        return Channel(std::move(j), d_in, d_out, ChannelKind::constant, {sigma.matrix()});
    }

    static Channel from_choi(const HermitianOperator& choi, std::size_t d_in, std::size_t d_out) {
        if (d_in == 0 || d_out == 0 || choi.size() != d_in * d_out)
            throw DimensionError("channel_from_choi: Choi operator size does not match d_in * d_out");
        return Channel(HermitianOperator(choi.matrix(), {d_in, d_out}), d_in, d_out, ChannelKind::choi, {});
    }

    const HermitianOperator& choi() const noexcept { return choi_; }
    std::size_t d_in() const noexcept { return d_in_; }
    std::size_t d_out() const noexcept { return d_out_; }
    ChannelKind kind() const noexcept { return kind_; }
    /// U for unitary, the Kraus list for kraus, sigma for constant, empty for raw Choi.
    const std::vector<ComplexMatrix>& generators() const noexcept { return generators_; }

    /// Lambda(sigma) = tr_in[(sigma^T (x) I_out) J].
    ComplexMatrix apply(const ComplexMatrix& sigma) const {
        if (sigma.rows() != static_cast<Eigen::Index>(d_in_) || sigma.cols() != sigma.rows())
            throw DimensionError("Channel::apply: input has wrong size");
        const auto dout = static_cast<Eigen::Index>(d_out_);
        ComplexMatrix out = ComplexMatrix::Zero(dout, dout);
        for (Eigen::Index i = 0; i < sigma.rows(); ++i)
            for (Eigen::Index j = 0; j < sigma.cols(); ++j)
                if (sigma(i, j) != Complex(0.0)) out += sigma(i, j) * choi_.matrix().block(i * dout, j * dout, dout, dout);
        return out;
    }

    /// (I_anc (x) Lambda)(rho) for rho on anc (x) in.
    ComplexMatrix apply_extended(const ComplexMatrix& rho, std::size_t d_anc) const {
        const auto din = static_cast<Eigen::Index>(d_in_);
        const auto dout = static_cast<Eigen::Index>(d_out_);
        const auto da = static_cast<Eigen::Index>(d_anc);
        if (rho.rows() != da * din || rho.cols() != rho.rows())
            throw DimensionError("Channel::apply_extended: input has wrong size");
        ComplexMatrix out = ComplexMatrix::Zero(da * dout, da * dout);
        for (Eigen::Index a = 0; a < da; ++a)
            for (Eigen::Index b = 0; b < da; ++b)
                out.block(a * dout, b * dout, dout, dout) = apply(rho.block(a * din, b * din, din, din));
        return out;
    }

private:
    Channel(HermitianOperator choi, std::size_t d_in, std::size_t d_out, ChannelKind kind,
            std::vector<ComplexMatrix> generators)
        : choi_(std::move(choi)), d_in_(d_in), d_out_(d_out), kind_(kind), generators_(std::move(generators)) {
        const double lo = min_eigenvalue(choi_.matrix());
        if (lo < -tolerance::psd)
            throw PositivityError("Channel: Choi operator has eigenvalue " + std::to_string(lo));
        const double tp = max_abs_diff(trace_right(choi_.matrix(), d_in_, d_out_),
                                       ComplexMatrix::Identity(static_cast<Eigen::Index>(d_in_),
                                                               static_cast<Eigen::Index>(d_in_)));
        if (tp > tolerance::equality)
            throw ValidationError("Channel: tr_out J != I_in (residual " + std::to_string(tp) + ")");
    }

    HermitianOperator choi_;
    std::size_t d_in_, d_out_;
    ChannelKind kind_;
    std::vector<ComplexMatrix> generators_;
};

namespace detail {

// K_Psi = sum_{a,i} |a><a (x) i|Psi><i| : in -> anc.
inline ComplexMatrix k_operator(const ComplexVector& psi, std::size_t d_anc, std::size_t d_in) {
    ComplexMatrix k(static_cast<Eigen::Index>(d_anc), static_cast<Eigen::Index>(d_in));
    for (std::size_t a = 0; a < d_anc; ++a)
        for (std::size_t i = 0; i < d_in; ++i)
            k(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(i)) = psi(static_cast<Eigen::Index>(a * d_in + i));
    return k;
}

struct PureDecomposition {
    std::vector<double> weights;
    std::vector<ComplexVector> kets;
};

inline PureDecomposition spectral_decomposition(const HermitianOperator& rho) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(rho.matrix());
    PureDecomposition out;
    for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k) {
        const double w = solver.eigenvalues()(k);
        if (w <= 0.0) continue;
        out.weights.push_back(w);
        out.kets.emplace_back(solver.eigenvectors().col(k));
    }
    return out;
}

// sum_n w_n (K_n^dagger (x) I_rest) X (K_n (x) I_rest) for X on anc (x) rest.
inline ComplexMatrix dual_map(const PureDecomposition& dec, const ComplexMatrix& x, std::size_t d_anc,
                              std::size_t d_in, std::size_t d_rest) {
    const auto id = ComplexMatrix::Identity(static_cast<Eigen::Index>(d_rest), static_cast<Eigen::Index>(d_rest));
    const auto n = static_cast<Eigen::Index>(d_in * d_rest);
    ComplexMatrix out = ComplexMatrix::Zero(n, n);
    for (std::size_t k = 0; k < dec.weights.size(); ++k) {
        const ComplexMatrix big = kron(k_operator(dec.kets[k], d_anc, d_in), ComplexMatrix(id));
        out += dec.weights[k] * (big.adjoint() * x * big);
    }
    return out;
}

inline void check_pure_decomposition(std::span<const double> weights, std::span<const KetVector> kets,
                                     std::size_t expected_size) {
    if (weights.size() != kets.size()) throw DimensionError("decomposition: weights and kets differ in length");
    for (std::size_t k = 0; k < kets.size(); ++k) {
        if (kets[k].size() != expected_size) throw DimensionError("decomposition: ket has wrong size");
        if (weights[k] < 0.0) throw ValidationError("decomposition: negative weight");
    }
}

}  // namespace detail

/// Upsilon*_rho(b) = sum_n lambda_n K_n^dagger b K_n using the eigendecomposition of rho.
inline Operator upsilon_dual_apply(const HermitianOperator& rho, const Operator& b, std::size_t d_anc,
                                   std::size_t d_in) {
    if (rho.size() != d_anc * d_in) throw DimensionError("upsilon_dual_apply: rho must act on anc (x) in");
    if (b.size() != d_anc) throw DimensionError("upsilon_dual_apply: b must act on anc");
    return Operator(detail::dual_map(detail::spectral_decomposition(rho), b.matrix(), d_anc, d_in, 1), Dims{d_in});
}

inline HermitianOperator upsilon_dual_apply(const HermitianOperator& rho, const HermitianOperator& b,
                                            std::size_t d_anc, std::size_t d_in) {
    const Operator out = upsilon_dual_apply(rho, static_cast<const Operator&>(b), d_anc, d_in);
    return HermitianOperator::hermitian_part(out.matrix(), {d_in});
}

/// Same map built from an arbitrary convex pure-state decomposition of rho.
inline Operator upsilon_dual_apply(std::span<const double> weights, std::span<const KetVector> kets, const Operator& b,
                                   std::size_t d_anc, std::size_t d_in) {
    detail::check_pure_decomposition(weights, kets, d_anc * d_in);
    if (b.size() != d_anc) throw DimensionError("upsilon_dual_apply: b must act on anc");
    detail::PureDecomposition dec;
    for (std::size_t k = 0; k < kets.size(); ++k) {
        dec.weights.push_back(weights[k]);
        dec.kets.push_back(kets[k].amplitudes());
    }
    return Operator(detail::dual_map(dec, b.matrix(), d_anc, d_in, 1), Dims{d_in});
}

/// T(x) = (Upsilon*_rho (x) I_out)(E(x)) for every outcome of the test.
inline Tester tester_from_test(const Test& t) {
    const auto dec = detail::spectral_decomposition(t.input_state());
    std::vector<LabeledEffect> elements;
    elements.reserve(t.povm().size());
    for (const auto& e : t.povm()) {
        ComplexMatrix m = detail::dual_map(dec, e.effect.matrix(), t.d_anc(), t.d_in(), t.d_out());
        elements.push_back({e.label, HermitianOperator::hermitian_part(std::move(m), {t.d_in(), t.d_out()})});
    }
    const std::size_t keep[] = {1};
    HermitianOperator marginal = basis_transpose(partial_trace(t.input_state(), keep));
    return Tester(std::move(elements), std::move(marginal), t.d_in(), t.d_out());
}

/// tr[A J] for Hermitian A (real part; the imaginary part vanishes up to rounding).
inline double expectation(const HermitianOperator& a, const HermitianOperator& j) {
    if (a.size() != j.size()) throw DimensionError("expectation: size mismatch");
    return (a.matrix().cwiseProduct(j.matrix().transpose())).sum().real();
}

namespace detail {

inline double clamp_probability(double p, const char* where) {
    if (p < -tolerance::psd || p > 1.0 + tolerance::psd)
        throw ValidationError(std::string(where) + ": probability " + std::to_string(p) + " outside [0, 1]");
    return std::clamp(p, 0.0, 1.0);
}

}  // namespace detail

/// Generalized Born rule p(x|Lambda) = tr[T(x) J_Lambda].
inline double probability(const HermitianOperator& tester_element, const Channel& ch) {
    if (tester_element.size() != ch.choi().size()) throw DimensionError("probability: dimension mismatch");
    return detail::clamp_probability(expectation(tester_element, ch.choi()), "probability");
}

/// tr[E(x) (I_anc (x) Lambda)(rho)] by physically propagating the input state.
inline double direct_probability(const Test& t, const std::string& label, const Channel& ch) {
    if (t.d_in() != ch.d_in() || t.d_out() != ch.d_out()) throw DimensionError("direct_probability: dimension mismatch");
    const ComplexMatrix out = ch.apply_extended(t.input_state().matrix(), t.d_anc());
    const double p = (t.effect(label).matrix() * out).trace().real();
    return detail::clamp_probability(p, "direct_probability");
}

/// L tests mixed with probabilities r_l; outcome labels are disjoint across tests.
class Scenario {
public:
    Scenario(std::vector<Test> tests, std::vector<double> weights) : tests_(std::move(tests)), weights_(std::move(weights)) {
        if (tests_.empty()) throw ValidationError("Scenario: at least one test is required");
        if (weights_.size() != tests_.size()) throw ValidationError("Scenario: one weight per test is required");
        double total = 0.0;
        for (double w : weights_) {
            if (!(w >= 0.0)) throw ValidationError("Scenario: weights must be nonnegative");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-12) throw ValidationError("Scenario: weights must sum to 1");
        std::set<std::string> labels;
        for (const auto& t : tests_) {
            if (t.d_in() != tests_.front().d_in() || t.d_out() != tests_.front().d_out())
                throw DimensionError("Scenario: all tests must probe channels with the same d_in and d_out");
            for (const auto& e : t.povm())
                if (!labels.insert(e.label).second)
                    throw ValidationError("Scenario: outcome label '" + e.label + "' appears in more than one test");
        }
        testers_.reserve(tests_.size());
        for (const auto& t : tests_) testers_.push_back(tester_from_test(t));
    }

    const std::vector<Test>& tests() const noexcept { return tests_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    const std::vector<Tester>& testers() const noexcept { return testers_; }
    std::size_t size() const noexcept { return tests_.size(); }
    std::size_t d_in() const noexcept { return tests_.front().d_in(); }
    std::size_t d_out() const noexcept { return tests_.front().d_out(); }

    /// Outcome labels of test l, in POVM order.
    std::vector<std::string> labels(std::size_t l) const {
        std::vector<std::string> out;
        for (const auto& e : tests_.at(l).povm()) out.push_back(e.label);
        return out;
    }

private:
    std::vector<Test> tests_;
    std::vector<double> weights_;
    std::vector<Tester> testers_;
};

using Histogram = std::map<std::string, std::uint64_t>;

/// Draws l ~ r, then x ~ p_l(.|Lambda), n times. Only nonzero counts appear.
inline Histogram sample_run(const Scenario& s, const Channel& ch, std::uint64_t n, std::uint64_t seed) {
    if (n == 0) throw ValidationError("sample_run: n must be at least 1");
    if (ch.d_in() != s.d_in() || ch.d_out() != s.d_out()) throw DimensionError("sample_run: channel dimension mismatch");
    std::vector<std::discrete_distribution<std::size_t>> per_test;
    for (const auto& tester : s.testers()) {
        std::vector<double> p;
        for (const auto& e : tester.elements()) p.push_back(probability(e.effect, ch));
        per_test.emplace_back(p.begin(), p.end());
    }
    std::discrete_distribution<std::size_t> pick_test(s.weights().begin(), s.weights().end());
    std::mt19937_64 rng(seed);
    Histogram hist;
    for (std::uint64_t k = 0; k < n; ++k) {
        const auto l = pick_test(rng);
        const auto x = per_test[l](rng);
        ++hist[s.testers()[l].elements()[x].label];
    }
    return hist;
}

}  // namespace fgur
