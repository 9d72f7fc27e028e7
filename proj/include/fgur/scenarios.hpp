#pragma once

// Constructors for concrete test scenarios and the bases they are built from.
//
// Outcome labels: "x<l>_<i>" for outcome i of test l (1-based l), and
// "x<l>_<i>_<j>" when an outcome is indexed by a pair.

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "fgur/tester.hpp"

namespace fgur {

using Basis = std::vector<KetVector>;

/// Multiplies by a global phase so that the first nonzero amplitude is real positive.
inline KetVector fix_global_phase(const KetVector& v, double eps = 1e-12) {
    for (Eigen::Index k = 0; k < v.amplitudes().size(); ++k) {
        const Complex a = v.amplitudes()(k);
        if (std::abs(a) > eps) return KetVector(v.amplitudes() * (std::conj(a) / std::abs(a)), v.dims());
    }
    return v;
}

inline std::string outcome_label(std::size_t test, std::size_t i) {
    return "x" + std::to_string(test + 1) + "_" + std::to_string(i);
}

inline std::string outcome_label(std::size_t test, std::size_t i, std::size_t j) {
    return outcome_label(test, i) + "_" + std::to_string(j);
}

/// Orthonormal basis of maximally entangled kets |Psi_i> = (I (x) U_i)|Psi_+> on C^d (x) C^d.
class MEB {
public:
    MEB(std::vector<KetVector> kets, std::vector<ComplexMatrix> generators)
        : kets_(std::move(kets)), generators_(std::move(generators)) {
        if (kets_.empty()) throw ValidationError("MEB: no kets");
        const auto n = kets_.front().size();
        d_ = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
        if (d_ * d_ != n || kets_.size() != n || generators_.size() != n)
            throw DimensionError("MEB: expected d^2 kets and generators on C^d (x) C^d");
        const ComplexMatrix mixed = ComplexMatrix::Identity(static_cast<Eigen::Index>(d_), static_cast<Eigen::Index>(d_)) /
                                    static_cast<double>(d_);
        for (std::size_t i = 0; i < n; ++i) {
            kets_[i] = KetVector(kets_[i].amplitudes(), Dims{d_, d_});
            for (std::size_t j = 0; j < n; ++j) {
                const Complex g = kets_[i].inner(kets_[j]);
                if (std::abs(g - Complex(i == j ? 1.0 : 0.0)) > 1e-9) throw ValidationError("MEB: kets are not orthonormal");
            }
            const ComplexMatrix rho = kets_[i].amplitudes() * kets_[i].amplitudes().adjoint();
            if (max_abs_diff(trace_right(rho, d_, d_), mixed) > 1e-9 || max_abs_diff(trace_left(rho, d_, d_), mixed) > 1e-9)
                throw ValidationError("MEB: ket " + std::to_string(i) + " is not maximally entangled");
            if (max_abs_diff(ket_from_generator(generators_[i]).amplitudes(), kets_[i].amplitudes()) > 1e-10)
                throw ValidationError("MEB: generator " + std::to_string(i) + " does not reproduce its ket");
        }
    }

    /// Derives the generators U_i from the kets.
    static MEB from_kets(std::vector<KetVector> kets) {
        std::vector<ComplexMatrix> gens;
        for (const auto& k : kets) gens.push_back(generator_of(k));
        return MEB(std::move(kets), std::move(gens));
    }

    std::size_t d() const noexcept { return d_; }
    const std::vector<KetVector>& kets() const noexcept { return kets_; }
    const std::vector<ComplexMatrix>& generators() const noexcept { return generators_; }

private:
    std::vector<KetVector> kets_;
    std::vector<ComplexMatrix> generators_;
    std::size_t d_ = 0;
};

/// Weyl (shift-clock) basis: U_{a,b} = X^a Z^b, ket index a*d + b.
inline MEB generalized_bell_basis(std::size_t d) {
    if (d < 2) throw DimensionError("generalized_bell_basis: d must be at least 2");
    const auto n = static_cast<Eigen::Index>(d);
    ComplexMatrix x = ComplexMatrix::Zero(n, n), z = ComplexMatrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        x((j + 1) % n, j) = 1.0;
        z(j, j) = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(d));
    }
    std::vector<KetVector> kets;
    std::vector<ComplexMatrix> gens;
    ComplexMatrix xa = ComplexMatrix::Identity(n, n);
    for (std::size_t a = 0; a < d; ++a, xa = x * xa) {
        ComplexMatrix u = xa;
        for (std::size_t b = 0; b < d; ++b, u = u * z) {
            const KetVector raw = ket_from_generator(u);
            const KetVector ket = fix_global_phase(raw);
            const Complex phase = ket.amplitudes().dot(raw.amplitudes());  // <ket|raw>, unit modulus
            gens.push_back(u * std::conj(phase));
            kets.push_back(ket);
        }
    }
    return MEB(std::move(kets), std::move(gens));
}

/// The mutually unbiased pair of two-qubit MEBs {Phi(1)_i}, {Phi(2)_j} with
/// |x_j> = (|0> + (-1)^j |1>)/sqrt2 and |y_j> = (|0> + (-1)^j i|1>)/sqrt2,
/// amplitudes exactly as tabulated (no phase normalization).
inline std::pair<MEB, MEB> mub_meb_pair_2qubit() {
    const Complex i(0.0, 1.0);
    const double h = 0.5;
    auto ket = [](std::initializer_list<Complex> a) {
        ComplexVector v(4);
        Eigen::Index k = 0;
        for (auto c : a) v(k++) = c;
        return KetVector(std::move(v), Dims{2, 2});
    };
    // Order |00>, |01>, |10>, |11>.
    std::vector<KetVector> phi1 = {
        ket({h, h, h, -h}),    // (|0 x0> + |1 x1>)/sqrt2
        ket({h, h, -h, h}),    // (|0 x0> - |1 x1>)/sqrt2
        ket({h, -h, h, h}),    // (|0 x1> + |1 x0>)/sqrt2
        ket({h, -h, -h, -h}),  // (|0 x1> - |1 x0>)/sqrt2
    };
    std::vector<KetVector> phi2 = {
        ket({h, h * i, h * i, h}),     // (|y0 0> + i|y1 1>)/sqrt2
        ket({h, -h * i, h * i, -h}),   // (|y0 0> - i|y1 1>)/sqrt2
        ket({h * i, h, h, h * i}),     // (|y0 1> + i|y1 0>)/sqrt2
        ket({-h * i, h, -h, h * i}),   // (|y0 1> - i|y1 0>)/sqrt2
    };
    return {MEB::from_kets(std::move(phi1)), MEB::from_kets(std::move(phi2))};
}

inline bool is_prime(std::size_t n) {
    if (n < 2) return false;
    for (std::size_t k = 2; k * k <= n; ++k)
        if (n % k == 0) return false;
    return true;
}

inline Basis computational_basis(std::size_t d) {
    Basis out;
    for (std::size_t k = 0; k < d; ++k) out.push_back(KetVector::basis({d}, k));
    return out;
}

/// |f_m> = d^{-1/2} sum_j w^{mj} |j>, w = exp(2 pi i / d).
inline Basis fourier_basis(std::size_t d) {
    Basis out;
    const auto n = static_cast<Eigen::Index>(d);
    for (std::size_t m = 0; m < d; ++m) {
        ComplexVector v(n);
        for (std::size_t j = 0; j < d; ++j)
            v(static_cast<Eigen::Index>(j)) =
                std::polar(1.0 / std::sqrt(static_cast<double>(d)),
                           2.0 * std::numbers::pi * static_cast<double>((m * j) % d) / static_cast<double>(d));
        out.emplace_back(std::move(v), Dims{d});
    }
    return out;
}

/// Computational and Fourier bases; mutually unbiased for every d.
inline std::vector<Basis> fourier_pair(std::size_t d) {
    if (d == 0) throw DimensionError("fourier_pair: d must be positive");
    return {computational_basis(d), fourier_basis(d)};
}

/// Complete family of d + 1 mutually unbiased bases for prime d: the
/// computational basis and, for k = 0..d-1, |v_{k,m}>_j = d^{-1/2} w^{k j^2 + m j}
/// (odd d) or i^{k j} (-1)^{m j} (d = 2).
inline std::vector<Basis> mub_bases(std::size_t d) {
    if (!is_prime(d)) throw UnsupportedError("mub_bases: the complete family is implemented for prime d only");
    std::vector<Basis> out{computational_basis(d)};
    const auto n = static_cast<Eigen::Index>(d);
    const double amp = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t k = 0; k < d; ++k) {
        Basis basis;
        for (std::size_t m = 0; m < d; ++m) {
            ComplexVector v(n);
            for (std::size_t j = 0; j < d; ++j) {
                double angle;
                if (d == 2)
                    angle = std::numbers::pi * (0.5 * static_cast<double>(k * j) + static_cast<double>(m * j));
                else
                    angle = 2.0 * std::numbers::pi * static_cast<double>((k * j * j + m * j) % d) / static_cast<double>(d);
                v(static_cast<Eigen::Index>(j)) = std::polar(amp, angle);
            }
            basis.emplace_back(std::move(v), Dims{d});
        }
        out.push_back(std::move(basis));
    }
    return out;
}

namespace detail {

inline HermitianOperator trivial_state() { return HermitianOperator::identity({1, 1}); }

inline HermitianOperator with_dims(const HermitianOperator& h, Dims dims) { return HermitianOperator(h.matrix(), std::move(dims)); }

}  // namespace detail

/// d_anc = d_in = 1: each POVM on the output becomes a test whose tester is the POVM itself.
inline Scenario state_measurement_scenario(const std::vector<std::vector<HermitianOperator>>& povms,
                                           const std::vector<double>& weights) {
    std::vector<Test> tests;
    for (std::size_t l = 0; l < povms.size(); ++l) {
        if (povms[l].empty()) throw ValidationError("state_measurement_scenario: empty POVM");
        const auto d = povms[l].front().size();
        std::vector<LabeledEffect> effects;
        for (std::size_t i = 0; i < povms[l].size(); ++i)
            effects.push_back({outcome_label(l, i), detail::with_dims(povms[l][i], {1, d})});
        tests.emplace_back(detail::trivial_state(), std::move(effects), 1, 1, d);
    }
    return Scenario(std::move(tests), weights);
}

inline std::vector<HermitianOperator> pvm_of(const Basis& basis) {
    std::vector<HermitianOperator> out;
    for (const auto& k : basis) out.push_back(k.projector());
    return out;
}

inline Scenario state_measurement_scenario(const std::vector<Basis>& bases, const std::vector<double>& weights) {
    std::vector<std::vector<HermitianOperator>> povms;
    for (const auto& b : bases) povms.push_back(pvm_of(b));
    return state_measurement_scenario(povms, weights);
}

/// d_anc = 1, inputs |psi_l><psi_l|, POVMs I_anc (x) |e(l)_i><e(l)_i|, weights (1/2, 1/2).
inline Scenario example1_scenario(const KetVector& psi1, const KetVector& psi2, const Basis& basis1, const Basis& basis2) {
    if (psi1.size() != psi2.size()) throw DimensionError("example1_scenario: input kets differ in dimension");
    if (basis1.empty() || basis1.size() != basis2.size()) throw DimensionError("example1_scenario: bases differ in dimension");
    const auto d_in = psi1.size();
    const auto d_out = basis1.size();
    std::vector<Test> tests;
    const KetVector* psis[] = {&psi1, &psi2};
    const Basis* bases[] = {&basis1, &basis2};
    for (std::size_t l = 0; l < 2; ++l) {
        if (!psis[l]->is_normalized()) throw ValidationError("example1_scenario: input ket is not normalized");
        std::vector<LabeledEffect> effects;
        for (std::size_t i = 0; i < d_out; ++i)
            effects.push_back({outcome_label(l, i), detail::with_dims((*bases[l])[i].projector(), {1, d_out})});
        tests.emplace_back(detail::with_dims(psis[l]->projector(), {1, d_in}), std::move(effects), 1, d_in, d_out);
    }
    return Scenario(std::move(tests), {0.5, 0.5});
}

/// Input P_+ on C^d (x) C^d, POVMs |e(l)_i><e(l)_i| (x) |f(l)_j><f(l)_j|, weights (1/2, 1/2).
inline Scenario example2_scenario(std::size_t d, const std::vector<Basis>& in_bases, const std::vector<Basis>& out_bases) {
    if (in_bases.size() != 2 || out_bases.size() != 2) throw ValidationError("example2_scenario: two bases per side");
    const auto d_out = out_bases.front().size();
    std::vector<Test> tests;
    for (std::size_t l = 0; l < 2; ++l) {
        if (in_bases[l].size() != d || out_bases[l].size() != d_out)
            throw DimensionError("example2_scenario: basis dimension mismatch");
        std::vector<LabeledEffect> effects;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d_out; ++j)
                effects.push_back({outcome_label(l, i, j), kron(in_bases[l][i].projector(), out_bases[l][j].projector())});
        tests.emplace_back(maximally_entangled(d, true), std::move(effects), d, d, d_out);
    }
    return Scenario(std::move(tests), {0.5, 0.5});
}

/// Input P_+ and MEB measurements |Psi(l)_i><Psi(l)_i| for each test.
inline Scenario meb_scenario(const std::vector<MEB>& mebs, const std::vector<double>& weights) {
    if (mebs.empty()) throw ValidationError("meb_scenario: no MEBs");
    const auto d = mebs.front().d();
    std::vector<Test> tests;
    for (std::size_t l = 0; l < mebs.size(); ++l) {
        if (mebs[l].d() != d) throw DimensionError("meb_scenario: MEBs differ in dimension");
        std::vector<LabeledEffect> effects;
        for (std::size_t i = 0; i < mebs[l].kets().size(); ++i)
            effects.push_back({outcome_label(l, i), mebs[l].kets()[i].projector()});
        tests.emplace_back(maximally_entangled(d, true), std::move(effects), d, d, d);
    }
    return Scenario(std::move(tests), weights);
}

inline Scenario meb_scenario(const MEB& meb1, const MEB& meb2, const std::vector<double>& weights = {0.5, 0.5}) {
    return meb_scenario(std::vector<MEB>{meb1, meb2}, weights);
}

/// Rotates every ket of an MEB by a unitary on the output factor; the result is again an MEB.
inline MEB rotate_output(const MEB& meb, const ComplexMatrix& v) {
    std::vector<KetVector> kets;
    std::vector<ComplexMatrix> gens;
    for (const auto& u : meb.generators()) {
        const ComplexMatrix g = v * u;
        const KetVector raw = ket_from_generator(g);
        const KetVector ket = fix_global_phase(raw);
        gens.push_back(g * std::conj(ket.amplitudes().dot(raw.amplitudes())));
        kets.push_back(ket);
    }
    return MEB(std::move(kets), std::move(gens));
}

}  // namespace fgur
