#include <gtest/gtest.h>

#include <cmath>

#include "fgur/random.hpp"
#include "fgur/scenarios.hpp"
#include "fgur/tester.hpp"
#include "fgur/verify.hpp"
#include "oracles.hpp"

using namespace fgur;

namespace {

std::vector<LabeledEffect> labeled(const std::vector<HermitianOperator>& effects, const std::string& prefix = "x") {
    std::vector<LabeledEffect> out;
    for (std::size_t i = 0; i < effects.size(); ++i) out.push_back({prefix + std::to_string(i), effects[i]});
    return out;
}

ComplexMatrix pauli_x() {
    ComplexMatrix x = ComplexMatrix::Zero(2, 2);
    x(0, 1) = x(1, 0) = 1.0;
    return x;
}

}  // namespace

TEST(TestType, ValidatesInputs) {
    random::Rng rng(1);
    const auto e = random::random_pvm(rng, {1, 2});
    EXPECT_NO_THROW(fgur::Test(HermitianOperator::identity({1, 1}), labeled(e), 1, 1, 2));
    EXPECT_THROW(fgur::Test(maximally_entangled(2, false), labeled(e), 2, 2, 1), ValidationError);  // trace 2
    auto dup = labeled(e);
    dup[1].label = dup[0].label;
    EXPECT_THROW(fgur::Test(HermitianOperator::identity({1, 1}), dup, 1, 1, 2), ValidationError);
    auto incomplete = labeled(e);
    incomplete.pop_back();
    EXPECT_THROW(fgur::Test(HermitianOperator::identity({1, 1}), incomplete, 1, 1, 2), ValidationError);
    EXPECT_THROW(fgur::Test(HermitianOperator::identity({1, 1}), labeled(e), 1, 1, 3), DimensionError);
}

TEST(Upsilon, IdentityGivesTransposedMarginal) {
    random::Rng rng(2);
    for (int t = 0; t < 10; ++t) {
        const auto rho = random::random_state(rng, {2, 3});
        const auto out = upsilon_dual_apply(rho, HermitianOperator::identity({2}), 2, 3);
        const ComplexMatrix expected = trace_left(rho.matrix(), 2, 3).transpose();
        EXPECT_LE(max_abs_diff(out.matrix(), expected), 1e-12);
    }
}

TEST(Upsilon, MaximallyEntangledInputIsScaledIdentityMap) {
    for (std::size_t d : {2u, 3u}) {
        ComplexMatrix b = ComplexMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        b(0, 1) = 1.0;
        const auto out = upsilon_dual_apply(maximally_entangled(d, true), Operator(b, {d}), d, d);
        EXPECT_LE(max_abs_diff(out.matrix(), b / static_cast<double>(d)), 1e-12);
    }
}

TEST(Upsilon, ProductInput) {
    random::Rng rng(3);
    const auto a = random::random_ket(rng, {2});
    const auto psi = random::random_ket(rng, {3});
    const auto rho = kron(a.projector(), psi.projector());
    const HermitianOperator b(random::random_psd(rng, {2}).matrix(), {2});
    const Complex aba = a.amplitudes().dot(b.matrix() * a.amplitudes());
    const auto out = upsilon_dual_apply(rho, b, 2, 3);
    EXPECT_LE(max_abs_diff(out.matrix(), aba * psi.projector().matrix().transpose()), 1e-12);
}

TEST(Upsilon, DecompositionIndependence) {
    random::Rng rng(4);
    for (int t = 0; t < 10; ++t) {
        const std::size_t d_anc = 2, d_in = 2;
        // rho = sum_k p_k |phi_k><phi_k| with non-orthogonal phi_k
        std::vector<double> w;
        std::vector<KetVector> kets;
        ComplexMatrix rho = ComplexMatrix::Zero(4, 4);
        double total = 0.0;
        for (int k = 0; k < 5; ++k) {
            w.push_back(std::uniform_real_distribution<double>(0.1, 1.0)(rng));
            total += w.back();
            kets.push_back(random::random_ket(rng, {d_anc, d_in}));
        }
        for (int k = 0; k < 5; ++k) {
            w[k] /= total;
            rho += w[k] * kets[k].projector().matrix();
        }
        const HermitianOperator state = HermitianOperator::hermitian_part(rho, {d_anc, d_in});
        const Operator b(random::gaussian_matrix(rng, 2, 2), {2});
        const auto spectral = upsilon_dual_apply(state, b, d_anc, d_in);
        const auto other = upsilon_dual_apply(w, kets, b, d_anc, d_in);
        EXPECT_LE(max_abs_diff(spectral.matrix(), other.matrix()), 1e-10);
    }
}

TEST(Upsilon, DimensionMismatch) {
    EXPECT_THROW(upsilon_dual_apply(maximally_entangled(2, true), HermitianOperator::identity({3}), 2, 2),
                 DimensionError);
}

TEST(TesterFromTest, MatchesIndexOracle) {
    random::Rng rng(5);
    for (int t = 0; t < 20; ++t) {
        const std::size_t d_anc = verify::uniform(rng, 1, 3), d_in = verify::uniform(rng, 1, 3),
                          d_out = verify::uniform(rng, 1, 3);
        const fgur::Test test = verify::random_test(rng, 0, d_anc, d_in, d_out, 3);
        const Tester tester = tester_from_test(test);
        for (const auto& e : test.povm()) {
            const ComplexMatrix expected = oracle::tester_element(test.input_state().matrix(), e.effect.matrix(),
                                                                  int(d_anc), int(d_in), int(d_out));
            EXPECT_LE(max_abs_diff(tester.element(e.label).matrix(), expected), 1e-12);
        }
    }
}

TEST(TesterFromTest, StateMeasurementIsThePovm) {
    random::Rng rng(6);
    const auto povm = random::random_povm(rng, {3}, 4);
    const Scenario s = state_measurement_scenario({povm}, {1.0});
    for (std::size_t i = 0; i < povm.size(); ++i)
        EXPECT_LE(max_abs_diff(s.testers()[0].element(outcome_label(0, i)).matrix(), povm[i].matrix()), 1e-14);
}

TEST(TesterFromTest, PureInputProductMeasurement) {
    random::Rng rng(7);
    const auto psi = random::random_ket(rng, {3});
    const auto basis = fourier_basis(2);
    const Scenario s = example1_scenario(psi, psi, basis, basis);
    for (std::size_t i = 0; i < 2; ++i) {
        const ComplexMatrix expected = kron(psi.projector().matrix().transpose(), basis[i].projector().matrix());
        EXPECT_LE(max_abs_diff(s.testers()[0].element(outcome_label(0, i)).matrix(), expected), 1e-14);
    }
}

TEST(TesterFromTest, ProductBasesWithMaximallyEntangledInput) {
    for (std::size_t d : {2u, 3u}) {
        const auto in = fourier_pair(d), out = fourier_pair(d);
        const Scenario s = example2_scenario(d, in, out);
        for (std::size_t l = 0; l < 2; ++l)
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j) {
                    const ComplexMatrix expected =
                        kron(in[l][i].projector().matrix(), out[l][j].projector().matrix()) / double(d);
                    EXPECT_LE(max_abs_diff(s.testers()[l].element(outcome_label(l, i, j)).matrix(), expected), 1e-12);
                }
    }
}

TEST(TesterType, NormalizationInvariant) {
    random::Rng rng(8);
    for (int t = 0; t < 20; ++t) {
        const std::size_t d_anc = verify::uniform(rng, 1, 3), d_in = verify::uniform(rng, 1, 3),
                          d_out = verify::uniform(rng, 1, 3);
        const fgur::Test test = verify::random_test(rng, 0, d_anc, d_in, d_out, 4);
        const Tester tester = tester_from_test(test);
        ComplexMatrix sum = ComplexMatrix::Zero(Eigen::Index(d_in * d_out), Eigen::Index(d_in * d_out));
        for (const auto& e : tester.elements()) sum += e.effect.matrix();
        const ComplexMatrix expected = kron(trace_left(test.input_state().matrix(), d_anc, d_in).transpose(),
                                            ComplexMatrix::Identity(Eigen::Index(d_out), Eigen::Index(d_out)));
        EXPECT_LE(max_abs_diff(sum, expected), 1e-9);
    }
}

TEST(TesterType, RejectsBadNormalization) {
    std::vector<LabeledEffect> half{{"a", 0.5 * HermitianOperator::identity({1, 2})}};
    EXPECT_THROW(Tester(half, HermitianOperator::identity({1}), 1, 2), ValidationError);
    EXPECT_NO_THROW(Tester({{"a", HermitianOperator::identity({1, 2})}}, HermitianOperator::identity({1}), 1, 2));
    ComplexMatrix neg = ComplexMatrix::Identity(2, 2);
    neg(0, 0) = 1.5;
    neg(1, 1) = -0.5;
    EXPECT_THROW(Tester({{"a", HermitianOperator(neg, {1, 2})}, {"b", HermitianOperator(ComplexMatrix::Identity(2, 2) - neg, {1, 2})}},
                        HermitianOperator::identity({1}), 1, 2),
                 PositivityError);
}

TEST(ChannelType, IdentityUnitaryGivesUnnormalizedMaximallyEntangled) {
    const auto ch = Channel::from_unitary(ComplexMatrix::Identity(3, 3));
    EXPECT_LE(max_abs_diff(ch.choi().matrix(), maximally_entangled(3, false).matrix()), 1e-14);
    EXPECT_EQ(ch.kind(), ChannelKind::unitary);
}

TEST(ChannelType, ConstantChannel) {
    random::Rng rng(9);
    const auto sigma = random::random_state(rng, {3});
    const auto ch = Channel::constant(2, sigma);
    EXPECT_LE(max_abs_diff(ch.choi().matrix(), kron(ComplexMatrix::Identity(2, 2), sigma.matrix())), 1e-14);
    const auto rho = random::random_state(rng, {2});
    EXPECT_LE(max_abs_diff(ch.apply(rho.matrix()), sigma.matrix()), 1e-12);
}

TEST(ChannelType, KrausChoiMatchesExplicitSum) {
    random::Rng rng(10);
    for (int t = 0; t < 10; ++t) {
        const std::size_t d_in = verify::uniform(rng, 1, 3), d_out = verify::uniform(rng, 1, 3);
        const std::size_t k = (d_in + d_out - 1) / d_out + verify::uniform(rng, 0, 2);
        const auto ch = random::random_kraus_channel(rng, d_in, d_out, k);
        EXPECT_LE(max_abs_diff(ch.choi().matrix(), oracle::choi_from_kraus(ch.generators())), 1e-12);
        const auto di = Eigen::Index(d_in);
        EXPECT_LE(max_abs_diff(trace_right(ch.choi().matrix(), d_in, d_out), ComplexMatrix::Identity(di, di)), 1e-9);
        EXPECT_GE(min_eigenvalue(ch.choi().matrix()), -1e-9);
    }
}

TEST(ChannelType, ApplyFromChoiMatchesKraus) {
    random::Rng rng(11);
    for (int t = 0; t < 10; ++t) {
        const std::size_t d_in = verify::uniform(rng, 1, 3), d_out = verify::uniform(rng, 1, 3);
        const auto kraus_ch = random::random_kraus_channel(rng, d_in, d_out, (d_in + d_out - 1) / d_out + 1);
        const auto choi_ch = Channel::from_choi(kraus_ch.choi(), d_in, d_out);
        const auto rho = random::random_state(rng, {d_in});
        EXPECT_LE(max_abs_diff(choi_ch.apply(rho.matrix()), oracle::apply_kraus(kraus_ch.generators(), rho.matrix())),
                  1e-12);
        const std::size_t d_anc = verify::uniform(rng, 1, 3);
        const auto big = random::random_state(rng, {d_anc, d_in});
        EXPECT_LE(max_abs_diff(choi_ch.apply_extended(big.matrix(), d_anc),
                               oracle::apply_extended(kraus_ch.generators(), big.matrix(), int(d_anc))),
                  1e-12);
    }
}

TEST(ChannelType, RejectsInvalid) {
    ComplexMatrix nonunitary = ComplexMatrix::Identity(2, 2);
    nonunitary(0, 0) = 1.1;
    EXPECT_THROW(Channel::from_unitary(nonunitary), ValidationError);
    EXPECT_THROW(Channel::from_kraus({0.5 * ComplexMatrix::Identity(2, 2)}), ValidationError);
    EXPECT_THROW(Channel::from_choi(maximally_entangled(2, true), 2, 2), ValidationError);  // not trace preserving
    EXPECT_THROW(Channel::constant(2, HermitianOperator::identity({2})), ValidationError);  // trace 2
    ComplexMatrix j = maximally_entangled(2, false).matrix();
    j(0, 0) = -0.5;
    j(1, 1) = 1.5;
    EXPECT_THROW(Channel::from_choi(HermitianOperator(j, {2, 2}), 2, 2), ValidationError);
}

TEST(BornRule, MatchedUnitaryGivesProbabilityOne) {
    random::Rng rng(12);
    const auto meb = verify::random_meb(rng, 3);
    const Scenario s = meb_scenario(meb, meb);
    for (std::size_t i = 0; i < 9; ++i) {
        const auto ch = Channel::from_unitary(meb.generators()[i]);
        EXPECT_NEAR(probability(s.testers()[0].element(outcome_label(0, i)), ch), 1.0, 1e-12);
    }
}

TEST(BornRule, AgreesWithDirectSimulation) {
    random::Rng rng(13);
    for (int t = 0; t < 100; ++t) {
        const std::size_t d_anc = verify::uniform(rng, 1, 3), d_in = verify::uniform(rng, 1, 3),
                          d_out = verify::uniform(rng, 1, 3);
        const fgur::Test test = verify::random_test(rng, 0, d_anc, d_in, d_out, 3);
        const Tester tester = tester_from_test(test);
        const auto ch = random::random_kraus_channel(rng, d_in, d_out, (d_in + d_out - 1) / d_out + 1);
        // third route: Kraus operators applied to the physical input
        const ComplexMatrix out = oracle::apply_extended(ch.generators(), test.input_state().matrix(), int(d_anc));
        double total = 0.0;
        for (const auto& e : test.povm()) {
            const double p = probability(tester.element(e.label), ch);
            total += p;
            EXPECT_NEAR(p, direct_probability(test, e.label, ch), 1e-10);
            EXPECT_NEAR(p, (e.effect.matrix() * out).trace().real(), 1e-10);
        }
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
}

TEST(BornRule, IdentityChannelOnProductState) {
    const auto e00 = KetVector::basis({2, 2}, 0).projector();
    std::vector<LabeledEffect> povm{{"hit", e00}, {"miss", HermitianOperator::identity({2, 2}) - e00}};
    const fgur::Test test(e00, povm, 2, 2, 2);
    const auto id = Channel::from_unitary(ComplexMatrix::Identity(2, 2));
    EXPECT_NEAR(direct_probability(test, "hit", id), 1.0, 1e-14);
    EXPECT_NEAR(probability(tester_from_test(test).element("hit"), id), 1.0, 1e-14);
}

TEST(BornRule, ConstantChannelFactorizes) {
    random::Rng rng(14);
    const auto rho = random::random_state(rng, {2, 2});
    const auto sigma = random::random_state(rng, {3});
    const auto povm = random::random_povm(rng, {2, 3}, 3);
    const fgur::Test test(rho, labeled(povm), 2, 2, 3);
    const auto ch = Channel::constant(2, sigma);
    const ComplexMatrix out = kron(trace_right(rho.matrix(), 2, 2), sigma.matrix());
    for (std::size_t i = 0; i < povm.size(); ++i)
        EXPECT_NEAR(direct_probability(test, "x" + std::to_string(i), ch), (povm[i].matrix() * out).trace().real(),
                    1e-12);
}

TEST(BornRule, ClampsNoiseButRejectsLargeDeviations) {
    const auto id = Channel::from_unitary(ComplexMatrix::Identity(2, 2));
    // tr[P+ J_id] = d = 2
    const auto p_plus = maximally_entangled(2, true);
    EXPECT_EQ(probability((0.5 * (1.0 + 5e-10)) * p_plus, id), 1.0);
    EXPECT_THROW(probability(p_plus, id), ValidationError);
    EXPECT_THROW(probability(HermitianOperator::identity({3, 2}), id), DimensionError);
}

TEST(ScenarioType, Invariants) {
    random::Rng rng(15);
    auto t0 = verify::random_test(rng, 0, 1, 2, 2, 2);
    auto t1 = verify::random_test(rng, 1, 1, 2, 2, 2);
    EXPECT_NO_THROW(Scenario({t0, t1}, {0.25, 0.75}));
    EXPECT_THROW(Scenario({t0, t1}, {0.5, 0.6}), ValidationError);
    EXPECT_THROW(Scenario({t0, t1}, {1.5, -0.5}), ValidationError);
    EXPECT_THROW(Scenario({t0, t1}, {1.0}), ValidationError);
    EXPECT_THROW(Scenario({t0, t0}, {0.5, 0.5}), ValidationError);  // shared labels
    auto t2 = verify::random_test(rng, 2, 1, 3, 2, 2);
    EXPECT_THROW(Scenario({t0, t2}, {0.5, 0.5}), DimensionError);
    EXPECT_THROW(Scenario({}, {}), ValidationError);
}

TEST(Sampling, DeterministicAndReproducible) {
    const auto [phi1, phi2] = mub_meb_pair_2qubit();
    const Scenario s = meb_scenario(phi1, phi1, {1.0, 0.0});
    (void)phi2;
    const auto ch = Channel::from_unitary(phi1.generators()[2]);
    const auto hist = sample_run(s, ch, 1000, 3);
    ASSERT_EQ(hist.size(), 1u);
    EXPECT_EQ(hist.begin()->first, outcome_label(0, 2));
    EXPECT_EQ(hist.begin()->second, 1000u);
    EXPECT_EQ(sample_run(s, ch, 1, 9).size(), 1u);
    EXPECT_THROW(sample_run(s, ch, 0, 1), ValidationError);

    random::Rng rng(16);
    const Scenario r = verify::random_scenario(rng, {2, 2, 2, 2, 3});
    const auto ch2 = random::random_kraus_channel(rng, 2, 2, 2);
    EXPECT_EQ(sample_run(r, ch2, 5000, 42), sample_run(r, ch2, 5000, 42));
}

TEST(Sampling, FrequenciesWithinFourSigma) {
    random::Rng rng(17);
    const Scenario s = verify::random_scenario(rng, {2, 2, 2, 2, 3});
    const auto ch = random::random_kraus_channel(rng, 2, 2, 3);
    const std::uint64_t n = 100000;
    const auto hist = sample_run(s, ch, n, 5);
    std::uint64_t total = 0;
    for (const auto& [label, k] : hist) total += k;
    EXPECT_EQ(total, n);
    for (std::size_t l = 0; l < s.size(); ++l)
        for (const auto& e : s.testers()[l].elements()) {
            const double p = s.weights()[l] * probability(e.effect, ch);
            const double sigma = std::sqrt(p * (1 - p) / double(n));
            const auto it = hist.find(e.label);
            const double f = it == hist.end() ? 0.0 : double(it->second) / double(n);
            EXPECT_LE(std::abs(f - p), 4 * sigma + 1e-12) << e.label;
        }
}

TEST(ChannelType, PauliConjugation) {
    const auto ch = Channel::from_unitary(pauli_x());
    const ComplexMatrix zero = KetVector::basis({2}, 0).projector().matrix();
    EXPECT_LE(max_abs_diff(ch.apply(zero), KetVector::basis({2}, 1).projector().matrix()), 1e-15);
}
