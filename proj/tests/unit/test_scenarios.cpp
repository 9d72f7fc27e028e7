#include <gtest/gtest.h>

#include <cmath>

#include "fgur/bounds.hpp"
#include "fgur/random.hpp"
#include "fgur/scenarios.hpp"
#include "fgur/verify.hpp"

using namespace fgur;

namespace {

double gram_defect(const std::vector<KetVector>& kets) {
    double worst = 0.0;
    for (std::size_t i = 0; i < kets.size(); ++i)
        for (std::size_t j = 0; j < kets.size(); ++j)
            worst = std::max(worst, std::abs(kets[i].inner(kets[j]) - Complex(i == j ? 1.0 : 0.0)));
    return worst;
}

}  // namespace

TEST(Labels, Format) {
    EXPECT_EQ(outcome_label(0, 3), "x1_3");
    EXPECT_EQ(outcome_label(1, 0, 2), "x2_0_2");
}

TEST(BellBasis, OrthonormalAndMaximallyEntangled) {
    for (std::size_t d : {2u, 3u, 4u}) {
        const MEB m = generalized_bell_basis(d);
        ASSERT_EQ(m.kets().size(), d * d);
        EXPECT_LE(gram_defect(m.kets()), 1e-10);
        const auto n = Eigen::Index(d);
        for (std::size_t i = 0; i < d * d; ++i) {
            const ComplexMatrix rho = m.kets()[i].projector().matrix();
            EXPECT_LE(max_abs_diff(trace_right(rho, d, d), ComplexMatrix::Identity(n, n) / double(d)), 1e-12);
            EXPECT_LE(max_abs_diff(trace_left(rho, d, d), ComplexMatrix::Identity(n, n) / double(d)), 1e-12);
            const ComplexMatrix& u = m.generators()[i];
            EXPECT_LE(max_abs_diff(u.adjoint() * u, ComplexMatrix::Identity(n, n)), 1e-12);
        }
        EXPECT_LE(max_abs_diff(m.kets()[0].amplitudes(), maximally_entangled_ket(d).amplitudes()), 1e-12);
    }
    EXPECT_THROW(generalized_bell_basis(1), DimensionError);
}

TEST(MebType, RejectsBadInput) {
    auto kets = generalized_bell_basis(2).kets();
    kets[1] = kets[0];
    EXPECT_THROW(MEB::from_kets(kets), ValidationError);
    std::vector<KetVector> product;
    for (std::size_t k = 0; k < 4; ++k) product.push_back(KetVector::basis({2, 2}, k));
    EXPECT_THROW(MEB::from_kets(product), ValidationError);
    EXPECT_THROW(MEB::from_kets({KetVector::basis({2}, 0)}), DimensionError);
}

TEST(MubMebPair, TabulatedAmplitudesAndOverlaps) {
    const auto [phi1, phi2] = mub_meb_pair_2qubit();
    EXPECT_NEAR(std::abs(phi1.kets()[0].amplitudes()(3) + 0.5), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(phi2.kets()[2].amplitudes()(0) - Complex(0, 0.5)), 0.0, 1e-15);
    EXPECT_LE(gram_defect(phi1.kets()), 1e-12);
    EXPECT_LE(gram_defect(phi2.kets()), 1e-12);
    for (const auto& a : phi1.kets())
        for (const auto& b : phi2.kets()) EXPECT_NEAR(std::abs(a.inner(b)), 0.5, 1e-12);
}

TEST(MubBases, UnbiasedForPrimes) {
    for (std::size_t d : {2u, 3u, 5u, 7u}) {
        const auto family = mub_bases(d);
        ASSERT_EQ(family.size(), d + 1);
        for (std::size_t a = 0; a < family.size(); ++a) {
            EXPECT_LE(gram_defect(family[a]), 1e-12);
            for (std::size_t b = a + 1; b < family.size(); ++b)
                for (const auto& u : family[a])
                    for (const auto& v : family[b]) EXPECT_NEAR(std::abs(u.inner(v)), 1.0 / std::sqrt(double(d)), 1e-12);
        }
    }
    EXPECT_THROW(mub_bases(4), UnsupportedError);
    EXPECT_THROW(mub_bases(1), UnsupportedError);
}

TEST(FourierPair, UnbiasedForEveryDimension) {
    for (std::size_t d = 1; d <= 6; ++d) {
        const auto p = fourier_pair(d);
        EXPECT_LE(gram_defect(p[1]), 1e-12);
        for (const auto& u : p[0])
            for (const auto& v : p[1]) EXPECT_NEAR(std::abs(u.inner(v)), 1.0 / std::sqrt(double(d)), 1e-12);
    }
    EXPECT_THROW(fourier_pair(0), DimensionError);
}

TEST(Phase, FixKeepsProjector) {
    random::Rng rng(51);
    for (int t = 0; t < 10; ++t) {
        const auto k = random::random_ket(rng, {3});
        const auto f = fix_global_phase(k);
        EXPECT_NEAR(f.amplitudes()(0).imag(), 0.0, 1e-15);
        EXPECT_GT(f.amplitudes()(0).real(), 0.0);
        EXPECT_LE(max_abs_diff(f.projector().matrix(), k.projector().matrix()), 1e-14);
    }
    ComplexVector v = ComplexVector::Zero(2);
    v(1) = Complex(0, -1);
    EXPECT_NEAR(std::abs(fix_global_phase(KetVector(v)).amplitudes()(1) - 1.0), 0.0, 1e-15);
}

TEST(Phase, BoundsIgnoreKetPhases) {
    random::Rng rng(52);
    const MEB a = verify::random_meb(rng, 2), b = verify::random_meb(rng, 2);
    std::vector<KetVector> rephased;
    for (const auto& k : b.kets()) rephased.emplace_back(k.amplitudes() * std::polar(1.0, 1.234), k.dims());
    const Scenario s1 = meb_scenario(a, b), s2 = meb_scenario(a, MEB::from_kets(rephased));
    for (const auto& c : all_combinations(s1)) EXPECT_NEAR(upper_bound(s1, c), upper_bound(s2, c), 1e-12);
}

TEST(RotateOutput, ConjugatesByUnitary) {
    random::Rng rng(53);
    const MEB m = generalized_bell_basis(3);
    const ComplexMatrix v = random::random_unitary(rng, 3);
    const MEB r = rotate_output(m, v);
    const ComplexMatrix w = kron(ComplexMatrix::Identity(3, 3), v);
    for (std::size_t i = 0; i < 9; ++i)
        EXPECT_LE(max_abs_diff(r.kets()[i].projector().matrix(), w * m.kets()[i].projector().matrix() * w.adjoint()),
                  1e-12);
}

TEST(MebScenario, UpperAtMostOne) {
    random::Rng rng(54);
    for (std::size_t d : {2u, 3u}) {
        const Scenario s = meb_scenario(verify::random_meb(rng, d), verify::random_meb(rng, d));
        for (const auto& c : all_combinations(s)) EXPECT_LE(upper_bound(s, c), 1.0 + 1e-12);
    }
    EXPECT_THROW(meb_scenario(generalized_bell_basis(2), generalized_bell_basis(3)), DimensionError);
    EXPECT_THROW(meb_scenario(std::vector<MEB>{}, {}), ValidationError);
}

TEST(Builders, RejectBadInput) {
    const auto b2 = fourier_basis(2), b3 = fourier_basis(3);
    EXPECT_THROW(example1_scenario(KetVector::basis({2}, 0), KetVector::basis({3}, 0), b2, b2), DimensionError);
    EXPECT_THROW(example1_scenario(KetVector::basis({2}, 0), KetVector::basis({2}, 0), b2, b3), DimensionError);
    ComplexVector half = ComplexVector::Zero(2);
    half(0) = 0.5;
    EXPECT_THROW(example1_scenario(KetVector(half), KetVector::basis({2}, 0), b2, b2), ValidationError);
    EXPECT_THROW(state_measurement_scenario(std::vector<Basis>{b2, b3}, {0.5, 0.5}), DimensionError);
    EXPECT_THROW(state_measurement_scenario(std::vector<std::vector<HermitianOperator>>{{}}, {1.0}), ValidationError);
    const Scenario s = example2_scenario(3, fourier_pair(3), fourier_pair(3));
    EXPECT_EQ(s.d_in(), 3u);
    EXPECT_EQ(s.d_out(), 3u);
    EXPECT_EQ(combination_count(s), 81u);
}
