#pragma once

// Random samplers for states, unitaries, POVMs and channels. All samplers take
// the generator by reference so callers own seeding.

#include <random>
#include <vector>

#include "fgur/tester.hpp"

namespace fgur::random {

using Rng = std::mt19937_64;

inline ComplexMatrix gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> n(0.0, 1.0);
    ComplexMatrix g(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) g(r, c) = Complex(n(rng), n(rng));
    return g;
}

/// Isometry (rows >= cols) from QR of a complex Gaussian block with the phases
/// of R's diagonal absorbed, which makes the distribution Haar.
inline ComplexMatrix random_isometry(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    const ComplexMatrix g = gaussian_matrix(rng, rows, cols);
    Eigen::HouseholderQR<ComplexMatrix> qr(g);
    ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(rows, cols);
    const ComplexMatrix& r = qr.matrixQR();
    for (Eigen::Index k = 0; k < cols; ++k) {
        const double a = std::abs(r(k, k));
        if (a > 0.0) q.col(k) *= r(k, k) / a;
    }
    return q;
}

inline ComplexMatrix random_unitary(Rng& rng, std::size_t d) {
    const auto n = static_cast<Eigen::Index>(d);
    return random_isometry(rng, n, n);
}

inline KetVector random_ket(Rng& rng, Dims dims) {
    const auto n = static_cast<Eigen::Index>(dims_product(dims));
    ComplexVector v = gaussian_matrix(rng, n, 1).col(0);
    return KetVector(v / v.norm(), std::move(dims));
}

/// Random density matrix of the given rank (0 means full rank), G G^dagger / tr.
inline HermitianOperator random_state(Rng& rng, Dims dims, std::size_t rank = 0) {
    const auto n = static_cast<Eigen::Index>(dims_product(dims));
    const auto k = rank == 0 ? n : static_cast<Eigen::Index>(rank);
    const ComplexMatrix g = gaussian_matrix(rng, n, k);
    ComplexMatrix rho = g * g.adjoint();
    rho /= rho.trace().real();
    return HermitianOperator::hermitian_part(std::move(rho), std::move(dims));
}

/// Random positive semidefinite matrix with unit operator norm.
inline HermitianOperator random_psd(Rng& rng, Dims dims, std::size_t rank = 0) {
    HermitianOperator s = random_state(rng, dims, rank);
    const double top = operator_norm(s);
    return HermitianOperator::hermitian_part(s.matrix() / top, s.dims());
}

inline ComplexMatrix inverse_sqrt_psd(const ComplexMatrix& m) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m);
    const RealVector inv = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().adjoint();
}

/// Random POVM with `outcomes` effects: E_x = S^{-1/2} G_x G_x^dagger S^{-1/2}.
inline std::vector<HermitianOperator> random_povm(Rng& rng, Dims dims, std::size_t outcomes) {
    const auto n = static_cast<Eigen::Index>(dims_product(dims));
    std::vector<ComplexMatrix> raw;
    ComplexMatrix total = ComplexMatrix::Zero(n, n);
    for (std::size_t x = 0; x < outcomes; ++x) {
        const ComplexMatrix g = gaussian_matrix(rng, n, n);
        raw.push_back(g * g.adjoint());
        total += raw.back();
    }
    const ComplexMatrix w = inverse_sqrt_psd(total);
    std::vector<HermitianOperator> out;
    for (const auto& r : raw) out.push_back(HermitianOperator::hermitian_part(w * r * w, dims));
    return out;
}

/// Rank-one PVM from the columns of a Haar-random unitary.
inline std::vector<HermitianOperator> random_pvm(Rng& rng, Dims dims) {
    const auto d = dims_product(dims);
    const ComplexMatrix u = random_unitary(rng, d);
    std::vector<HermitianOperator> out;
    for (Eigen::Index k = 0; k < u.cols(); ++k)
        out.push_back(HermitianOperator::hermitian_part(u.col(k) * u.col(k).adjoint(), dims));
    return out;
}

/// Channel with `kraus_rank` Kraus operators read off a Haar isometry
/// in -> out (x) env (Stinespring dilation).
inline Channel random_kraus_channel(Rng& rng, std::size_t d_in, std::size_t d_out, std::size_t kraus_rank) {
    const auto di = static_cast<Eigen::Index>(d_in);
    const auto dout = static_cast<Eigen::Index>(d_out);
    const auto k = static_cast<Eigen::Index>(kraus_rank);
    if (d_in == 0 || d_out == 0 || dout * k < di)
        throw DimensionError("random_kraus_channel: need d_out * rank >= d_in > 0");
    const ComplexMatrix v = random_isometry(rng, dout * k, di);
    std::vector<ComplexMatrix> kraus;
    for (Eigen::Index e = 0; e < k; ++e) {
        ComplexMatrix ke(dout, di);
        for (Eigen::Index o = 0; o < dout; ++o) ke.row(o) = v.row(o * k + e);
        kraus.push_back(std::move(ke));
    }
    return Channel::from_kraus(kraus);
}

inline Channel random_unitary_channel(Rng& rng, std::size_t d) { return Channel::from_unitary(random_unitary(rng, d)); }

}  // namespace fgur::random
