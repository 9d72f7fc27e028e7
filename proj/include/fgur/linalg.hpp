#pragma once

// Dense complex linear algebra for small multi-partite systems.
//
// Tensor-order convention: in every product space the left factor is the slow
// index, i.e. basis state (a, i) of A (x) B sits at position a * dim(B) + i.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fgur/errors.hpp"

namespace fgur {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Dims = std::vector<std::size_t>;

namespace tolerance {
inline constexpr double hermitian = 1e-10;
inline constexpr double psd = 1e-9;
inline constexpr double equality = 1e-9;
inline constexpr double unit_trace = 1e-10;
}  // namespace tolerance

inline std::size_t dims_product(const Dims& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string dims_string(const Dims& dims) {
    std::ostringstream os;
    os << '[';
    for (std::size_t k = 0; k < dims.size(); ++k) os << (k ? "," : "") << dims[k];
    os << ']';
    return os.str();
}

inline bool all_finite(const ComplexMatrix& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            if (!std::isfinite(m(r, c).real()) || !std::isfinite(m(r, c).imag())) return false;
    return true;
}

/// Largest entrywise modulus of a - b.
inline double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError("max_abs_diff: shape mismatch");
    if (a.size() == 0) return 0.0;
    return (a - b).cwiseAbs().maxCoeff();
}

inline double hermiticity_defect(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) throw DimensionError("hermiticity_defect: matrix is not square");
    return max_abs_diff(m, m.adjoint());
}

/// Raw Kronecker product; the left operand is the slow index.
inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// Square matrix tagged with the dimensions of its tensor factors.
class Operator {
public:
    Operator(ComplexMatrix matrix, Dims dims) : matrix_(std::move(matrix)), dims_(std::move(dims)) {
        if (matrix_.rows() != matrix_.cols())
            throw DimensionError("Operator: matrix must be square");
        if (dims_.empty()) dims_ = {static_cast<std::size_t>(matrix_.rows())};
        if (dims_product(dims_) != static_cast<std::size_t>(matrix_.rows()))
            throw DimensionError("Operator: dims " + dims_string(dims_) + " do not match size " +
                                 std::to_string(matrix_.rows()));
        if (!all_finite(matrix_)) throw ValidationError("Operator: non-finite entry");
    }
    explicit Operator(ComplexMatrix matrix) : Operator(std::move(matrix), Dims{}) {}

    const ComplexMatrix& matrix() const noexcept { return matrix_; }
    const Dims& dims() const noexcept { return dims_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
    Complex trace() const { return matrix_.trace(); }

protected:
    ComplexMatrix matrix_;
    Dims dims_;
};

/// Operator with M = M^dagger. Construction checks the defect against
/// tolerance::hermitian and then stores the exact Hermitian part.
class HermitianOperator : public Operator {
public:
    HermitianOperator(ComplexMatrix matrix, Dims dims) : Operator(std::move(matrix), std::move(dims)) {
        const double defect = hermiticity_defect(matrix_);
        if (defect > tolerance::hermitian)
            throw ValidationError("HermitianOperator: Hermiticity defect " + std::to_string(defect));
        symmetrize();
    }
    explicit HermitianOperator(ComplexMatrix matrix) : HermitianOperator(std::move(matrix), Dims{}) {}

    /// Takes (M + M^dagger)/2 without checking; for values Hermitian by construction.
    static HermitianOperator hermitian_part(ComplexMatrix matrix, Dims dims) {
        ComplexMatrix h = 0.5 * (matrix + matrix.adjoint());
        return HermitianOperator(std::move(h), std::move(dims));
    }

    static HermitianOperator identity(Dims dims) {
        const auto n = static_cast<Eigen::Index>(dims_product(dims));
        return HermitianOperator(ComplexMatrix::Identity(n, n), std::move(dims));
    }

    static HermitianOperator zero(Dims dims) {
        const auto n = static_cast<Eigen::Index>(dims_product(dims));
        return HermitianOperator(ComplexMatrix::Zero(n, n), std::move(dims));
    }

    double real_trace() const { return matrix_.trace().real(); }

    HermitianOperator operator+(const HermitianOperator& o) const {
        if (o.size() != size()) throw DimensionError("HermitianOperator +: size mismatch");
        return hermitian_part(matrix_ + o.matrix_, dims_);
    }
    HermitianOperator operator-(const HermitianOperator& o) const {
        if (o.size() != size()) throw DimensionError("HermitianOperator -: size mismatch");
        return hermitian_part(matrix_ - o.matrix_, dims_);
    }
    friend HermitianOperator operator*(double s, const HermitianOperator& h) {
        return hermitian_part(s * h.matrix_, h.dims_);
    }

private:
    void symmetrize() {
        ComplexMatrix h = 0.5 * (matrix_ + matrix_.adjoint());
        matrix_ = std::move(h);
    }
};

/// Column state vector with subsystem dimensions.
class KetVector {
public:
    KetVector(ComplexVector amplitudes, Dims dims) : amps_(std::move(amplitudes)), dims_(std::move(dims)) {
        if (dims_.empty()) dims_ = {static_cast<std::size_t>(amps_.size())};
        if (dims_product(dims_) != static_cast<std::size_t>(amps_.size()))
            throw DimensionError("KetVector: dims " + dims_string(dims_) + " do not match length " +
                                 std::to_string(amps_.size()));
        if (!all_finite(amps_)) throw ValidationError("KetVector: non-finite amplitude");
    }
    explicit KetVector(ComplexVector amplitudes) : KetVector(std::move(amplitudes), Dims{}) {}

    static KetVector basis(Dims dims, std::size_t index) {
        const auto n = dims_product(dims);
        if (index >= n) throw DimensionError("KetVector::basis: index out of range");
        ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(n));
        v(static_cast<Eigen::Index>(index)) = 1.0;
        return KetVector(std::move(v), std::move(dims));
    }

    const ComplexVector& amplitudes() const noexcept { return amps_; }
    const Dims& dims() const noexcept { return dims_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(amps_.size()); }
    double norm() const { return amps_.norm(); }
    bool is_normalized(double tol = 1e-10) const { return std::abs(norm() - 1.0) <= tol; }

    KetVector normalized() const {
        const double n = norm();
        if (n == 0.0) throw ValidationError("KetVector::normalized: zero vector");
        return KetVector(amps_ / n, dims_);
    }

    /// <this|other>
    Complex inner(const KetVector& other) const {
        if (other.size() != size()) throw DimensionError("KetVector::inner: size mismatch");
        return amps_.dot(other.amps_);
    }

    /// |this><this|
    HermitianOperator projector() const {
        return HermitianOperator::hermitian_part(amps_ * amps_.adjoint(), dims_);
    }

private:
    ComplexVector amps_;
    Dims dims_;
};

inline Dims concat_dims(const Dims& a, const Dims& b) {
    Dims out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

inline Operator kron(const Operator& a, const Operator& b) {
    return Operator(kron(a.matrix(), b.matrix()), concat_dims(a.dims(), b.dims()));
}

inline HermitianOperator kron(const HermitianOperator& a, const HermitianOperator& b) {
    return HermitianOperator::hermitian_part(kron(a.matrix(), b.matrix()), concat_dims(a.dims(), b.dims()));
}

inline KetVector kron(const KetVector& a, const KetVector& b) {
    ComplexVector out(a.amplitudes().size() * b.amplitudes().size());
    const auto nb = b.amplitudes().size();
    for (Eigen::Index i = 0; i < a.amplitudes().size(); ++i)
        out.segment(i * nb, nb) = a.amplitudes()(i) * b.amplitudes();
    return KetVector(std::move(out), concat_dims(a.dims(), b.dims()));
}

namespace detail {

inline std::vector<std::size_t> strides_of(const Dims& dims) {
    std::vector<std::size_t> s(dims.size(), 1);
    for (std::size_t k = dims.size(); k-- > 1;) s[k - 1] = s[k] * dims[k];
    return s;
}

// Expands a flat index over `dims` into the flat index over the full space
// using `strides` selected for those subsystems.
inline std::size_t scatter(std::size_t flat, const Dims& dims, const std::vector<std::size_t>& strides) {
    std::size_t out = 0;
    for (std::size_t k = dims.size(); k-- > 0;) {
        out += (flat % dims[k]) * strides[k];
        flat /= dims[k];
    }
    return out;
}

}  // namespace detail

/// Traces out every subsystem not listed in `keep`. The result carries the kept
/// subsystems in their original order.
inline ComplexMatrix partial_trace(const ComplexMatrix& m, const Dims& dims, std::span<const std::size_t> keep) {
    if (dims_product(dims) != static_cast<std::size_t>(m.rows()) || m.rows() != m.cols())
        throw DimensionError("partial_trace: dims do not match matrix");
    std::vector<bool> kept(dims.size(), false);
    for (auto k : keep) {
        if (k >= dims.size()) throw DimensionError("partial_trace: subsystem index " + std::to_string(k) +
                                                   " out of range for dims " + dims_string(dims));
        if (kept[k]) throw DimensionError("partial_trace: duplicate subsystem index");
        kept[k] = true;
    }
    const auto full_strides = detail::strides_of(dims);
    Dims kd, td;
    std::vector<std::size_t> ks, ts;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (kept[k]) {
            kd.push_back(dims[k]);
            ks.push_back(full_strides[k]);
        } else {
            td.push_back(dims[k]);
            ts.push_back(full_strides[k]);
        }
    }
    const auto nk = dims_product(kd);
    const auto nt = dims_product(td);
    std::vector<std::size_t> koff(nk), toff(nt);
    for (std::size_t r = 0; r < nk; ++r) koff[r] = detail::scatter(r, kd, ks);
    for (std::size_t t = 0; t < nt; ++t) toff[t] = detail::scatter(t, td, ts);

    ComplexMatrix out = ComplexMatrix::Zero(static_cast<Eigen::Index>(nk), static_cast<Eigen::Index>(nk));
    for (std::size_t r = 0; r < nk; ++r)
        for (std::size_t c = 0; c < nk; ++c) {
            Complex acc = 0.0;
            for (std::size_t t = 0; t < nt; ++t)
                acc += m(static_cast<Eigen::Index>(koff[r] + toff[t]), static_cast<Eigen::Index>(koff[c] + toff[t]));
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = acc;
        }
    return out;
}

inline Dims kept_dims(const Dims& dims, std::span<const std::size_t> keep) {
    std::vector<std::size_t> sorted(keep.begin(), keep.end());
    std::sort(sorted.begin(), sorted.end());
    Dims out;
    for (auto k : sorted) out.push_back(dims.at(k));
    return out;
}

inline Operator partial_trace(const Operator& m, std::span<const std::size_t> keep) {
    ComplexMatrix out = partial_trace(m.matrix(), m.dims(), keep);
    return Operator(std::move(out), kept_dims(m.dims(), keep));
}

inline HermitianOperator partial_trace(const HermitianOperator& m, std::span<const std::size_t> keep) {
    ComplexMatrix out = partial_trace(m.matrix(), m.dims(), keep);
    return HermitianOperator::hermitian_part(std::move(out), kept_dims(m.dims(), keep));
}

inline HermitianOperator partial_trace(const HermitianOperator& m, std::initializer_list<std::size_t> keep) {
    return partial_trace(m, std::span<const std::size_t>(keep.begin(), keep.size()));
}

/// Bipartite shortcut: A (x) B -> tr_B, with the first factor of dimension `left`.
inline ComplexMatrix trace_right(const ComplexMatrix& m, std::size_t left, std::size_t right) {
    const std::size_t keep[] = {0};
    return partial_trace(m, Dims{left, right}, keep);
}

/// Bipartite shortcut: A (x) B -> tr_A.
inline ComplexMatrix trace_left(const ComplexMatrix& m, std::size_t left, std::size_t right) {
    const std::size_t keep[] = {1};
    return partial_trace(m, Dims{left, right}, keep);
}

/// Transpose in the computational basis.
inline HermitianOperator basis_transpose(const HermitianOperator& m) {
    return HermitianOperator::hermitian_part(m.matrix().transpose(), m.dims());
}

inline Operator basis_transpose(const Operator& m) { return Operator(m.matrix().transpose(), m.dims()); }

/// Complex conjugate in the computational basis.
inline KetVector conjugate_ket(const KetVector& v) { return KetVector(v.amplitudes().conjugate(), v.dims()); }

struct Eigensystem {
    RealVector values;                 // ascending
    std::vector<KetVector> vectors;    // orthonormal, vectors[k] pairs with values[k]
};

inline void require_hermitian(const ComplexMatrix& m, const char* where) {
    const double defect = hermiticity_defect(m);
    if (defect > tolerance::hermitian)
        throw ValidationError(std::string(where) + ": input is not Hermitian (defect " + std::to_string(defect) + ")");
}

inline Eigensystem eig_hermitian(const HermitianOperator& m) {
    require_hermitian(m.matrix(), "eig_hermitian");
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(m.matrix());
    if (solver.info() != Eigen::Success) throw ValidationError("eig_hermitian: eigensolver failed");
    Eigensystem out{solver.eigenvalues(), {}};
    out.vectors.reserve(static_cast<std::size_t>(m.matrix().rows()));
    for (Eigen::Index k = 0; k < m.matrix().cols(); ++k)
        out.vectors.emplace_back(solver.eigenvectors().col(k), m.dims());
    return out;
}

/// Ascending eigenvalues of a Hermitian matrix given as raw storage.
inline RealVector eigenvalues_hermitian(const ComplexMatrix& m) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(m, Eigen::EigenvaluesOnly);
    return solver.eigenvalues();
}

inline double min_eigenvalue(const ComplexMatrix& m) {
    if (m.size() == 0) return 0.0;
    return eigenvalues_hermitian(m)(0);
}

inline double max_eigenvalue(const ComplexMatrix& m) {
    if (m.size() == 0) return 0.0;
    const auto ev = eigenvalues_hermitian(m);
    return ev(ev.size() - 1);
}

/// Operator norm. For positive operators this is the largest eigenvalue;
/// `require_psd` enforces positivity within tolerance::psd.
inline double operator_norm(const HermitianOperator& m, bool require_psd = false) {
    const auto ev = eigenvalues_hermitian(m.matrix());
    if (ev.size() == 0) return 0.0;
    if (require_psd && ev(0) < -tolerance::psd)
        throw PositivityError("operator_norm: smallest eigenvalue " + std::to_string(ev(0)) + " is negative");
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

/// |Psi_+> = d^{-1/2} sum_i |i>|i> on C^d (x) C^d.
inline KetVector maximally_entangled_ket(std::size_t d) {
    if (d == 0) throw DimensionError("maximally_entangled_ket: d must be positive");
    ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(d * d));
    const double amp = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < d; ++i) v(static_cast<Eigen::Index>(i * d + i)) = amp;
    return KetVector(std::move(v), Dims{d, d});
}

/// P'_+ = sum_ij |i><j| (x) |i><j| when `normalized` is false, otherwise P_+ = P'_+ / d.
inline HermitianOperator maximally_entangled(std::size_t d, bool normalized) {
    if (d == 0) throw DimensionError("maximally_entangled: d must be positive");
    const auto n = static_cast<Eigen::Index>(d * d);
    ComplexMatrix p = ComplexMatrix::Zero(n, n);
    const double v = normalized ? 1.0 / static_cast<double>(d) : 1.0;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) p(static_cast<Eigen::Index>(i * d + i), static_cast<Eigen::Index>(j * d + j)) = v;
    return HermitianOperator(std::move(p), Dims{d, d});
}

/// U with (I (x) U)|Psi_+> = |psi> for a maximally entangled ket on C^d (x) C^d:
/// U(o, a) = sqrt(d) <a (x) o|psi>. Unitary exactly when psi is maximally entangled.
inline ComplexMatrix generator_of(const KetVector& psi) {
    const auto d = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(psi.size()))));
    if (d * d != psi.size()) throw DimensionError("generator_of: ket does not live on C^d (x) C^d");
    const auto n = static_cast<Eigen::Index>(d);
    const double s = std::sqrt(static_cast<double>(d));
    ComplexMatrix u(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index o = 0; o < n; ++o) u(o, a) = s * psi.amplitudes()(a * n + o);
    return u;
}

/// (I (x) U)|Psi_+>
inline KetVector ket_from_generator(const ComplexMatrix& u) {
    const auto d = static_cast<std::size_t>(u.rows());
    if (u.rows() != u.cols()) throw DimensionError("ket_from_generator: U must be square");
    ComplexVector v(u.rows() * u.rows());
    const double s = 1.0 / std::sqrt(static_cast<double>(d));
    for (Eigen::Index a = 0; a < u.rows(); ++a)
        for (Eigen::Index o = 0; o < u.rows(); ++o) v(a * u.rows() + o) = s * u(o, a);
    return KetVector(std::move(v), Dims{d, d});
}

/// Outcome of a structural check: empty `violations` means the object passed.
struct ValidationReport {
    std::vector<std::string> violations;
    double worst_residual = 0.0;

    bool ok() const noexcept { return violations.empty(); }
    explicit operator bool() const noexcept { return ok(); }

    void add(std::string what, double residual) {
        violations.push_back(std::move(what));
        worst_residual = std::max(worst_residual, residual);
    }
    void note(double residual) { worst_residual = std::max(worst_residual, residual); }
};

inline ValidationReport validate_povm(std::span<const HermitianOperator> effects) {
    ValidationReport report;
    if (effects.empty()) {
        report.add("POVM has no effects", 1.0);
        return report;
    }
    const auto& dims = effects.front().dims();
    ComplexMatrix sum = ComplexMatrix::Zero(effects.front().matrix().rows(), effects.front().matrix().cols());
    for (std::size_t k = 0; k < effects.size(); ++k) {
        if (effects[k].dims() != dims) {
            report.add("effect " + std::to_string(k) + " has dims " + dims_string(effects[k].dims()) +
                           ", expected " + dims_string(dims),
                       1.0);
            return report;
        }
        const double lo = min_eigenvalue(effects[k].matrix());
        if (lo < -tolerance::psd)
            report.add("effect " + std::to_string(k) + " is not positive (min eigenvalue " + std::to_string(lo) + ")",
                       -lo);
        else
            report.note(std::max(0.0, -lo));
        sum += effects[k].matrix();
    }
    const double defect = max_abs_diff(sum, ComplexMatrix::Identity(sum.rows(), sum.cols()));
    if (defect > tolerance::equality)
        report.add("effects do not sum to identity (residual " + std::to_string(defect) + ")", defect);
    else
        report.note(defect);
    return report;
}

inline ValidationReport validate_state(const HermitianOperator& rho) {
    ValidationReport report;
    const double lo = min_eigenvalue(rho.matrix());
    if (lo < -tolerance::psd)
        report.add("state is not positive (min eigenvalue " + std::to_string(lo) + ")", -lo);
    else
        report.note(std::max(0.0, -lo));
    const double tr_defect = std::abs(rho.real_trace() - 1.0);
    if (tr_defect > tolerance::unit_trace)
        report.add("state trace differs from 1 by " + std::to_string(tr_defect), tr_defect);
    else
        report.note(tr_defect);
    return report;
}

inline void require_valid(const ValidationReport& report, const std::string& what) {
    if (report.ok()) return;
    std::string msg = what + ":";
    for (const auto& v : report.violations) msg += " " + v + ";";
    throw ValidationError(msg);
}

}  // namespace fgur
