#pragma once

// Linear optimization over all channels:
//
//   primal   maximize tr[M J]   s.t.  J >= 0,  tr_out J = I_in
//   dual     minimize tr Y      s.t.  Y (x) I_out - M >= 0
//
// solved with a feasible-start primal-dual interior-point method (HKM search
// direction, Mehrotra predictor-corrector). Every iterate is turned into an
// exactly feasible (J, Y) pair, so the reported gap is a certificate:
// value <= optimum <= dual_value.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fgur/random.hpp"
#include "fgur/tester.hpp"

namespace fgur {

struct SolverOptions {
    double tol = 1e-6;
    std::size_t max_iterations = 100000;
    /// Keep a copy of every certified iterate in ChannelOptResult::iterates.
    bool record_iterates = false;
};

struct SolverIterate {
    std::size_t iteration;
    double primal;  // tr[M J] of the certified primal point
    double dual;    // tr Y of the certified dual point
    double mu;      // tr[J S] / n before projection
};

struct ChannelOptResult {
    double value;
    Channel optimizer;
    double dual_value;
    HermitianOperator dual_certificate;
    double gap;
    std::size_t iterations;
    std::vector<SolverIterate> iterates;
};

/// The solver could not certify the requested gap within its budget.
class SolverError : public Error {
public:
    SolverError(const std::string& what, double best_primal, double best_dual)
        : Error(what), best_primal_(best_primal), best_dual_(best_dual) {}
    double best_primal() const noexcept { return best_primal_; }
    double best_dual() const noexcept { return best_dual_; }

private:
    double best_primal_;
    double best_dual_;
};

struct DualBound {
    bool feasible;
    double value;           // tr Y (meaningful only when feasible)
    double min_eigenvalue;  // of Y (x) I_out - M
};

namespace detail {

inline ComplexMatrix identity(std::size_t d) {
    return ComplexMatrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
}

inline ComplexMatrix herm(const ComplexMatrix& m) { return 0.5 * (m + m.adjoint()); }

// Orthonormal basis (real Hilbert-Schmidt product) of d x d Hermitian matrices.
inline std::vector<ComplexMatrix> hermitian_basis(std::size_t d) {
    std::vector<ComplexMatrix> basis;
    const auto n = static_cast<Eigen::Index>(d);
    const double s = 1.0 / std::sqrt(2.0);
    for (Eigen::Index k = 0; k < n; ++k) {
        ComplexMatrix b = ComplexMatrix::Zero(n, n);
        b(k, k) = 1.0;
        basis.push_back(std::move(b));
    }
    for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index l = k + 1; l < n; ++l) {
            ComplexMatrix re = ComplexMatrix::Zero(n, n);
            re(k, l) = s;
            re(l, k) = s;
            basis.push_back(std::move(re));
            ComplexMatrix im = ComplexMatrix::Zero(n, n);
            im(k, l) = Complex(0.0, -s);
            im(l, k) = Complex(0.0, s);
            basis.push_back(std::move(im));
        }
    return basis;
}

// Largest alpha with x + alpha * dx >= 0 (infinity if unbounded). x must be positive definite.
inline double max_step(const ComplexMatrix& x, const ComplexMatrix& dx) {
    Eigen::LLT<ComplexMatrix> llt(x);
    if (llt.info() != Eigen::Success) return 0.0;
    const auto& l = llt.matrixL();
    ComplexMatrix t = l.solve(dx);
    t = l.solve(t.adjoint()).adjoint();
    const double lo = min_eigenvalue(herm(t));
    return lo >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lo;
}

inline ComplexMatrix inverse_sqrt(const ComplexMatrix& m) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m);
    const RealVector inv = es.eigenvalues().cwiseSqrt().cwiseInverse();
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().adjoint();
}

struct CertifiedPair {
    ComplexMatrix choi;
    ComplexMatrix y;
    double primal;
    double dual;
    double gap() const { return dual - primal; }
};

// Rescales J by congruence so that tr_out J = I exactly, and shifts Y by a
// multiple of the identity until Y (x) I - M >= 0.
inline std::optional<CertifiedPair> certify(const ComplexMatrix& m, const ComplexMatrix& j, const ComplexMatrix& y,
                                            std::size_t d_in, std::size_t d_out) {
    const ComplexMatrix r = herm(trace_right(j, d_in, d_out));
    if (min_eigenvalue(r) <= 0.0) return std::nullopt;
    const ComplexMatrix w = kron(inverse_sqrt(r), identity(d_out));
    ComplexMatrix jc = herm(w * j * w);
    ComplexMatrix yc = herm(y);
    const double lo = min_eigenvalue(herm(kron(yc, identity(d_out)) - m));
    if (lo < 0.0) yc -= lo * identity(d_in);
    const double primal = (m.cwiseProduct(jc.transpose())).sum().real();
    const double dual = yc.trace().real();
    if (!std::isfinite(primal) || !std::isfinite(dual)) return std::nullopt;
    return CertifiedPair{std::move(jc), std::move(yc), primal, dual};
}

struct Direction {
    ComplexMatrix dj, dy, ds;
};

class InteriorPoint {
public:
    InteriorPoint(const ComplexMatrix& m, std::size_t d_in, std::size_t d_out)
        : m_(m), d_in_(d_in), d_out_(d_out), n_(d_in * d_out), basis_(hermitian_basis(d_in)) {
        const double scale = m.size() ? std::max(std::abs(min_eigenvalue(m)), std::abs(max_eigenvalue(m))) : 0.0;
        j_ = identity(n_) / static_cast<double>(d_out);
        y_ = (scale + 1.0) * identity(d_in);
        s_ = herm(kron(y_, identity(d_out)) - m_);
    }

    double mu() const { return (j_ * s_).trace().real() / static_cast<double>(n_); }
    const ComplexMatrix& j() const { return j_; }
    const ComplexMatrix& y() const { return y_; }

    // One predictor-corrector step; false if the step could not be taken.
    bool step() {
        Eigen::LLT<ComplexMatrix> s_llt(s_);
        if (s_llt.info() != Eigen::Success) return false;
        s_inv_ = s_llt.solve(identity(n_));
        rp_ = identity(d_in_) - herm(trace_right(j_, d_in_, d_out_));
        rd_ = m_ - kron(y_, identity(d_out_)) + s_;
        if (!build_schur()) return false;

        const double mu_now = mu();
        const ComplexMatrix js = j_ * s_;
        const Direction aff = direction(-js);
        const double ap_aff = std::min(1.0, max_step(j_, aff.dj));
        const double ad_aff = std::min(1.0, max_step(s_, aff.ds));
        const double mu_aff = ((j_ + ap_aff * aff.dj) * (s_ + ad_aff * aff.ds)).trace().real() / static_cast<double>(n_);
        const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu_now, 3.0), 0.0, 1.0);

        const ComplexMatrix rc = sigma * mu_now * identity(n_) - js - aff.dj * aff.ds;
        const Direction d = direction(rc);
        const double ap = std::min(1.0, 0.95 * max_step(j_, d.dj));
        const double ad = std::min(1.0, 0.95 * max_step(s_, d.ds));
        if (!(ap > 0.0) || !(ad > 0.0) || !d.dj.allFinite() || !d.dy.allFinite()) return false;
        j_ = herm(j_ + ap * d.dj);
        y_ = herm(y_ + ad * d.dy);
        s_ = herm(s_ + ad * d.ds);
        return true;
    }

private:
    bool build_schur() {
        const auto m = static_cast<Eigen::Index>(basis_.size());
        Eigen::MatrixXd h(m, m);
        std::vector<ComplexMatrix> reduced(basis_.size());
        for (Eigen::Index l = 0; l < m; ++l) {
            const ComplexMatrix g = j_ * kron(basis_[l], identity(d_out_)) * s_inv_;
            reduced[l] = trace_right(g, d_in_, d_out_);
        }
        for (Eigen::Index k = 0; k < m; ++k)
            for (Eigen::Index l = 0; l < m; ++l) h(k, l) = (basis_[k].cwiseProduct(reduced[l].transpose())).sum().real();
        h = 0.5 * (h + h.transpose()).eval();
        schur_ = h.ldlt();
        return schur_.info() == Eigen::Success;
    }

    // Newton direction for the complementarity target  dJ S + J dS = rc.
    Direction direction(const ComplexMatrix& rc) const {
        const ComplexMatrix rhs =
            herm(trace_right(rc * s_inv_ + j_ * rd_ * s_inv_, d_in_, d_out_)) - rp_;
        Eigen::VectorXd b(static_cast<Eigen::Index>(basis_.size()));
        for (std::size_t k = 0; k < basis_.size(); ++k)
            b(static_cast<Eigen::Index>(k)) = (basis_[k].cwiseProduct(rhs.transpose())).sum().real();
        const Eigen::VectorXd x = schur_.solve(b);
        Direction d;
        d.dy = ComplexMatrix::Zero(static_cast<Eigen::Index>(d_in_), static_cast<Eigen::Index>(d_in_));
        for (std::size_t k = 0; k < basis_.size(); ++k) d.dy += x(static_cast<Eigen::Index>(k)) * basis_[k];
        d.ds = kron(d.dy, identity(d_out_)) - rd_;
        d.dj = herm(rc * s_inv_ - j_ * d.ds * s_inv_);
        return d;
    }

    ComplexMatrix m_;
    std::size_t d_in_, d_out_, n_;
    std::vector<ComplexMatrix> basis_;
    ComplexMatrix j_, y_, s_;
    ComplexMatrix s_inv_, rp_, rd_;
    Eigen::LDLT<Eigen::MatrixXd> schur_;
};

inline std::pair<std::size_t, std::size_t> split_dims(const HermitianOperator& m) {
    if (m.dims().size() != 2) throw DimensionError("objective must carry dims [d_in, d_out]");
    return {m.dims()[0], m.dims()[1]};
}

}  // namespace detail

/// Certified maximum of tr[M J] over Choi operators of channels in -> out.
inline ChannelOptResult maximize_over_channels(const HermitianOperator& m, std::size_t d_in, std::size_t d_out,
                                               const SolverOptions& options = {}) {
    if (!(options.tol > 0.0)) throw ValidationError("maximize_over_channels: tol must be positive");
    if (d_in == 0 || d_out == 0 || m.size() != d_in * d_out)
        throw DimensionError("maximize_over_channels: objective size does not match d_in * d_out");
    require_hermitian(m.matrix(), "maximize_over_channels");

    detail::InteriorPoint ipm(m.matrix(), d_in, d_out);
    std::optional<detail::CertifiedPair> best;
    std::vector<SolverIterate> trace;
    const double target = 1e-2 * options.tol;
    std::size_t iteration = 0;
    std::size_t since_improvement = 0;
    for (;; ++iteration) {
        if (auto pair = detail::certify(m.matrix(), ipm.j(), ipm.y(), d_in, d_out)) {
            if (options.record_iterates) trace.push_back({iteration, pair->primal, pair->dual, ipm.mu()});
            const bool strong = !best || pair->gap() < 0.9 * best->gap();
            if (!best || pair->gap() < best->gap()) best = std::move(pair);
            since_improvement = strong ? 0 : since_improvement + 1;
        }
        if (best && best->gap() <= target) break;
        if (iteration >= options.max_iterations || since_improvement > 25) break;
        if (!ipm.step()) break;
    }

    if (!best || best->gap() > options.tol) {
        const double p = best ? best->primal : std::numeric_limits<double>::quiet_NaN();
        const double d = best ? best->dual : std::numeric_limits<double>::quiet_NaN();
        throw SolverError("maximize_over_channels: gap " + std::to_string(d - p) + " exceeds tolerance after " +
                              std::to_string(iteration) + " iterations",
                          p, d);
    }
    // Weak duality makes the gap nonnegative up to rounding of the two traces.
    const double gap = std::max(0.0, best->gap());
    return ChannelOptResult{best->primal,
                            Channel::from_choi(HermitianOperator::hermitian_part(best->choi, {d_in, d_out}), d_in, d_out),
                            best->dual,
                            HermitianOperator::hermitian_part(best->y, {d_in}),
                            gap,
                            iteration,
                            std::move(trace)};
}

inline ChannelOptResult maximize_over_channels(const HermitianOperator& m, const SolverOptions& options = {}) {
    const auto [d_in, d_out] = detail::split_dims(m);
    return maximize_over_channels(m, d_in, d_out, options);
}

/// tr Y is an upper bound on the primal optimum whenever Y (x) I_out >= M.
inline DualBound dual_bound(const HermitianOperator& m, const HermitianOperator& y, std::size_t d_out) {
    if (y.size() * d_out != m.size()) throw DimensionError("dual_bound: Y must act on the input space");
    const double lo = min_eigenvalue(kron(y.matrix(), detail::identity(d_out)) - m.matrix());
    return DualBound{lo >= -1e-8, y.real_trace(), lo};
}

struct SampledBound {
    double value;
    Channel channel;
};

/// Best tr[M J] over `samples` random channels: even draws are Stinespring
/// isometries of minimal Kraus rank (unitary channels when d_in = d_out), odd
/// draws use a uniformly random Kraus rank.
inline SampledBound random_channel_lower_bound(const HermitianOperator& m, std::size_t d_in, std::size_t d_out,
                                               std::size_t samples, std::uint64_t seed) {
    if (samples == 0) throw ValidationError("random_channel_lower_bound: at least one sample is required");
    if (m.size() != d_in * d_out) throw DimensionError("random_channel_lower_bound: objective size mismatch");
    random::Rng rng(seed);
    const std::size_t k_min = (d_in + d_out - 1) / d_out;
    const std::size_t k_max = std::max(k_min, d_in * d_out);
    std::uniform_int_distribution<std::size_t> pick_rank(k_min, k_max);
    const auto di = static_cast<Eigen::Index>(d_in);
    const auto dout = static_cast<Eigen::Index>(d_out);

    double best = -std::numeric_limits<double>::infinity();
    std::vector<ComplexMatrix> best_kraus;
    for (std::size_t s = 0; s < samples; ++s) {
        const auto k = static_cast<Eigen::Index>(s % 2 == 0 ? k_min : pick_rank(rng));
        const ComplexMatrix v = random::random_isometry(rng, dout * k, di);
        std::vector<ComplexMatrix> kraus;
        double value = 0.0;
        for (Eigen::Index e = 0; e < k; ++e) {
            ComplexMatrix ke(dout, di);
            for (Eigen::Index o = 0; o < dout; ++o) ke.row(o) = v.row(o * k + e);
            const ComplexVector w = choi_vector(ke);
            value += w.dot(m.matrix() * w).real();
            kraus.push_back(std::move(ke));
        }
        if (value > best) {
            best = value;
            best_kraus = std::move(kraus);
        }
    }
    return SampledBound{best, Channel::from_kraus(best_kraus)};
}

}  // namespace fgur
