#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "cmsdr/errors.hpp"
#include "cmsdr/random.hpp"
#include "cmsdr/signal.hpp"

namespace cmsdr {

enum class EstimateSource { PrincipalComponent, Randomized, DirectFromBlock };

struct EqualizerEstimate {
    Eigen::VectorXcd w;
    double cm_value = 0.0;
    EstimateSource source = EstimateSource::PrincipalComponent;
    int source_index = -1;  // candidate index for Randomized
};

struct PrincipalComponentResult {
    Eigen::VectorXcd w;
    bool degenerate = false;  // W was (numerically) zero
};

// sqrt(lambda_1) times the top eigenvector, with the phase pinned so the
// first nonnegligible component is real positive.
inline PrincipalComponentResult principal_component(const Eigen::MatrixXcd& W, double psd_tol = 1e-8) {
    const int d = static_cast<int>(W.rows());
    if (W.cols() != d || d == 0) throw ValueError("principal_component needs a square matrix");
    const double scale = std::max(1.0, W.norm());
    if ((W - W.adjoint()).norm() > 1e-8 * scale) throw ValueError("matrix is not Hermitian");
    Eigen::MatrixXcd h = 0.5 * (W + W.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h);
    if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    const double lmax = eig.eigenvalues()(d - 1);
    const double lmin = eig.eigenvalues()(0);
    if (lmin < -psd_tol * std::max(1.0, lmax))
        throw ValueError("matrix is not PSD within tolerance");
    if (lmax <= 0.0) return {Eigen::VectorXcd::Zero(d), true};

    Eigen::VectorXcd w = std::sqrt(lmax) * eig.eigenvectors().col(d - 1);
    const double nrm = w.norm();
    for (int i = 0; i < d; ++i) {
        if (std::abs(w(i)) > 1e-12 * nrm) {
            w *= std::conj(w(i)) / std::abs(w(i));
            break;
        }
    }
    return {std::move(w), false};
}

// Gaussian candidates with covariance W: L g for a Cholesky factor of
// W + eps I, g standard circular complex Gaussian. The jitter eps escalates
// tenfold from 1e-10 up to 1e-6 before giving up.
inline std::vector<Eigen::VectorXcd> randomize_candidates(const Eigen::MatrixXcd& W, int count,
                                                          std::uint64_t seed) {
    const int d = static_cast<int>(W.rows());
    if (W.cols() != d || d == 0) throw ValueError("randomize_candidates needs a square matrix");
    if (count < 1) throw ValueError("candidate count must be >= 1");
    Eigen::MatrixXcd h = 0.5 * (W + W.adjoint());

    Eigen::MatrixXcd L;
    bool ok = false;
    for (double eps = 1e-10; eps <= 1e-6 * 1.0000001; eps *= 10.0) {
        Eigen::LLT<Eigen::MatrixXcd> llt(h + eps * Eigen::MatrixXcd::Identity(d, d));
        if (llt.info() == Eigen::Success) {
            L = llt.matrixL();
            ok = true;
            break;
        }
    }
    if (!ok) throw NumericalError("covariance factorization failed even with jitter 1e-6");

    Rng rng(mix_seed(seed, seed_tag::randomization));
    std::vector<Eigen::VectorXcd> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        Eigen::VectorXcd g(d);
        for (int i = 0; i < d; ++i) g(i) = rng.complex_gaussian(1.0);
        out.push_back(L * g);
    }
    return out;
}

// Rescale so the mean equalized output power is one.
inline Eigen::VectorXcd power_normalize(const Eigen::VectorXcd& w, const RegressorSet& r) {
    if (w.size() != r.taps) throw ValueError("equalizer length does not match regressors");
    double p = 0.0;
    for (const auto& x : r.windows) p += std::norm(w.dot(x));
    p /= static_cast<double>(r.window_count());
    if (!(p > 0.0)) throw ValueError("zero equalizer output power");
    return w / std::sqrt(p);
}

// Power-normalize every candidate and keep the constant-modulus minimizer.
// Ties break toward the lowest index. Candidates with zero output power are
// skipped; if every candidate is zero the selection fails.
inline EqualizerEstimate select_best(const std::vector<Eigen::VectorXcd>& candidates,
                                     const RegressorSet& r, int principal_index = -1) {
    if (candidates.empty()) throw ValueError("empty candidate list");
    EqualizerEstimate best;
    bool found = false;
    for (int i = 0; i < static_cast<int>(candidates.size()); ++i) {
        const auto& cand = candidates[static_cast<std::size_t>(i)];
        if (cand.size() != r.taps) throw ValueError("candidate length does not match regressors");
        double p = 0.0;
        for (const auto& x : r.windows) p += std::norm(cand.dot(x));
        p /= static_cast<double>(r.window_count());
        if (!(p > 0.0)) continue;
        Eigen::VectorXcd wn = cand / std::sqrt(p);
        const double j = cm_cost(wn, r);
        if (!found || j < best.cm_value) {
            best.w = std::move(wn);
            best.cm_value = j;
            best.source = (i == principal_index) ? EstimateSource::PrincipalComponent
                                                 : EstimateSource::Randomized;
            best.source_index = i;
            found = true;
        }
    }
    if (!found) throw ValueError("all candidates have zero output power");
    return best;
}

// BPSK slices the real part (ties go to bit 1); QPSK slices both quadratures
// in the same bit order modulate uses.
inline std::vector<int> hard_decision(const std::vector<cplx>& y, Modulation scheme) {
    std::vector<int> bits;
    if (scheme == Modulation::Bpsk) {
        bits.reserve(y.size());
        for (const auto& v : y) bits.push_back(v.real() >= 0.0 ? 1 : 0);
        return bits;
    }
    bits.reserve(2 * y.size());
    for (const auto& v : y) {
        bits.push_back(v.real() >= 0.0 ? 1 : 0);
        bits.push_back(v.imag() >= 0.0 ? 1 : 0);
    }
    return bits;
}

struct AlignmentScore {
    double ber = 1.0;
    int best_delay = 0;
    std::optional<bool> sign_flipped;  // engaged only when the sign search ran
};

// Minimize BER over shifts decided[i] vs truth[i + d] for d in
// [delay_min, delay_max], optionally also over bitwise complement. Ties
// prefer the identity mapping and then the smaller shift.
inline AlignmentScore align_and_score(const std::vector<int>& decided, const std::vector<int>& truth,
                                      int delay_min, int delay_max, bool search_sign) {
    if (delay_min > delay_max) throw ValueError("empty delay range");
    const int nd = static_cast<int>(decided.size());
    const int nt = static_cast<int>(truth.size());
    bool any = false;
    double best_ber = 2.0;
    int best_d = delay_min;
    bool best_flip = false;
    for (int d = delay_min; d <= delay_max; ++d) {
        const int i0 = std::max(0, -d);
        const int i1 = std::min(nd, nt - d);
        if (i1 <= i0) continue;
        int mism = 0;
        for (int i = i0; i < i1; ++i)
            mism += (decided[static_cast<std::size_t>(i)] != truth[static_cast<std::size_t>(i + d)]);
        const int overlap = i1 - i0;
        const double ber_id = static_cast<double>(mism) / overlap;
        if (!any || ber_id < best_ber) {
            best_ber = ber_id;
            best_d = d;
            best_flip = false;
            any = true;
        }
        if (search_sign) {
            const double ber_fl = static_cast<double>(overlap - mism) / overlap;
            if (ber_fl < best_ber) {
                best_ber = ber_fl;
                best_d = d;
                best_flip = true;
            }
        }
    }
    if (!any) throw ValueError("decided and truth sequences never overlap in the delay range");
    AlignmentScore s;
    s.ber = best_ber;
    s.best_delay = best_d;
    if (search_sign) s.sign_flipped = best_flip;
    return s;
}

// Symbol error rate at a fixed alignment: a truth symbol counts when all of
// its bits are inside the overlap, and errs when any decided bit differs.
inline double symbol_error_rate(const std::vector<int>& decided, const std::vector<int>& truth,
                                int delay, bool flipped, int bits_per_sym) {
    const int nd = static_cast<int>(decided.size());
    const int nt = static_cast<int>(truth.size());
    int symbols = 0, errors = 0;
    for (int s = 0; s * bits_per_sym + bits_per_sym <= nt; ++s) {
        bool covered = true, err = false;
        for (int b = 0; b < bits_per_sym; ++b) {
            const int ti = s * bits_per_sym + b;
            const int di = ti - delay;
            if (di < 0 || di >= nd) {
                covered = false;
                break;
            }
            int bit = decided[static_cast<std::size_t>(di)];
            if (flipped) bit ^= 1;
            err = err || (bit != truth[static_cast<std::size_t>(ti)]);
        }
        if (covered) {
            ++symbols;
            errors += err;
        }
    }
    if (symbols == 0) return 0.0;
    return static_cast<double>(errors) / symbols;
}

}  // namespace cmsdr
