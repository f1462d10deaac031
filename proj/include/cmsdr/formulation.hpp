#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "cmsdr/conic.hpp"
#include "cmsdr/errors.hpp"
#include "cmsdr/gf2.hpp"
#include "cmsdr/signal.hpp"

namespace cmsdr {

// Real symmetric embedding T(M) = [[Re M, -Im M], [Im M, Re M]] of a
// Hermitian matrix. PSD-ness carries over both ways, eigenvalues double in
// multiplicity, and tr(X W) = tr(T(X) T(W)) / 2 for Hermitian X, W.
inline Eigen::MatrixXd hermitian_embed(const Eigen::MatrixXcd& m, double tol = 1e-10) {
    const int d = static_cast<int>(m.rows());
    if (m.cols() != d) throw ValueError("hermitian_embed needs a square matrix");
    const double scale = std::max(1.0, m.norm());
    if ((m - m.adjoint()).norm() > tol * scale) throw ValueError("matrix is not Hermitian");
    Eigen::MatrixXd t(2 * d, 2 * d);
    t.topLeftCorner(d, d) = m.real();
    t.bottomRightCorner(d, d) = m.real();
    t.topRightCorner(d, d) = -m.imag();
    t.bottomLeftCorner(d, d) = m.imag();
    // Exact symmetry despite rounding in the Hermitian input.
    return 0.5 * (t + t.transpose());
}

// Inverse of the embedding: average the two diagonal copies, antisymmetrize
// the imaginary block, return the Hermitian result.
inline Eigen::MatrixXcd hermitian_unembed(const Eigen::MatrixXd& t) {
    const int dd = static_cast<int>(t.rows());
    if (t.cols() != dd || dd % 2 != 0) throw ValueError("embedded matrix must be square with even side");
    const int d = dd / 2;
    Eigen::MatrixXd re = 0.5 * (t.topLeftCorner(d, d) + t.bottomRightCorner(d, d));
    re = 0.5 * (re + re.transpose().eval());
    Eigen::MatrixXd im = 0.5 * (t.bottomLeftCorner(d, d) - t.bottomLeftCorner(d, d).transpose().eval());
    return re.cast<std::complex<double>>() + std::complex<double>(0, 1) * im.cast<std::complex<double>>();
}

struct Range {
    int offset = 0;
    int len = 0;
    bool present() const { return len > 0; }
    int end() const { return offset + len; }
};

struct VariableLayout {
    int equalizer_taps = 0;  // complex dimension of w
    int embed_side = 0;      // side of T(W)
    int n_windows = 0;
    int n_code = 0;  // 0 for the basic model
    Range svec_w;    // packed real embedding of W
    Range w_r;       // [Re w; Im w], code model only
    Range tau;       // per-window CM slack
    Range t;         // per paired sample squeeze slack, code model only
    Range f;         // relaxed code bits, code model only
    int total = 0;
};

struct FormulationParams {
    double squeeze_weight = 1.0;
    int delay = -1;  // <0: take the delay recorded in the regressors
    int d_max = 8;
};

struct CompiledSdp {
    ConicProblem problem;
    VariableLayout layout;
    std::vector<std::string> warnings;
};

namespace detail {

// Zero-cone rows pinning the embedding structure of svec(T(W)): the two
// diagonal copies of Re W agree, the Im W block is antisymmetric with zero
// diagonal. Both packed entries of an equated pair carry the same sqrt(2)
// factor, so coefficients stay +-1.
inline void append_embedding_structure_rows(std::vector<Eigen::Triplet<double>>& trip,
                                            Eigen::VectorXd& b, int& row, int svec_base, int d) {
    const int D = 2 * d;
    for (int j = 0; j < d; ++j)
        for (int i = j; i < d; ++i) {
            trip.emplace_back(row, svec_base + svec_offset(i, j, D), 1.0);
            trip.emplace_back(row, svec_base + svec_offset(i + d, j + d, D), -1.0);
            b(row++) = 0.0;
        }
    for (int a = 0; a < d; ++a)
        for (int c = 0; c < a; ++c) {
            trip.emplace_back(row, svec_base + svec_offset(d + a, c, D), 1.0);
            trip.emplace_back(row, svec_base + svec_offset(d + c, a, D), 1.0);
            b(row++) = 0.0;
        }
    for (int a = 0; a < d; ++a) {
        trip.emplace_back(row, svec_base + svec_offset(d + a, a, D), 1.0);
        b(row++) = 0.0;
    }
}

inline int embedding_structure_row_count(int d) { return d * d + d; }

// Coefficients of tr(X_n W) over the packed embedding variables.
inline Eigen::VectorXd trace_row_coefficients(const Eigen::MatrixXcd& xn) {
    return 0.5 * svec_pack(hermitian_embed(xn));
}

// The two nonnegative rows per window:
//   tr(X_n W) - tau_n <= 1   and   tr(X_n W) + tau_n >= 1.
inline void append_cm_rows(std::vector<Eigen::Triplet<double>>& trip, Eigen::VectorXd& b, int& row,
                           int svec_base, int tau_base, const RegressorSet& r) {
    const int sv = static_cast<int>(trace_row_coefficients(r.rank1.front()).size());
    for (int n = 0; n < r.window_count(); ++n) {
        const Eigen::VectorXd coef = trace_row_coefficients(r.rank1[static_cast<std::size_t>(n)]);
        for (int k = 0; k < sv; ++k)
            if (coef(k) != 0.0) trip.emplace_back(row, svec_base + k, coef(k));
        trip.emplace_back(row, tau_base + n, -1.0);
        b(row++) = 1.0;
        for (int k = 0; k < sv; ++k)
            if (coef(k) != 0.0) trip.emplace_back(row, svec_base + k, -coef(k));
        trip.emplace_back(row, tau_base + n, -1.0);
        b(row++) = -1.0;
    }
}

}  // namespace detail

// Relaxed constant-modulus program over W = embedding of w w^H:
//   min (1/N) sum tau_n  s.t. the two CM row families, T(W) PSD, and the
// embedding structure equalities.
inline CompiledSdp build_basic_cm_sdp(const RegressorSet& r) {
    if (r.window_count() < 1) throw ValueError("empty regressor set");
    const int d = r.taps;
    const int D = 2 * d;
    const int sv = svec_dim(D);
    const int N = r.window_count();

    CompiledSdp out;
    VariableLayout& lay = out.layout;
    lay.equalizer_taps = d;
    lay.embed_side = D;
    lay.n_windows = N;
    lay.svec_w = {0, sv};
    lay.tau = {sv, N};
    lay.total = sv + N;

    const int zero_rows = detail::embedding_structure_row_count(d);
    const int nonneg_rows = 2 * N;
    const int psd_rows = sv;
    const int m = zero_rows + nonneg_rows + psd_rows;

    ConicProblem& p = out.problem;
    p.c = Eigen::VectorXd::Zero(lay.total);
    p.c.segment(lay.tau.offset, lay.tau.len).setConstant(1.0 / static_cast<double>(N));
    p.b = Eigen::VectorXd::Zero(m);
    p.cones.zero_dim = zero_rows;
    p.cones.nonneg_dim = nonneg_rows;
    p.cones.psd_side_lengths = {D};

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(2 * N) * static_cast<std::size_t>(sv + 1) +
                 static_cast<std::size_t>(zero_rows) * 2 + static_cast<std::size_t>(sv));
    int row = 0;
    detail::append_embedding_structure_rows(trip, p.b, row, lay.svec_w.offset, d);
    detail::append_cm_rows(trip, p.b, row, lay.svec_w.offset, lay.tau.offset, r);
    for (int k = 0; k < sv; ++k) {
        trip.emplace_back(row, lay.svec_w.offset + k, -1.0);
        p.b(row++) = 0.0;
    }

    p.A.resize(m, lay.total);
    p.A.setFromTriplets(trip.begin(), trip.end());

    if (N < 4 * d * d)
        out.warnings.push_back("only " + std::to_string(N) + " samples for " + std::to_string(d) +
                               " equalizer taps; fewer than 4(L+1)^2 = " + std::to_string(4 * d * d) +
                               " may leave a flat optimal face and ill-posed rank-1 recovery");
    return out;
}

// Constant-modulus program with relaxed code constraints. Adds the explicit
// equalizer w through the bordered PSD block [[W, w], [w^H, 1]], squeezes
// each paired output onto the BPSK point 2 f - 1 through a 3-dim SOC with
// slack t_n, and intersects f with the parity polytope and box.
inline CompiledSdp build_code_cm_sdp(const RegressorSet& r, const ParityCheckMatrix& code,
                                     const FormulationParams& params,
                                     Modulation scheme = Modulation::Bpsk) {
    if (scheme != Modulation::Bpsk)
        throw ValueError("code-constrained model supports BPSK only");
    if (r.window_count() < 1) throw ValueError("empty regressor set");
    if (!(params.squeeze_weight > 0.0)) throw ValueError("squeeze weight must be positive");
    if (params.delay >= 0 && params.delay != r.delay)
        throw ValueError("params.delay disagrees with the delay the regressors were built with");
    if (r.n_symbols != code.cols)
        throw ValueError("regressor pairing targets " + std::to_string(r.n_symbols) +
                         " symbols but the code has " + std::to_string(code.cols) + " bits");

    const auto inequalities = enumerate_parity_inequalities(code, params.d_max);

    const int d = r.taps;
    const int D = 2 * d;
    const int sv = svec_dim(D);
    const int N = r.window_count();
    const int n_code = code.cols;

    std::vector<std::pair<int, int>> paired;  // (window index, bit index)
    for (int n = 0; n < N; ++n)
        if (r.paired_symbol[static_cast<std::size_t>(n)] >= 0)
            paired.emplace_back(n, r.paired_symbol[static_cast<std::size_t>(n)]);
    const int P = static_cast<int>(paired.size());

    CompiledSdp out;
    VariableLayout& lay = out.layout;
    lay.equalizer_taps = d;
    lay.embed_side = D;
    lay.n_windows = N;
    lay.n_code = n_code;
    lay.svec_w = {0, sv};
    lay.w_r = {sv, 2 * d};
    lay.tau = {sv + 2 * d, N};
    lay.t = {sv + 2 * d + N, P};
    lay.f = {sv + 2 * d + N + P, n_code};
    lay.total = lay.f.end();

    if (P == 0)
        out.warnings.push_back("no regressor window pairs with a codeword bit; the code constraints "
                               "cannot pin the phase");

    const int S = 2 * (d + 1);  // bordered embedding side
    const int sv2 = svec_dim(S);
    const int zero_rows = detail::embedding_structure_row_count(d);
    const int n_ineq = static_cast<int>(inequalities.size());
    const int nonneg_rows = 2 * N + n_ineq + 2 * n_code;
    const int soc_rows = 3 * P;
    const int m = zero_rows + nonneg_rows + soc_rows + sv2;

    ConicProblem& p = out.problem;
    p.c = Eigen::VectorXd::Zero(lay.total);
    p.c.segment(lay.tau.offset, lay.tau.len).setConstant(1.0 / static_cast<double>(N));
    if (P > 0) p.c.segment(lay.t.offset, lay.t.len).setConstant(params.squeeze_weight);
    p.b = Eigen::VectorXd::Zero(m);
    p.cones.zero_dim = zero_rows;
    p.cones.nonneg_dim = nonneg_rows;
    p.cones.soc_dims.assign(static_cast<std::size_t>(P), 3);
    p.cones.psd_side_lengths = {S};

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(2 * N) * static_cast<std::size_t>(sv + 1) +
                 static_cast<std::size_t>(m) * 2);
    int row = 0;
    detail::append_embedding_structure_rows(trip, p.b, row, lay.svec_w.offset, d);
    detail::append_cm_rows(trip, p.b, row, lay.svec_w.offset, lay.tau.offset, r);

    for (const auto& q : inequalities) {
        for (int i : q.positive) trip.emplace_back(row, lay.f.offset + i, 1.0);
        for (int i : q.negative) trip.emplace_back(row, lay.f.offset + i, -1.0);
        p.b(row++) = static_cast<double>(q.rhs);
    }
    for (int k = 0; k < n_code; ++k) {
        trip.emplace_back(row, lay.f.offset + k, -1.0);  // f_k >= 0
        p.b(row++) = 0.0;
        trip.emplace_back(row, lay.f.offset + k, 1.0);  // f_k <= 1
        p.b(row++) = 1.0;
    }

    // | w^H x_n - (2 f_k - 1) | <= t_n as the cone (t_n, Re(.)+1-2f_k, Im(.)).
    for (int pi = 0; pi < P; ++pi) {
        const auto [n, k] = paired[static_cast<std::size_t>(pi)];
        const Eigen::VectorXcd& x = r.windows[static_cast<std::size_t>(n)];
        trip.emplace_back(row, lay.t.offset + pi, -1.0);
        p.b(row++) = 0.0;
        for (int j = 0; j < d; ++j) {
            if (x(j).real() != 0.0) trip.emplace_back(row, lay.w_r.offset + j, -x(j).real());
            if (x(j).imag() != 0.0) trip.emplace_back(row, lay.w_r.offset + d + j, -x(j).imag());
        }
        trip.emplace_back(row, lay.f.offset + k, 2.0);
        p.b(row++) = 1.0;
        for (int j = 0; j < d; ++j) {
            if (x(j).imag() != 0.0) trip.emplace_back(row, lay.w_r.offset + j, -x(j).imag());
            if (x(j).real() != 0.0) trip.emplace_back(row, lay.w_r.offset + d + j, x(j).real());
        }
        p.b(row++) = 0.0;
    }

    // Bordered PSD slack: svec of T([[W, w], [w^H, 1]]), every packed entry
    // tied to the matching variable (or pinned constant for the unit corner
    // and the zero imaginary diagonal).
    const int dB = d + 1;
    static const double r2 = std::sqrt(2.0);
    for (int q = 0; q < S; ++q)
        for (int pp = q; pp < S; ++pp) {
            double rhs = 0.0;
            if (pp < dB) {  // Re-block row: Re B_{pp,q}
                if (pp < d) {
                    trip.emplace_back(row, lay.svec_w.offset + svec_offset(pp, q, D), -1.0);
                } else if (q < d) {
                    trip.emplace_back(row, lay.w_r.offset + q, -r2);
                } else {
                    rhs = 1.0;  // corner (d, d) on the diagonal
                }
            } else if (q < dB) {  // Im-block row: Im B_{pp-dB, q}
                const int i = pp - dB;
                if (i < d && q < d) {
                    trip.emplace_back(row, lay.svec_w.offset + svec_offset(d + i, q, D), -1.0);
                } else if (i == d && q < d) {
                    trip.emplace_back(row, lay.w_r.offset + d + q, r2);  // -Im w_q
                } else if (i < d && q == d) {
                    trip.emplace_back(row, lay.w_r.offset + d + i, -r2);  // +Im w_i
                }
                // i == d && q == d: zero entry, rhs stays 0
            } else {  // second Re-block copy
                const int i = pp - dB;
                const int j = q - dB;
                if (i < d) {
                    trip.emplace_back(row, lay.svec_w.offset + svec_offset(i, j, D), -1.0);
                } else if (j < d) {
                    trip.emplace_back(row, lay.w_r.offset + j, -r2);
                } else {
                    rhs = 1.0;
                }
            }
            p.b(row++) = rhs;
        }

    if (row != m) throw ValueError("internal row bookkeeping error");
    p.A.resize(m, lay.total);
    p.A.setFromTriplets(trip.begin(), trip.end());

    if (N < 4 * d * d)
        out.warnings.push_back("only " + std::to_string(N) + " samples for " + std::to_string(d) +
                               " equalizer taps; fewer than 4(L+1)^2 = " + std::to_string(4 * d * d) +
                               " may leave a flat optimal face and ill-posed rank-1 recovery");
    return out;
}

struct ExtractedSolution {
    Eigen::MatrixXcd W;
    std::optional<Eigen::VectorXcd> w;
    std::optional<std::vector<double>> f;
    double objective = 0.0;
};

inline ExtractedSolution extract_solution(const SolverSolution& sol, const VariableLayout& lay,
                                          const Eigen::VectorXd& objective_coeffs) {
    if (sol.status != SolveStatus::Optimal && sol.status != SolveStatus::MaxIterations)
        throw ValueError("cannot extract variables from an infeasibility certificate");
    if (sol.u.size() != lay.total || objective_coeffs.size() != lay.total)
        throw ValueError("solution length does not match the variable layout");

    ExtractedSolution out;
    const Eigen::MatrixXd t = svec_unpack(sol.u.segment(lay.svec_w.offset, lay.svec_w.len), lay.embed_side);
    out.W = hermitian_unembed(t);
    if (lay.w_r.present()) {
        const int d = lay.equalizer_taps;
        Eigen::VectorXcd w(d);
        for (int j = 0; j < d; ++j)
            w(j) = cplx(sol.u(lay.w_r.offset + j), sol.u(lay.w_r.offset + d + j));
        out.w = std::move(w);
    }
    if (lay.f.present()) {
        std::vector<double> f(static_cast<std::size_t>(lay.f.len));
        for (int k = 0; k < lay.f.len; ++k)
            f[static_cast<std::size_t>(k)] = std::clamp(sol.u(lay.f.offset + k), 0.0, 1.0);
        out.f = std::move(f);
    }
    out.objective = objective_coeffs.dot(sol.u);
    return out;
}

inline ExtractedSolution extract_solution(const SolverSolution& sol, const CompiledSdp& model) {
    return extract_solution(sol, model.layout, model.problem.c);
}

}  // namespace cmsdr
