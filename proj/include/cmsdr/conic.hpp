#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "cmsdr/errors.hpp"

namespace cmsdr {

// ---------------------------------------------------------------------------
// Cone description. Slack order inside a problem is fixed: zero cone, then
// nonnegative orthant, then second-order cones, then PSD blocks. PSD blocks
// are real symmetric matrices in packed scaled-lower-triangular form
// (column-major lower triangle, off-diagonal entries times sqrt(2)), so the
// matrix inner product equals the plain vector dot product.

inline int svec_dim(int side) { return side * (side + 1) / 2; }

inline Eigen::VectorXd svec_pack(const Eigen::MatrixXd& s) {
    const int k = static_cast<int>(s.rows());
    if (s.cols() != k) throw ValueError("svec_pack needs a square matrix");
    static const double r2 = std::sqrt(2.0);
    Eigen::VectorXd v(svec_dim(k));
    int idx = 0;
    for (int j = 0; j < k; ++j)
        for (int i = j; i < k; ++i) v(idx++) = (i == j) ? s(i, j) : r2 * 0.5 * (s(i, j) + s(j, i));
    return v;
}

inline Eigen::MatrixXd svec_unpack(const Eigen::VectorXd& v, int side) {
    if (v.size() != svec_dim(side)) throw ValueError("svec length does not match side");
    static const double r2 = std::sqrt(2.0);
    Eigen::MatrixXd s(side, side);
    int idx = 0;
    for (int j = 0; j < side; ++j)
        for (int i = j; i < side; ++i) {
            const double x = v(idx++);
            if (i == j) {
                s(i, j) = x;
            } else {
                s(i, j) = x / r2;
                s(j, i) = x / r2;
            }
        }
    return s;
}

// Offset of packed entry (i, j), i >= j, inside an svec block of given side.
inline int svec_offset(int i, int j, int side) {
    if (j > i) std::swap(i, j);
    return j * side - j * (j - 1) / 2 + (i - j);
}

struct ConeSpec {
    int zero_dim = 0;
    int nonneg_dim = 0;
    std::vector<int> soc_dims;
    std::vector<int> psd_side_lengths;

    int total_dim() const {
        int t = zero_dim + nonneg_dim;
        for (int d : soc_dims) t += d;
        for (int s : psd_side_lengths) t += svec_dim(s);
        return t;
    }

    void validate() const {
        if (zero_dim < 0 || nonneg_dim < 0) throw ValueError("cone dimensions must be nonnegative");
        for (int d : soc_dims)
            if (d < 1) throw ValueError("second-order cone dimension must be >= 1");
        for (int s : psd_side_lengths)
            if (s < 1) throw ValueError("PSD side length must be >= 1");
    }
};

namespace detail {

inline void project_soc(Eigen::Ref<Eigen::VectorXd> blk) {
    const int d = static_cast<int>(blk.size());
    if (d == 1) {
        blk(0) = std::max(blk(0), 0.0);
        return;
    }
    const double t = blk(0);
    const double nx = blk.tail(d - 1).norm();
    if (nx <= t) return;
    if (nx <= -t) {
        blk.setZero();
        return;
    }
    const double a = 0.5 * (t + nx);
    blk(0) = a;
    blk.tail(d - 1) *= a / nx;
}

inline void project_psd(Eigen::Ref<Eigen::VectorXd> blk, int side) {
    Eigen::MatrixXd s = svec_unpack(blk, side);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
    if (eig.info() != Eigen::Success) throw NumericalError("PSD projection eigendecomposition failed");
    Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0);
    s = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
    blk = svec_pack(s);
}

}  // namespace detail

// Euclidean projection onto K, blockwise. With dual=true projects onto the
// dual cone K* instead (only the zero block differs: its dual is free).
inline Eigen::VectorXd project_cone(const Eigen::VectorXd& v, const ConeSpec& cones, bool dual = false) {
    cones.validate();
    if (v.size() != cones.total_dim()) throw ValueError("projection input does not match cone dimensions");
    Eigen::VectorXd p = v;
    int at = 0;
    if (cones.zero_dim > 0) {
        if (!dual) p.segment(at, cones.zero_dim).setZero();
        at += cones.zero_dim;
    }
    if (cones.nonneg_dim > 0) {
        p.segment(at, cones.nonneg_dim) = p.segment(at, cones.nonneg_dim).cwiseMax(0.0);
        at += cones.nonneg_dim;
    }
    for (int d : cones.soc_dims) {
        detail::project_soc(p.segment(at, d));
        at += d;
    }
    for (int s : cones.psd_side_lengths) {
        detail::project_psd(p.segment(at, svec_dim(s)), s);
        at += svec_dim(s);
    }
    return p;
}

// min c'u  s.t.  b - A u \in K.
struct ConicProblem {
    Eigen::VectorXd c;
    Eigen::SparseMatrix<double> A;
    Eigen::VectorXd b;
    ConeSpec cones;

    int num_vars() const { return static_cast<int>(c.size()); }
    int num_rows() const { return static_cast<int>(b.size()); }

    void validate() const {
        cones.validate();
        if (A.rows() != b.size() || A.rows() != cones.total_dim())
            throw ValueError("constraint rows, offset length, and cone dimensions disagree");
        if (A.cols() != c.size()) throw ValueError("constraint columns do not match objective length");
        if (cones.zero_dim > 0) {
            std::vector<char> nonzero(static_cast<std::size_t>(cones.zero_dim), 0);
            for (int k = 0; k < A.outerSize(); ++k)
                for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
                    if (it.row() < cones.zero_dim && it.value() != 0.0)
                        nonzero[static_cast<std::size_t>(it.row())] = 1;
            for (int i = 0; i < cones.zero_dim; ++i)
                if (!nonzero[static_cast<std::size_t>(i)])
                    throw ValueError("all-zero row " + std::to_string(i) + " in the zero-cone block");
        }
    }
};

enum class SolveStatus { Optimal, MaxIterations, PrimalInfeasibleCertificate, DualInfeasibleCertificate };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::MaxIterations: return "max_iterations";
        case SolveStatus::PrimalInfeasibleCertificate: return "primal_infeasible";
        case SolveStatus::DualInfeasibleCertificate: return "dual_infeasible";
    }
    return "unknown";
}

struct SolverSettings {
    double eps_abs = 1e-6;
    double eps_rel = 1e-6;
    int max_iterations = 50000;
    double rho = 1.0;    // base penalty
    double alpha = 1.6;  // over-relaxation
    std::uint64_t seed = 0;

    // Implementation knobs.
    double sigma = 1e-6;              // primal regularization in the KKT system
    double zero_cone_rho_scale = 1e3; // stiffer penalty on equality rows
    bool adaptive_rho = true;
    int rho_update_interval = 100;
    int infeas_check_window = 1000;
    double infeas_tol = 1e-7;

    void validate() const {
        if (!(eps_abs > 0.0) || !(eps_rel > 0.0)) throw ValueError("tolerances must be positive");
        if (max_iterations < 1) throw ValueError("max_iterations must be >= 1");
        if (!(rho > 0.0)) throw ValueError("rho must be positive");
        if (!(alpha >= 1.0) || !(alpha < 2.0)) throw ValueError("alpha must lie in [1, 2)");
        if (!(sigma > 0.0)) throw ValueError("sigma must be positive");
    }
};

struct SolverSolution {
    Eigen::VectorXd u;  // primal variables
    Eigen::VectorXd s;  // cone slack, b - A u at convergence
    Eigen::VectorXd y;  // dual variables, in K*
    SolveStatus status = SolveStatus::MaxIterations;
    double primal_residual = std::numeric_limits<double>::infinity();
    double dual_residual = std::numeric_limits<double>::infinity();
    double duality_gap = std::numeric_limits<double>::infinity();
    int iterations = 0;

    double objective(const ConicProblem& p) const { return p.c.dot(u); }
};

// ---------------------------------------------------------------------------
// Operator-splitting solver. Each iteration solves the cached quasi-definite
// KKT system
//     [ sigma*I   A' ] [u~]   [ sigma*u - c   ]
//     [ A      -R^-1 ] [nu] = [ z - R^-1 y    ]
// then projects the over-relaxed constraint iterate onto b - K and updates
// the duals. Iterates satisfy s in K, y in K*, s'y = 0 by construction; the
// affine residuals and the duality gap drive termination. R is diagonal with
// a stiffer penalty on zero-cone rows; SOC/PSD blocks share one scale so the
// weighted projection stays the Euclidean one.

class AdmmConicSolver {
  public:
    AdmmConicSolver(const ConicProblem& problem, const SolverSettings& settings = {})
        : p_(problem), st_(settings) {
        p_.validate();
        st_.validate();
        n_ = p_.num_vars();
        m_ = p_.num_rows();
        at_ = p_.A.transpose();
        rho_base_ = st_.rho;
        build_rho_vec();
        analyze_pattern();
        factorize();
    }

    SolverSolution solve() {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(n_);
        Eigen::VectorXd z = Eigen::VectorXd::Zero(m_);
        Eigen::VectorXd y = Eigen::VectorXd::Zero(m_);
        Eigen::VectorXd rhs(n_ + m_), sol(n_ + m_);
        Eigen::VectorXd x_win = x, y_win = y;

        SolverSolution best;
        best.u = x;
        best.s = p_.b;
        best.y = y;
        double best_metric = std::numeric_limits<double>::infinity();

        const double cn = p_.c.norm();
        const double bn = p_.b.norm();

        for (int it = 1; it <= st_.max_iterations; ++it) {
            rhs.head(n_) = st_.sigma * x - p_.c;
            rhs.tail(m_) = z - y.cwiseQuotient(rho_vec_);
            sol = ldlt_.solve(rhs);
            const Eigen::VectorXd x_t = sol.head(n_);
            const Eigen::VectorXd nu = sol.tail(m_);
            const Eigen::VectorXd z_t = z + (nu - y).cwiseQuotient(rho_vec_);

            x = st_.alpha * x_t + (1.0 - st_.alpha) * x;
            const Eigen::VectorXd w = st_.alpha * z_t + (1.0 - st_.alpha) * z;
            const Eigen::VectorXd v = w + y.cwiseQuotient(rho_vec_);
            z = p_.b - project_cone(p_.b - v, p_.cones);
            y = y + rho_vec_.cwiseProduct(w - z);

            // Residuals in the problem's own scale.
            const Eigen::VectorXd ax = p_.A * x;
            const Eigen::VectorXd s = p_.b - z;
            const Eigen::VectorXd aty = at_ * y;
            const double rp = (ax - z).norm();
            const double rd = (p_.c + aty).norm();
            const double cu = p_.c.dot(x);
            const double by = p_.b.dot(y);
            const double gap = std::abs(cu + by);

            const double eps_p = st_.eps_abs + st_.eps_rel * std::max({ax.norm(), s.norm(), bn});
            const double eps_d = st_.eps_abs + st_.eps_rel * std::max(aty.norm(), cn);
            const double eps_g = st_.eps_abs + st_.eps_rel * std::max(std::abs(cu), std::abs(by));

            const double metric = std::max({rp / eps_p, rd / eps_d, gap / eps_g});
            if (metric < best_metric) {
                best_metric = metric;
                best.u = x;
                best.s = s;
                best.y = y;
                best.primal_residual = rp;
                best.dual_residual = rd;
                best.duality_gap = gap;
                best.iterations = it;
            }

            if (rp <= eps_p && rd <= eps_d && gap <= eps_g) {
                best.status = SolveStatus::Optimal;
                best.u = x;
                best.s = s;
                best.y = y;
                best.primal_residual = rp;
                best.dual_residual = rd;
                best.duality_gap = gap;
                best.iterations = it;
                return best;
            }

            if (st_.adaptive_rho && it % st_.rho_update_interval == 0) {
                const double pr = rp / std::max(eps_p, 1e-300);
                const double dr = rd / std::max(eps_d, 1e-300);
                const double ratio = std::sqrt(pr / std::max(dr, 1e-300));
                if (ratio > 5.0 || ratio < 0.2) {
                    rho_base_ = std::clamp(rho_base_ * ratio, 1e-6, 1e6);
                    build_rho_vec();
                    factorize();
                }
            }

            if (it % st_.infeas_check_window == 0) {
                const Eigen::VectorXd dy = y - y_win;
                const Eigen::VectorXd dx = x - x_win;
                if (auto cert = primal_infeasibility(dy)) {
                    best.status = SolveStatus::PrimalInfeasibleCertificate;
                    best.y = *cert;
                    best.iterations = it;
                    return best;
                }
                if (auto cert = dual_infeasibility(dx)) {
                    best.status = SolveStatus::DualInfeasibleCertificate;
                    best.u = *cert;
                    best.iterations = it;
                    return best;
                }
                x_win = x;
                y_win = y;
            }
        }
        best.status = SolveStatus::MaxIterations;
        best.iterations = st_.max_iterations;
        return best;
    }

  private:
    void build_rho_vec() {
        rho_vec_ = Eigen::VectorXd::Constant(m_, rho_base_);
        rho_vec_.head(p_.cones.zero_dim).setConstant(rho_base_ * st_.zero_cone_rho_scale);
    }

    void assemble_kkt(Eigen::SparseMatrix<double>& kkt) const {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(p_.A.nonZeros()) * 2 + static_cast<std::size_t>(n_ + m_));
        for (int i = 0; i < n_; ++i) trip.emplace_back(i, i, st_.sigma);
        for (int k = 0; k < p_.A.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(p_.A, k); it; ++it) {
                trip.emplace_back(n_ + static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
                trip.emplace_back(static_cast<int>(it.col()), n_ + static_cast<int>(it.row()), it.value());
            }
        for (int i = 0; i < m_; ++i) trip.emplace_back(n_ + i, n_ + i, -1.0 / rho_vec_(i));
        kkt.resize(n_ + m_, n_ + m_);
        kkt.setFromTriplets(trip.begin(), trip.end());
    }

    void analyze_pattern() {
        assemble_kkt(kkt_);
        ldlt_.analyzePattern(kkt_);
    }

    void factorize() {
        assemble_kkt(kkt_);
        ldlt_.factorize(kkt_);
        if (ldlt_.info() != Eigen::Success)
            throw NumericalError("KKT factorization failed (numerically singular system)");
    }

    std::optional<Eigen::VectorXd> primal_infeasibility(const Eigen::VectorXd& dy) const {
        const double nrm = dy.norm();
        if (nrm <= 1e-14) return std::nullopt;
        Eigen::VectorXd yn = dy / nrm;
        const double crit_a = (at_ * yn).norm();
        const double crit_b = p_.b.dot(yn);
        const double crit_c = (yn - project_cone(yn, p_.cones, /*dual=*/true)).norm();
        if (crit_a <= st_.infeas_tol && crit_c <= st_.infeas_tol && crit_b < -st_.infeas_tol) return yn;
        return std::nullopt;
    }

    std::optional<Eigen::VectorXd> dual_infeasibility(const Eigen::VectorXd& dx) const {
        const double nrm = dx.norm();
        if (nrm <= 1e-14) return std::nullopt;
        Eigen::VectorXd xn = dx / nrm;
        const double crit_c = p_.c.dot(xn);
        const Eigen::VectorXd q = -(p_.A * xn);
        const double crit_k = (q - project_cone(q, p_.cones)).norm();
        if (crit_c < -st_.infeas_tol && crit_k <= st_.infeas_tol) return xn;
        return std::nullopt;
    }

    ConicProblem p_;
    SolverSettings st_;
    int n_ = 0, m_ = 0;
    double rho_base_ = 1.0;
    Eigen::VectorXd rho_vec_;
    Eigen::SparseMatrix<double> at_;
    Eigen::SparseMatrix<double> kkt_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

inline SolverSolution solve(const ConicProblem& problem, const SolverSettings& settings = {}) {
    AdmmConicSolver solver(problem, settings);
    return solver.solve();
}

}  // namespace cmsdr
