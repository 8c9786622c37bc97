#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pilotlab/matrix.hpp"

namespace pilotlab {

/// One linear matrix inequality U^H X U >= D with orthonormal-column U.
struct LmiConstraint {
    CMatrix u;         // M x r
    HermitianMatrix d; // r x r
    std::string label;
};

/// The convex program family shared by the pilot design procedures:
/// minimize Tr(C X) over Hermitian X >= 0 subject to the per-user LMIs
/// U_k^H X U_k >= D_k and per-antenna caps X_mm <= E_max.
struct SdpProblem {
    int dim = 0;
    HermitianMatrix objective = HermitianMatrix::zero(0);
    std::vector<LmiConstraint> lmis;
    double diag_cap = 0.0;

    void validate() const {
        if (dim < 1) throw InvalidConfig("SdpProblem: dim must be >= 1");
        if (objective.dim() != dim) throw DimensionMismatch("SdpProblem: objective dimension");
        if (!(diag_cap > 0.0)) throw InvalidConfig("SdpProblem: diag_cap must be > 0");
        for (const LmiConstraint& lmi : lmis) {
            if (lmi.u.rows() != dim) throw DimensionMismatch("SdpProblem: LMI row count");
            if (lmi.u.cols() < 1 || lmi.u.cols() > dim) {
                throw DimensionMismatch("SdpProblem: LMI column count");
            }
            if (lmi.d.dim() != lmi.u.cols()) throw DimensionMismatch("SdpProblem: LMI D size");
        }
    }
};

enum class SolveStatus { Optimal, Infeasible, MaxIterations };

inline const char* to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::MaxIterations: return "max_iterations";
    }
    return "unknown";
}

struct SolverOptions {
    double gap_tol = 1e-6;   // relative duality gap target
    double slack_tol = 1e-7; // feasibility margin, relative to constraint scale
    int max_iter = 200;      // total Newton-step budget per solve
    bool verbose = false;
};

struct SdpSolution {
    CMatrix x;
    double objective_value = 0.0;
    SolveStatus status = SolveStatus::MaxIterations;
    int iterations = 0;
    double max_constraint_violation = 0.0;
    std::string note;
};

/// Per-constraint slack report for a candidate X.
struct FeasibilityReport {
    std::vector<std::pair<std::string, double>> lmi_slack; // min eigenvalue of U^H X U - D
    RVector diag_slack;                                    // E_max - X_mm per antenna
    double psd_slack = 0.0;                                // min eigenvalue of X

    double min_lmi_slack() const {
        double lo = std::numeric_limits<double>::infinity();
        for (const auto& [label, slack] : lmi_slack) lo = std::min(lo, slack);
        return lo;
    }
    double min_slack() const {
        double lo = std::min(psd_slack, diag_slack.size() ? diag_slack.minCoeff() : 0.0);
        return std::min(lo, min_lmi_slack());
    }
    bool feasible(double tol) const { return min_slack() >= -tol; }
};

inline FeasibilityReport feasibility_check(const HermitianMatrix& x, const SdpProblem& problem) {
    if (x.dim() != problem.dim) {
        throw DimensionMismatch("feasibility_check: X dimension mismatch");
    }
    FeasibilityReport report;
    report.psd_slack = min_eigenvalue(x);
    report.diag_slack.resize(problem.dim);
    for (int m = 0; m < problem.dim; ++m) {
        report.diag_slack[m] = problem.diag_cap - x.mat()(m, m).real();
    }
    for (const LmiConstraint& lmi : problem.lmis) {
        const CMatrix inner = lmi.u.adjoint() * x.mat() * lmi.u - lmi.d.mat();
        report.lmi_slack.emplace_back(lmi.label,
                                      min_eigenvalue(HermitianMatrix::symmetrized(inner)));
    }
    return report;
}

namespace detail {

/// Isometric real coordinates for Hermitian matrices: diagonal entries first,
/// then sqrt(2) * real and sqrt(2) * imag of the strict upper triangle, so
/// that <A, B> = hvec(A) . hvec(B).
class HermitianVectorizer {
  public:
    explicit HermitianVectorizer(int m) : m_(m), n_(m * m) {
        pairs_.reserve(static_cast<std::size_t>(m) * (m - 1) / 2);
        for (int b = 1; b < m; ++b) {
            for (int a = 0; a < b; ++a) pairs_.emplace_back(a, b);
        }
    }

    int dim() const { return n_; }
    int matrix_dim() const { return m_; }

    void hvec_into(const CMatrix& a, double* out) const {
        constexpr double rt2 = std::numbers::sqrt2;
        for (int m = 0; m < m_; ++m) out[m] = a(m, m).real();
        const int np = static_cast<int>(pairs_.size());
        for (int p = 0; p < np; ++p) {
            const auto [i, j] = pairs_[p];
            out[m_ + p] = rt2 * a(i, j).real();
            out[m_ + np + p] = rt2 * a(i, j).imag();
        }
    }

    RVector hvec(const CMatrix& a) const {
        RVector v(n_);
        hvec_into(a, v.data());
        return v;
    }

    CMatrix unhvec(const RVector& v) const {
        constexpr double inv_rt2 = std::numbers::sqrt2 / 2.0;
        CMatrix a(m_, m_);
        for (int m = 0; m < m_; ++m) a(m, m) = cxd(v[m], 0.0);
        const int np = static_cast<int>(pairs_.size());
        for (int p = 0; p < np; ++p) {
            const auto [i, j] = pairs_[p];
            const cxd entry(inv_rt2 * v[m_ + p], inv_rt2 * v[m_ + np + p]);
            a(i, j) = entry;
            a(j, i) = std::conj(entry);
        }
        return a;
    }

    /// H += weight * S where S is the matrix of the PSD sandwich map
    /// A -> G A G for Hermitian G. Column q is hvec(G E_q G); each sandwiched
    /// basis element is a rank-<=2 combination of columns of G.
    void add_sandwich(RMatrix& h, const CMatrix& g, double weight) const {
        const int np = static_cast<int>(pairs_.size());
        CMatrix y(m_, m_);
        RVector col(n_);
        for (int q = 0; q < m_; ++q) {
            y.noalias() = g.col(q) * g.col(q).adjoint();
            hvec_into(y, col.data());
            h.col(q) += weight * col;
        }
        constexpr double inv_rt2 = std::numbers::sqrt2 / 2.0;
        for (int p = 0; p < np; ++p) {
            const auto [a, b] = pairs_[p];
            // real basis element: (e_a e_b^H + e_b e_a^H)/sqrt(2)
            y.noalias() = g.col(a) * g.col(b).adjoint();
            y.noalias() += g.col(b) * g.col(a).adjoint();
            y *= inv_rt2;
            hvec_into(y, col.data());
            h.col(m_ + p) += weight * col;
            // imaginary basis element: i(e_a e_b^H - e_b e_a^H)/sqrt(2)
            y.noalias() = g.col(a) * g.col(b).adjoint();
            y.noalias() -= g.col(b) * g.col(a).adjoint();
            y *= cxd(0.0, inv_rt2);
            hvec_into(y, col.data());
            h.col(m_ + np + p) += weight * col;
        }
    }

  private:
    int m_;
    int n_;
    std::vector<std::pair<int, int>> pairs_;
};

/// Log-barrier path-following core. Solves the normalized problem
///   min t * <c, X> (or t * s in feasibility phase)
///   - logdet X - sum_k logdet(U_k^H X U_k - D_k + s I) - sum_m log(cap - X_mm)
/// by damped Newton steps in the isometric Hermitian coordinates.
class BarrierCore {
  public:
    BarrierCore(int m, CMatrix c, std::vector<CMatrix> u, std::vector<CMatrix> d, double cap,
                bool feasibility_phase)
        : m_(m),
          c_(std::move(c)),
          u_(std::move(u)),
          d_(std::move(d)),
          cap_(cap),
          phase1_(feasibility_phase),
          vec_(m) {
        nu_ = 2.0 * m_;
        for (const CMatrix& uk : u_) nu_ += static_cast<double>(uk.cols());
        n_ = vec_.dim() + (phase1_ ? 1 : 0);
    }

    struct Eval {
        double phi = 0.0;
        double objective = 0.0; // <c, X> or s
        bool feasible = false;
    };

    /// Barrier value at (X, s); nullopt when the point is not strictly feasible.
    std::optional<Eval> eval(const CMatrix& x, double s, double t) const {
        double logdets = 0.0;
        Eigen::LLT<CMatrix> llt(x);
        if (llt.info() != Eigen::Success) return std::nullopt;
        logdets += chol_logdet(llt);
        for (std::size_t k = 0; k < u_.size(); ++k) {
            CMatrix inner = u_[k].adjoint() * x * u_[k] - d_[k];
            if (phase1_) inner += s * CMatrix::Identity(inner.rows(), inner.cols());
            hermitize(inner);
            Eigen::LLT<CMatrix> lk(inner);
            if (lk.info() != Eigen::Success) return std::nullopt;
            logdets += chol_logdet(lk);
        }
        double caps = 0.0;
        for (int m = 0; m < m_; ++m) {
            const double slack = cap_ - x(m, m).real();
            if (!(slack > 0.0)) return std::nullopt;
            caps += std::log(slack);
        }
        Eval e;
        e.objective = phase1_ ? s : real_inner(c_, x);
        e.phi = t * e.objective - logdets - caps;
        e.feasible = true;
        return e;
    }

    /// One centering stage at fixed t. Returns false on a line-search
    /// breakdown (caller decides how to proceed with the best iterate).
    bool center(CMatrix& x, double& s, double t, double decrement_tol, int& newton_budget,
                double* out_decrement = nullptr) {
        RVector grad(n_);
        RMatrix hess(n_, n_);
        auto current = eval(x, s, t);
        if (!current) return false;
        double decrement = std::numeric_limits<double>::infinity();
        while (newton_budget > 0) {
            --newton_budget;
            gradient_hessian(x, s, t, grad, hess);
            RVector dir = solve_newton(hess, grad);
            const double lambda_sq = -grad.dot(dir);
            if (!(lambda_sq > 0.0)) {
                // Hessian solve lost positivity; treat as centered.
                decrement = 0.0;
                break;
            }
            decrement = std::sqrt(lambda_sq);
            if (decrement <= decrement_tol) break;

            const CMatrix dx = vec_.unhvec(dir.head(vec_.dim()));
            const double ds = phase1_ ? dir[n_ - 1] : 0.0;
            double alpha = 1.0;
            bool stepped = false;
            for (int ls = 0; ls < 80; ++ls) {
                CMatrix xt = x + alpha * dx;
                hermitize(xt);
                const double st = s + alpha * ds;
                auto trial = eval(xt, st, t);
                if (trial && trial->phi <= current->phi - 0.2 * alpha * lambda_sq) {
                    x = std::move(xt);
                    s = st;
                    current = trial;
                    stepped = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!stepped) {
                if (out_decrement) *out_decrement = decrement;
                return false;
            }
        }
        if (out_decrement) *out_decrement = decrement;
        return decrement <= std::max(decrement_tol, 0.9);
    }

    double nu() const { return nu_; }
    int coords() const { return n_; }

    static double real_inner(const CMatrix& a, const CMatrix& b) {
        return a.cwiseProduct(b.conjugate()).sum().real();
    }

    static void hermitize(CMatrix& a) { detail::enforce_hermitian(a); }

  private:
    static double chol_logdet(const Eigen::LLT<CMatrix>& llt) {
        double v = 0.0;
        const auto& l = llt.matrixLLT();
        for (Eigen::Index i = 0; i < l.rows(); ++i) v += std::log(l(i, i).real());
        return 2.0 * v;
    }

    void gradient_hessian(const CMatrix& x, double s, double t, RVector& grad, RMatrix& hess) {
        const int nv = vec_.dim();
        hess.setZero();
        const CMatrix identity = CMatrix::Identity(m_, m_);

        Eigen::LLT<CMatrix> llt_x(x);
        CMatrix x_inv = llt_x.solve(identity);
        hermitize(x_inv);

        CMatrix grad_mat = -x_inv;
        if (!phase1_) grad_mat += t * c_;
        vec_.add_sandwich(hess, x_inv, 1.0);

        double grad_s = phase1_ ? t : 0.0;
        double hess_ss = 0.0;
        CMatrix cross = CMatrix::Zero(m_, m_);

        for (std::size_t k = 0; k < u_.size(); ++k) {
            const CMatrix& uk = u_[k];
            const int r = static_cast<int>(uk.cols());
            CMatrix inner = uk.adjoint() * x * uk - d_[k];
            if (phase1_) inner += s * CMatrix::Identity(r, r);
            hermitize(inner);
            Eigen::LLT<CMatrix> lk(inner);
            CMatrix b = lk.solve(CMatrix::Identity(r, r)); // A_k^{-1}
            hermitize(b);
            CMatrix g = uk * b * uk.adjoint();
            hermitize(g);
            grad_mat -= g;
            vec_.add_sandwich(hess, g, 1.0);
            if (phase1_) {
                grad_s -= b.trace().real();
                const CMatrix b2 = b * b;
                hess_ss += b2.trace().real();
                cross += uk * b2 * uk.adjoint();
            }
        }

        for (int m = 0; m < m_; ++m) {
            const double slack = cap_ - x(m, m).real();
            grad_mat(m, m) += 1.0 / slack;
            hess(m, m) += 1.0 / (slack * slack);
        }

        vec_.hvec_into(grad_mat, grad.data());
        if (phase1_) {
            hermitize(cross);
            RVector cross_v = vec_.hvec(cross);
            grad[n_ - 1] = grad_s;
            hess.block(0, n_ - 1, nv, 1) = cross_v;
            hess.block(n_ - 1, 0, 1, nv) = cross_v.transpose();
            hess(n_ - 1, n_ - 1) = hess_ss;
        }
        hess = 0.5 * (hess + hess.transpose()).eval();
    }

    RVector solve_newton(RMatrix& hess, const RVector& grad) const {
        double ridge = 0.0;
        for (int attempt = 0; attempt < 6; ++attempt) {
            Eigen::LLT<RMatrix> llt(hess);
            if (llt.info() == Eigen::Success) {
                return llt.solve(-grad);
            }
            const double bump =
                (ridge == 0.0 ? 1e-12 : ridge * 100.0) * (1.0 + hess.diagonal().maxCoeff());
            hess.diagonal().array() += bump - ridge;
            ridge = bump;
        }
        throw NumericalBreakdown("sdp solve: Newton system is not positive definite");
    }

    int m_;
    CMatrix c_;
    std::vector<CMatrix> u_;
    std::vector<CMatrix> d_;
    double cap_;
    bool phase1_;
    HermitianVectorizer vec_;
    double nu_ = 0.0;
    int n_ = 0;
};

}  // namespace detail

/// Interior-point solve of the pilot-design SDP family. `warm` may carry a
/// feasible (or nearly feasible) Gram matrix from a previous outer iteration.
inline SdpSolution solve(const SdpProblem& problem, const SolverOptions& options = {},
                         const CMatrix* warm = nullptr) {
    problem.validate();
    const int m = problem.dim;

    // Constraint scale: how "large" X has to be to reach the LMI targets.
    double need = -std::numeric_limits<double>::infinity();
    for (const LmiConstraint& lmi : problem.lmis) {
        need = std::max(need, max_eigenvalue(lmi.d));
    }
    const bool vacuous = problem.lmis.empty() || need <= 0.0;

    // Presolve: with a PSD objective and vacuous LMIs, X = 0 is optimal.
    const double c_min = min_eigenvalue(problem.objective);
    const double c_norm = std::max(std::abs(c_min), std::abs(max_eigenvalue(problem.objective)));
    if (vacuous && c_min >= -1e-12 * std::max(1.0, c_norm)) {
        SdpSolution solution;
        solution.x = CMatrix::Zero(m, m);
        solution.objective_value = 0.0;
        solution.status = SolveStatus::Optimal;
        solution.iterations = 0;
        solution.note = "presolved: vacuous constraints with PSD objective";
        return solution;
    }

    const double x_scale = vacuous ? problem.diag_cap : need;
    const double c_scale = std::max(c_norm, 1e-300);
    const double cap = problem.diag_cap / x_scale;

    CMatrix c_hat = problem.objective.mat() / c_scale;
    std::vector<CMatrix> u_list;
    std::vector<CMatrix> d_list;
    u_list.reserve(problem.lmis.size());
    d_list.reserve(problem.lmis.size());
    for (const LmiConstraint& lmi : problem.lmis) {
        u_list.push_back(lmi.u);
        d_list.push_back(lmi.d.mat() / x_scale);
    }

    int newton_budget = options.max_iter;
    int iterations_used = 0;
    const auto budget_used = [&]() { return options.max_iter - newton_budget; };

    // Strictly feasible start: scaled identity when the caps allow it,
    // otherwise a max-slack feasibility phase.
    const double need_hat = vacuous ? 0.0 : 1.0;
    CMatrix x = CMatrix::Zero(m, m);
    double beta = 0.0;
    if (warm == nullptr || true) {
        // beta is also the fallback blend target for warm starts
        beta = std::min(std::max(1.25 * need_hat, 1e-4 * cap), 0.5 * (need_hat + cap));
    }

    detail::BarrierCore phase2(m, c_hat, u_list, d_list, cap, false);

    bool have_start = false;
    if (warm != nullptr && warm->rows() == m && warm->cols() == m) {
        // Blend the warm start toward the interior until strictly feasible.
        CMatrix base = *warm / x_scale;
        detail::hermitize(base);
        const double ridge = 1e-8 * std::max(1.0, base.trace().real() / m);
        base.diagonal().array() += ridge;
        for (double theta : {0.0, 0.01, 0.05, 0.2, 0.5}) {
            CMatrix candidate = (1.0 - theta) * base + theta * beta * CMatrix::Identity(m, m);
            detail::hermitize(candidate);
            if (phase2.eval(candidate, 0.0, 1.0)) {
                x = std::move(candidate);
                have_start = true;
                break;
            }
        }
    }
    if (!have_start && beta > need_hat && beta < cap) {
        CMatrix candidate = beta * CMatrix::Identity(m, m);
        if (phase2.eval(candidate, 0.0, 1.0)) {
            x = std::move(candidate);
            have_start = true;
        }
    }

    if (!have_start) {
        // Feasibility phase: minimize the uniform LMI slack s.
        detail::BarrierCore phase1(m, CMatrix::Zero(m, m), u_list, d_list, cap, true);
        const double beta1 = 0.5 * cap;
        x = beta1 * CMatrix::Identity(m, m);
        double s = std::max(0.0, need_hat - beta1) + 0.5 * std::max(1.0, need_hat);
        const double margin = 1e-5 * std::max(1.0, need_hat);

        double t = 1.0 / std::max(1.0, std::abs(s));
        bool feasible_found = false;
        double best_s = s;
        int stall = 0;
        while (newton_budget > 0) {
            phase1.center(x, s, t, 0.25, newton_budget);
            if (s < best_s - 1e-12 * std::max(1.0, std::abs(best_s))) {
                best_s = s;
                stall = 0;
            } else if (++stall >= 50) {
                break;
            }
            if (s <= -margin) {
                feasible_found = true;
                break;
            }
            const double gap = phase1.nu() / t;
            if (gap <= 0.25 * margin) break;
            t *= 10.0;
        }
        iterations_used = budget_used();
        if (!feasible_found) {
            SdpSolution solution;
            solution.x = CMatrix::Zero(m, m);
            solution.objective_value = 0.0;
            solution.status = SolveStatus::Infeasible;
            solution.iterations = iterations_used;
            std::ostringstream note;
            note << "infeasible: certified minimal LMI slack " << best_s * x_scale
                 << " (normalized " << best_s << ") under diag cap " << problem.diag_cap;
            solution.note = note.str();
            return solution;
        }
        // x is strictly feasible for the original constraints; continue below.
    }

    // Main path-following loop.
    double s_unused = 0.0;
    auto objective_at = [&](const CMatrix& xx) { return detail::BarrierCore::real_inner(c_hat, xx); };
    double t = [&] {
        const double obj0 = std::abs(objective_at(x));
        const double target_gap = (warm != nullptr ? 0.5 : 10.0) * std::max(1.0, obj0);
        return phase2.nu() / target_gap;
    }();

    SdpSolution solution;
    solution.status = SolveStatus::MaxIterations;
    bool done = false;
    while (!done && newton_budget > 0) {
        double decrement = 0.0;
        const bool centered = phase2.center(x, s_unused, t, 0.25, newton_budget, &decrement);
        const double obj = objective_at(x);
        const double gap = (phase2.nu() + std::sqrt(phase2.nu()) * std::min(decrement, 1.0)) / t;
        if (gap <= options.gap_tol * std::max(1.0, std::abs(obj))) {
            solution.status = SolveStatus::Optimal;
            done = true;
        } else if (!centered) {
            // Line search stalled; the gap certificate is the best we have.
            solution.status = (gap <= 100.0 * options.gap_tol * std::max(1.0, std::abs(obj)))
                                  ? SolveStatus::Optimal
                                  : SolveStatus::MaxIterations;
            solution.note = "line search stalled at relative gap " +
                            std::to_string(gap / std::max(1.0, std::abs(obj)));
            done = true;
        } else {
            t *= 10.0;
        }
    }
    iterations_used += budget_used() - iterations_used >= 0 ? budget_used() - iterations_used : 0;

    solution.x = x * x_scale;
    detail::hermitize(solution.x);
    solution.objective_value =
        detail::BarrierCore::real_inner(problem.objective.mat(), solution.x);
    solution.iterations = budget_used();

    const FeasibilityReport report =
        feasibility_check(HermitianMatrix::symmetrized(solution.x), problem);
    solution.max_constraint_violation = std::max(0.0, -report.min_slack());
    return solution;
}

}  // namespace pilotlab
