#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <string>
#include <utility>

#include "pilotlab/errors.hpp"

namespace pilotlab {

using cxd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

namespace detail {

/// Largest absolute deviation between A and its conjugate transpose.
inline double hermitian_defect(const CMatrix& a) {
    if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
    double defect = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        for (Eigen::Index i = 0; i <= j; ++i) {
            defect = std::max(defect, std::abs(a(i, j) - std::conj(a(j, i))));
        }
    }
    return defect;
}

/// Mirror the upper triangle onto the lower one and realify the diagonal,
/// making the matrix Hermitian to the last bit.
inline void enforce_hermitian(CMatrix& a) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        a(j, j) = cxd(a(j, j).real(), 0.0);
        for (Eigen::Index i = 0; i < j; ++i) {
            const cxd v = 0.5 * (a(i, j) + std::conj(a(j, i)));
            a(i, j) = v;
            a(j, i) = std::conj(v);
        }
    }
}

}  // namespace detail

/// Square complex matrix guaranteed Hermitian. Entries are stored mirrored
/// (lower triangle is the exact conjugate of the upper one), so downstream
/// code can rely on bit-level symmetry.
class HermitianMatrix {
  public:
    /// Validates the input against `tol` (largest entrywise deviation from
    /// the conjugate transpose), then stores the symmetrized matrix.
    explicit HermitianMatrix(CMatrix m, double tol = 1e-12) : mat_(std::move(m)) {
        if (mat_.rows() != mat_.cols()) {
            throw NonHermitianInput("HermitianMatrix: input is not square");
        }
        const double defect = detail::hermitian_defect(mat_);
        if (!(defect <= tol)) {
            throw NonHermitianInput("HermitianMatrix: symmetry defect " + std::to_string(defect) +
                                    " exceeds tolerance " + std::to_string(tol));
        }
        detail::enforce_hermitian(mat_);
    }

    /// Builds from (m + m^H)/2 without a symmetry check; for matrices that
    /// are Hermitian up to rounding from products like P^H P.
    static HermitianMatrix symmetrized(CMatrix m) {
        if (m.rows() != m.cols()) {
            throw NonHermitianInput("HermitianMatrix::symmetrized: input is not square");
        }
        detail::enforce_hermitian(m);
        return HermitianMatrix(std::move(m), Trusted{});
    }

    static HermitianMatrix zero(int dim) {
        return HermitianMatrix(CMatrix::Zero(dim, dim), Trusted{});
    }

    static HermitianMatrix identity(int dim, double scale = 1.0) {
        return HermitianMatrix(scale * CMatrix::Identity(dim, dim), Trusted{});
    }

    int dim() const { return static_cast<int>(mat_.rows()); }
    const CMatrix& mat() const { return mat_; }

  private:
    struct Trusted {};
    HermitianMatrix(CMatrix m, Trusted) : mat_(std::move(m)) {}
    CMatrix mat_;
};

/// Eigendecomposition of a Hermitian matrix with real eigenvalues sorted in
/// descending order and orthonormal column eigenvectors.
struct EigenFactorization {
    RVector values;   // descending
    CMatrix vectors;  // unitary columns, column i pairs with values[i]

    CMatrix reconstruct() const {
        return vectors * values.asDiagonal() * vectors.adjoint();
    }
};

inline EigenFactorization eig_hermitian(const HermitianMatrix& a) {
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(a.mat());
    if (solver.info() != Eigen::Success) {
        throw NumericalBreakdown("eig_hermitian: eigensolver did not converge");
    }
    const int n = a.dim();
    EigenFactorization f;
    f.values.resize(n);
    f.vectors.resize(n, n);
    // Eigen returns ascending order; flip.
    for (int i = 0; i < n; ++i) {
        f.values[i] = solver.eigenvalues()[n - 1 - i];
        f.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
    }
    return f;
}

inline double min_eigenvalue(const HermitianMatrix& a) {
    if (a.dim() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(a.mat(), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw NumericalBreakdown("min_eigenvalue: eigensolver did not converge");
    }
    return solver.eigenvalues()[0];
}

inline double max_eigenvalue(const HermitianMatrix& a) {
    if (a.dim() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(a.mat(), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw NumericalBreakdown("max_eigenvalue: eigensolver did not converge");
    }
    return solver.eigenvalues()[a.dim() - 1];
}

/// Loewner order test: true iff lambda_min(B - A) >= -tol.
inline bool psd_order_leq(const HermitianMatrix& a, const HermitianMatrix& b, double tol) {
    if (a.dim() != b.dim()) {
        throw DimensionMismatch("psd_order_leq: dimensions " + std::to_string(a.dim()) + " vs " +
                                std::to_string(b.dim()));
    }
    if (a.dim() == 0) return true;
    const HermitianMatrix diff = HermitianMatrix::symmetrized(b.mat() - a.mat());
    return min_eigenvalue(diff) >= -tol;
}

/// Square-root factor of the top-`rank` spectral part: F = V_r diag(sqrt(v_r)),
/// so that F F^H reproduces sum_{i<=rank} v_i e_i e_i^H.
inline CMatrix sqrt_psd_factor(const RVector& values, const CMatrix& vectors, int rank) {
    if (rank < 0 || rank > vectors.cols() || rank > values.size()) {
        throw DimensionMismatch("sqrt_psd_factor: rank out of range");
    }
    for (int i = 0; i < rank; ++i) {
        if (!(values[i] > 0.0)) {
            throw NonpositiveEigenvalue("sqrt_psd_factor: eigenvalue " + std::to_string(i) +
                                        " is " + std::to_string(values[i]));
        }
    }
    CMatrix factor(vectors.rows(), rank);
    for (int i = 0; i < rank; ++i) {
        factor.col(i) = vectors.col(i) * std::sqrt(values[i]);
    }
    return factor;
}

}  // namespace pilotlab
