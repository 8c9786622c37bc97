#pragma once

#include <cmath>
#include <string>

#include "pilotlab/channel.hpp"
#include "pilotlab/matrix.hpp"
#include "pilotlab/rng.hpp"

namespace pilotlab {

/// T x M block of pilot symbols broadcast by the BTS; row t is the symbol
/// vector sent in slot t. Amplitude units: |entry|^2 is an energy.
struct PilotMatrix {
    CMatrix P;

    static PilotMatrix empty(int antennas) {
        return PilotMatrix{CMatrix::Zero(0, antennas)};
    }

    int length() const { return static_cast<int>(P.rows()); }
    int antennas() const { return static_cast<int>(P.cols()); }

    /// Gram matrix X = P^H P.
    HermitianMatrix gram() const {
        return HermitianMatrix::symmetrized(P.adjoint() * P);
    }
};

/// Received and fed-back pilot observations for one round.
struct ObservationRound {
    CVector y;     // P h + w
    CVector y_bar; // y + z
    CVector w;     // thermal noise
    CVector z;     // quantization noise
};

/// Analytic LMMSE error covariances, on the channel (M x M) and on the
/// fast-fading coefficients (r x r).
struct ErrorCovariance {
    HermitianMatrix c_e;     // M x M
    HermitianMatrix c_e_eta; // r x r
};

namespace detail {

inline void require_pilot_matches(const PilotMatrix& pilots, const ChannelCovariance& cov) {
    if (pilots.antennas() != cov.antennas()) {
        throw DimensionMismatch("pilot matrix has " + std::to_string(pilots.antennas()) +
                                " antennas, covariance has " + std::to_string(cov.antennas()));
    }
}

}  // namespace detail

/// Error covariance after observing the fed-back pilots, in the compact form
/// C_e_eta = (I_r + R^{H/2} P^H P R^{1/2} / s^2)^{-1} and
/// C_e = U (Lambda^{-1} + U^H P^H P U / s^2)^{-1} U^H.
inline ErrorCovariance error_covariance(const PilotMatrix& pilots, const ChannelCovariance& cov) {
    detail::require_pilot_matches(pilots, cov);
    if (!(cov.sigma_sq > 0.0)) {
        throw SingularInput("error_covariance: sigma_sq must be > 0");
    }
    for (int i = 0; i < cov.rank(); ++i) {
        if (!(cov.lambda[i] > 0.0)) {
            throw SingularInput("error_covariance: covariance eigenvalue is not positive");
        }
    }
    const int r = cov.rank();
    const CMatrix pu = pilots.P * cov.U;      // T x r
    const CMatrix gram_u = pu.adjoint() * pu; // U^H P^H P U

    const CVector sqrt_lambda = cov.lambda.cwiseSqrt().cast<cxd>();
    const CVector inv_lambda = cov.lambda.cwiseInverse().cast<cxd>();
    CMatrix inner_eta = CMatrix::Identity(r, r);
    inner_eta += (sqrt_lambda.asDiagonal() * gram_u * sqrt_lambda.asDiagonal()) / cov.sigma_sq;
    const HermitianMatrix c_e_eta = HermitianMatrix::symmetrized(
        HermitianMatrix::symmetrized(inner_eta).mat().llt().solve(CMatrix::Identity(r, r)));

    CMatrix inner_h = gram_u / cov.sigma_sq;
    inner_h += CMatrix(inv_lambda.asDiagonal());
    const CMatrix mid =
        HermitianMatrix::symmetrized(inner_h).mat().llt().solve(CMatrix::Identity(r, r));
    const HermitianMatrix c_e = HermitianMatrix::symmetrized(cov.U * mid * cov.U.adjoint());
    return ErrorCovariance{c_e, c_e_eta};
}

/// Same quantity through the pre-Woodbury T x T route,
/// C_e_eta = I_r - R^{H/2} P^H (P R P^H + s^2 I_T)^{-1} P R^{1/2}.
/// Kept as an independent cross-check of error_covariance.
inline HermitianMatrix error_covariance_eta_direct(const PilotMatrix& pilots,
                                                   const ChannelCovariance& cov) {
    detail::require_pilot_matches(pilots, cov);
    const int r = cov.rank();
    const int t = pilots.length();
    if (t == 0) {
        return HermitianMatrix::identity(r);
    }
    const CMatrix half_p = pilots.P * cov.sqrt_factor(); // T x r = P R^{1/2}
    CMatrix cyy = half_p * half_p.adjoint();
    cyy += cov.sigma_sq * CMatrix::Identity(t, t);
    const CMatrix solved = HermitianMatrix::symmetrized(cyy).mat().llt().solve(half_p);
    return HermitianMatrix::symmetrized(CMatrix::Identity(r, r) - half_p.adjoint() * solved);
}

/// LMMSE channel estimate from the fed-back observation:
/// eta_hat = R^{H/2} P^H (P R P^H + s^2 I_T)^{-1} y_bar, h_hat = R^{1/2} eta_hat.
inline CVector lmmse_estimate(const CVector& y_bar, const PilotMatrix& pilots,
                              const ChannelCovariance& cov) {
    detail::require_pilot_matches(pilots, cov);
    const int t = pilots.length();
    if (y_bar.size() != t) {
        throw DimensionMismatch("lmmse_estimate: observation length mismatch");
    }
    if (t == 0) {
        return CVector::Zero(cov.antennas());
    }
    const CMatrix half = cov.sqrt_factor();  // M x r
    const CMatrix half_p = pilots.P * half;  // T x r
    CMatrix cyy = half_p * half_p.adjoint();
    cyy += cov.sigma_sq * CMatrix::Identity(t, t);
    Eigen::LLT<CMatrix> llt(HermitianMatrix::symmetrized(cyy).mat());
    if (llt.info() != Eigen::Success) {
        throw SingularInput("lmmse_estimate: observation covariance is singular");
    }
    const CVector eta_hat = half_p.adjoint() * llt.solve(y_bar);
    return half * eta_hat;
}

/// One simulated acquisition round: channel draw, noisy observation,
/// quantized feedback, LMMSE estimate and its squared error.
struct RoundResult {
    ChannelRealization channel;
    ObservationRound obs;
    CVector h_hat;
    double squared_error = 0.0;
};

inline RoundResult simulate_round(const PilotMatrix& pilots, const ChannelCovariance& cov,
                                  Rng& rng) {
    detail::require_pilot_matches(pilots, cov);
    const int t = pilots.length();
    RoundResult round;
    round.channel = sample_channel(cov, rng);
    round.obs.w.resize(t);
    round.obs.z.resize(t);
    const double wn = std::sqrt(cov.sigma_n_sq);
    const double zn = std::sqrt(cov.sigma_q_sq);
    for (int i = 0; i < t; ++i) {
        round.obs.w[i] = wn * rng.cgaussian();
        round.obs.z[i] = zn * rng.cgaussian();
    }
    round.obs.y = pilots.P * round.channel.h + round.obs.w;
    round.obs.y_bar = round.obs.y + round.obs.z;
    round.h_hat = lmmse_estimate(round.obs.y_bar, pilots, cov);
    round.squared_error = (round.h_hat - round.channel.h).squaredNorm();
    return round;
}

/// lambda_max(C_e) / eps_k, the per-user accuracy figure of merit.
inline double accuracy_ratio(const ErrorCovariance& err, double eps_k) {
    if (!(eps_k > 0.0)) {
        throw InvalidConfig("accuracy_ratio: eps_k must be > 0");
    }
    return max_eigenvalue(err.c_e) / eps_k;
}

/// LMI side of the error-constraint equivalence:
/// C_e <= eps_k I  <=>  U^H X U >= (eps_k^{-1} I - Lambda^{-1}) sigma^2.
inline bool check_lmi_constraint(const HermitianMatrix& x, const ChannelCovariance& cov,
                                 double eps_k, double tol = 0.0) {
    if (x.dim() != cov.antennas()) {
        throw DimensionMismatch("check_lmi_constraint: Gram matrix dimension mismatch");
    }
    if (!(eps_k > 0.0)) {
        throw InvalidConfig("check_lmi_constraint: eps_k must be > 0");
    }
    const int r = cov.rank();
    CMatrix lhs = cov.U.adjoint() * x.mat() * cov.U;
    for (int i = 0; i < r; ++i) {
        lhs(i, i) -= (1.0 / eps_k - 1.0 / cov.lambda[i]) * cov.sigma_sq;
    }
    return min_eigenvalue(HermitianMatrix::symmetrized(lhs)) >= -tol;
}

}  // namespace pilotlab
