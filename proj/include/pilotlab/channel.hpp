#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "pilotlab/matrix.hpp"
#include "pilotlab/rng.hpp"

namespace pilotlab {

/// Scenario parameters: BTS uniform circular array, single-antenna terminals
/// scattered in an annulus, ring of scatterers around each terminal.
struct ScenarioConfig {
    int antennas = 32;
    int users = 8;
    double array_diameter_m = 2.0;
    double carrier_ghz = 3.5;
    double min_dist_m = 250.0;
    double max_dist_m = 750.0;
    int scatterers_per_user = 200;
    double scatter_radius_m = 50.0;
    double noise_dbm = -110.0;          // total sigma^2 = thermal + quantization
    double quantization_split = 0.5;    // fraction of sigma^2 assigned to quantization
    double energy_keep_fraction = 0.99; // covariance rank truncation threshold
    std::uint64_t seed = 1;

    void validate() const {
        if (antennas < 1) throw InvalidConfig("antennas must be >= 1");
        if (users < 1) throw InvalidConfig("users must be >= 1");
        if (!(array_diameter_m > 0.0)) throw InvalidConfig("array_diameter_m must be > 0");
        if (!(carrier_ghz > 0.0)) throw InvalidConfig("carrier_ghz must be > 0");
        if (!(min_dist_m > 0.0)) throw InvalidConfig("min_dist_m must be > 0");
        if (min_dist_m > max_dist_m) throw InvalidConfig("min_dist_m must be <= max_dist_m");
        if (scatterers_per_user < 1) throw InvalidConfig("scatterers_per_user must be >= 1");
        if (!(scatter_radius_m >= 0.0)) throw InvalidConfig("scatter_radius_m must be >= 0");
        if (!(quantization_split >= 0.0 && quantization_split <= 1.0)) {
            throw InvalidConfig("quantization_split must be in [0, 1]");
        }
        if (!(energy_keep_fraction > 0.0 && energy_keep_fraction <= 1.0)) {
            throw InvalidConfig("energy_keep_fraction must be in (0, 1]");
        }
    }

    double noise_variance_linear() const { return std::pow(10.0, noise_dbm / 10.0); }
    double wavelength_m() const { return 299792458.0 / (carrier_ghz * 1e9); }
};

/// One drawn geometry: antenna positions on the array circle, terminal
/// positions in the annulus, scatterer positions on the per-terminal disc.
struct Scenario {
    ScenarioConfig config;
    RMatrix antenna_xy;                // M x 2, meters, BTS center at origin
    RMatrix ut_xy;                     // K x 2
    std::vector<RMatrix> scatterer_xy; // K entries of S x 2

    double ut_distance(int user) const { return ut_xy.row(user).norm(); }
};

/// 3GPP 3D-UMi line-of-sight path loss (TR 36.873),
/// PL_dB = 22 log10(d_m) + 28 + 20 log10(f_GHz), returned as linear gain.
inline double path_loss_gain(double dist_m, double carrier_ghz) {
    const double pl_db = 22.0 * std::log10(dist_m) + 28.0 + 20.0 * std::log10(carrier_ghz);
    return std::pow(10.0, -pl_db / 10.0);
}

/// Draws terminal positions uniformly by area over the annulus and scatterer
/// positions uniformly by area over the disc around each terminal.
inline Scenario generate_scenario(const ScenarioConfig& config, Rng& rng) {
    config.validate();
    const int m = config.antennas;
    const int k = config.users;
    const int s = config.scatterers_per_user;

    Scenario scenario;
    scenario.config = config;

    scenario.antenna_xy.resize(m, 2);
    const double array_radius = 0.5 * config.array_diameter_m;
    for (int a = 0; a < m; ++a) {
        const double angle = 2.0 * std::numbers::pi * a / m;
        scenario.antenna_xy(a, 0) = array_radius * std::cos(angle);
        scenario.antenna_xy(a, 1) = array_radius * std::sin(angle);
    }

    scenario.ut_xy.resize(k, 2);
    scenario.scatterer_xy.reserve(k);
    const double r2_min = config.min_dist_m * config.min_dist_m;
    const double r2_max = config.max_dist_m * config.max_dist_m;
    for (int u = 0; u < k; ++u) {
        const double radius = std::sqrt(rng.uniform(r2_min, r2_max));
        const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
        scenario.ut_xy(u, 0) = radius * std::cos(theta);
        scenario.ut_xy(u, 1) = radius * std::sin(theta);

        RMatrix pts(s, 2);
        for (int i = 0; i < s; ++i) {
            const double rr = config.scatter_radius_m * std::sqrt(rng.uniform());
            const double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
            pts(i, 0) = scenario.ut_xy(u, 0) + rr * std::cos(ang);
            pts(i, 1) = scenario.ut_xy(u, 1) + rr * std::sin(ang);
        }
        scenario.scatterer_xy.push_back(std::move(pts));
    }
    return scenario;
}

/// Per-user statistical CSI: rank-truncated eigendecomposition of the spatial
/// covariance (path loss folded into the eigenvalues) plus noise variances in
/// linear mW-equivalent units.
struct ChannelCovariance {
    CMatrix U;      // M x r, orthonormal columns
    RVector lambda; // r positive eigenvalues, descending
    double sigma_n_sq = 0.0;
    double sigma_q_sq = 0.0;
    double sigma_sq = 0.0; // sigma_n_sq + sigma_q_sq

    int antennas() const { return static_cast<int>(U.rows()); }
    int rank() const { return static_cast<int>(U.cols()); }
    double trace() const { return lambda.sum(); }

    CMatrix dense() const { return U * lambda.asDiagonal() * U.adjoint(); }

    /// R^{1/2} = U diag(sqrt(lambda)), M x r.
    CMatrix sqrt_factor() const { return sqrt_psd_factor(lambda, U, rank()); }
};

/// Ray-traced covariance with spherical wavefronts: each scatterer contributes
/// a unit-modulus per-antenna response from its exact distance to the antenna,
/// rays carry equal power 1/S, and the result is truncated to the smallest
/// rank holding `energy_keep_fraction` of the total energy.
inline ChannelCovariance build_covariance(const Scenario& scenario, int user) {
    const ScenarioConfig& config = scenario.config;
    if (user < 0 || user >= config.users) {
        throw DimensionMismatch("build_covariance: user index out of range");
    }
    const int m = config.antennas;
    const int s = config.scatterers_per_user;
    const double wavelength = config.wavelength_m();
    const double gain = path_loss_gain(scenario.ut_distance(user), config.carrier_ghz);

    CMatrix rays(m, s);
    const RMatrix& pts = scenario.scatterer_xy[user];
    for (int i = 0; i < s; ++i) {
        for (int a = 0; a < m; ++a) {
            const double dx = scenario.antenna_xy(a, 0) - pts(i, 0);
            const double dy = scenario.antenna_xy(a, 1) - pts(i, 1);
            const double dist = std::hypot(dx, dy);
            const double phase = -2.0 * std::numbers::pi * dist / wavelength;
            rays(a, i) = cxd(std::cos(phase), std::sin(phase));
        }
    }
    const HermitianMatrix raw =
        HermitianMatrix::symmetrized((gain / s) * (rays * rays.adjoint()));

    EigenFactorization eig = eig_hermitian(raw);
    const double total = eig.values.sum();
    const double target = config.energy_keep_fraction * total;
    int rank = 0;
    double kept = 0.0;
    while (rank < m && (kept < target || rank == 0)) {
        if (!(eig.values[rank] > 0.0)) break;
        kept += eig.values[rank];
        ++rank;
    }
    if (rank == 0) {
        throw NumericalBreakdown("build_covariance: covariance has no positive eigenvalue");
    }

    ChannelCovariance cov;
    cov.U = eig.vectors.leftCols(rank);
    cov.lambda = eig.values.head(rank);
    const double sigma_sq = config.noise_variance_linear();
    cov.sigma_q_sq = config.quantization_split * sigma_sq;
    cov.sigma_n_sq = sigma_sq - cov.sigma_q_sq;
    cov.sigma_sq = cov.sigma_n_sq + cov.sigma_q_sq;
    return cov;
}

/// One fast-fading draw: h = U diag(sqrt(lambda)) eta with eta ~ CN(0, I_r).
struct ChannelRealization {
    CVector eta; // r
    CVector h;   // M
};

inline ChannelRealization sample_channel(const ChannelCovariance& cov, Rng& rng) {
    ChannelRealization real;
    real.eta.resize(cov.rank());
    for (int i = 0; i < cov.rank(); ++i) {
        real.eta[i] = rng.cgaussian();
    }
    real.h = cov.sqrt_factor() * real.eta;
    return real;
}

}  // namespace pilotlab
