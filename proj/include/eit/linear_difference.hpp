#ifndef EIT_LINEAR_DIFFERENCE_HPP
#define EIT_LINEAR_DIFFERENCE_HPP

#include <Eigen/Dense>

namespace eit {

/// Squared-exponential smoothness prior over mesh nodes.
struct SmoothnessPrior {
    Eigen::MatrixXd gamma;      // N x N covariance (S^2/m^2)
    Eigen::MatrixXd whitener;   // L_p with L_p^T L_p = gamma^{-1}
    double std_sigma = 0.0;
    double correlation_a = 0.0;  // length scale solved from the covariance target
};

/// Builds the prior with correlation length a chosen so that the covariance
/// at distance d equals cov_at_d * variance:
///   a = d / sqrt(2 ln(1 / cov_at_d)).
/// Retries the factorization once with a small diagonal jitter, then throws
/// FactorizationFailure.
SmoothnessPrior build_prior(const Eigen::MatrixX3d& nodes, double std_sigma, double d,
                            double cov_at_d);

/// Measurement noise model for difference data: independent per channel,
/// identical std for both frames, so cov(dV) = 2 std^2 per channel.
struct NoiseModel {
    Eigen::VectorXd stds;  // per stacked channel (V)

    static NoiseModel uniform(int channels, double std);
    /// std = max|V| * 10^(-snr_db/20)
    static NoiseModel from_snr(const Eigen::MatrixXd& voltages, double snr_db);
};

/// Tikhonov-regularized linear difference reconstruction: minimizes
/// ||L_de (dV - J ds)||^2 + ||L_p ds||^2 via the normal equations.
Eigen::VectorXd reconstruct_linear_diff(const Eigen::MatrixXd& jacobian,
                                        const Eigen::VectorXd& delta_v, const NoiseModel& noise,
                                        const SmoothnessPrior& prior);

}  // namespace eit

#endif  // EIT_LINEAR_DIFFERENCE_HPP
