#include "eit/linear_difference.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "eit/errors.hpp"

namespace eit {

SmoothnessPrior build_prior(const Eigen::MatrixX3d& nodes, double std_sigma, double d,
                            double cov_at_d) {
    if (!(std_sigma > 0.0)) throw ConfigError("build_prior: std_sigma must be positive");
    if (!(d > 0.0)) throw ConfigError("build_prior: correlation distance must be positive");
    if (!(cov_at_d > 0.0 && cov_at_d < 1.0)) {
        throw ConfigError("build_prior: cov_at_d must lie in (0, 1)");
    }
    const int N = static_cast<int>(nodes.rows());

    SmoothnessPrior prior;
    prior.std_sigma = std_sigma;
    prior.correlation_a = d / std::sqrt(2.0 * std::log(1.0 / cov_at_d));

    const double var = std_sigma * std_sigma;
    const double inv2a2 = 1.0 / (2.0 * prior.correlation_a * prior.correlation_a);
    prior.gamma.resize(N, N);
    for (int i = 0; i < N; ++i) {
        prior.gamma(i, i) = var;
        for (int j = i + 1; j < N; ++j) {
            const double d2 = (nodes.row(i) - nodes.row(j)).squaredNorm();
            prior.gamma(i, j) = prior.gamma(j, i) = var * std::exp(-d2 * inv2a2);
        }
    }

    for (int attempt = 0; attempt < 2; ++attempt) {
        Eigen::LLT<Eigen::MatrixXd> llt(prior.gamma);
        if (llt.info() == Eigen::Success) {
            // gamma = C C^T  =>  L_p = C^{-1} satisfies L_p^T L_p = gamma^{-1}
            prior.whitener = llt.matrixL()
                                 .solve(Eigen::MatrixXd::Identity(N, N));
            return prior;
        }
        prior.gamma.diagonal().array() += 1e-10 * var;
    }
    throw FactorizationFailure("build_prior: covariance factorization failed after jitter");
}

NoiseModel NoiseModel::uniform(int channels, double std) {
    if (!(std > 0.0)) throw ConfigError("NoiseModel: std must be positive");
    NoiseModel m;
    m.stds = Eigen::VectorXd::Constant(channels, std);
    return m;
}

NoiseModel NoiseModel::from_snr(const Eigen::MatrixXd& voltages, double snr_db) {
    const double vmax = voltages.cwiseAbs().maxCoeff();
    if (!(vmax > 0.0)) throw DegenerateData("NoiseModel::from_snr: zero voltage data");
    return uniform(static_cast<int>(voltages.size()),
                   vmax * std::pow(10.0, -snr_db / 20.0));
}

Eigen::VectorXd reconstruct_linear_diff(const Eigen::MatrixXd& jacobian,
                                        const Eigen::VectorXd& delta_v, const NoiseModel& noise,
                                        const SmoothnessPrior& prior) {
    const long rows = jacobian.rows();
    const long N = jacobian.cols();
    if (delta_v.size() != rows) {
        throw ShapeMismatch("reconstruct_linear_diff: data length does not match Jacobian rows");
    }
    if (noise.stds.size() != rows || prior.gamma.rows() != N) {
        throw ShapeMismatch("reconstruct_linear_diff: noise/prior dimensions disagree");
    }
    // Gamma_de = 2 diag(std^2) (difference of two equally noisy frames)
    const Eigen::ArrayXd w = 1.0 / (2.0 * noise.stds.array().square());
    const Eigen::MatrixXd jw = jacobian.transpose() * w.matrix().asDiagonal();
    Eigen::MatrixXd normal = jw * jacobian;
    normal.noalias() += prior.whitener.transpose() * prior.whitener;
    const Eigen::VectorXd rhs = jw * delta_v;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
    if (ldlt.info() != Eigen::Success) {
        throw FactorizationFailure("reconstruct_linear_diff: normal equations not factorizable");
    }
    const Eigen::VectorXd delta_sigma = ldlt.solve(rhs);
    if (!delta_sigma.allFinite()) {
        throw FactorizationFailure("reconstruct_linear_diff: solve produced non-finite values");
    }
    return delta_sigma;
}

}  // namespace eit
