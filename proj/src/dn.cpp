#include "eit/dn.hpp"

#include <cmath>

#include "eit/errors.hpp"

namespace eit {

namespace {

// Sign convention: first entry of each column with magnitude above a relative
// tolerance is made positive.
void fix_column_signs(Eigen::MatrixXd& Q) {
    for (int j = 0; j < Q.cols(); ++j) {
        const double scale = Q.col(j).cwiseAbs().maxCoeff();
        for (int i = 0; i < Q.rows(); ++i) {
            if (std::abs(Q(i, j)) > 1e-12 * scale) {
                if (Q(i, j) < 0) Q.col(j) = -Q.col(j);
                break;
            }
        }
    }
}

}  // namespace

CurrentPatternBasis build_basis(const Eigen::MatrixXd& currents_raw) {
    const int L = static_cast<int>(currents_raw.rows());
    const int K = static_cast<int>(currents_raw.cols());
    if (K < 1 || K > L - 1) {
        throw ShapeMismatch("build_basis: need 1 <= K <= L-1 columns");
    }
    for (int k = 0; k < K; ++k) {
        const double n = currents_raw.col(k).norm();
        if (std::abs(currents_raw.col(k).sum()) > 1e-6 * std::max(n, 1e-300)) {
            throw NonMeanFreeCurrents("build_basis: column " + std::to_string(k) +
                                      " is not mean-free");
        }
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(currents_raw);
    const Eigen::MatrixXd Rfac = qr.matrixQR().topRows(K).triangularView<Eigen::Upper>();
    const double rmax = Rfac.diagonal().cwiseAbs().maxCoeff();
    for (int k = 0; k < K; ++k) {
        if (std::abs(Rfac(k, k)) < 1e-10 * rmax) {
            throw RankDeficient("build_basis: numerical rank below column count");
        }
    }
    CurrentPatternBasis basis;
    basis.Q = qr.householderQ() * Eigen::MatrixXd::Identity(L, K);
    fix_column_signs(basis.Q);
    return basis;
}

Eigen::MatrixXd mean_free_pinv(const Eigen::MatrixXd& R, double rel_cutoff) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(R);
    const Eigen::VectorXd& lam = eig.eigenvalues();
    const double lmax = lam.cwiseAbs().maxCoeff();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(R.rows(), R.cols());
    for (int i = 0; i < lam.size(); ++i) {
        if (std::abs(lam[i]) > rel_cutoff * lmax) {
            out += (1.0 / lam[i]) * eig.eigenvectors().col(i) *
                   eig.eigenvectors().col(i).transpose();
        }
    }
    return out;
}

void assemble_nd_dn(const PatternSet& patterns, const CurrentPatternBasis& basis, NDMatrix& nd,
                    DNMatrix& dn) {
    patterns.validate();
    const int K = patterns.pattern_count();
    if (K < basis.size()) {
        throw RankDeficient("assemble_nd_dn: fewer patterns than basis vectors");
    }
    // Least squares R I = V: R0 = V I^+, using a QR-based pseudo-inverse.
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(patterns.currents);
    if (cod.rank() < basis.size()) {
        throw RankDeficient("assemble_nd_dn: current patterns do not span the basis");
    }
    const Eigen::MatrixXd pinvI = cod.pseudoInverse();
    const Eigen::MatrixXd R0 = patterns.voltages * pinvI;

    nd.asymmetry_rel = (R0 - R0.transpose()).norm() / std::max(R0.norm(), 1e-300);
    const Eigen::MatrixXd R = 0.5 * (R0 + R0.transpose());
    // Project out the constant vector from both sides, then restore exact
    // symmetry lost to rounding in the products.
    const int L = patterns.electrode_count();
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(L);
    const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(L, L) - ones * ones.transpose() / L;
    const Eigen::MatrixXd projected = P * R * P;
    nd.R = 0.5 * (projected + projected.transpose());
    dn.L = mean_free_pinv(nd.R);
}

double sigma_best(const Eigen::MatrixXd& simulated, const Eigen::MatrixXd& measured,
                  SigmaBestDiag* diag) {
    if (simulated.rows() != measured.rows() || simulated.cols() != measured.cols()) {
        throw ShapeMismatch("sigma_best: shapes disagree");
    }
    const double num = simulated.cwiseProduct(simulated).sum();
    const double den = simulated.cwiseProduct(measured).sum();
    if (den == 0.0) {
        throw DegenerateData("sigma_best: zero denominator");
    }
    const double value = num / den;
    if (diag != nullptr) diag->negative = value < 0.0;
    return value;
}

CurrentPatternBasis eigen_current_basis(const NDMatrix& homogeneous_nd) {
    const int L = static_cast<int>(homogeneous_nd.R.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(homogeneous_nd.R);
    // Drop the (near-)zero eigenvalue carried by the constant vector, keep
    // the rest ordered by descending eigenvalue.
    const Eigen::VectorXd lam = eig.eigenvalues();
    int drop = 0;
    for (int i = 1; i < L; ++i) {
        if (std::abs(lam[i]) < std::abs(lam[drop])) drop = i;
    }
    CurrentPatternBasis basis;
    basis.Q.resize(L, L - 1);
    int col = 0;
    for (int i = L - 1; i >= 0; --i) {
        if (i == drop) continue;
        basis.Q.col(col++) = eig.eigenvectors().col(i);
    }
    fix_column_signs(basis.Q);
    return basis;
}

}  // namespace eit
