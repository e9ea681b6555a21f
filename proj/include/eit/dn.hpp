#ifndef EIT_DN_HPP
#define EIT_DN_HPP

#include <Eigen/Dense>

#include "eit/cem.hpp"

namespace eit {

/// Orthonormal basis of mean-free current patterns: Q^T Q = I and 1^T Q = 0.
struct CurrentPatternBasis {
    Eigen::MatrixXd Q;  // L x N_li

    int electrode_count() const { return static_cast<int>(Q.rows()); }
    int size() const { return static_cast<int>(Q.cols()); }
};

/// Discrete current-to-voltage map on the mean-free subspace (V/A),
/// symmetric with R 1 = 0.
struct NDMatrix {
    Eigen::MatrixXd R;            // L x L
    double asymmetry_rel = 0.0;   // ||R0 - R0^T||_F / ||R0||_F before symmetrization
};

/// Pseudo-inverse of an NDMatrix on the mean-free subspace (A/V).
struct DNMatrix {
    Eigen::MatrixXd L;  // L x L
};

/// Orthonormalizes independent mean-free currents (QR), deterministic column
/// order, first nonzero entry of each column positive. Throws RankDeficient
/// when the numerical rank is below the column count, NonMeanFreeCurrents
/// when a column sum is out of tolerance.
CurrentPatternBasis build_basis(const Eigen::MatrixXd& currents_raw);

/// Least-squares fit of R to R I^(k) = V^(k), symmetrized, with R 1 = 0, and
/// its pseudo-inverse. Throws RankDeficient when the patterns span fewer than
/// `basis.size()` directions.
void assemble_nd_dn(const PatternSet& patterns, const CurrentPatternBasis& basis, NDMatrix& nd,
                    DNMatrix& dn);

/// Pseudo-inverse of a symmetric matrix on the mean-free subspace with a
/// relative eigenvalue cutoff.
Eigen::MatrixXd mean_free_pinv(const Eigen::MatrixXd& R, double rel_cutoff = 1e-12);

struct SigmaBestDiag {
    bool negative = false;  // set when the ratio comes out negative
};

/// Best-fit constant conductivity: sum(U.*U) / sum(U.*V), where U are
/// simulated voltages at sigma = 1 and V measured voltages for the same
/// currents. Throws DegenerateData when the denominator vanishes.
double sigma_best(const Eigen::MatrixXd& simulated, const Eigen::MatrixXd& measured,
                  SigmaBestDiag* diag = nullptr);

/// Eigenvectors of a simulated homogeneous ND matrix, orthonormal and
/// ordered by descending eigenvalue: the synthetic stand-in for adaptively
/// measured current patterns.
CurrentPatternBasis eigen_current_basis(const NDMatrix& homogeneous_nd);

}  // namespace eit

#endif  // EIT_DN_HPP
