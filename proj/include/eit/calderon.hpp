#ifndef EIT_CALDERON_HPP
#define EIT_CALDERON_HPP

#include <Eigen/Dense>
#include <complex>

#include "eit/dn.hpp"
#include "eit/voxel_grid.hpp"

namespace eit {

enum class ReconMode { absolute, difference };

/// Spherical grid in Fourier space: radii in (0, t_z2], polar angle in
/// [0, pi], azimuth in [0, 2*pi]. Counts are composite-Simpson interval
/// counts (even). The radial origin node exists but carries a zero integrand.
struct SphericalFourierGrid {
    int n_radial = 10;
    int n_theta = 10;
    int n_phi = 30;
    double t_z1 = 1.4;
    double t_z2 = 1.7;
    double mollifier_t = 0.1;

    void validate() const;
    int radial_nodes() const { return n_radial + 1; }
    int theta_nodes() const { return n_theta + 1; }
    int phi_nodes() const { return n_phi + 1; }
    long node_count() const {
        return static_cast<long>(radial_nodes()) * theta_nodes() * phi_nodes();
    }
    long index(int ir, int it, int ip) const {
        return ip + static_cast<long>(phi_nodes()) * (it + static_cast<long>(theta_nodes()) * ir);
    }
    double radius(int ir) const { return t_z2 * ir / n_radial; }
    double theta(int it) const { return M_PI * it / n_theta; }
    double phi(int ip) const { return 2.0 * M_PI * ip / n_phi; }

    /// Fourier node and its paired growth direction.
    Vec3 z_at(int ir, int it, int ip) const;
    Vec3 a_at(int ir, int it, int ip) const;
};

/// Spectral perturbation data on a SphericalFourierGrid.
struct FhatData {
    SphericalFourierGrid grid;
    Eigen::VectorXcd values;              // grid.node_count(), radial node 0 unused
    double conj_symmetry_rel = 0.0;       // recorded diagnostic, not enforced
};

/// Boundary-quadrature approximation of the perturbation spectrum from a
/// pair of discrete DN maps:
///   Fhat(z) = -1/(2 pi^2 |z|^2) * (area/L) * E+^T P (L_sigma - L_ref) P E-
/// with E+- the growth/decay exponentials at the electrode centers and P the
/// projection onto the span of the current-pattern basis.
FhatData compute_fhat(const DNMatrix& dn_sigma, const DNMatrix& dn_ref,
                      const CurrentPatternBasis& basis, const Eigen::MatrixX3d& centers,
                      double boundary_area, const SphericalFourierGrid& grid);

/// Non-uniform truncation: zero outside |z| <= t_z2; inside, zero values
/// whose real (imaginary) amplitude exceeds the maximum attained within
/// |z| <= t_z1.
FhatData truncate_fhat(const FhatData& fhat, double t_z1, double t_z2);

struct CalderonXGrid {
    BoxDomain box;     // same length unit as 1/|z|
    int base_n = 16;   // Simpson target grid
    int out_n = 64;    // trilinear upsample target
};

/// 16 when the box is near-cubical, 32 when longest/shortest edge ratio
/// exceeds 1.55 (a 16^3 grid then undersamples the long axis).
int default_calderon_base_n(const BoxDomain& box);

struct CalderonDiagnostics {
    double max_abs_imag = 0.0;
    double max_abs_real = 0.0;
    bool imag_warning = false;  // max|Im| > 10% of max|Re|
};

/// Mollified spherical inverse Fourier transform by composite 3D Simpson
/// quadrature. Absolute mode returns sigma_best * (1 + delta); difference
/// mode returns sigma_best * delta, both upsampled to out_n^3.
VoxelGrid reconstruct_calderon(const FhatData& fhat, const CalderonXGrid& xgrid, ReconMode mode,
                               double sigma_best_value,
                               CalderonDiagnostics* diag = nullptr);

}  // namespace eit

#endif  // EIT_CALDERON_HPP
