#ifndef EIT_SCATTERING_HPP
#define EIT_SCATTERING_HPP

#include <Eigen/Dense>
#include <complex>
#include <optional>

#include "eit/dn.hpp"
#include "eit/tet_mesh.hpp"
#include "eit/voxel_grid.hpp"

namespace eit {

/// Frequency pair (xi, zeta) with zeta.zeta = 0, (xi+zeta).(xi+zeta) = 0 and
/// |zeta| = |xi|/sqrt(2) (the minimal-norm choice).
struct ZetaChoice {
    Vec3 xi = Vec3::Zero();
    Eigen::Vector3cd zeta = Eigen::Vector3cd::Zero();
};

/// zeta = -xi/2 + i (|xi|/2) e(xi), where e(xi) is the unit vector obtained
/// by projecting the canonical axis with the smallest |xi| component onto the
/// plane orthogonal to xi (deterministic gauge). Throws ZeroXi at xi = 0.
ZetaChoice minimal_zeta(const Vec3& xi);

/// Laplacian Green's kernel 1/(4 pi |x_l - x_m|) between electrode centers,
/// zero on the diagonal. Throws DuplicateCenters.
Eigen::MatrixXd g0_matrix(const Eigen::MatrixX3d& centers);

/// Uniform Cartesian grid on [-t_xi, t_xi]^3, odd node count per axis.
struct XiGrid {
    double t_xi = 11.0;
    int nodes_per_axis = 21;

    void validate() const;
    long node_count() const {
        return static_cast<long>(nodes_per_axis) * nodes_per_axis * nodes_per_axis;
    }
    long index(int i, int j, int k) const {
        return i + static_cast<long>(nodes_per_axis) *
                       (j + static_cast<long>(nodes_per_axis) * k);
    }
    double coord(int i) const {
        return -t_xi + 2.0 * t_xi * i / (nodes_per_axis - 1);
    }
    Vec3 xi_at(int i, int j, int k) const { return Vec3(coord(i), coord(j), coord(k)); }
};

/// Node count chosen so the spacing does not exceed `max_spacing`.
XiGrid make_xi_grid(double t_xi, double max_spacing = 1.1);

enum class ScatteringMethod { exp, zero };

struct ScatteringData {
    XiGrid grid;
    Eigen::VectorXcd values;
    ScatteringMethod method = ScatteringMethod::exp;
    double amplitude_cap = 20.0;
    int zeroed_by_cap = 0;
    int zeroed_near_singular = 0;
};

/// Solves the boundary integral system (I + A) b = c with
///   A = (area/L) Q^T G0 Q (Lsigma - Lref)_basis,   c = Q^T exp(i x.zeta).
/// Throws NearSingularBIE when the condition estimate exceeds 1e12.
Eigen::VectorXcd solve_bie(const DNMatrix& dn_sigma, const DNMatrix& dn_ref,
                           const CurrentPatternBasis& basis, const Eigen::MatrixXd& g0,
                           double boundary_area, const ZetaChoice& zeta,
                           const Eigen::MatrixX3d& centers);

/// Scattering data on the grid. Born variant (exp) replaces the boundary
/// integral solution by the incident exponential; zero variant solves the
/// integral system per frequency. Values are zeroed outside |xi| < t_xi,
/// above the amplitude cap, and at near-singular system frequencies; the
/// origin value is filled by averaging its six axis neighbors.
ScatteringData scattering(const DNMatrix& dn_sigma, const DNMatrix& dn_ref,
                          const CurrentPatternBasis& basis, const Eigen::MatrixX3d& centers,
                          double boundary_area, const XiGrid& grid, ScatteringMethod method,
                          const Eigen::MatrixXd* g0 = nullptr, double amplitude_cap = 20.0);

/// Schrodinger potential on a voxel grid, with the imaginary residual of the
/// inverse transform recorded before it is discarded.
struct PotentialGrid {
    VoxelGrid grid;
    double max_abs_imag = 0.0;
};

/// q(x) = (2 pi)^-3 integral of exp(i x.xi) t(xi) over the grid cube, by
/// composite 3D Simpson quadrature.
PotentialGrid invert_scattering_to_q(const ScatteringData& t, const BoxDomain& box, int n);

struct SchrodingerOptions {
    std::size_t mesh_tets = 21000;  // target element count for the FEM solve
    int out_n = 64;
};

/// Solves (-Laplace + q) u = 0 with u = 1 on the boundary (P1 FEM, q sampled
/// at element centroids) and returns sigma = sigma_best * u^2 on out_n^3
/// voxels. The optional u_tilde output receives the nodal field. Throws
/// IndefiniteSystem when the FEM solve fails.
VoxelGrid reconstruct_from_q(const PotentialGrid& q, const TetMesh& mesh,
                             double sigma_best_value, int out_n = 64,
                             Eigen::VectorXd* u_tilde = nullptr);

}  // namespace eit

#endif  // EIT_SCATTERING_HPP
