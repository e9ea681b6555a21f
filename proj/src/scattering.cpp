#include "eit/scattering.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <vector>

#include "eit/errors.hpp"

namespace eit {

using cd = std::complex<double>;

ZetaChoice minimal_zeta(const Vec3& xi) {
    const double norm = xi.norm();
    if (norm == 0.0) throw ZeroXi("minimal_zeta: xi = 0");
    int seed = 0;
    for (int i = 1; i < 3; ++i) {
        if (std::abs(xi[i]) < std::abs(xi[seed])) seed = i;
    }
    const Vec3 xhat = xi / norm;
    Vec3 e = Vec3::Unit(seed) - Vec3::Unit(seed).dot(xhat) * xhat;
    e /= e.norm();
    ZetaChoice out;
    out.xi = xi;
    out.zeta = (-0.5 * xi).cast<cd>() + cd(0.0, 0.5 * norm) * e.cast<cd>();
    return out;
}

Eigen::MatrixXd g0_matrix(const Eigen::MatrixX3d& centers) {
    const int L = static_cast<int>(centers.rows());
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(L, L);
    for (int i = 0; i < L; ++i) {
        for (int j = i + 1; j < L; ++j) {
            const double d = (centers.row(i) - centers.row(j)).norm();
            if (d < 1e-12) {
                throw DuplicateCenters("g0_matrix: centers " + std::to_string(i) + " and " +
                                       std::to_string(j) + " coincide");
            }
            g(i, j) = g(j, i) = 1.0 / (4.0 * M_PI * d);
        }
    }
    return g;
}

void XiGrid::validate() const {
    if (t_xi <= 0.0) throw ConfigError("XiGrid: t_xi must be positive");
    if (nodes_per_axis < 3 || nodes_per_axis % 2 == 0) {
        throw ConfigError("XiGrid: nodes_per_axis must be odd and >= 3");
    }
}

XiGrid make_xi_grid(double t_xi, double max_spacing) {
    XiGrid g;
    g.t_xi = t_xi;
    const int half = std::max(1, static_cast<int>(std::ceil(t_xi / max_spacing - 1e-12)));
    g.nodes_per_axis = 2 * half + 1;
    g.validate();
    return g;
}

namespace {

// exp(i x.w) for a complex frequency w at each row of `points`.
Eigen::VectorXcd cgo_trace(const Eigen::MatrixX3d& points, const Eigen::Vector3cd& w) {
    const int L = static_cast<int>(points.rows());
    Eigen::VectorXcd out(L);
    for (int l = 0; l < L; ++l) {
        const cd xw = points.row(l).x() * w.x() + points.row(l).y() * w.y() +
                      points.row(l).z() * w.z();
        // exp(i(a+bi)) = exp(-b) (cos a + i sin a)
        out[l] = std::exp(-xw.imag()) * cd(std::cos(xw.real()), std::sin(xw.real()));
    }
    return out;
}

struct BieOperator {
    Eigen::MatrixXd diff_basis;          // Q^T (Lsigma - Lref) Q
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu;
    double rcond = 1.0;
};

BieOperator make_bie_operator(const DNMatrix& dn_sigma, const DNMatrix& dn_ref,
                              const CurrentPatternBasis& basis, const Eigen::MatrixXd& g0,
                              double boundary_area) {
    const int L = basis.electrode_count();
    BieOperator op;
    op.diff_basis = basis.Q.transpose() * (dn_sigma.L - dn_ref.L) * basis.Q;
    const Eigen::MatrixXd A =
        (boundary_area / L) * (basis.Q.transpose() * g0 * basis.Q) * op.diff_basis;
    const int n = static_cast<int>(A.rows());
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Identity(n, n) + A.cast<cd>();
    op.lu.compute(M);
    op.rcond = op.lu.rcond();
    return op;
}

}  // namespace

Eigen::VectorXcd solve_bie(const DNMatrix& dn_sigma, const DNMatrix& dn_ref,
                           const CurrentPatternBasis& basis, const Eigen::MatrixXd& g0,
                           double boundary_area, const ZetaChoice& zeta,
                           const Eigen::MatrixX3d& centers) {
    const BieOperator op = make_bie_operator(dn_sigma, dn_ref, basis, g0, boundary_area);
    if (!(op.rcond > 1e-12)) {
        throw NearSingularBIE("boundary integral system condition estimate above 1e12");
    }
    const Eigen::VectorXcd c = basis.Q.transpose() * cgo_trace(centers, zeta.zeta);
    return op.lu.solve(c);
}

ScatteringData scattering(const DNMatrix& dn_sigma, const DNMatrix& dn_ref,
                          const CurrentPatternBasis& basis, const Eigen::MatrixX3d& centers,
                          double boundary_area, const XiGrid& grid, ScatteringMethod method,
                          const Eigen::MatrixXd* g0, double amplitude_cap) {
    grid.validate();
    const int L = basis.electrode_count();
    if (method == ScatteringMethod::zero && g0 == nullptr) {
        throw ConfigError("scattering: the zero method needs the Green's kernel matrix");
    }

    ScatteringData out;
    out.grid = grid;
    out.method = method;
    out.amplitude_cap = amplitude_cap;
    out.values = Eigen::VectorXcd::Zero(grid.node_count());

    const Eigen::MatrixXd diff_basis =
        basis.Q.transpose() * (dn_sigma.L - dn_ref.L) * basis.Q;
    std::optional<BieOperator> bie;
    bool near_singular = false;
    if (method == ScatteringMethod::zero) {
        bie = make_bie_operator(dn_sigma, dn_ref, basis, *g0, boundary_area);
        near_singular = !(bie->rcond > 1e-12);
    }

    const int n = grid.nodes_per_axis;
    const int mid = (n - 1) / 2;
    const double weight = boundary_area / L;
    int cap_count = 0, singular_count = 0;

#pragma omp parallel for collapse(2) reduction(+ : cap_count, singular_count) schedule(static)
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                const Vec3 xi = grid.xi_at(i, j, k);
                if (xi.norm() >= grid.t_xi || (i == mid && j == mid && k == mid)) continue;
                if (near_singular) {
                    ++singular_count;
                    continue;
                }
                const ZetaChoice zc = minimal_zeta(xi);
                const Eigen::Vector3cd xi_plus_zeta = xi.cast<cd>() + zc.zeta;
                const Eigen::VectorXcd e_out = cgo_trace(centers, -xi_plus_zeta);
                Eigen::VectorXcd coeff;  // expansion of the integral-equation solution
                if (method == ScatteringMethod::exp) {
                    coeff = basis.Q.transpose() * cgo_trace(centers, zc.zeta);
                } else {
                    const Eigen::VectorXcd c = basis.Q.transpose() * cgo_trace(centers, zc.zeta);
                    coeff = bie->lu.solve(c);
                }
                const cd t =
                    weight * (e_out.transpose() * (basis.Q * (diff_basis * coeff)))(0);
                if (std::abs(t.real()) > amplitude_cap || std::abs(t.imag()) > amplitude_cap) {
                    ++cap_count;
                    continue;
                }
                out.values[grid.index(i, j, k)] = t;
            }
        }
    }

    // Fill the origin by radial continuity from its six axis neighbors.
    if (n >= 3) {
        cd acc(0.0, 0.0);
        acc += out.values[grid.index(mid - 1, mid, mid)];
        acc += out.values[grid.index(mid + 1, mid, mid)];
        acc += out.values[grid.index(mid, mid - 1, mid)];
        acc += out.values[grid.index(mid, mid + 1, mid)];
        acc += out.values[grid.index(mid, mid, mid - 1)];
        acc += out.values[grid.index(mid, mid, mid + 1)];
        out.values[grid.index(mid, mid, mid)] = acc / 6.0;
    }
    out.zeroed_by_cap = cap_count;
    out.zeroed_near_singular = singular_count;
    return out;
}

PotentialGrid invert_scattering_to_q(const ScatteringData& t, const BoxDomain& box, int n) {
    t.grid.validate();
    const int m = t.grid.nodes_per_axis;
    const double h = 2.0 * t.grid.t_xi / (m - 1);
    std::vector<double> w(m);
    for (int i = 0; i < m; ++i) {
        const double c = (i == 0 || i == m - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        w[i] = c * h / 3.0;
    }

    // Flatten nonzero scattering nodes with their quadrature coefficients.
    std::vector<Vec3> xis;
    std::vector<cd> coeffs;
    for (int k = 0; k < m; ++k) {
        for (int j = 0; j < m; ++j) {
            for (int i = 0; i < m; ++i) {
                const cd v = t.values[t.grid.index(i, j, k)];
                if (v == cd(0.0, 0.0)) continue;
                xis.push_back(t.grid.xi_at(i, j, k));
                coeffs.push_back(w[i] * w[j] * w[k] * v);
            }
        }
    }

    PotentialGrid out;
    out.grid = VoxelGrid::for_box(box, n);
    const double pref = 1.0 / std::pow(2.0 * M_PI, 3);
    double max_im = 0.0;
#pragma omp parallel for collapse(2) reduction(max : max_im) schedule(static)
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                const Vec3 x = out.grid.center(i, j, k);
                cd acc(0.0, 0.0);
                for (std::size_t s = 0; s < xis.size(); ++s) {
                    const double phase = x.dot(xis[s]);
                    acc += coeffs[s] * cd(std::cos(phase), std::sin(phase));
                }
                acc *= pref;
                out.grid.values[out.grid.index(i, j, k)] = acc.real();
                max_im = std::max(max_im, std::abs(acc.imag()));
            }
        }
    }
    out.max_abs_imag = max_im;
    return out;
}

VoxelGrid reconstruct_from_q(const PotentialGrid& q, const TetMesh& mesh,
                             double sigma_best_value, int out_n, Eigen::VectorXd* u_tilde) {
    const int N = mesh.node_count();
    if (!q.grid.values.allFinite()) {
        throw IndefiniteSystem("reconstruct_from_q: potential contains non-finite values");
    }

    std::vector<bool> on_boundary(N, false);
    for (int tr = 0; tr < mesh.boundary_tris.rows(); ++tr) {
        for (int v = 0; v < 3; ++v) on_boundary[mesh.boundary_tris(tr, v)] = true;
    }
    std::vector<int> interior_index(N, -1);
    int n_int = 0;
    for (int i = 0; i < N; ++i) {
        if (!on_boundary[i]) interior_index[i] = n_int++;
    }

    // (-Laplace + q) with q constant per element (centroid sample):
    // stiffness vol g g^T plus mass q vol (1+delta)/20.
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_int);
    Eigen::Matrix<double, 4, 3> grads;
    double vol;
    for (int e = 0; e < mesh.tet_count(); ++e) {
        mesh.element_volume_grads(e, vol, grads);
        Vec3 centroid = Vec3::Zero();
        for (int a = 0; a < 4; ++a) centroid += Vec3(mesh.nodes.row(mesh.tets(e, a)));
        centroid /= 4.0;
        const double qc = q.grid.sample(centroid);
        Eigen::Matrix4d ke = vol * (grads * grads.transpose());
        for (int a = 0; a < 4; ++a) {
            for (int b = 0; b < 4; ++b) {
                ke(a, b) += qc * vol * (a == b ? 2.0 : 1.0) / 20.0;
            }
        }
        for (int a = 0; a < 4; ++a) {
            const int ia = interior_index[mesh.tets(e, a)];
            if (ia < 0) continue;
            for (int b = 0; b < 4; ++b) {
                const int ib = interior_index[mesh.tets(e, b)];
                if (ib >= 0) {
                    trip.emplace_back(ia, ib, ke(a, b));
                } else {
                    rhs[ia] -= ke(a, b);  // boundary value 1
                }
            }
        }
    }

    Eigen::VectorXd u = Eigen::VectorXd::Ones(N);
    if (n_int > 0) {
        Eigen::SparseMatrix<double> A(n_int, n_int);
        A.setFromTriplets(trip.begin(), trip.end());
        A.makeCompressed();
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(A);
        Eigen::VectorXd u_int;
        if (lu.info() == Eigen::Success) u_int = lu.solve(rhs);
        if (lu.info() != Eigen::Success || !u_int.allFinite()) {
            throw IndefiniteSystem(
                "Schrodinger FEM solve failed; q range [" +
                std::to_string(q.grid.values.minCoeff()) + ", " +
                std::to_string(q.grid.values.maxCoeff()) + "], mean " +
                std::to_string(q.grid.values.mean()));
        }
        for (int i = 0; i < N; ++i) {
            if (interior_index[i] >= 0) u[i] = u_int[interior_index[i]];
        }
    }
    if (u_tilde != nullptr) *u_tilde = u;

    const Eigen::VectorXd sigma_nodal = sigma_best_value * u.array().square();
    VoxelGrid out({out_n, out_n, out_n},
                  Vec3(mesh.axis_coords(0).front(), mesh.axis_coords(1).front(),
                       mesh.axis_coords(2).front()),
                  Vec3(mesh.axis_coords(0).back() - mesh.axis_coords(0).front(),
                       mesh.axis_coords(1).back() - mesh.axis_coords(1).front(),
                       mesh.axis_coords(2).back() - mesh.axis_coords(2).front()));
    for (int k = 0; k < out_n; ++k) {
        for (int j = 0; j < out_n; ++j) {
            for (int i = 0; i < out_n; ++i) {
                out.values[out.index(i, j, k)] = mesh.interpolate(sigma_nodal, out.center(i, j, k));
            }
        }
    }
    return out;
}

}  // namespace eit
