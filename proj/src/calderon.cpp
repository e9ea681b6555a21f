#include "eit/calderon.hpp"

#include <cmath>
#include <vector>

#include "eit/errors.hpp"

namespace eit {

using cd = std::complex<double>;

void SphericalFourierGrid::validate() const {
    if (n_radial < 2 || n_radial % 2 != 0 || n_theta < 2 || n_theta % 2 != 0 || n_phi < 2 ||
        n_phi % 2 != 0) {
        throw ConfigError("SphericalFourierGrid: Simpson interval counts must be even and >= 2");
    }
    if (!(t_z1 > 0.0 && t_z1 <= t_z2)) {
        throw ConfigError("SphericalFourierGrid: need 0 < t_z1 <= t_z2");
    }
    if (mollifier_t < 0.0) {
        throw ConfigError("SphericalFourierGrid: mollifier parameter must be >= 0");
    }
}

Vec3 SphericalFourierGrid::z_at(int ir, int it, int ip) const {
    const double r = radius(ir), th = theta(it), ph = phi(ip);
    return r * Vec3(std::cos(ph) * std::sin(th), std::sin(ph) * std::sin(th), std::cos(th));
}

Vec3 SphericalFourierGrid::a_at(int ir, int it, int ip) const {
    const double r = radius(ir), th = theta(it), ph = phi(ip);
    return r * Vec3(std::cos(ph) * std::cos(th), std::sin(ph) * std::cos(th), -std::sin(th));
}

namespace {

// Composite Simpson weights for n intervals (n even): h/3 * [1,4,2,...,4,1].
std::vector<double> simpson_weights(int n, double h) {
    std::vector<double> w(n + 1);
    for (int i = 0; i <= n; ++i) {
        double c = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        w[i] = c * h / 3.0;
    }
    return w;
}

}  // namespace

FhatData compute_fhat(const DNMatrix& dn_sigma, const DNMatrix& dn_ref,
                      const CurrentPatternBasis& basis, const Eigen::MatrixX3d& centers,
                      double boundary_area, const SphericalFourierGrid& grid) {
    grid.validate();
    const int L = static_cast<int>(centers.rows());
    if (dn_sigma.L.rows() != L || dn_ref.L.rows() != L || basis.electrode_count() != L) {
        throw ShapeMismatch("compute_fhat: electrode counts disagree");
    }
    // Difference map projected onto the span of the pattern basis.
    const Eigen::MatrixXd diff_basis =
        basis.Q.transpose() * (dn_sigma.L - dn_ref.L) * basis.Q;
    const Eigen::MatrixXd M = basis.Q * diff_basis * basis.Q.transpose();

    FhatData out;
    out.grid = grid;
    out.values = Eigen::VectorXcd::Zero(grid.node_count());

    Eigen::VectorXcd eplus(L), eminus(L);
    for (int ir = 1; ir <= grid.n_radial; ++ir) {
        const double r = grid.radius(ir);
        const double pref = -1.0 / (2.0 * M_PI * M_PI * r * r) * (boundary_area / L);
        for (int it = 0; it <= grid.n_theta; ++it) {
            for (int ip = 0; ip <= grid.n_phi; ++ip) {
                const Vec3 z = grid.z_at(ir, it, ip);
                const Vec3 a = grid.a_at(ir, it, ip);
                for (int l = 0; l < L; ++l) {
                    const Vec3 x = centers.row(l);
                    const double zx = M_PI * z.dot(x);
                    const double ax = M_PI * a.dot(x);
                    const cd osc(std::cos(zx), std::sin(zx));
                    eplus[l] = osc * std::exp(ax);
                    eminus[l] = osc * std::exp(-ax);
                }
                // non-conjugating bilinear form
                const cd val = pref * (eplus.transpose() * (M * eminus))(0);
                out.values[grid.index(ir, it, ip)] = val;
            }
        }
    }

    // Conjugate-symmetry diagnostic: -z lives at (theta -> pi - theta,
    // phi -> phi + pi), both on-grid for even interval counts.
    double max_dev = 0.0, max_mag = 0.0;
    for (int ir = 1; ir <= grid.n_radial; ++ir) {
        for (int it = 0; it <= grid.n_theta; ++it) {
            for (int ip = 0; ip < grid.n_phi; ++ip) {
                const cd v = out.values[grid.index(ir, it, ip)];
                const int ip_neg = (ip + grid.n_phi / 2) % grid.n_phi;
                const cd vneg = out.values[grid.index(ir, grid.n_theta - it, ip_neg)];
                max_dev = std::max(max_dev, std::abs(vneg - std::conj(v)));
                max_mag = std::max(max_mag, std::abs(v));
            }
        }
    }
    out.conj_symmetry_rel = max_mag > 0 ? max_dev / max_mag : 0.0;
    return out;
}

FhatData truncate_fhat(const FhatData& fhat, double t_z1, double t_z2) {
    if (!(t_z1 <= t_z2)) throw ConfigError("truncate_fhat: need t_z1 <= t_z2");
    const SphericalFourierGrid& g = fhat.grid;
    const double rtol = 1e-12 * g.t_z2;

    double max_re = 0.0, max_im = 0.0;
    for (int ir = 1; ir <= g.n_radial; ++ir) {
        if (g.radius(ir) > t_z1 + rtol) continue;
        for (int it = 0; it <= g.n_theta; ++it) {
            for (int ip = 0; ip <= g.n_phi; ++ip) {
                const cd v = fhat.values[g.index(ir, it, ip)];
                max_re = std::max(max_re, std::abs(v.real()));
                max_im = std::max(max_im, std::abs(v.imag()));
            }
        }
    }

    FhatData out = fhat;
    for (int ir = 1; ir <= g.n_radial; ++ir) {
        const bool outside = g.radius(ir) > t_z2 + rtol;
        for (int it = 0; it <= g.n_theta; ++it) {
            for (int ip = 0; ip <= g.n_phi; ++ip) {
                cd& v = out.values[g.index(ir, it, ip)];
                if (outside || std::abs(v.real()) > max_re || std::abs(v.imag()) > max_im) {
                    v = cd(0.0, 0.0);
                }
            }
        }
    }
    return out;
}

int default_calderon_base_n(const BoxDomain& box) {
    return (box.longest_edge() / box.shortest_edge() > 1.55) ? 32 : 16;
}

VoxelGrid reconstruct_calderon(const FhatData& fhat, const CalderonXGrid& xgrid, ReconMode mode,
                               double sigma_best_value, CalderonDiagnostics* diag) {
    const SphericalFourierGrid& g = fhat.grid;
    g.validate();

    // Flatten nonzero nodes with their full quadrature coefficient:
    // w_r w_theta w_phi |z|^2 sin(theta) exp(-pi t |z|^2) Fhat.
    const auto wr = simpson_weights(g.n_radial, g.t_z2 / g.n_radial);
    const auto wt = simpson_weights(g.n_theta, M_PI / g.n_theta);
    const auto wp = simpson_weights(g.n_phi, 2.0 * M_PI / g.n_phi);
    std::vector<Vec3> zs;
    std::vector<cd> coeffs;
    zs.reserve(g.node_count());
    coeffs.reserve(g.node_count());
    for (int ir = 1; ir <= g.n_radial; ++ir) {
        const double r = g.radius(ir);
        const double damp = std::exp(-M_PI * g.mollifier_t * r * r);
        for (int it = 0; it <= g.n_theta; ++it) {
            const double sinth = std::sin(g.theta(it));
            for (int ip = 0; ip <= g.n_phi; ++ip) {
                const cd v = fhat.values[g.index(ir, it, ip)];
                if (v == cd(0.0, 0.0)) continue;
                const double w = wr[ir] * wt[it] * wp[ip] * r * r * sinth * damp;
                zs.push_back(g.z_at(ir, it, ip));
                coeffs.push_back(w * v);
            }
        }
    }

    const int n = xgrid.base_n;
    VoxelGrid base = VoxelGrid::for_box(xgrid.box, n);
    double max_im = 0.0, max_re = 0.0;
#pragma omp parallel for collapse(2) reduction(max : max_im, max_re) schedule(static)
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                const Vec3 x = base.center(i, j, k);
                cd acc(0.0, 0.0);
                for (std::size_t m = 0; m < zs.size(); ++m) {
                    const double phase = -2.0 * M_PI * x.dot(zs[m]);
                    acc += coeffs[m] * cd(std::cos(phase), std::sin(phase));
                }
                base.values[base.index(i, j, k)] = acc.real();
                max_im = std::max(max_im, std::abs(acc.imag()));
                max_re = std::max(max_re, std::abs(acc.real()));
            }
        }
    }
    if (diag != nullptr) {
        diag->max_abs_imag = max_im;
        diag->max_abs_real = max_re;
        diag->imag_warning = max_im > 0.1 * max_re && max_re > 0.0;
    }

    // Rescale the relative perturbation to physical units.
    if (mode == ReconMode::absolute) {
        base.values = sigma_best_value * (base.values.array() + 1.0);
    } else {
        base.values *= sigma_best_value;
    }
    return base.resampled(xgrid.out_n);
}

}  // namespace eit
