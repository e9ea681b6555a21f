#include "eit/cem.hpp"

#include <cmath>
#include <vector>

#include "eit/errors.hpp"

namespace eit {

ConductivityField::ConductivityField(Eigen::VectorXd v) : values(std::move(v)) {
    if (values.size() == 0 || values.minCoeff() <= 0.0) {
        throw SingularSystem("conductivity field must be strictly positive");
    }
}

ConductivityField ConductivityField::constant(const TetMesh& mesh, double sigma) {
    return ConductivityField(Eigen::VectorXd::Constant(mesh.node_count(), sigma));
}

void PatternSet::validate() const {
    if (currents.rows() != voltages.rows() || currents.cols() != voltages.cols()) {
        throw ShapeMismatch("PatternSet: current and voltage shapes disagree");
    }
    const int L = electrode_count();
    if (pattern_count() > L - 1) {
        throw ShapeMismatch("PatternSet: more patterns than L-1");
    }
    for (int k = 0; k < pattern_count(); ++k) {
        const double inorm = currents.col(k).norm();
        if (inorm > 0 && std::abs(currents.col(k).sum()) > 1e-6 * inorm) {
            throw NonMeanFreeCurrents("current pattern " + std::to_string(k) +
                                      " is not mean-free");
        }
    }
}

struct CemSystem::Impl {
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
};

CemSystem::~CemSystem() = default;
CemSystem::CemSystem(CemSystem&&) noexcept = default;
CemSystem& CemSystem::operator=(CemSystem&&) noexcept = default;

CemSystem::CemSystem(const TetMesh& mesh, const ConductivityField& sigma,
                     const ElectrodeLayout& layout)
    : impl_(std::make_unique<Impl>()),
      n_nodes_(mesh.node_count()),
      n_electrodes_(layout.count()) {
    if (sigma.values.size() != n_nodes_) {
        throw ShapeMismatch("conductivity field size does not match mesh");
    }
    const int N = n_nodes_;
    const int L = n_electrodes_;
    const int dim = N + L + 1;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(mesh.tet_count()) * 16 + mesh.boundary_tris.rows() * 16);

    // Stiffness: sum_T mean(sigma)_T * vol_T * g g^T
    Eigen::Matrix<double, 4, 3> grads;
    double vol;
    for (int e = 0; e < mesh.tet_count(); ++e) {
        mesh.element_volume_grads(e, vol, grads);
        double sbar = 0.0;
        for (int a = 0; a < 4; ++a) sbar += sigma.values[mesh.tets(e, a)];
        sbar *= 0.25;
        const Eigen::Matrix4d ke = sbar * vol * (grads * grads.transpose());
        for (int a = 0; a < 4; ++a) {
            for (int b = 0; b < 4; ++b) {
                trip.emplace_back(mesh.tets(e, a), mesh.tets(e, b), ke(a, b));
            }
        }
    }

    // Electrode boundary terms
    for (int t = 0; t < mesh.boundary_tris.rows(); ++t) {
        const int tag = mesh.tri_tags[t];
        if (tag == 0) continue;
        const int l = tag - 1;
        const double zl = layout.contact_impedance[l];
        const Vec3 a = mesh.nodes.row(mesh.boundary_tris(t, 0));
        const Vec3 b = mesh.nodes.row(mesh.boundary_tris(t, 1));
        const Vec3 c = mesh.nodes.row(mesh.boundary_tris(t, 2));
        const double area = 0.5 * (b - a).cross(c - a).norm();
        const double m_off = area / (12.0 * zl);
        for (int i = 0; i < 3; ++i) {
            const int ni = mesh.boundary_tris(t, i);
            for (int j = 0; j < 3; ++j) {
                const int nj = mesh.boundary_tris(t, j);
                trip.emplace_back(ni, nj, (i == j ? 2.0 : 1.0) * m_off);
            }
            trip.emplace_back(ni, N + l, -area / (3.0 * zl));
            trip.emplace_back(N + l, ni, -area / (3.0 * zl));
        }
        trip.emplace_back(N + l, N + l, area / zl);
    }

    // Grounding: sum of electrode voltages = 0
    for (int l = 0; l < L; ++l) {
        trip.emplace_back(N + l, N + L, 1.0);
        trip.emplace_back(N + L, N + l, 1.0);
    }

    Eigen::SparseMatrix<double> A(dim, dim);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    impl_->lu.compute(A);
    if (impl_->lu.info() != Eigen::Success) {
        throw SingularSystem("CEM system factorization failed");
    }
}

CemSystem::Result CemSystem::solve(const Eigen::MatrixXd& currents) const {
    const int L = n_electrodes_;
    const int N = n_nodes_;
    if (currents.rows() != L) {
        throw ShapeMismatch("current matrix must have one row per electrode");
    }
    const int K = static_cast<int>(currents.cols());
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(N + L + 1, K);
    rhs.middleRows(N, L) = currents;
    const Eigen::MatrixXd x = impl_->lu.solve(rhs);
    if (!x.allFinite()) {
        throw SingularSystem("CEM solve produced non-finite values");
    }
    Result res;
    res.potentials = x.topRows(N);
    res.voltages = x.middleRows(N, L);
    res.voltages.rowwise() -= res.voltages.colwise().mean();  // exact ground convention
    return res;
}

PatternSet solve_cem_patterns(const TetMesh& mesh, const ConductivityField& sigma,
                              const ElectrodeLayout& layout, const Eigen::MatrixXd& currents) {
    for (int k = 0; k < currents.cols(); ++k) {
        const double inorm = currents.col(k).norm();
        if (std::abs(currents.col(k).sum()) > 1e-9 * std::max(inorm, 1e-300)) {
            throw NonMeanFreeCurrents("current pattern " + std::to_string(k) +
                                      " is not mean-free");
        }
    }
    const CemSystem system(mesh, sigma, layout);
    PatternSet out;
    out.currents = currents;
    out.voltages = system.solve(currents).voltages;
    return out;
}

Eigen::MatrixXd jacobian_sigma(const TetMesh& mesh, const ConductivityField& sigma0,
                               const ElectrodeLayout& layout, const Eigen::MatrixXd& currents) {
    const CemSystem system(mesh, sigma0, layout);
    const int L = layout.count();
    const int K = static_cast<int>(currents.cols());
    const int N = mesh.node_count();

    const Eigen::MatrixXd u = system.solve(currents).potentials;  // N x K
    const Eigen::MatrixXd w =
        system.solve(Eigen::MatrixXd::Identity(L, L)).potentials;  // N x L measurement fields

    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<long>(L) * K, N);
    Eigen::Matrix<double, 4, 3> grads;
    double vol;
    Eigen::Matrix<double, 4, Eigen::Dynamic> u_loc(4, K), w_loc(4, L);
    for (int e = 0; e < mesh.tet_count(); ++e) {
        mesh.element_volume_grads(e, vol, grads);
        for (int a = 0; a < 4; ++a) {
            u_loc.row(a) = u.row(mesh.tets(e, a));
            w_loc.row(a) = w.row(mesh.tets(e, a));
        }
        const Eigen::Matrix<double, 3, Eigen::Dynamic> gu = grads.transpose() * u_loc;  // 3 x K
        const Eigen::Matrix<double, 3, Eigen::Dynamic> gw = grads.transpose() * w_loc;  // 3 x L
        const Eigen::MatrixXd dots = gu.transpose() * gw;                               // K x L
        const double scale = -vol / 4.0;
        for (int a = 0; a < 4; ++a) {
            const int j = mesh.tets(e, a);
            for (int k = 0; k < K; ++k) {
                J.col(j).segment(static_cast<long>(k) * L, L) +=
                    scale * dots.row(k).transpose();
            }
        }
    }
    return J;
}

}  // namespace eit
