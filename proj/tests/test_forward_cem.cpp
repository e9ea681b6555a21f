#include <doctest.h>

#include <cmath>

#include "eit/cem.hpp"
#include "eit/dn.hpp"
#include "eit/errors.hpp"
#include "test_helpers.hpp"

using namespace eit;
using eit::test::SlabFixture;
using eit::test::TankFixture;

namespace {

Eigen::MatrixXd probe_currents(int L) {
    Eigen::MatrixXd I = Eigen::MatrixXd::Zero(L, L - 1);
    for (int k = 0; k < L - 1; ++k) {
        I(0, k) = 1.0;
        I(k + 1, k) = -1.0;
    }
    return I;
}

}  // namespace

TEST_CASE("slab with opposing full-face electrodes matches the 1D resistance") {
    const SlabFixture slab(0.25);
    const ConductivityField sigma = ConductivityField::constant(slab.mesh, 1.0);
    Eigen::MatrixXd currents(2, 1);
    currents << 1e-3, -1e-3;
    const PatternSet out = solve_cem_patterns(slab.mesh, sigma, slab.layout, currents);
    const double dv = out.voltages(0, 0) - out.voltages(1, 0);
    // R = length / (sigma * area) = 1 Ohm
    CHECK(dv == doctest::Approx(1e-3).epsilon(0.02));
}

TEST_CASE("zero current gives exactly zero voltage") {
    const SlabFixture slab(0.5);
    const ConductivityField sigma = ConductivityField::constant(slab.mesh, 2.0);
    const PatternSet out =
        solve_cem_patterns(slab.mesh, sigma, slab.layout, Eigen::MatrixXd::Zero(2, 1));
    CHECK(out.voltages.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("conductivity-impedance scaling halves the voltages") {
    TankFixture tank;
    ElectrodeLayout base_layout = tank.layout;
    base_layout.contact_impedance.setConstant(0.01);
    ElectrodeLayout scaled_layout = tank.layout;
    scaled_layout.contact_impedance.setConstant(0.005);

    const Eigen::MatrixXd currents = probe_currents(32) * 1e-3;
    const PatternSet v1 = solve_cem_patterns(
        tank.mesh, ConductivityField::constant(tank.mesh, 1.0), base_layout, currents);
    const PatternSet v2 = solve_cem_patterns(
        tank.mesh, ConductivityField::constant(tank.mesh, 2.0), scaled_layout, currents);
    const double rel = (v1.voltages - 2.0 * v2.voltages).norm() / v1.voltages.norm();
    CHECK(rel < 1e-10);
}

TEST_CASE("simulated ND matrix is symmetric (reciprocity)") {
    TankFixture tank;
    const Eigen::MatrixXd currents = probe_currents(32) * 1e-3;
    const PatternSet out = solve_cem_patterns(
        tank.mesh, ConductivityField::constant(tank.mesh, 1.0), tank.layout, currents);
    NDMatrix nd;
    DNMatrix dn;
    assemble_nd_dn(out, build_basis(currents), nd, dn);
    CHECK(nd.asymmetry_rel < 1e-8);
}

TEST_CASE("raising the conductivity lowers every diagonal ND entry in the pattern basis") {
    TankFixture tank;
    const Eigen::MatrixXd currents = probe_currents(32) * 1e-3;
    const CurrentPatternBasis basis = build_basis(currents);
    NDMatrix nd1, nd2;
    DNMatrix dn1, dn2;
    assemble_nd_dn(solve_cem_patterns(tank.mesh, ConductivityField::constant(tank.mesh, 1.0),
                                      tank.layout, currents),
                   basis, nd1, dn1);
    assemble_nd_dn(solve_cem_patterns(tank.mesh, ConductivityField::constant(tank.mesh, 1.5),
                                      tank.layout, currents),
                   basis, nd2, dn2);
    const Eigen::VectorXd d1 = (basis.Q.transpose() * nd1.R * basis.Q).diagonal();
    const Eigen::VectorXd d2 = (basis.Q.transpose() * nd2.R * basis.Q).diagonal();
    CHECK((d2.array() < d1.array()).all());
}

TEST_CASE("voltages on successive mesh refinements form a Cauchy sequence") {
    Eigen::MatrixXd currents(2, 1);
    currents << 1e-3, -1e-3;
    // a non-trivial field: off-axis conductive blob
    auto solve_at = [&](double h) {
        const SlabFixture slab(h, 0.01);
        Eigen::VectorXd sigma(slab.mesh.node_count());
        for (int i = 0; i < slab.mesh.node_count(); ++i) {
            const Vec3 p = slab.mesh.nodes.row(i);
            sigma[i] = 1.0 + 2.0 * std::exp(-8.0 * (p - Vec3(0.1, 0.15, -0.1)).squaredNorm());
        }
        return solve_cem_patterns(slab.mesh, ConductivityField(sigma), slab.layout, currents)
            .voltages;
    };
    const Eigen::MatrixXd v1 = solve_at(0.5);
    const Eigen::MatrixXd v2 = solve_at(0.25);
    const Eigen::MatrixXd v3 = solve_at(0.125);
    CHECK((v2 - v3).norm() < (v1 - v2).norm());
}

TEST_CASE("non-positive conductivity is rejected") {
    CHECK_THROWS_AS(ConductivityField(Eigen::VectorXd::Zero(5)), SingularSystem);
    Eigen::VectorXd v = Eigen::VectorXd::Ones(5);
    v[3] = -1.0;
    CHECK_THROWS_AS(ConductivityField{v}, SingularSystem);
}

TEST_CASE("currents with nonzero column sum are rejected") {
    const SlabFixture slab(0.5);
    Eigen::MatrixXd bad(2, 1);
    bad << 1e-3, -0.9e-3;
    CHECK_THROWS_AS(solve_cem_patterns(slab.mesh, ConductivityField::constant(slab.mesh, 1.0),
                                       slab.layout, bad),
                    NonMeanFreeCurrents);
}

TEST_CASE("jacobian columns match central finite differences") {
    const SlabFixture slab(0.25, 0.01);
    const int N = slab.mesh.node_count();
    Eigen::MatrixXd currents(2, 1);
    currents << 1e-3, -1e-3;
    const ConductivityField sigma0 = ConductivityField::constant(slab.mesh, 1.0);
    const Eigen::MatrixXd J = jacobian_sigma(slab.mesh, sigma0, slab.layout, currents);
    REQUIRE(J.rows() == 2);
    REQUIRE(J.cols() == N);

    const double delta = 1e-4;
    int tested = 0;
    for (int j = 0; j < N && tested < 8; j += N / 8, ++tested) {
        Eigen::VectorXd up = sigma0.values, down = sigma0.values;
        up[j] += delta;
        down[j] -= delta;
        const Eigen::MatrixXd vp =
            solve_cem_patterns(slab.mesh, ConductivityField(up), slab.layout, currents).voltages;
        const Eigen::MatrixXd vm =
            solve_cem_patterns(slab.mesh, ConductivityField(down), slab.layout, currents)
                .voltages;
        const Eigen::VectorXd fd = (vp - vm).col(0) / (2.0 * delta);
        CHECK((J.col(j) - fd).norm() <= 0.01 * fd.norm() + 1e-16);
    }
    CHECK(tested == 8);
}

TEST_CASE("jacobian scales as 1/c^2 under the conductivity-impedance scaling") {
    const SlabFixture slab(0.25, 0.01);
    Eigen::MatrixXd currents(2, 1);
    currents << 1e-3, -1e-3;
    ElectrodeLayout half_z = slab.layout;
    half_z.contact_impedance = slab.layout.contact_impedance / 2.0;
    const Eigen::MatrixXd j1 = jacobian_sigma(
        slab.mesh, ConductivityField::constant(slab.mesh, 1.0), slab.layout, currents);
    const Eigen::MatrixXd j2 = jacobian_sigma(
        slab.mesh, ConductivityField::constant(slab.mesh, 2.0), half_z, currents);
    CHECK((j2 - 0.25 * j1).norm() <= 1e-8 * j1.norm());
}

TEST_CASE("jacobian times the all-ones direction matches a uniform bump") {
    const SlabFixture slab(0.25, 0.01);
    Eigen::MatrixXd currents(2, 1);
    currents << 1e-3, -1e-3;
    const ConductivityField sigma0 = ConductivityField::constant(slab.mesh, 1.0);
    const Eigen::MatrixXd J = jacobian_sigma(slab.mesh, sigma0, slab.layout, currents);
    const double delta = 1e-5;
    const Eigen::MatrixXd vp =
        solve_cem_patterns(slab.mesh, ConductivityField::constant(slab.mesh, 1.0 + delta),
                           slab.layout, currents)
            .voltages;
    const Eigen::MatrixXd vm =
        solve_cem_patterns(slab.mesh, ConductivityField::constant(slab.mesh, 1.0 - delta),
                           slab.layout, currents)
            .voltages;
    const Eigen::VectorXd fd = (vp - vm).col(0) / (2.0 * delta);
    const Eigen::VectorXd jd = J * Eigen::VectorXd::Ones(J.cols());
    CHECK((jd - fd).norm() <= 0.01 * fd.norm());
}
