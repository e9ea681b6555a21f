#include <doctest.h>

#include <cmath>

#include "eit/cem.hpp"
#include "eit/dn.hpp"
#include "eit/errors.hpp"
#include "eit/frames_io.hpp"
#include "test_helpers.hpp"

using namespace eit;

namespace {

Eigen::MatrixXd mean_free_projector(int L) {
    return Eigen::MatrixXd::Identity(L, L) -
           Eigen::MatrixXd::Constant(L, L, 1.0 / L);
}

}  // namespace

TEST_CASE("build_basis orthonormalizes and preserves the span") {
    Eigen::MatrixXd raw(3, 2);
    raw << 1, 0, -1, 1, 0, -1;  // e1-e2, e2-e3
    const CurrentPatternBasis basis = build_basis(raw);
    CHECK((basis.Q.transpose() * basis.Q - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
    CHECK(basis.Q.colwise().sum().cwiseAbs().maxCoeff() < 1e-12);
    // same span: projectors agree
    auto projector = [](const Eigen::MatrixXd& m) {
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(m);
        const Eigen::MatrixXd q =
            cod.householderQ() * Eigen::MatrixXd::Identity(m.rows(), cod.rank());
        return (q * q.transpose()).eval();
    };
    CHECK((projector(raw) - projector(basis.Q)).norm() < 1e-12);
}

TEST_CASE("eigen current patterns pass through build_basis up to sign") {
    const eit::test::TankFixture tank;
    Eigen::MatrixXd probe = Eigen::MatrixXd::Zero(32, 31);
    for (int k = 0; k < 31; ++k) {
        probe(0, k) = 1.0;
        probe(k + 1, k) = -1.0;
    }
    const PatternSet sim = solve_cem_patterns(
        tank.mesh, ConductivityField::constant(tank.mesh, 1.0), tank.layout, probe);
    NDMatrix nd;
    DNMatrix dn;
    assemble_nd_dn(sim, build_basis(probe), nd, dn);
    const CurrentPatternBasis eig = eigen_current_basis(nd);
    const CurrentPatternBasis rebuilt = build_basis(eig.Q);
    CHECK((rebuilt.Q - eig.Q).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("duplicate columns are rank deficient") {
    Eigen::MatrixXd raw(4, 3);
    raw.col(0) << 1, -1, 0, 0;
    raw.col(1) << 0, 1, -1, 0;
    raw.col(2) = raw.col(0);
    CHECK_THROWS_AS(build_basis(raw), RankDeficient);
}

TEST_CASE("scalar voltage map gives R = c P and L = P / c") {
    const int L = 6;
    Eigen::MatrixXd currents = Eigen::MatrixXd::Zero(L, L - 1);
    for (int k = 0; k < L - 1; ++k) {
        currents(0, k) = 1.0;
        currents(k + 1, k) = -1.0;
    }
    const double c = 3.5;
    PatternSet ps;
    ps.currents = currents;
    ps.voltages = c * currents;
    NDMatrix nd;
    DNMatrix dn;
    assemble_nd_dn(ps, build_basis(currents), nd, dn);
    const Eigen::MatrixXd P = mean_free_projector(L);
    CHECK((nd.R - c * P).norm() < 1e-10);
    CHECK((dn.L - P / c).norm() < 1e-10);
    CHECK((nd.R * Eigen::VectorXd::Ones(L)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((dn.L * nd.R - P).norm() < 1e-8);
    CHECK((nd.R * dn.L - P).norm() < 1e-8);
}

TEST_CASE("halving the conductivity (z scaled) doubles the ND matrix") {
    const eit::test::TankFixture tank;
    Eigen::MatrixXd currents = Eigen::MatrixXd::Zero(32, 31);
    for (int k = 0; k < 31; ++k) {
        currents(0, k) = 1e-3;
        currents(k + 1, k) = -1e-3;
    }
    ElectrodeLayout layout1 = tank.layout;
    layout1.contact_impedance.setConstant(0.01);
    ElectrodeLayout layout2 = tank.layout;
    layout2.contact_impedance.setConstant(0.02);
    const CurrentPatternBasis basis = build_basis(currents);
    NDMatrix nd1, nd2;
    DNMatrix dn1, dn2;
    assemble_nd_dn(solve_cem_patterns(tank.mesh, ConductivityField::constant(tank.mesh, 1.0),
                                      layout1, currents),
                   basis, nd1, dn1);
    assemble_nd_dn(solve_cem_patterns(tank.mesh, ConductivityField::constant(tank.mesh, 0.5),
                                      layout2, currents),
                   basis, nd2, dn2);
    CHECK((nd2.R - 2.0 * nd1.R).norm() <= 1e-8 * nd1.R.norm() * 2.0);
    // DN difference annihilates constants
    CHECK(((dn2.L - dn1.L) * Eigen::VectorXd::Ones(32)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("least-squares residual is orthogonal to the pattern span") {
    const int L = 8, K = 7;
    Eigen::MatrixXd currents = Eigen::MatrixXd::Random(L, K);
    currents.rowwise() -= currents.colwise().mean();
    PatternSet ps;
    ps.currents = currents;
    // voltages from an exact symmetric mean-free map plus asymmetric noise
    Eigen::MatrixXd truth = Eigen::MatrixXd::Random(L, L);
    const Eigen::MatrixXd P = mean_free_projector(L);
    truth = P * (truth + truth.transpose()) * P;
    ps.voltages = truth * currents + 1e-3 * Eigen::MatrixXd::Random(L, K);
    ps.voltages.rowwise() -= ps.voltages.colwise().mean();
    NDMatrix nd;
    DNMatrix dn;
    assemble_nd_dn(ps, build_basis(currents), nd, dn);
    CHECK(nd.asymmetry_rel > 0.0);
    CHECK((nd.R - nd.R.transpose()).norm() == 0.0);
}

TEST_CASE("sigma_best identities") {
    Eigen::MatrixXd u = Eigen::MatrixXd::Random(32, 31);
    CHECK(sigma_best(u, u) == 1.0);

    const Eigen::MatrixXd v = u / 0.024;
    CHECK(sigma_best(u, v) == doctest::Approx(0.024).epsilon(1e-12));

    SigmaBestDiag diag;
    CHECK(sigma_best(u, -u, &diag) == -1.0);
    CHECK(diag.negative);

    CHECK_THROWS_AS(sigma_best(u, Eigen::MatrixXd::Zero(32, 31)), DegenerateData);

    // scale equivariance: sigma_best(U, V/c) = c * sigma_best(U, V)
    const double c = 7.25;
    CHECK(sigma_best(u, v / c) == doctest::Approx(c * sigma_best(u, v)).epsilon(1e-14));
}

TEST_CASE("frames round trip bitwise and average correctly") {
    const std::string prefix = eit::test::tmp_path("frames_roundtrip");
    Eigen::MatrixXd currents = Eigen::MatrixXd::Random(8, 7);
    currents.rowwise() -= currents.colwise().mean();
    Eigen::MatrixXd volts = Eigen::MatrixXd::Random(8, 7);

    FramesMetadata meta;
    meta.frequency_hz = 11000.0;
    meta.background_mS_per_m = 24.0;
    meta.frame_count = 1;
    save_frames(prefix, currents, volts, meta);
    FramesMetadata meta2;
    const PatternSet loaded = load_frames(prefix, &meta2);
    CHECK((loaded.currents.array() == currents.array()).all());
    CHECK((loaded.voltages.array() == volts.array()).all());
    CHECK(meta2.frame_count == 1);
    CHECK(meta2.frequency_hz == 11000.0);

    // 100 identical frames average to any single frame
    meta.frame_count = 100;
    Eigen::MatrixXd stacked(8, 700);
    for (int f = 0; f < 100; ++f) stacked.middleCols(7 * f, 7) = volts;
    save_frames(prefix, currents, stacked, meta);
    const PatternSet averaged = load_frames(prefix);
    CHECK((averaged.voltages - volts).cwiseAbs().maxCoeff() <
          1e-13 * volts.cwiseAbs().maxCoeff());
}

TEST_CASE("loading rejects non-mean-free currents and bad shapes") {
    const std::string prefix = eit::test::tmp_path("frames_bad");
    Eigen::MatrixXd currents = Eigen::MatrixXd::Random(6, 5);
    currents.rowwise() -= currents.colwise().mean();
    currents(0, 2) += 0.01 * currents.col(2).norm();  // 1% column-sum violation
    FramesMetadata meta;
    meta.frame_count = 1;
    save_frames(prefix, currents, Eigen::MatrixXd::Zero(6, 5), meta);
    CHECK_THROWS_AS(load_frames(prefix), NonMeanFreeCurrents);

    // voltage column count inconsistent with frame_count
    currents.col(2) = currents.col(3);  // restore mean-free
    currents.rowwise() -= currents.colwise().mean();
    write_csv_matrix(prefix + ".I.csv", currents);
    write_csv_matrix(prefix + ".V.csv", Eigen::MatrixXd::Zero(6, 7));
    CHECK_THROWS_AS(load_frames(prefix), ShapeMismatch);

    CHECK_THROWS_AS(load_frames(eit::test::tmp_path("missing_prefix")), ParseError);
}

TEST_CASE("frame diagnostics report asymmetry and column sums") {
    const std::string prefix = eit::test::tmp_path("frames_diag");
    const int L = 6;
    Eigen::MatrixXd currents = Eigen::MatrixXd::Zero(L, L - 1);
    for (int k = 0; k < L - 1; ++k) {
        currents(0, k) = 1.0;
        currents(k + 1, k) = -1.0;
    }
    PatternSet ps;
    ps.currents = currents;
    ps.voltages = 2.0 * currents;
    FramesMetadata meta;
    meta.frame_count = 1;
    save_frames(prefix, ps.currents, ps.voltages, meta);
    const FrameDiagnostics d = diagnose_frames(prefix);
    CHECK(d.electrode_count == L);
    CHECK(d.pattern_count == L - 1);
    CHECK(d.nd_asymmetry_rel < 1e-12);
    CHECK(d.max_current_colsum_rel < 1e-12);
}
