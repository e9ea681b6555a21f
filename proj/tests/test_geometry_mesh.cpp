#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "eit/errors.hpp"
#include "eit/geometry.hpp"
#include "eit/tet_mesh.hpp"
#include "test_helpers.hpp"

using namespace eit;

TEST_CASE("box domain surface area and edges") {
    const BoxDomain box(0.17, 0.255, 0.17);
    CHECK(box.surface_area() == 2 * (0.17 * 0.255 + 0.255 * 0.17 + 0.17 * 0.17));
    CHECK(box.longest_edge() == 0.255);
    CHECK(box.shortest_edge() == 0.17);
    CHECK_THROWS_AS(BoxDomain(0.0, 1.0, 1.0), ConfigError);
}

TEST_CASE("standard tank layout: 32 electrodes with equalized gaps") {
    const BoxDomain box(0.17, 0.255, 0.17);
    const ElectrodeLayout layout = standard_tank_layout(box);
    REQUIRE(layout.count() == 32);
    layout.validate(box);

    // gap = (face_len - n*side) / (n+1) per axis
    const double gap_short = (0.17 - 2 * 0.08) / 3;
    const double gap_long = (0.255 - 3 * 0.08) / 4;
    CHECK(gap_short >= 0.0033);
    CHECK(gap_long >= 0.0033);

    // every electrode center coordinate on a short axis sits at +-(gap+side/2)
    std::set<int> faces_seen;
    for (int l = 0; l < 32; ++l) {
        const Face f = Face::from_id(layout.face_ids[l]);
        faces_seen.insert(f.id());
        for (int ax = 0; ax < 3; ++ax) {
            if (ax == f.axis) continue;
            const double c = std::abs(layout.centers(l, ax));
            if (ax == 1) {
                const bool on_row =
                    std::abs(c) < 1e-12 ||
                    std::abs(c - (0.255 / 2 - gap_long - 0.04)) < 1e-9;
                CHECK(on_row);
            } else {
                CHECK(c == doctest::Approx(0.085 - gap_short - 0.04).epsilon(1e-12));
            }
        }
    }
    CHECK(faces_seen.size() == 6);
}

TEST_CASE("single electrode per face lands on the centroid") {
    const BoxDomain box(1.0, 1.0, 1.0);
    std::map<Face, int> counts;
    for (int id = 0; id < 6; ++id) counts[Face::from_id(id)] = 1;
    const ElectrodeLayout layout = build_box_layout(box, counts, 0.2);
    REQUIRE(layout.count() == 6);
    for (int l = 0; l < 6; ++l) {
        const Face f = Face::from_id(layout.face_ids[l]);
        for (int ax = 0; ax < 3; ++ax) {
            if (ax == f.axis) {
                CHECK(std::abs(layout.centers(l, ax)) == doctest::Approx(0.5).epsilon(1e-15));
            } else {
                CHECK(layout.centers(l, ax) == doctest::Approx(0.0).epsilon(1e-15));
            }
        }
    }
}

TEST_CASE("mismodeled box keeps the electrode ordering and scales positions") {
    const BoxDomain correct(0.17, 0.255, 0.17);
    const BoxDomain large(0.20, 0.35, 0.25);
    const ElectrodeLayout a = standard_tank_layout(correct);
    const ElectrodeLayout b = standard_tank_layout(large);
    REQUIRE(a.count() == b.count());
    CHECK(a.face_ids == b.face_ids);
    // positions re-equalize with the face dimensions
    const double gap_y_large = (0.35 - 3 * 0.08) / 4;
    bool found_y_row = false;
    for (int l = 0; l < b.count(); ++l) {
        if (Face::from_id(b.face_ids[l]).axis == 0) {
            if (std::abs(b.centers(l, 1) - (-0.175 + gap_y_large + 0.04)) < 1e-12) {
                found_y_row = true;
            }
        }
    }
    CHECK(found_y_row);
}

TEST_CASE("layout construction is deterministic bit for bit") {
    const BoxDomain box(0.17, 0.255, 0.17);
    const ElectrodeLayout a = standard_tank_layout(box);
    const ElectrodeLayout b = standard_tank_layout(box);
    CHECK((a.centers.array() == b.centers.array()).all());
}

TEST_CASE("footprint overflow is rejected") {
    const BoxDomain box(0.17, 0.255, 0.17);
    std::map<Face, int> counts;
    counts[Face{0, false}] = 6;
    counts[Face{0, true}] = 6;
    CHECK_THROWS_AS(build_box_layout(box, counts, 0.10), FootprintOverflow);
}

TEST_CASE("domain and layout JSON round trip") {
    const BoxDomain box(0.17, 0.255, 0.17);
    const ElectrodeLayout layout = standard_tank_layout(box);
    const std::string text = domain_layout_to_json(box, layout);
    BoxDomain box2;
    ElectrodeLayout layout2;
    domain_layout_from_json(text, box2, layout2);
    CHECK(box2.lx == box.lx);
    CHECK(box2.ly == box.ly);
    CHECK((layout2.centers - layout.centers).cwiseAbs().maxCoeff() == 0.0);
    CHECK(layout2.face_ids == layout.face_ids);
}

TEST_CASE("tank mesh satisfies the geometric invariants") {
    const BoxDomain box(0.17, 0.255, 0.17);
    const ElectrodeLayout layout = standard_tank_layout(box);
    const TetMesh mesh = mesh_box(box, layout, 0.02, 0.008);

    // positive orientation everywhere
    double vol;
    Eigen::Matrix<double, 4, 3> grads;
    double min_vol = 1e300;
    for (int e = 0; e < mesh.tet_count(); ++e) {
        mesh.element_volume_grads(e, vol, grads);
        min_vol = std::min(min_vol, vol);
    }
    CHECK(min_vol > 0.0);

    CHECK(mesh.total_volume() == doctest::Approx(box.volume()).epsilon(1e-9));
    CHECK(mesh.boundary_area() == doctest::Approx(box.surface_area()).epsilon(0.01));
    for (int l = 0; l < layout.count(); ++l) {
        CHECK(mesh.electrode_area(l) ==
              doctest::Approx(layout.side * layout.side).epsilon(0.02));
    }

    // element size near electrodes: every tet whose bounding box touches the
    // one-side neighborhood of a footprint stays below h_electrode per axis
    const double h_elec = 0.008;
    const double s = layout.side;
    int checked = 0;
    for (int e = 0; e < mesh.tet_count(); e += 37) {
        Vec3 lo = mesh.nodes.row(mesh.tets(e, 0)), hi = lo;
        for (int v = 1; v < 4; ++v) {
            lo = lo.cwiseMin(Vec3(mesh.nodes.row(mesh.tets(e, v))));
            hi = hi.cwiseMax(Vec3(mesh.nodes.row(mesh.tets(e, v))));
        }
        const Vec3 centroid = 0.5 * (lo + hi);
        bool near = false;
        for (int l = 0; l < layout.count() && !near; ++l) {
            const Face f = Face::from_id(layout.face_ids[l]);
            bool inside = true;
            for (int ax = 0; ax < 3; ++ax) {
                double dist;
                if (ax == f.axis) {
                    const double fc = (f.positive ? 1.0 : -1.0) * box.edge(ax) / 2;
                    dist = std::abs(centroid[ax] - fc);
                } else {
                    dist = std::max(0.0, std::abs(centroid[ax] - layout.centers(l, ax)) - s / 2);
                }
                if (dist > 0.9 * s) inside = false;
            }
            near = inside;
        }
        if (near) {
            ++checked;
            CHECK((hi - lo).maxCoeff() <= h_elec * (1 + 1e-9));
        }
    }
    CHECK(checked > 0);
}

TEST_CASE("unit cube mesh without electrodes conserves volume") {
    const BoxDomain cube(1.0, 1.0, 1.0);
    const TetMesh mesh = mesh_box(cube, ElectrodeLayout{}, 0.5, 0.5);
    CHECK(mesh.tet_count() >= 6);
    CHECK(mesh.total_volume() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("refinement keeps boundary area error non-increasing") {
    const BoxDomain box(0.17, 0.255, 0.17);
    const ElectrodeLayout layout = standard_tank_layout(box);
    double prev_err = 1e300;
    for (double h : {0.04, 0.02, 0.01}) {
        const TetMesh mesh = mesh_box(box, layout, h, h / 2);
        const double err = std::abs(mesh.boundary_area() - box.surface_area());
        CHECK(err <= prev_err + 1e-12);
        prev_err = err;
    }
}

TEST_CASE("element cap triggers MeshFailure") {
    const BoxDomain box(0.17, 0.255, 0.17);
    const ElectrodeLayout layout = standard_tank_layout(box);
    MeshOptions opts;
    opts.max_tets = 100;
    CHECK_THROWS_AS(mesh_box(box, layout, 0.02, 0.01, opts), MeshFailure);
}

TEST_CASE("grid jitter changes interior nodes but not invariants") {
    const BoxDomain box(0.17, 0.255, 0.17);
    const ElectrodeLayout layout = standard_tank_layout(box);
    MeshOptions opts;
    opts.jitter_seed = 42;
    const TetMesh a = mesh_box(box, layout, 0.03, 0.015);
    const TetMesh b = mesh_box(box, layout, 0.03, 0.015, opts);
    CHECK(b.total_volume() == doctest::Approx(box.volume()).epsilon(1e-9));
    REQUIRE(a.node_count() == b.node_count());
    CHECK((a.nodes - b.nodes).cwiseAbs().maxCoeff() > 1e-5);
}

TEST_CASE("point location and interpolation reproduce a linear field") {
    const BoxDomain box(0.2, 0.3, 0.25);
    const TetMesh mesh = mesh_box(box, ElectrodeLayout{}, 0.05, 0.05);
    Eigen::VectorXd nodal(mesh.node_count());
    for (int i = 0; i < mesh.node_count(); ++i) {
        const Vec3 p = mesh.nodes.row(i);
        nodal[i] = 1.0 + 2.0 * p.x() - 0.5 * p.y() + 3.0 * p.z();
    }
    for (const Vec3& p : {Vec3(0.01, 0.02, -0.03), Vec3(-0.09, 0.1, 0.12),
                          Vec3(0.1, -0.15, -0.125), Vec3(0.0, 0.0, 0.0)}) {
        const double expect = 1.0 + 2.0 * p.x() - 0.5 * p.y() + 3.0 * p.z();
        CHECK(mesh.interpolate(nodal, p) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("mesh VTK export writes an unstructured grid") {
    const BoxDomain cube(1.0, 1.0, 1.0);
    const TetMesh mesh = mesh_box(cube, ElectrodeLayout{}, 0.5, 0.5);
    const std::string path = eit::test::tmp_path("mesh.vtk");
    mesh.write_vtk(path);
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.find("DATASET UNSTRUCTURED_GRID") != std::string::npos);
    CHECK(text.find("CELL_TYPES") != std::string::npos);
}
