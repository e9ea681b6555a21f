#ifndef EIT_TEST_HELPERS_HPP
#define EIT_TEST_HELPERS_HPP

#include <filesystem>
#include <string>

#include "eit/cem.hpp"
#include "eit/geometry.hpp"
#include "eit/tet_mesh.hpp"

namespace eit::test {

inline std::string tmp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "eit3d_tests";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

/// Small two-electrode slab: unit cube with full-face electrodes on the x
/// walls (the 1D resistor benchmark).
struct SlabFixture {
    BoxDomain domain{1.0, 1.0, 1.0};
    ElectrodeLayout layout;
    TetMesh mesh;

    explicit SlabFixture(double h = 0.25, double z_contact = 1e-8) {
        layout.centers.resize(2, 3);
        layout.centers << -0.5, 0.0, 0.0, 0.5, 0.0, 0.0;
        layout.side = 1.0;
        layout.face_ids = {0, 1};
        layout.contact_impedance = Eigen::VectorXd::Constant(2, z_contact);
        mesh = mesh_box(domain, layout, h, h);
    }
};

/// Coarse standard-tank fixture shared by the slower tests.
struct TankFixture {
    BoxDomain domain{0.17, 0.255, 0.17};
    ElectrodeLayout layout;
    TetMesh mesh;

    explicit TankFixture(double h_far = 0.03, double h_elec = 0.02) {
        layout = standard_tank_layout(domain);
        mesh = mesh_box(domain, layout, h_far, h_elec);
    }
};

}  // namespace eit::test

#endif
