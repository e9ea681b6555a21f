#ifndef EIT_TET_MESH_HPP
#define EIT_TET_MESH_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eit/geometry.hpp"

namespace eit {

/// Conforming tetrahedral mesh of a box. Built as a tensor-product grid of
/// hexahedral cells (grid lines snapped to electrode footprint edges), each
/// split into six tetrahedra sharing the cell diagonal.
class TetMesh {
  public:
    Eigen::MatrixX3d nodes;          // N x 3 coordinates
    Eigen::MatrixX4i tets;           // M x 4 node indices, positive orientation
    Eigen::MatrixX3i boundary_tris;  // B x 3 node indices, outward oriented
    std::vector<int> tri_tags;       // per-triangle electrode index + 1; 0 = off-electrode

    int node_count() const { return static_cast<int>(nodes.rows()); }
    int tet_count() const { return static_cast<int>(tets.rows()); }

    double total_volume() const;
    double boundary_area() const;
    /// Total tagged triangle area of electrode l (0-based).
    double electrode_area(int l) const;

    /// Volume and the four P1 basis gradients of element e.
    void element_volume_grads(int e, double& volume, Eigen::Matrix<double, 4, 3>& grads) const;

    /// Index of the tetrahedron containing p (tensor meshes only; points are
    /// clamped to the box). Returns -1 when the mesh carries no grid info.
    int locate(const Vec3& p) const;

    /// P1 interpolation of a nodal field at p (tensor meshes only).
    double interpolate(const Eigen::VectorXd& nodal, const Vec3& p) const;

    bool has_grid() const { return !xs_.empty(); }
    const std::vector<double>& axis_coords(int axis) const;

    /// Legacy ASCII VTK unstructured grid, optionally with one nodal scalar field.
    void write_vtk(const std::string& path, const std::string& field_name = "",
                   const Eigen::VectorXd* nodal = nullptr) const;

    // grid metadata (set by mesh_box)
    void set_grid(std::vector<double> xs, std::vector<double> ys, std::vector<double> zs);

  private:
    std::vector<double> xs_, ys_, zs_;  // grid planes per axis when tensor-structured
    int cell_index(const Vec3& p) const;
};

struct MeshOptions {
    std::uint64_t jitter_seed = 0;   // 0 = no jitter; otherwise interior grid planes
                                     // are perturbed deterministically (inverse-crime guard)
    std::size_t max_tets = 2'000'000;
};

/// Graded box mesh: element size <= h_electrode within one electrode side of
/// any electrode footprint, h_far elsewhere. Grid planes are snapped to
/// footprint edges so tagged boundary areas are exact.
TetMesh mesh_box(const BoxDomain& domain, const ElectrodeLayout& layout, double h_far,
                 double h_electrode, const MeshOptions& options = {});

/// Uniform box mesh without electrodes, sized to approximately `target_tets`
/// elements (used for the Schrodinger boundary-value solve).
TetMesh mesh_box_uniform(const BoxDomain& domain, std::size_t target_tets);

}  // namespace eit

#endif  // EIT_TET_MESH_HPP
