#ifndef EIT_VOXEL_GRID_HPP
#define EIT_VOXEL_GRID_HPP

#include <Eigen/Dense>
#include <array>
#include <string>

#include "eit/geometry.hpp"

namespace eit {

/// Values on a regular Cartesian grid of voxel centers spanning a box.
/// Storage order: x fastest, then y, then z.
struct VoxelGrid {
    std::array<int, 3> shape = {0, 0, 0};
    Vec3 origin = Vec3::Zero();   // lower corner of the box (m)
    Vec3 extent = Vec3::Zero();   // box edge lengths (m)
    Eigen::VectorXd values;

    VoxelGrid() = default;
    VoxelGrid(std::array<int, 3> shape_, const Vec3& origin_, const Vec3& extent_);
    static VoxelGrid for_box(const BoxDomain& domain, int n);

    long size() const { return static_cast<long>(shape[0]) * shape[1] * shape[2]; }
    long index(int i, int j, int k) const {
        return i + static_cast<long>(shape[0]) * (j + static_cast<long>(shape[1]) * k);
    }
    Vec3 voxel_size() const;
    Vec3 center(int i, int j, int k) const;

    /// Trilinear sample between voxel centers, clamped at the boundary.
    double sample(const Vec3& p) const;

    /// Trilinear resampling onto an n x n x n grid over the same box.
    VoxelGrid resampled(int n) const;

    /// Legacy ASCII VTK structured points.
    void write_vtk(const std::string& path, const std::string& field_name) const;
    /// CSV rows x,y,z,value (voxel centers).
    void write_csv(const std::string& path) const;
};

/// Rebuilds a VoxelGrid from the x,y,z,value CSV written by write_csv.
VoxelGrid read_voxel_csv(const std::string& path);

}  // namespace eit

#endif  // EIT_VOXEL_GRID_HPP
