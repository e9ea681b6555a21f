#include "eit/voxel_grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "eit/errors.hpp"

namespace eit {

VoxelGrid::VoxelGrid(std::array<int, 3> shape_, const Vec3& origin_, const Vec3& extent_)
    : shape(shape_), origin(origin_), extent(extent_) {
    if (shape[0] < 1 || shape[1] < 1 || shape[2] < 1) {
        throw ConfigError("VoxelGrid: shape must be positive");
    }
    values = Eigen::VectorXd::Zero(size());
}

VoxelGrid VoxelGrid::for_box(const BoxDomain& domain, int n) {
    return VoxelGrid({n, n, n}, domain.lower(), Vec3(domain.lx, domain.ly, domain.lz));
}

Vec3 VoxelGrid::voxel_size() const {
    return Vec3(extent.x() / shape[0], extent.y() / shape[1], extent.z() / shape[2]);
}

Vec3 VoxelGrid::center(int i, int j, int k) const {
    const Vec3 h = voxel_size();
    return origin + Vec3((i + 0.5) * h.x(), (j + 0.5) * h.y(), (k + 0.5) * h.z());
}

double VoxelGrid::sample(const Vec3& p) const {
    const Vec3 h = voxel_size();
    double w[3];
    int i0[3];
    for (int ax = 0; ax < 3; ++ax) {
        // position in units of voxels, relative to the first center
        const double t = (p[ax] - origin[ax]) / h[ax] - 0.5;
        const double tc = std::clamp(t, 0.0, static_cast<double>(shape[ax] - 1));
        i0[ax] = std::min(static_cast<int>(std::floor(tc)), shape[ax] - 2);
        i0[ax] = std::max(i0[ax], 0);
        w[ax] = shape[ax] == 1 ? 0.0 : tc - i0[ax];
    }
    double acc = 0.0;
    for (int c = 0; c < 8; ++c) {
        const int di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
        const int i = std::min(i0[0] + di, shape[0] - 1);
        const int j = std::min(i0[1] + dj, shape[1] - 1);
        const int k = std::min(i0[2] + dk, shape[2] - 1);
        const double wc = (di ? w[0] : 1 - w[0]) * (dj ? w[1] : 1 - w[1]) * (dk ? w[2] : 1 - w[2]);
        acc += wc * values[index(i, j, k)];
    }
    return acc;
}

VoxelGrid VoxelGrid::resampled(int n) const {
    VoxelGrid out({n, n, n}, origin, extent);
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                out.values[out.index(i, j, k)] = sample(out.center(i, j, k));
            }
        }
    }
    return out;
}

void VoxelGrid::write_vtk(const std::string& path, const std::string& field_name) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    const Vec3 h = voxel_size();
    const Vec3 first = center(0, 0, 0);
    out << "# vtk DataFile Version 3.0\n";
    out << "voxel grid\n";
    out << "ASCII\nDATASET STRUCTURED_POINTS\n";
    out << "DIMENSIONS " << shape[0] << " " << shape[1] << " " << shape[2] << "\n";
    char buf[160];
    std::snprintf(buf, sizeof(buf), "ORIGIN %.17g %.17g %.17g\n", first.x(), first.y(), first.z());
    out << buf;
    std::snprintf(buf, sizeof(buf), "SPACING %.17g %.17g %.17g\n", h.x(), h.y(), h.z());
    out << buf;
    out << "POINT_DATA " << size() << "\n";
    out << "SCALARS " << (field_name.empty() ? "value" : field_name) << " double 1\n";
    out << "LOOKUP_TABLE default\n";
    for (long i = 0; i < size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g\n", values[i]);
        out << buf;
    }
}

void VoxelGrid::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << "x_m,y_m,z_m,value\n";
    char buf[200];
    for (int k = 0; k < shape[2]; ++k) {
        for (int j = 0; j < shape[1]; ++j) {
            for (int i = 0; i < shape[0]; ++i) {
                const Vec3 c = center(i, j, k);
                std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", c.x(), c.y(), c.z(),
                              values[index(i, j, k)]);
                out << buf;
            }
        }
    }
}

VoxelGrid read_voxel_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::array<double, 4>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::array<double, 4> row{};
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &row[0], &row[1], &row[2], &row[3]) !=
            4) {
            throw ParseError(path + ": bad voxel row '" + line + "'");
        }
        rows.push_back(row);
    }
    if (rows.empty()) throw ParseError(path + ": no voxel rows");

    std::array<std::vector<double>, 3> axes;
    for (int ax = 0; ax < 3; ++ax) {
        std::vector<double> c;
        for (const auto& r : rows) c.push_back(r[ax]);
        std::sort(c.begin(), c.end());
        const double tol = 1e-9 * (std::abs(c.back()) + std::abs(c.front()) + 1e-30);
        c.erase(std::unique(c.begin(), c.end(),
                            [tol](double a, double b) { return std::abs(a - b) <= tol; }),
                c.end());
        axes[ax] = std::move(c);
    }
    const std::array<int, 3> shape = {static_cast<int>(axes[0].size()),
                                      static_cast<int>(axes[1].size()),
                                      static_cast<int>(axes[2].size())};
    if (static_cast<long>(shape[0]) * shape[1] * shape[2] != static_cast<long>(rows.size())) {
        throw ParseError(path + ": rows do not form a full grid");
    }
    Vec3 h;
    for (int ax = 0; ax < 3; ++ax) {
        h[ax] = shape[ax] > 1 ? (axes[ax].back() - axes[ax].front()) / (shape[ax] - 1) : 1.0;
    }
    const Vec3 origin(axes[0].front() - h.x() / 2, axes[1].front() - h.y() / 2,
                      axes[2].front() - h.z() / 2);
    VoxelGrid grid(shape, origin, Vec3(shape[0] * h.x(), shape[1] * h.y(), shape[2] * h.z()));
    auto axis_index = [&](int ax, double v) {
        const auto& c = axes[ax];
        const auto it = std::lower_bound(c.begin(), c.end(), v - 1e-9 * (std::abs(v) + 1e-30));
        return static_cast<int>(it - c.begin());
    };
    for (const auto& r : rows) {
        grid.values[grid.index(axis_index(0, r[0]), axis_index(1, r[1]), axis_index(2, r[2]))] =
            r[3];
    }
    return grid;
}

}  // namespace eit
