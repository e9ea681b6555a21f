#include "eit/tet_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "eit/errors.hpp"
#include "eit/rng.hpp"

namespace eit {

namespace {

constexpr double kSnapTol = 1e-10;

// The six axis permutations of the cell-diagonal subdivision and their parity.
struct Path {
    int p[3];
    bool even;
};
constexpr Path kPaths[6] = {
    {{0, 1, 2}, true},  {{0, 2, 1}, false}, {{1, 0, 2}, false},
    {{1, 2, 0}, true},  {{2, 0, 1}, true},  {{2, 1, 0}, false},
};

struct AxisSpec {
    double lo = 0.0, hi = 0.0;
    std::vector<double> snaps;                        // grid planes that must appear
    std::vector<std::pair<double, double>> fine;      // refinement bands
};

bool intersects(const std::pair<double, double>& band, double a, double b) {
    return band.first < b - kSnapTol && band.second > a + kSnapTol;
}

std::vector<double> partition_axis(const AxisSpec& spec, double h_far, double h_fine,
                                   std::uint64_t jitter_seed, int axis_id) {
    std::vector<double> brk = {spec.lo, spec.hi};
    for (double s : spec.snaps) {
        if (s > spec.lo + kSnapTol && s < spec.hi - kSnapTol) brk.push_back(s);
    }
    std::sort(brk.begin(), brk.end());
    brk.erase(std::unique(brk.begin(), brk.end(),
                          [](double a, double b) { return std::abs(a - b) < kSnapTol; }),
              brk.end());

    CounterRng rng(jitter_seed, static_cast<std::uint64_t>(axis_id));
    std::vector<double> coords;
    coords.push_back(brk.front());
    std::uint64_t counter = 0;
    for (std::size_t i = 0; i + 1 < brk.size(); ++i) {
        const double a = brk[i], b = brk[i + 1];
        double h = h_far;
        for (const auto& band : spec.fine) {
            if (intersects(band, a, b)) { h = h_fine; break; }
        }
        const int n = std::max(1, static_cast<int>(std::ceil((b - a) / h - 1e-9)));
        const double step = (b - a) / n;
        for (int k = 1; k < n; ++k) {
            double x = a + k * step;
            if (jitter_seed != 0) {
                x += step * 0.4 * (rng.uniform(counter++) - 0.5);
            }
            coords.push_back(x);
        }
        coords.push_back(b);
    }
    return coords;
}

}  // namespace

void TetMesh::set_grid(std::vector<double> xs, std::vector<double> ys, std::vector<double> zs) {
    xs_ = std::move(xs);
    ys_ = std::move(ys);
    zs_ = std::move(zs);
}

const std::vector<double>& TetMesh::axis_coords(int axis) const {
    return axis == 0 ? xs_ : (axis == 1 ? ys_ : zs_);
}

double TetMesh::total_volume() const {
    double v = 0.0;
    for (int e = 0; e < tet_count(); ++e) {
        const Vec3 a = nodes.row(tets(e, 0));
        const Vec3 d1 = Vec3(nodes.row(tets(e, 1))) - a;
        const Vec3 d2 = Vec3(nodes.row(tets(e, 2))) - a;
        const Vec3 d3 = Vec3(nodes.row(tets(e, 3))) - a;
        v += d1.cross(d2).dot(d3) / 6.0;
    }
    return v;
}

double TetMesh::boundary_area() const {
    double s = 0.0;
    for (int t = 0; t < boundary_tris.rows(); ++t) {
        const Vec3 a = nodes.row(boundary_tris(t, 0));
        const Vec3 b = nodes.row(boundary_tris(t, 1));
        const Vec3 c = nodes.row(boundary_tris(t, 2));
        s += 0.5 * (b - a).cross(c - a).norm();
    }
    return s;
}

double TetMesh::electrode_area(int l) const {
    double s = 0.0;
    for (int t = 0; t < boundary_tris.rows(); ++t) {
        if (tri_tags[t] != l + 1) continue;
        const Vec3 a = nodes.row(boundary_tris(t, 0));
        const Vec3 b = nodes.row(boundary_tris(t, 1));
        const Vec3 c = nodes.row(boundary_tris(t, 2));
        s += 0.5 * (b - a).cross(c - a).norm();
    }
    return s;
}

void TetMesh::element_volume_grads(int e, double& volume,
                                   Eigen::Matrix<double, 4, 3>& grads) const {
    const Vec3 p0 = nodes.row(tets(e, 0));
    const Vec3 p1 = nodes.row(tets(e, 1));
    const Vec3 p2 = nodes.row(tets(e, 2));
    const Vec3 p3 = nodes.row(tets(e, 3));
    Eigen::Matrix3d J;
    J.col(0) = p1 - p0;
    J.col(1) = p2 - p0;
    J.col(2) = p3 - p0;
    const double det = J.determinant();
    volume = det / 6.0;
    const Eigen::Matrix3d Jinv = J.inverse();
    // gradients of barycentric coordinates 1..3 are the rows of J^{-1}
    grads.row(1) = Jinv.row(0);
    grads.row(2) = Jinv.row(1);
    grads.row(3) = Jinv.row(2);
    grads.row(0) = -(grads.row(1) + grads.row(2) + grads.row(3));
}

int TetMesh::cell_index(const Vec3& p) const {
    auto find = [](const std::vector<double>& c, double x) {
        const int n = static_cast<int>(c.size()) - 1;  // cells per axis
        auto it = std::upper_bound(c.begin(), c.end(), x);
        int i = static_cast<int>(it - c.begin()) - 1;
        return std::clamp(i, 0, n - 1);
    };
    const int i = find(xs_, p.x());
    const int j = find(ys_, p.y());
    const int k = find(zs_, p.z());
    const int nx = static_cast<int>(xs_.size()) - 1;
    const int ny = static_cast<int>(ys_.size()) - 1;
    return i + nx * (j + ny * k);
}

int TetMesh::locate(const Vec3& p) const {
    if (!has_grid()) return -1;
    const int cell = cell_index(p);
    int best = -1;
    double best_min_bary = -1e300;
    for (int t = 0; t < 6; ++t) {
        const int e = 6 * cell + t;
        const Vec3 p0 = nodes.row(tets(e, 0));
        Eigen::Matrix3d J;
        J.col(0) = Vec3(nodes.row(tets(e, 1))) - p0;
        J.col(1) = Vec3(nodes.row(tets(e, 2))) - p0;
        J.col(2) = Vec3(nodes.row(tets(e, 3))) - p0;
        const Vec3 b = J.partialPivLu().solve(p - p0);
        const double min_bary = std::min({b[0], b[1], b[2], 1.0 - b.sum()});
        if (min_bary > best_min_bary) {
            best_min_bary = min_bary;
            best = e;
        }
        if (min_bary >= -1e-12) return e;
    }
    return best;  // clamped/boundary points: nearest containing tet
}

double TetMesh::interpolate(const Eigen::VectorXd& nodal, const Vec3& p) const {
    Vec3 q = p;
    for (int ax = 0; ax < 3; ++ax) {
        const auto& c = axis_coords(ax);
        q[ax] = std::clamp(q[ax], c.front(), c.back());
    }
    const int e = locate(q);
    if (e < 0) throw Error("TetMesh::interpolate requires a grid-structured mesh");
    const Vec3 p0 = nodes.row(tets(e, 0));
    Eigen::Matrix3d J;
    J.col(0) = Vec3(nodes.row(tets(e, 1))) - p0;
    J.col(1) = Vec3(nodes.row(tets(e, 2))) - p0;
    J.col(2) = Vec3(nodes.row(tets(e, 3))) - p0;
    const Vec3 b = J.partialPivLu().solve(q - p0);
    const double b0 = 1.0 - b.sum();
    return b0 * nodal[tets(e, 0)] + b[0] * nodal[tets(e, 1)] + b[1] * nodal[tets(e, 2)] +
           b[2] * nodal[tets(e, 3)];
}

void TetMesh::write_vtk(const std::string& path, const std::string& field_name,
                        const Eigen::VectorXd* nodal) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << "# vtk DataFile Version 3.0\n";
    out << "tetrahedral mesh\n";
    out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << node_count() << " double\n";
    char buf[128];
    for (int i = 0; i < node_count(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", nodes(i, 0), nodes(i, 1),
                      nodes(i, 2));
        out << buf;
    }
    out << "CELLS " << tet_count() << " " << 5 * static_cast<long>(tet_count()) << "\n";
    for (int e = 0; e < tet_count(); ++e) {
        out << "4 " << tets(e, 0) << " " << tets(e, 1) << " " << tets(e, 2) << " " << tets(e, 3)
            << "\n";
    }
    out << "CELL_TYPES " << tet_count() << "\n";
    for (int e = 0; e < tet_count(); ++e) out << "10\n";
    if (nodal != nullptr) {
        out << "POINT_DATA " << node_count() << "\n";
        out << "SCALARS " << (field_name.empty() ? "field" : field_name) << " double 1\n";
        out << "LOOKUP_TABLE default\n";
        for (int i = 0; i < node_count(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g\n", (*nodal)[i]);
            out << buf;
        }
    }
}

namespace {

TetMesh build_tensor_mesh(const BoxDomain& domain, const ElectrodeLayout* layout,
                          const std::vector<double>& xs, const std::vector<double>& ys,
                          const std::vector<double>& zs, std::size_t max_tets) {
    const int nx = static_cast<int>(xs.size()) - 1;
    const int ny = static_cast<int>(ys.size()) - 1;
    const int nz = static_cast<int>(zs.size()) - 1;
    const std::size_t n_cells = static_cast<std::size_t>(nx) * ny * nz;
    if (6 * n_cells > max_tets) {
        throw MeshFailure("mesh would have " + std::to_string(6 * n_cells) +
                          " tets, above the cap of " + std::to_string(max_tets));
    }

    TetMesh mesh;
    const int npx = nx + 1, npy = ny + 1;
    mesh.nodes.resize(static_cast<long>(npx) * npy * (nz + 1), 3);
    auto nid = [&](int i, int j, int k) { return i + npx * (j + npy * k); };
    for (int k = 0; k <= nz; ++k)
        for (int j = 0; j <= ny; ++j)
            for (int i = 0; i <= nx; ++i) mesh.nodes.row(nid(i, j, k)) = Vec3(xs[i], ys[j], zs[k]);

    mesh.tets.resize(static_cast<long>(6) * n_cells, 4);
    long e = 0;
    for (int k = 0; k < nz; ++k) {
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                int corner[8];
                for (int c = 0; c < 8; ++c) {
                    corner[c] = nid(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
                }
                for (const Path& path : kPaths) {
                    int bits = 0;
                    int v[4];
                    v[0] = corner[0];
                    for (int s = 0; s < 3; ++s) {
                        bits |= 1 << path.p[s];
                        v[s + 1] = corner[bits];
                    }
                    if (path.even) {
                        mesh.tets.row(e++) << v[0], v[1], v[2], v[3];
                    } else {
                        mesh.tets.row(e++) << v[0], v[1], v[3], v[2];
                    }
                }
            }
        }
    }

    // Boundary triangulation: each boundary cell face splits along the
    // diagonal from its low corner to its high corner (matching the cell
    // subdivision), oriented outward.
    std::vector<std::array<int, 3>> tris;
    std::vector<int> tags;
    auto add_face = [&](int face_axis, bool positive, int a0, int a1, int i0, int i1,
                        double face_coord) {
        // a0, a1: in-plane axes; i0, i1: cell indices along them
        const std::vector<double>* coords[3] = {&xs, &ys, &zs};
        const double u0 = (*coords[a0])[i0], u1 = (*coords[a0])[i0 + 1];
        const double v0 = (*coords[a1])[i1], v1 = (*coords[a1])[i1 + 1];
        auto node_at = [&](double u, double v) {
            int idx[3];
            auto ax_index = [&](int ax, double val) {
                const std::vector<double>& c = *coords[ax];
                return static_cast<int>(std::lower_bound(c.begin(), c.end(), val - kSnapTol) -
                                        c.begin());
            };
            idx[face_axis] = ax_index(face_axis, face_coord);
            idx[a0] = ax_index(a0, u);
            idx[a1] = ax_index(a1, v);
            return nid(idx[0], idx[1], idx[2]);
        };
        const int n00 = node_at(u0, v0), n10 = node_at(u1, v0);
        const int n11 = node_at(u1, v1), n01 = node_at(u0, v1);
        int tag = 0;
        if (layout != nullptr) {
            const double cu = 0.5 * (u0 + u1), cv = 0.5 * (v0 + v1);
            for (int l = 0; l < layout->count(); ++l) {
                const Face f = Face::from_id(layout->face_ids[l]);
                if (f.axis != face_axis || f.positive != positive) continue;
                if (std::abs(cu - layout->centers(l, a0)) <= layout->side / 2 &&
                    std::abs(cv - layout->centers(l, a1)) <= layout->side / 2) {
                    tag = l + 1;
                    break;
                }
            }
        }
        // Outward orientation: (a0, a1, normal) is right-handed iff a1 == a0+1 mod 3.
        const bool rh = (a1 == (a0 + 1) % 3);
        const bool flip = (rh != positive);
        auto push = [&](int a, int b, int c) {
            if (flip) std::swap(b, c);
            tris.push_back({a, b, c});
            tags.push_back(tag);
        };
        push(n00, n10, n11);
        push(n00, n11, n01);
    };

    for (int s = 0; s < 2; ++s) {  // x faces
        const bool pos = s == 1;
        const double fc = pos ? xs.back() : xs.front();
        for (int k = 0; k < nz; ++k)
            for (int j = 0; j < ny; ++j) add_face(0, pos, 1, 2, j, k, fc);
    }
    for (int s = 0; s < 2; ++s) {  // y faces
        const bool pos = s == 1;
        const double fc = pos ? ys.back() : ys.front();
        for (int k = 0; k < nz; ++k)
            for (int i = 0; i < nx; ++i) add_face(1, pos, 0, 2, i, k, fc);
    }
    for (int s = 0; s < 2; ++s) {  // z faces
        const bool pos = s == 1;
        const double fc = pos ? zs.back() : zs.front();
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) add_face(2, pos, 0, 1, i, j, fc);
    }

    mesh.boundary_tris.resize(static_cast<long>(tris.size()), 3);
    for (std::size_t t = 0; t < tris.size(); ++t) {
        mesh.boundary_tris.row(static_cast<long>(t)) << tris[t][0], tris[t][1], tris[t][2];
    }
    mesh.tri_tags = std::move(tags);
    mesh.set_grid(xs, ys, zs);
    (void)domain;
    return mesh;
}

}  // namespace

TetMesh mesh_box(const BoxDomain& domain, const ElectrodeLayout& layout, double h_far,
                 double h_electrode, const MeshOptions& options) {
    if (!(h_electrode > 0.0 && h_electrode <= h_far)) {
        throw ConfigError("mesh_box: need 0 < h_electrode <= h_far");
    }
    if (layout.count() > 0) layout.validate(domain);

    AxisSpec spec[3];
    for (int ax = 0; ax < 3; ++ax) {
        spec[ax].lo = -domain.edge(ax) / 2;
        spec[ax].hi = domain.edge(ax) / 2;
    }
    const double s = layout.side;
    for (int l = 0; l < layout.count(); ++l) {
        const Face f = Face::from_id(layout.face_ids[l]);
        for (int ax = 0; ax < 3; ++ax) {
            if (ax == f.axis) {
                // refine one electrode side into the domain from the face
                const double fc = (f.positive ? 1.0 : -1.0) * domain.edge(ax) / 2;
                spec[ax].fine.push_back(f.positive ? std::make_pair(fc - s, fc)
                                                   : std::make_pair(fc, fc + s));
            } else {
                const double c = layout.centers(l, ax);
                spec[ax].snaps.push_back(c - s / 2);
                spec[ax].snaps.push_back(c + s / 2);
                spec[ax].fine.push_back({c - s / 2 - s, c + s / 2 + s});
            }
        }
    }

    std::vector<double> coords[3];
    for (int ax = 0; ax < 3; ++ax) {
        coords[ax] = partition_axis(spec[ax], h_far, h_electrode, options.jitter_seed, ax);
    }
    TetMesh mesh =
        build_tensor_mesh(domain, &layout, coords[0], coords[1], coords[2], options.max_tets);

    // Tagged area must cover each footprint; exact thanks to edge snapping.
    for (int l = 0; l < layout.count(); ++l) {
        const double area = mesh.electrode_area(l);
        if (std::abs(area - s * s) > 0.02 * s * s) {
            throw MeshFailure("electrode " + std::to_string(l) + " tagged area " +
                              std::to_string(area) + " deviates from footprint " +
                              std::to_string(s * s));
        }
    }
    return mesh;
}

TetMesh mesh_box_uniform(const BoxDomain& domain, std::size_t target_tets) {
    const double cell_target = static_cast<double>(target_tets) / 6.0;
    const double h = std::cbrt(domain.volume() / cell_target);
    std::vector<double> coords[3];
    for (int ax = 0; ax < 3; ++ax) {
        const double len = domain.edge(ax);
        const int n = std::max(2, static_cast<int>(std::round(len / h)));
        coords[ax].resize(n + 1);
        for (int i = 0; i <= n; ++i) coords[ax][i] = -len / 2 + len * i / n;
    }
    return build_tensor_mesh(domain, nullptr, coords[0], coords[1], coords[2],
                             std::max<std::size_t>(8 * target_tets, 1'000'000));
}

}  // namespace eit
