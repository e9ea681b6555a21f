#include "eit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "eit/errors.hpp"

namespace eit {

using nlohmann::json;

BoxDomain::BoxDomain(double lx_, double ly_, double lz_) : lx(lx_), ly(ly_), lz(lz_) {
    if (!(lx > 0.0 && ly > 0.0 && lz > 0.0)) {
        throw ConfigError("BoxDomain: edge lengths must be positive");
    }
}

double BoxDomain::longest_edge() const { return std::max({lx, ly, lz}); }
double BoxDomain::shortest_edge() const { return std::min({lx, ly, lz}); }

Face Face::from_id(int id) {
    if (id < 0 || id > 5) throw ConfigError("Face id out of range");
    return Face{id / 2, (id % 2) == 1};
}

std::string Face::name() const {
    static const char* axes = "xyz";
    std::string s;
    s += positive ? '+' : '-';
    s += axes[axis];
    return s;
}

Face Face::from_name(const std::string& s) {
    if (s.size() != 2 || (s[0] != '+' && s[0] != '-')) {
        throw ParseError("bad face name: " + s);
    }
    int axis = s[1] == 'x' ? 0 : (s[1] == 'y' ? 1 : (s[1] == 'z' ? 2 : -1));
    if (axis < 0) throw ParseError("bad face name: " + s);
    return Face{axis, s[0] == '+'};
}

namespace {

// In-plane axes of a face, ascending axis index.
std::array<int, 2> face_plane_axes(const Face& f) {
    switch (f.axis) {
        case 0: return {1, 2};
        case 1: return {0, 2};
        default: return {0, 1};
    }
}

// Centers of n equal electrodes of size `side` along an axis of length
// `len` (centered coordinates), with the n+1 gaps equalized.
std::vector<double> grid_1d(double len, int n, double side) {
    const double gap = (len - n * side) / (n + 1);
    if (gap < 0.0) {
        throw FootprintOverflow("electrodes of side " + std::to_string(side) +
                                " do not fit " + std::to_string(n) + " per axis of length " +
                                std::to_string(len));
    }
    std::vector<double> centers(n);
    for (int i = 0; i < n; ++i) {
        centers[i] = -len / 2 + (i + 1) * gap + i * side + side / 2;
    }
    return centers;
}

// Split count into rows x cols with the two factors as equal as possible;
// the larger factor goes on the longer axis.
std::pair<int, int> grid_shape(int count, double len_u, double len_v) {
    int a = static_cast<int>(std::sqrt(static_cast<double>(count)));
    while (a > 1 && count % a != 0) --a;
    int b = count / a;  // a <= b
    if (len_u >= len_v) return {b, a};  // (n_u, n_v)
    return {a, b};
}

}  // namespace

void ElectrodeLayout::validate(const BoxDomain& domain) const {
    const int L = count();
    if (L < 2) throw ConfigError("ElectrodeLayout: need at least 2 electrodes");
    if (static_cast<int>(face_ids.size()) != L || contact_impedance.size() != L) {
        throw ShapeMismatch("ElectrodeLayout: field sizes disagree");
    }
    const double tol = 1e-12 * domain.longest_edge();
    const Vec3 half = domain.upper();
    for (int l = 0; l < L; ++l) {
        if (!(contact_impedance[l] > 0.0)) {
            throw ConfigError("ElectrodeLayout: contact impedance must be positive");
        }
        const Face f = Face::from_id(face_ids[l]);
        const double face_coord = (f.positive ? 1.0 : -1.0) * half[f.axis];
        if (std::abs(centers(l, f.axis) - face_coord) > tol) {
            throw ConfigError("ElectrodeLayout: electrode " + std::to_string(l) +
                              " is not on its face");
        }
        for (int ax : face_plane_axes(f)) {
            if (std::abs(centers(l, ax)) + side / 2 > half[ax] + tol) {
                throw FootprintOverflow("ElectrodeLayout: electrode " + std::to_string(l) +
                                        " crosses a face boundary");
            }
        }
    }
    // Pairwise overlap within each face
    for (int l = 0; l < L; ++l) {
        for (int m = l + 1; m < L; ++m) {
            if (face_ids[l] != face_ids[m]) continue;
            const Face f = Face::from_id(face_ids[l]);
            bool separated = false;
            for (int ax : face_plane_axes(f)) {
                if (std::abs(centers(l, ax) - centers(m, ax)) >= side - tol) separated = true;
            }
            if (!separated) {
                throw ConfigError("ElectrodeLayout: electrodes " + std::to_string(l) + " and " +
                                  std::to_string(m) + " overlap");
            }
        }
    }
}

ElectrodeLayout build_box_layout(const BoxDomain& domain,
                                 const std::map<Face, int>& electrodes_per_face,
                                 double side,
                                 double contact_impedance) {
    int L = 0;
    for (const auto& [face, n] : electrodes_per_face) {
        (void)face;
        if (n < 0) throw ConfigError("build_box_layout: negative electrode count");
        L += n;
    }
    if (L < 2) throw ConfigError("build_box_layout: need at least 2 electrodes in total");

    ElectrodeLayout layout;
    layout.centers.resize(L, 3);
    layout.side = side;
    layout.face_ids.reserve(L);
    layout.contact_impedance = Eigen::VectorXd::Constant(L, contact_impedance);

    const Vec3 half = domain.upper();
    int l = 0;
    // std::map iteration gives ascending face id, the required ordering.
    for (const auto& [face, n] : electrodes_per_face) {
        if (n == 0) continue;
        const auto [au, av] = face_plane_axes(face);
        const double len_u = domain.edge(au);
        const double len_v = domain.edge(av);
        const auto [nu, nv] = grid_shape(n, len_u, len_v);
        const auto cu = grid_1d(len_u, nu, side);
        const auto cv = grid_1d(len_v, nv, side);
        const double face_coord = (face.positive ? 1.0 : -1.0) * half[face.axis];
        // Row-major over the major (longer) axis first.
        const bool u_major = len_u >= len_v;
        const int n_outer = u_major ? nu : nv;
        const int n_inner = u_major ? nv : nu;
        for (int i = 0; i < n_outer; ++i) {
            for (int j = 0; j < n_inner; ++j) {
                Vec3 c = Vec3::Zero();
                c[face.axis] = face_coord;
                c[au] = u_major ? cu[i] : cu[j];
                c[av] = u_major ? cv[j] : cv[i];
                layout.centers.row(l) = c;
                layout.face_ids.push_back(face.id());
                ++l;
            }
        }
    }
    layout.validate(domain);
    return layout;
}

ElectrodeLayout standard_tank_layout(const BoxDomain& domain, double side,
                                     double contact_impedance) {
    std::map<Face, int> counts;
    counts[Face{0, false}] = 6;
    counts[Face{0, true}] = 6;
    counts[Face{1, false}] = 4;
    counts[Face{1, true}] = 4;
    counts[Face{2, false}] = 6;
    counts[Face{2, true}] = 6;
    return build_box_layout(domain, counts, side, contact_impedance);
}

std::string domain_layout_to_json(const BoxDomain& domain, const ElectrodeLayout& layout) {
    json j;
    j["dims_m"] = {domain.lx, domain.ly, domain.lz};
    j["electrodes"] = json::array();
    for (int l = 0; l < layout.count(); ++l) {
        json e;
        e["center_m"] = {layout.centers(l, 0), layout.centers(l, 1), layout.centers(l, 2)};
        e["side_m"] = layout.side;
        e["face"] = Face::from_id(layout.face_ids[l]).name();
        e["z_ohm_m2"] = layout.contact_impedance[l];
        j["electrodes"].push_back(e);
    }
    return j.dump(2);
}

void domain_layout_from_json(const std::string& text, BoxDomain& domain,
                             ElectrodeLayout& layout) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("domain/layout JSON: ") + e.what());
    }
    try {
        const auto dims = j.at("dims_m");
        domain = BoxDomain(dims.at(0).get<double>(), dims.at(1).get<double>(),
                           dims.at(2).get<double>());
        const auto& es = j.at("electrodes");
        const int L = static_cast<int>(es.size());
        layout.centers.resize(L, 3);
        layout.face_ids.clear();
        layout.contact_impedance.resize(L);
        layout.side = 0.0;
        for (int l = 0; l < L; ++l) {
            const auto& e = es.at(l);
            for (int k = 0; k < 3; ++k) layout.centers(l, k) = e.at("center_m").at(k).get<double>();
            layout.side = e.at("side_m").get<double>();
            layout.face_ids.push_back(Face::from_name(e.at("face").get<std::string>()).id());
            layout.contact_impedance[l] = e.at("z_ohm_m2").get<double>();
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("domain/layout JSON fields: ") + e.what());
    }
    layout.validate(domain);
}

}  // namespace eit
