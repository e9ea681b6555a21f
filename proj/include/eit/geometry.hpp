#ifndef EIT_GEOMETRY_HPP
#define EIT_GEOMETRY_HPP

#include <Eigen/Dense>
#include <array>
#include <map>
#include <string>
#include <vector>

namespace eit {

using Vec3 = Eigen::Vector3d;

/// Axis-aligned box, centered at the origin. Edge lengths in meters.
struct BoxDomain {
    double lx = 0.0;
    double ly = 0.0;
    double lz = 0.0;

    BoxDomain() = default;
    BoxDomain(double lx_, double ly_, double lz_);

    double surface_area() const { return 2.0 * (lx * ly + ly * lz + lx * lz); }
    double volume() const { return lx * ly * lz; }
    double edge(int axis) const { return axis == 0 ? lx : (axis == 1 ? ly : lz); }
    double longest_edge() const;
    double shortest_edge() const;

    Vec3 lower() const { return Vec3(-lx / 2, -ly / 2, -lz / 2); }
    Vec3 upper() const { return Vec3(lx / 2, ly / 2, lz / 2); }
};

/// Face of a box: axis in {0,1,2}, positive = true for the +axis face.
struct Face {
    int axis = 0;
    bool positive = false;

    int id() const { return 2 * axis + (positive ? 1 : 0); }
    static Face from_id(int id);

    std::string name() const;
    static Face from_name(const std::string& s);

    bool operator==(const Face& o) const { return axis == o.axis && positive == o.positive; }
    bool operator<(const Face& o) const { return id() < o.id(); }
};

/// Square electrodes on the faces of a box. Centers in meters,
/// contact impedances in Ohm*m^2.
struct ElectrodeLayout {
    Eigen::MatrixX3d centers;          // L x 3
    double side = 0.0;                 // electrode edge length (m)
    std::vector<int> face_ids;         // face id per electrode
    Eigen::VectorXd contact_impedance; // z_l per electrode (Ohm*m^2)

    int count() const { return static_cast<int>(centers.rows()); }

    /// In-plane half extent of electrode l on its face; throws if any
    /// invariant fails (off-face center, overlap, face-boundary crossing).
    void validate(const BoxDomain& domain) const;
};

inline constexpr double kDefaultContactImpedance = 1e-5;  // Ohm*m^2

/// Places `electrodes_per_face[f]` square electrodes on each requested face
/// in a regular grid with equalized gaps. Ordering is deterministic:
/// ascending face id, then row-major within the face (major axis = longer
/// in-plane dimension). Throws FootprintOverflow when they do not fit.
ElectrodeLayout build_box_layout(const BoxDomain& domain,
                                 const std::map<Face, int>& electrodes_per_face,
                                 double side,
                                 double contact_impedance = kDefaultContactImpedance);

/// The 32-electrode arrangement used by the tank scenarios: 4 electrodes
/// (2x2) on each y-face, 6 (2x3) on each x- and z-face.
ElectrodeLayout standard_tank_layout(const BoxDomain& domain,
                                     double side = 0.08,
                                     double contact_impedance = kDefaultContactImpedance);

/// JSON (de)serialization of {dims_m, electrodes:[{center_m, side_m, face, z_ohm_m2}]}.
std::string domain_layout_to_json(const BoxDomain& domain, const ElectrodeLayout& layout);
void domain_layout_from_json(const std::string& text, BoxDomain& domain, ElectrodeLayout& layout);

}  // namespace eit

#endif  // EIT_GEOMETRY_HPP
