#ifndef EIT_PHANTOMS_HPP
#define EIT_PHANTOMS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "eit/cem.hpp"
#include "eit/dn.hpp"
#include "eit/geometry.hpp"
#include "eit/tet_mesh.hpp"

namespace eit {

/// Spherical inclusions in a homogeneous background.
struct Phantom {
    struct Sphere {
        Vec3 center = Vec3::Zero();  // m
        double radius = 0.0;         // m
        double sigma = 0.0;          // S/m
    };
    double background = 0.0;  // S/m
    std::vector<Sphere> spheres;

    void validate(const BoxDomain& domain) const;
};

/// One synthetic tank experiment: the physical (true) setup the data comes
/// from and the (possibly mismodeled) setup handed to the reconstruction.
struct Scenario {
    BoxDomain true_domain;
    ElectrodeLayout true_layout;
    BoxDomain modeled_domain;
    ElectrodeLayout modeled_layout;
    Phantom phantom;
    double snr_db = 96.0;
    int frames = 100;

    void validate() const;
};

/// The tank setup: 17.0 x 25.5 x 17.0 cm box, 32 electrodes of 8 cm side,
/// 24 mS/m saline, 290 mS/m spheres of 5.27 cm diameter, targets on the
/// electrode-center lattice. `targets` is 1 or 2.
Scenario standard_scenario(int targets = 1);

enum class MismodelLevel { correct, mid, large };
MismodelLevel mismodel_level_from_name(const std::string& name);

/// Replaces the modeled domain with the named mismodeled box (18x27x19 or
/// 20x35x25 cm) and rebuilds the modeled layout with the same per-face
/// electrode pattern.
Scenario mismodel_scenario(MismodelLevel level, const Scenario& base);

std::string scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const std::string& text);
Scenario load_scenario(const std::string& path);

/// Nodal conductivity: sphere value at nodes inside a sphere, background
/// elsewhere.
ConductivityField rasterize_phantom(const Phantom& phantom, const TetMesh& mesh);

struct SimulationOptions {
    std::uint64_t seed = 1;
    double h_far = 0.018;        // forward-mesh sizing (m)
    double h_electrode = 0.009;
    double current_amplitude = 0.25e-3;  // peak electrode current (A)
};

struct SimulationResult {
    PatternSet data;                  // frame-averaged
    PatternSet reference;             // frame-averaged, no inclusions
    Eigen::MatrixXd data_frames;      // L x K*frames, per-frame voltages
    Eigen::MatrixXd reference_frames;
    CurrentPatternBasis basis;        // eigenpatterns of the simulated homogeneous map
    double noise_std = 0.0;
};

/// Simulates the measurement: rasterizes the phantom on a fine mesh of the
/// true domain (jittered grid; the inverse-crime guard against any
/// reconstruction mesh), applies the eigenpatterns of the simulated
/// homogeneous map, adds per-frame Gaussian voltage noise at the scenario
/// SNR, and averages the frames.
SimulationResult simulate_phantom_frames(const Scenario& scenario,
                                         const SimulationOptions& options = {});

/// Per-frame Gaussian noise at std = max|V| 10^(-snr/20), averaged; exposed
/// separately so the averaging statistics are testable without a solve.
Eigen::MatrixXd add_noise_and_average(const Eigen::MatrixXd& clean, double snr_db, int frames,
                                      std::uint64_t seed, std::uint64_t stream,
                                      Eigen::MatrixXd* all_frames = nullptr,
                                      double* std_out = nullptr);

}  // namespace eit

#endif  // EIT_PHANTOMS_HPP
