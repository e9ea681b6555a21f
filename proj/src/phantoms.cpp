#include "eit/phantoms.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "eit/errors.hpp"
#include "eit/rng.hpp"

namespace eit {

using nlohmann::json;

void Phantom::validate(const BoxDomain& domain) const {
    if (!(background > 0.0)) throw ConfigError("Phantom: background must be positive");
    const Vec3 half = domain.upper();
    for (std::size_t s = 0; s < spheres.size(); ++s) {
        const auto& sp = spheres[s];
        if (!(sp.sigma > 0.0) || !(sp.radius > 0.0)) {
            throw ConfigError("Phantom: sphere " + std::to_string(s) +
                              " needs positive radius and conductivity");
        }
        for (int ax = 0; ax < 3; ++ax) {
            if (std::abs(sp.center[ax]) + sp.radius > half[ax]) {
                throw ConfigError("Phantom: sphere " + std::to_string(s) +
                                  " is not inside the domain");
            }
        }
    }
}

void Scenario::validate() const {
    true_layout.validate(true_domain);
    modeled_layout.validate(modeled_domain);
    if (true_layout.count() != modeled_layout.count()) {
        throw ConfigError("Scenario: modeled layout must have the same electrode count");
    }
    if (true_layout.face_ids != modeled_layout.face_ids) {
        throw ConfigError("Scenario: modeled layout must keep the electrode ordering");
    }
    phantom.validate(true_domain);
    if (frames < 1) throw ConfigError("Scenario: frames must be >= 1");
}

Scenario standard_scenario(int targets) {
    if (targets < 1 || targets > 2) throw ConfigError("standard_scenario: targets must be 1 or 2");
    Scenario s;
    s.true_domain = BoxDomain(0.17, 0.255, 0.17);
    s.true_layout = standard_tank_layout(s.true_domain);
    s.modeled_domain = s.true_domain;
    s.modeled_layout = s.true_layout;
    s.phantom.background = 0.024;
    // Sphere centers on the electrode-center lattice (centered coordinates).
    const double side = s.true_layout.side;
    const double gx = (0.17 - 2 * side) / 3;   // two electrodes across the short axes
    const double gy = (0.255 - 3 * side) / 4;  // three electrodes along the long axis
    const double ex = -0.17 / 2 + gx + side / 2;
    const double ey = -0.255 / 2 + 3 * gy + 2 * side + side / 2;  // third row center
    const double r = 0.0527 / 2.0;
    s.phantom.spheres.push_back({Vec3(ex, 0.0, ex), r, 0.290});
    if (targets == 2) {
        s.phantom.spheres.push_back({Vec3(-ex, ey, -ex), r, 0.290});
    }
    s.snr_db = 96.0;
    s.frames = 100;
    return s;
}

MismodelLevel mismodel_level_from_name(const std::string& name) {
    if (name == "correct") return MismodelLevel::correct;
    if (name == "mid") return MismodelLevel::mid;
    if (name == "large") return MismodelLevel::large;
    throw ConfigError("unknown mismodel level: " + name);
}

Scenario mismodel_scenario(MismodelLevel level, const Scenario& base) {
    Scenario s = base;
    switch (level) {
        case MismodelLevel::correct:
            s.modeled_domain = base.true_domain;
            break;
        case MismodelLevel::mid:
            s.modeled_domain = BoxDomain(0.18, 0.27, 0.19);
            break;
        case MismodelLevel::large:
            s.modeled_domain = BoxDomain(0.20, 0.35, 0.25);
            break;
    }
    // Same per-face pattern, positions re-equalized for the new dimensions.
    std::map<Face, int> counts;
    for (int f : base.true_layout.face_ids) ++counts[Face::from_id(f)];
    s.modeled_layout = build_box_layout(s.modeled_domain, counts, base.true_layout.side,
                                        base.true_layout.contact_impedance[0]);
    s.validate();
    return s;
}

namespace {

json domain_layout_json(const BoxDomain& d, const ElectrodeLayout& l) {
    return json::parse(domain_layout_to_json(d, l));
}

void domain_layout_from(const json& j, BoxDomain& d, ElectrodeLayout& l) {
    domain_layout_from_json(j.dump(), d, l);
}

}  // namespace

std::string scenario_to_json(const Scenario& s) {
    json j;
    j["true"] = domain_layout_json(s.true_domain, s.true_layout);
    j["modeled"] = domain_layout_json(s.modeled_domain, s.modeled_layout);
    json ph;
    ph["background_S_per_m"] = s.phantom.background;
    ph["spheres"] = json::array();
    for (const auto& sp : s.phantom.spheres) {
        json e;
        e["center_m"] = {sp.center.x(), sp.center.y(), sp.center.z()};
        e["radius_m"] = sp.radius;
        e["sigma_S_per_m"] = sp.sigma;
        ph["spheres"].push_back(e);
    }
    j["phantom"] = ph;
    j["snr_db"] = s.snr_db;
    j["frames"] = s.frames;
    return j.dump(2);
}

Scenario scenario_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("scenario JSON: ") + e.what());
    }
    Scenario s;
    try {
        domain_layout_from(j.at("true"), s.true_domain, s.true_layout);
        domain_layout_from(j.at("modeled"), s.modeled_domain, s.modeled_layout);
        const auto& ph = j.at("phantom");
        s.phantom.background = ph.at("background_S_per_m").get<double>();
        for (const auto& e : ph.at("spheres")) {
            Phantom::Sphere sp;
            for (int k = 0; k < 3; ++k) sp.center[k] = e.at("center_m").at(k).get<double>();
            sp.radius = e.at("radius_m").get<double>();
            sp.sigma = e.at("sigma_S_per_m").get<double>();
            s.phantom.spheres.push_back(sp);
        }
        s.snr_db = j.at("snr_db").get<double>();
        s.frames = j.at("frames").get<int>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("scenario JSON fields: ") + e.what());
    }
    s.validate();
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return scenario_from_json(ss.str());
}

ConductivityField rasterize_phantom(const Phantom& phantom, const TetMesh& mesh) {
    Eigen::VectorXd sigma = Eigen::VectorXd::Constant(mesh.node_count(), phantom.background);
    for (int i = 0; i < mesh.node_count(); ++i) {
        const Vec3 p = mesh.nodes.row(i);
        for (const auto& sp : phantom.spheres) {
            if ((p - sp.center).squaredNorm() <= sp.radius * sp.radius) {
                sigma[i] = sp.sigma;
                break;
            }
        }
    }
    return ConductivityField(std::move(sigma));
}

Eigen::MatrixXd add_noise_and_average(const Eigen::MatrixXd& clean, double snr_db, int frames,
                                      std::uint64_t seed, std::uint64_t stream,
                                      Eigen::MatrixXd* all_frames, double* std_out) {
    if (frames < 1) throw ConfigError("add_noise_and_average: frames must be >= 1");
    const double std = clean.cwiseAbs().maxCoeff() * std::pow(10.0, -snr_db / 20.0);
    if (std_out != nullptr) *std_out = std;
    const CounterRng rng(seed, stream);
    const long L = clean.rows(), K = clean.cols();
    if (all_frames != nullptr) all_frames->resize(L, K * frames);
    Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(L, K);
    for (int f = 0; f < frames; ++f) {
        Eigen::MatrixXd frame = clean;
        for (long k = 0; k < K; ++k) {
            for (long l = 0; l < L; ++l) {
                const std::uint64_t counter =
                    (static_cast<std::uint64_t>(f) * K + k) * L + l;
                frame(l, k) += std * rng.normal(counter);
            }
        }
        if (all_frames != nullptr) all_frames->middleCols(f * K, K) = frame;
        avg += frame;
    }
    return avg / frames;
}

SimulationResult simulate_phantom_frames(const Scenario& scenario,
                                         const SimulationOptions& options) {
    scenario.validate();
    const int L = scenario.true_layout.count();

    MeshOptions mesh_opts;
    mesh_opts.jitter_seed = options.seed ^ 0x9e3779b97f4a7c15ULL;  // forward mesh only
    const TetMesh mesh = mesh_box(scenario.true_domain, scenario.true_layout, options.h_far,
                                  options.h_electrode, mesh_opts);

    // Eigenpatterns of the simulated homogeneous current-to-voltage map.
    Eigen::MatrixXd probe = Eigen::MatrixXd::Zero(L, L - 1);
    for (int k = 0; k < L - 1; ++k) {
        probe(0, k) = 1.0;
        probe(k + 1, k) = -1.0;
    }
    const ConductivityField ones = ConductivityField::constant(mesh, 1.0);
    const PatternSet homogeneous =
        solve_cem_patterns(mesh, ones, scenario.true_layout, probe);
    NDMatrix nd1;
    DNMatrix dn1;
    assemble_nd_dn(homogeneous, build_basis(probe), nd1, dn1);

    SimulationResult out;
    out.basis = eigen_current_basis(nd1);
    Eigen::MatrixXd currents = out.basis.Q;
    for (int k = 0; k < currents.cols(); ++k) {
        currents.col(k) *= options.current_amplitude / currents.col(k).cwiseAbs().maxCoeff();
    }

    const ConductivityField sigma_true = rasterize_phantom(scenario.phantom, mesh);
    const ConductivityField sigma_ref =
        ConductivityField::constant(mesh, scenario.phantom.background);
    const Eigen::MatrixXd v_data =
        solve_cem_patterns(mesh, sigma_true, scenario.true_layout, currents).voltages;
    const Eigen::MatrixXd v_ref =
        solve_cem_patterns(mesh, sigma_ref, scenario.true_layout, currents).voltages;

    out.data.currents = currents;
    out.reference.currents = currents;
    out.data.voltages = add_noise_and_average(v_data, scenario.snr_db, scenario.frames,
                                              options.seed, 1, &out.data_frames, &out.noise_std);
    out.reference.voltages = add_noise_and_average(v_ref, scenario.snr_db, scenario.frames,
                                                   options.seed, 2, &out.reference_frames);
    return out;
}

}  // namespace eit
