#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "eit/errors.hpp"
#include "eit/frames_io.hpp"
#include "eit/pipeline.hpp"

namespace fs = std::filesystem;
using namespace eit;

namespace {

// Lengths accept an explicit cm/mm suffix; plain numbers are meters.
double parse_length(const std::string& text) {
    auto ends_with = [&](const char* suffix) {
        const std::string s(suffix);
        return text.size() > s.size() && text.compare(text.size() - s.size(), s.size(), s) == 0;
    };
    try {
        if (ends_with("cm")) return std::stod(text.substr(0, text.size() - 2)) * 1e-2;
        if (ends_with("mm")) return std::stod(text.substr(0, text.size() - 2)) * 1e-3;
        if (ends_with("m")) return std::stod(text.substr(0, text.size() - 1));
        return std::stod(text);
    } catch (const std::exception&) {
        throw ConfigError("bad length: " + text);
    }
}

// Conductivities accept an mS/m suffix; plain numbers are S/m.
double parse_conductivity(const std::string& text) {
    auto ends_with = [&](const char* suffix) {
        const std::string s(suffix);
        return text.size() > s.size() && text.compare(text.size() - s.size(), s.size(), s) == 0;
    };
    try {
        if (ends_with("mS/m")) return std::stod(text.substr(0, text.size() - 4)) * 1e-3;
        if (ends_with("S/m")) return std::stod(text.substr(0, text.size() - 3));
        return std::stod(text);
    } catch (const std::exception&) {
        throw ConfigError("bad conductivity: " + text);
    }
}

int jobs_fallback() {
    if (const char* env = std::getenv("CGO_EIT_JOBS")) {
        try {
            return std::max(1, std::stoi(env));
        } catch (const std::exception&) {
            throw ConfigError("bad CGO_EIT_JOBS value");
        }
    }
    return 1;
}

struct CliOptions {
    RunConfig config;
    std::string method = "calderon";
    std::string mode = "absolute";
    std::string h_far = "1.8cm", h_elec = "0.9cm";
    std::string model_h_far = "2.0cm", model_h_elec = "1.0cm";
    std::string lindiff_h = "2.2cm";
    std::string frames1, frames2;
};

void add_reconstruct_flags(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--scenario", opt.config.scenario_path, "scenario JSON path")->required();
    cmd->add_option("--out", opt.config.out_dir, "output directory")->required();
    cmd->add_option("--method", opt.method, "calderon | texp | t0 | lindiff");
    cmd->add_option("--mode", opt.mode, "absolute | difference");
    cmd->add_option("--frames", opt.config.frames_prefix,
                    "data frames prefix (omit to simulate)");
    cmd->add_option("--ref", opt.config.ref_frames_prefix, "reference frames prefix");
    cmd->add_option("--frames1", opt.frames1, "reference frames (lindiff style)");
    cmd->add_option("--frames2", opt.frames2, "data frames (lindiff style)");
    cmd->add_option("--seed", opt.config.seed, "noise RNG seed");
    cmd->add_flag("--force", opt.config.force, "overwrite existing outputs");

    cmd->add_option("--tz1", opt.config.t_z1, "inner spectral truncation radius");
    cmd->add_option("--tz2", opt.config.t_z2, "outer spectral truncation radius");
    cmd->add_option("--mollifier-t", opt.config.mollifier_t, "Gaussian mollifier parameter");
    cmd->add_option("--nz", opt.config.n_radial, "radial Simpson intervals");
    cmd->add_option("--ntheta", opt.config.n_theta, "polar Simpson intervals");
    cmd->add_option("--nphi", opt.config.n_phi, "azimuthal Simpson intervals");
    cmd->add_option("--xgrid", opt.config.xgrid_base, "base x-grid (0 = auto 16/32)");

    cmd->add_option("--txi", opt.config.t_xi, "scattering truncation radius");
    cmd->add_option("--cap", opt.config.amplitude_cap, "scattering amplitude cap");
    cmd->add_option("--xi-nodes", opt.config.xi_nodes, "xi nodes per axis (0 = auto)");
    cmd->add_option("--q-grid", opt.config.q_grid_n, "potential grid nodes per axis");
    cmd->add_option("--schrodinger-mesh-elems", opt.config.schrodinger_tets,
                    "target FEM element count for the boundary-value solve");

    cmd->add_option("--std-mult", opt.config.std_mult, "prior std as multiple of sigma0");
    cmd->add_option("--corr-frac", opt.config.corr_frac,
                    "correlation distance / longest modeled edge");
    cmd->add_option("--cov-pct", opt.config.cov_pct, "covariance at that distance (percent)");
    cmd->add_option("--lindiff-h", opt.lindiff_h, "linear-difference mesh size");

    cmd->add_option("--h-far", opt.h_far, "simulation mesh size away from electrodes");
    cmd->add_option("--h-elec", opt.h_elec, "simulation mesh size near electrodes");
    cmd->add_option("--model-h-far", opt.model_h_far, "modeled-domain mesh size");
    cmd->add_option("--model-h-elec", opt.model_h_elec,
                    "modeled-domain mesh size near electrodes");

    cmd->add_option("--threshold", opt.config.threshold_frac, "segmentation threshold fraction");
    cmd->add_option("--out-n", opt.config.out_n, "output voxel grid nodes per axis");
}

RunConfig finalize_config(CliOptions& opt) {
    opt.config.method = method_from_name(opt.method);
    if (opt.mode == "absolute") {
        opt.config.mode = ReconMode::absolute;
    } else if (opt.mode == "difference") {
        opt.config.mode = ReconMode::difference;
    } else {
        throw ConfigError("unknown mode: " + opt.mode);
    }
    if (!opt.frames2.empty()) opt.config.frames_prefix = opt.frames2;
    if (!opt.frames1.empty()) opt.config.ref_frames_prefix = opt.frames1;
    opt.config.sim_h_far = parse_length(opt.h_far);
    opt.config.sim_h_electrode = parse_length(opt.h_elec);
    opt.config.model_h_far = parse_length(opt.model_h_far);
    opt.config.model_h_electrode = parse_length(opt.model_h_elec);
    opt.config.lindiff_h = parse_length(opt.lindiff_h);
    if (opt.config.method == Method::lindiff) opt.config.mode = ReconMode::difference;
    opt.config.validate();
    return opt.config;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"3D EIT reconstruction from box-tank electrode data"};
    app.require_subcommand(1);

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "simulate tank frames for a scenario");
    std::string sim_scenario, sim_out, sim_background;
    std::string sim_h_far = "1.8cm", sim_h_elec = "0.9cm";
    std::uint64_t sim_seed = 1;
    bool sim_force = false;
    sim_cmd->add_option("--scenario", sim_scenario)->required();
    sim_cmd->add_option("--out", sim_out, "output directory")->required();
    sim_cmd->add_option("--seed", sim_seed);
    sim_cmd->add_option("--h-far", sim_h_far);
    sim_cmd->add_option("--h-elec", sim_h_elec);
    sim_cmd->add_option("--background", sim_background,
                        "override background conductivity (e.g. 24mS/m)");
    sim_cmd->add_flag("--force", sim_force);

    // reconstruct
    auto* rec_cmd = app.add_subcommand("reconstruct", "run one reconstruction");
    CliOptions rec;
    add_reconstruct_flags(rec_cmd, rec);

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "rerun a reconstruction over parameter values");
    CliOptions swp;
    std::string sweep_param;
    std::vector<double> sweep_values;
    int sweep_jobs = 0;
    add_reconstruct_flags(sweep_cmd, swp);
    sweep_cmd->add_option("--param", sweep_param, "txi | cap | mollifier-t | tz1 | tz2 | threshold")
        ->required();
    sweep_cmd->add_option("--values", sweep_values, "parameter values")->delimiter(',');
    sweep_cmd->add_option("--jobs", sweep_jobs, "worker count (default CGO_EIT_JOBS or 1)");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "metrics of a saved reconstruction");
    std::string eval_recon, eval_scenario;
    double eval_threshold = 0.70;
    eval_cmd->add_option("--recon", eval_recon, "recon.csv path")->required();
    eval_cmd->add_option("--scenario", eval_scenario)->required();
    eval_cmd->add_option("--threshold", eval_threshold);

    // validate-frames
    auto* val_cmd = app.add_subcommand("validate-frames", "data-quality diagnostics");
    std::string val_prefix;
    val_cmd->add_option("--frames", val_prefix, "frames prefix")->required();

    // export-vtk
    auto* exp_cmd = app.add_subcommand("export-vtk", "export scenario meshes or a recon CSV");
    std::string exp_scenario, exp_recon, exp_out;
    std::string exp_h_far = "2.0cm", exp_h_elec = "1.0cm";
    exp_cmd->add_option("--scenario", exp_scenario);
    exp_cmd->add_option("--recon", exp_recon, "recon.csv to convert");
    exp_cmd->add_option("--out", exp_out, "output directory")->required();
    exp_cmd->add_option("--h-far", exp_h_far);
    exp_cmd->add_option("--h-elec", exp_h_elec);

    CLI11_PARSE(app, argc, argv);

    if (sim_cmd->parsed()) {
        Scenario scenario = load_scenario(sim_scenario);
        if (!sim_background.empty()) {
            scenario.phantom.background = parse_conductivity(sim_background);
        }
        fs::create_directories(sim_out);
        if (fs::exists(fs::path(sim_out) / "data.meta.json") && !sim_force) {
            throw ConfigError("output already exists in " + sim_out + " (use --force)");
        }
        SimulationOptions opts;
        opts.seed = sim_seed;
        opts.h_far = parse_length(sim_h_far);
        opts.h_electrode = parse_length(sim_h_elec);
        const SimulationResult sim = simulate_phantom_frames(scenario, opts);
        FramesMetadata meta;
        meta.frequency_hz = 0.0;
        meta.background_mS_per_m = scenario.phantom.background * 1e3;
        meta.frame_count = scenario.frames;
        save_frames((fs::path(sim_out) / "data").string(), sim.data.currents, sim.data_frames,
                    meta);
        save_frames((fs::path(sim_out) / "ref").string(), sim.reference.currents,
                    sim.reference_frames, meta);
        std::ofstream sc(fs::path(sim_out) / "scenario.json");
        sc << scenario_to_json(scenario) << '\n';
        std::cout << "wrote frames for " << scenario.frames << " frame(s) to " << sim_out
                  << " (noise std " << sim.noise_std << " V)\n";
        return 0;
    }

    if (rec_cmd->parsed()) {
        const RunConfig config = finalize_config(rec);
        const RunResult result = run_reconstruct(config);
        std::cout << result.report.dump(2) << '\n';
        return 0;
    }

    if (sweep_cmd->parsed()) {
        const RunConfig config = finalize_config(swp);
        const int jobs = sweep_jobs > 0 ? sweep_jobs : jobs_fallback();
        const auto rows = run_sweep(config, sweep_param, sweep_values, jobs);
        int n_targets = 0;
        for (const auto& r : rows) {
            if (r.ok) n_targets = static_cast<int>(r.metrics.targets.size());
        }
        std::cout << sweep_csv(rows, n_targets);
        return 0;
    }

    if (eval_cmd->parsed()) {
        const VoxelGrid recon = read_voxel_csv(eval_recon);
        const Scenario scenario = load_scenario(eval_scenario);
        std::vector<Vec3> centers;
        for (const auto& sp : scenario.phantom.spheres) centers.push_back(sp.center);
        const MetricsReport report =
            evaluate_recon(recon, centers, eval_threshold, scenario.true_domain.longest_edge());
        std::cout << report.to_json() << '\n';
        return 0;
    }

    if (val_cmd->parsed()) {
        const FrameDiagnostics d = diagnose_frames(val_prefix);
        nlohmann::json j;
        j["electrode_count"] = d.electrode_count;
        j["pattern_count"] = d.pattern_count;
        j["frame_count"] = d.frame_count;
        j["max_current_colsum_rel"] = d.max_current_colsum_rel;
        j["max_voltage_colsum_rel"] = d.max_voltage_colsum_rel;
        j["nd_asymmetry_rel"] = d.nd_asymmetry_rel;
        std::cout << j.dump(2) << '\n';
        return 0;
    }

    if (exp_cmd->parsed()) {
        fs::create_directories(exp_out);
        if (!exp_recon.empty()) {
            const VoxelGrid recon = read_voxel_csv(exp_recon);
            recon.write_vtk((fs::path(exp_out) / "recon.vtk").string(), "value");
            std::cout << "wrote " << (fs::path(exp_out) / "recon.vtk").string() << '\n';
            return 0;
        }
        if (exp_scenario.empty()) {
            throw ConfigError("export-vtk needs --scenario or --recon");
        }
        const Scenario scenario = load_scenario(exp_scenario);
        const double h_far = parse_length(exp_h_far), h_elec = parse_length(exp_h_elec);
        mesh_box(scenario.true_domain, scenario.true_layout, h_far, h_elec)
            .write_vtk((fs::path(exp_out) / "true_mesh.vtk").string());
        mesh_box(scenario.modeled_domain, scenario.modeled_layout, h_far, h_elec)
            .write_vtk((fs::path(exp_out) / "modeled_mesh.vtk").string());
        std::cout << "wrote true_mesh.vtk and modeled_mesh.vtk to " << exp_out << '\n';
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const FootprintOverflow& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const ShapeMismatch& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const NonMeanFreeCurrents& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 4;
    }
}
