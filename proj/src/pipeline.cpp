#include "eit/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "eit/errors.hpp"
#include "eit/frames_io.hpp"
#include "eit/linear_difference.hpp"

namespace eit {

namespace fs = std::filesystem;
using nlohmann::json;

// CGO computations run in decimeter coordinates; the default spectral
// truncation radii and the amplitude cap assume that scale.
constexpr double kCgoLengthScale = 10.0;

Method method_from_name(const std::string& name) {
    if (name == "calderon") return Method::calderon;
    if (name == "texp") return Method::texp;
    if (name == "t0") return Method::t0;
    if (name == "lindiff") return Method::lindiff;
    throw ConfigError("unknown method: " + name);
}

std::string method_name(Method m) {
    switch (m) {
        case Method::calderon: return "calderon";
        case Method::texp: return "texp";
        case Method::t0: return "t0";
        case Method::lindiff: return "lindiff";
    }
    return "?";
}

void RunConfig::validate() const {
    if (method == Method::lindiff && mode != ReconMode::difference) {
        throw ConfigError("lindiff is difference-only");
    }
    if (mode == ReconMode::difference && !frames_prefix.empty() && ref_frames_prefix.empty()) {
        throw ConfigError("difference mode with loaded frames needs a reference prefix");
    }
    if (!(threshold_frac >= 0.5 && threshold_frac <= 0.9)) {
        throw ConfigError("threshold fraction must lie in [0.5, 0.9]");
    }
    if (t_z1 > t_z2) throw ConfigError("need t_z1 <= t_z2");
    if (t_xi <= 0) throw ConfigError("t_xi must be positive");
    if (out_n < 2) throw ConfigError("output grid must have at least 2 voxels per axis");
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::MatrixX3d scaled_centers(const ElectrodeLayout& layout) {
    return layout.centers * kCgoLengthScale;
}

BoxDomain scaled_box(const BoxDomain& b) {
    return BoxDomain(b.lx * kCgoLengthScale, b.ly * kCgoLengthScale, b.lz * kCgoLengthScale);
}

VoxelGrid to_meters(VoxelGrid g) {
    g.origin /= kCgoLengthScale;
    g.extent /= kCgoLengthScale;
    return g;
}

}  // namespace

PipelineContext build_pipeline_context(const RunConfig& config) {
    config.validate();
    PipelineContext ctx;
    ctx.scenario = load_scenario(config.scenario_path);

    auto t0 = std::chrono::steady_clock::now();
    if (config.frames_prefix.empty()) {
        SimulationOptions opts;
        opts.seed = config.seed;
        opts.h_far = config.sim_h_far;
        opts.h_electrode = config.sim_h_electrode;
        SimulationResult sim = simulate_phantom_frames(ctx.scenario, opts);
        ctx.data = std::move(sim.data);
        ctx.reference = std::move(sim.reference);
    } else {
        ctx.data = load_frames(config.frames_prefix);
        if (!config.ref_frames_prefix.empty()) {
            ctx.reference = load_frames(config.ref_frames_prefix);
            if (ctx.reference.currents.rows() != ctx.data.currents.rows() ||
                ctx.reference.currents.cols() != ctx.data.currents.cols() ||
                (ctx.reference.currents - ctx.data.currents).cwiseAbs().maxCoeff() >
                    1e-9 * ctx.data.currents.cwiseAbs().maxCoeff()) {
                throw ShapeMismatch("data and reference frames use different currents");
            }
        }
    }
    ctx.simulate_seconds = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    ctx.basis = build_basis(ctx.data.currents);
    assemble_nd_dn(ctx.data, ctx.basis, ctx.nd_data, ctx.dn_data);
    const bool have_reference = ctx.reference.currents.size() > 0;
    if (have_reference) {
        assemble_nd_dn(ctx.reference, ctx.basis, ctx.nd_ref, ctx.dn_ref);
    }

    // Homogeneous simulation on the modeled domain with the same currents:
    // the synthetic counterpart of the data, used for sigma_best and as the
    // absolute-mode reference map.
    const TetMesh model_mesh =
        mesh_box(ctx.scenario.modeled_domain, ctx.scenario.modeled_layout, config.model_h_far,
                 config.model_h_electrode);
    const ConductivityField ones = ConductivityField::constant(model_mesh, 1.0);
    ctx.simulated_voltages =
        solve_cem_patterns(model_mesh, ones, ctx.scenario.modeled_layout, ctx.data.currents)
            .voltages;
    PatternSet sim_set;
    sim_set.currents = ctx.data.currents;
    sim_set.voltages = ctx.simulated_voltages;
    assemble_nd_dn(sim_set, ctx.basis, ctx.nd_sim, ctx.dn_sim);

    if (config.mode == ReconMode::absolute) {
        ctx.sigma_best_value = sigma_best(ctx.simulated_voltages, ctx.data.voltages);
    } else {
        if (!have_reference) throw ConfigError("difference mode needs reference frames");
        ctx.sigma_best_value = sigma_best(ctx.simulated_voltages, ctx.reference.voltages);
    }
    ctx.assemble_seconds = seconds_since(t0);
    return ctx;
}

namespace {

// DN difference feeding the CGO methods, pre-scaled by the best-fit constant.
void cgo_dn_pair(const PipelineContext& ctx, ReconMode mode, DNMatrix& dn_sigma,
                 DNMatrix& dn_ref) {
    if (mode == ReconMode::absolute) {
        dn_sigma.L = ctx.dn_data.L / ctx.sigma_best_value;
        dn_ref.L = ctx.dn_sim.L;
    } else {
        dn_sigma.L = ctx.dn_data.L / ctx.sigma_best_value;
        dn_ref.L = ctx.dn_ref.L / ctx.sigma_best_value;
    }
}

MethodOutput run_calderon(const PipelineContext& ctx, const RunConfig& config) {
    MethodOutput out;
    DNMatrix dn_sigma, dn_ref;
    cgo_dn_pair(ctx, config.mode, dn_sigma, dn_ref);

    SphericalFourierGrid grid;
    grid.n_radial = config.n_radial;
    grid.n_theta = config.n_theta;
    grid.n_phi = config.n_phi;
    grid.t_z1 = config.t_z1;
    grid.t_z2 = config.t_z2;
    grid.mollifier_t = config.mollifier_t;

    const Eigen::MatrixX3d centers = scaled_centers(ctx.scenario.modeled_layout);
    const double area =
        ctx.scenario.modeled_domain.surface_area() * kCgoLengthScale * kCgoLengthScale;
    const FhatData fhat = compute_fhat(dn_sigma, dn_ref, ctx.basis, centers, area, grid);
    const FhatData fhat_r = truncate_fhat(fhat, config.t_z1, config.t_z2);

    CalderonXGrid xgrid;
    xgrid.box = scaled_box(ctx.scenario.modeled_domain);
    xgrid.base_n = config.xgrid_base > 0 ? config.xgrid_base
                                         : default_calderon_base_n(ctx.scenario.modeled_domain);
    xgrid.out_n = config.out_n;

    CalderonDiagnostics diag;
    out.recon = to_meters(
        reconstruct_calderon(fhat_r, xgrid, config.mode, ctx.sigma_best_value, &diag));
    out.diagnostics["fhat_conj_symmetry_rel"] = fhat.conj_symmetry_rel;
    out.diagnostics["max_abs_imag"] = diag.max_abs_imag;
    out.diagnostics["imag_warning"] = diag.imag_warning;
    out.diagnostics["xgrid_base"] = xgrid.base_n;
    return out;
}

MethodOutput run_tmethod(const PipelineContext& ctx, const RunConfig& config) {
    MethodOutput out;
    DNMatrix dn_sigma, dn_ref;
    cgo_dn_pair(ctx, config.mode, dn_sigma, dn_ref);

    const Eigen::MatrixX3d centers = scaled_centers(ctx.scenario.modeled_layout);
    const double area =
        ctx.scenario.modeled_domain.surface_area() * kCgoLengthScale * kCgoLengthScale;
    const BoxDomain box_dm = scaled_box(ctx.scenario.modeled_domain);

    XiGrid grid;
    if (config.xi_nodes > 0) {
        grid.t_xi = config.t_xi;
        grid.nodes_per_axis = config.xi_nodes;
        grid.validate();
    } else {
        grid = make_xi_grid(config.t_xi);
    }

    const ScatteringMethod method =
        config.method == Method::texp ? ScatteringMethod::exp : ScatteringMethod::zero;
    Eigen::MatrixXd g0;
    if (method == ScatteringMethod::zero) g0 = g0_matrix(centers);
    const ScatteringData t =
        scattering(dn_sigma, dn_ref, ctx.basis, centers, area, grid, method,
                   method == ScatteringMethod::zero ? &g0 : nullptr, config.amplitude_cap);

    const PotentialGrid q = invert_scattering_to_q(t, box_dm, config.q_grid_n);
    const TetMesh bvp_mesh = mesh_box_uniform(box_dm, config.schrodinger_tets);
    VoxelGrid sigma =
        reconstruct_from_q(q, bvp_mesh, ctx.sigma_best_value, config.out_n);
    if (config.mode == ReconMode::difference) {
        sigma.values.array() -= ctx.sigma_best_value;
    }
    out.recon = to_meters(std::move(sigma));
    out.diagnostics["xi_nodes"] = grid.nodes_per_axis;
    out.diagnostics["zeroed_by_cap"] = t.zeroed_by_cap;
    out.diagnostics["zeroed_near_singular"] = t.zeroed_near_singular;
    out.diagnostics["max_abs_imag_q"] = q.max_abs_imag;
    out.scattering = t;
    return out;
}

MethodOutput run_lindiff(const PipelineContext& ctx, const RunConfig& config) {
    MethodOutput out;
    const Scenario& sc = ctx.scenario;
    const TetMesh mesh =
        mesh_box(sc.modeled_domain, sc.modeled_layout, config.lindiff_h, config.lindiff_h);

    const ConductivityField ones = ConductivityField::constant(mesh, 1.0);
    const Eigen::MatrixXd u_sim =
        solve_cem_patterns(mesh, ones, sc.modeled_layout, ctx.data.currents).voltages;
    const double sigma0 = sigma_best(u_sim, ctx.reference.voltages);

    const Eigen::MatrixXd jac = jacobian_sigma(
        mesh, ConductivityField::constant(mesh, sigma0), sc.modeled_layout, ctx.data.currents);

    const Eigen::MatrixXd dv_mat = ctx.data.voltages - ctx.reference.voltages;
    const Eigen::VectorXd dv =
        Eigen::Map<const Eigen::VectorXd>(dv_mat.data(), dv_mat.size());

    const NoiseModel noise = NoiseModel::from_snr(ctx.data.voltages, sc.snr_db);
    const double d = config.corr_frac * sc.modeled_domain.longest_edge();
    const SmoothnessPrior prior =
        build_prior(mesh.nodes, config.std_mult * sigma0, d, config.cov_pct / 100.0);

    const Eigen::VectorXd delta_sigma = reconstruct_linear_diff(jac, dv, noise, prior);

    VoxelGrid grid = VoxelGrid::for_box(sc.modeled_domain, config.out_n);
    for (int k = 0; k < config.out_n; ++k) {
        for (int j = 0; j < config.out_n; ++j) {
            for (int i = 0; i < config.out_n; ++i) {
                grid.values[grid.index(i, j, k)] =
                    mesh.interpolate(delta_sigma, grid.center(i, j, k));
            }
        }
    }
    out.recon = std::move(grid);
    out.diagnostics["sigma0_S_per_m"] = sigma0;
    out.diagnostics["prior_correlation_a_m"] = prior.correlation_a;
    out.diagnostics["recon_nodes"] = mesh.node_count();
    return out;
}

}  // namespace

MethodOutput run_method(const PipelineContext& ctx, const RunConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    MethodOutput out;
    switch (config.method) {
        case Method::calderon: out = run_calderon(ctx, config); break;
        case Method::texp:
        case Method::t0: out = run_tmethod(ctx, config); break;
        case Method::lindiff: out = run_lindiff(ctx, config); break;
    }
    out.method_seconds = seconds_since(t0);
    return out;
}

namespace {

json config_params_json(const RunConfig& c) {
    json p;
    p["tz1"] = c.t_z1;
    p["tz2"] = c.t_z2;
    p["mollifier_t"] = c.mollifier_t;
    p["nz"] = c.n_radial;
    p["ntheta"] = c.n_theta;
    p["nphi"] = c.n_phi;
    p["xgrid_base"] = c.xgrid_base;
    p["txi"] = c.t_xi;
    p["cap"] = c.amplitude_cap;
    p["xi_nodes"] = c.xi_nodes;
    p["q_grid"] = c.q_grid_n;
    p["schrodinger_mesh_elems"] = c.schrodinger_tets;
    p["std_mult"] = c.std_mult;
    p["corr_frac"] = c.corr_frac;
    p["cov_pct"] = c.cov_pct;
    p["threshold"] = c.threshold_frac;
    p["out_n"] = c.out_n;
    p["sim_h_far"] = c.sim_h_far;
    p["sim_h_electrode"] = c.sim_h_electrode;
    p["model_h_far"] = c.model_h_far;
    p["model_h_electrode"] = c.model_h_electrode;
    return p;
}

std::vector<Vec3> truth_centers(const Scenario& s) {
    std::vector<Vec3> centers;
    for (const auto& sp : s.phantom.spheres) centers.push_back(sp.center);
    return centers;
}

void write_scattering_csv(const std::string& path, const ScatteringData& t) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << "xi_x,xi_y,xi_z,re_t,im_t\n";
    const int n = t.grid.nodes_per_axis;
    char buf[200];
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                const Vec3 xi = t.grid.xi_at(i, j, k);
                const auto v = t.values[t.grid.index(i, j, k)];
                std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", xi.x(), xi.y(),
                              xi.z(), v.real(), v.imag());
                out << buf;
            }
        }
    }
}

}  // namespace

RunResult run_reconstruct(const RunConfig& config) {
    config.validate();
    if (config.out_dir.empty()) throw ConfigError("output directory not set");
    fs::create_directories(config.out_dir);
    const fs::path out_dir(config.out_dir);
    if (fs::exists(out_dir / "report.json") && !config.force) {
        throw ConfigError("output already exists in " + config.out_dir +
                          " (use --force to overwrite)");
    }

    const auto t0 = std::chrono::steady_clock::now();
    const PipelineContext ctx = build_pipeline_context(config);
    const MethodOutput method_out = run_method(ctx, config);

    RunResult result;
    result.recon = method_out.recon;
    result.sigma_best_value = ctx.sigma_best_value;

    const auto te = std::chrono::steady_clock::now();
    const std::vector<Vec3> centers = truth_centers(ctx.scenario);
    if (!centers.empty()) {
        result.metrics = evaluate_recon(result.recon, centers, config.threshold_frac,
                                        ctx.scenario.true_domain.longest_edge());
    }
    const double evaluate_seconds = seconds_since(te);

    json report;
    report["schema_version"] = kReportSchemaVersion;
    report["method"] = method_name(config.method);
    report["mode"] = config.mode == ReconMode::absolute ? "absolute" : "difference";
    report["seed"] = config.seed;
    report["scenario"] = config.scenario_path;
    report["params"] = config_params_json(config);
    report["sigma_best_S_per_m"] = ctx.sigma_best_value;
    report["diagnostics"] = method_out.diagnostics;
    report["diagnostics"]["nd_asymmetry_data"] = ctx.nd_data.asymmetry_rel;
    report["timings_s"] = {{"simulate", ctx.simulate_seconds},
                           {"assemble", ctx.assemble_seconds},
                           {"method", method_out.method_seconds},
                           {"evaluate", evaluate_seconds},
                           {"total", seconds_since(t0)}};
    if (result.metrics) {
        report["metrics"] = json::parse(result.metrics->to_json());
    }
    result.report = report;

    const std::string field =
        config.mode == ReconMode::absolute ? "sigma_S_per_m" : "delta_sigma_S_per_m";
    result.recon.write_vtk((out_dir / "recon.vtk").string(), field);
    result.recon.write_csv((out_dir / "recon.csv").string());
    if (method_out.scattering) {
        write_scattering_csv((out_dir / "scattering.csv").string(), *method_out.scattering);
    }
    if (result.metrics) {
        std::ofstream mf(out_dir / "metrics.json");
        mf << result.metrics->to_json() << '\n';
    }
    std::ofstream rf(out_dir / "report.json");
    rf << report.dump(2) << '\n';
    return result;
}

namespace {

void set_sweep_param(RunConfig& config, const std::string& param, double value) {
    if (param == "txi") {
        config.t_xi = value;
    } else if (param == "cap") {
        config.amplitude_cap = value;
    } else if (param == "mollifier-t") {
        config.mollifier_t = value;
    } else if (param == "tz1") {
        config.t_z1 = value;
    } else if (param == "tz2") {
        config.t_z2 = value;
    } else if (param == "threshold") {
        config.threshold_frac = value;
    } else {
        throw ConfigError("unknown sweep parameter: " + param);
    }
}

}  // namespace

std::vector<SweepRow> run_sweep(const RunConfig& config, const std::string& param,
                                const std::vector<double>& values, int jobs) {
    config.validate();
    {  // fail fast on unknown parameter names
        RunConfig probe = config;
        set_sweep_param(probe, param, values.empty() ? 0.0 : values.front());
    }
    std::vector<SweepRow> rows(values.size());
    if (values.empty()) {
        if (!config.out_dir.empty()) {
            fs::create_directories(config.out_dir);
            std::ofstream out(fs::path(config.out_dir) / "sweep.csv");
            out << sweep_csv(rows, 0);
        }
        return rows;
    }

    const PipelineContext ctx = build_pipeline_context(config);
    const std::vector<Vec3> centers = truth_centers(ctx.scenario);

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= values.size()) return;
            SweepRow& row = rows[i];
            row.value = values[i];
            const auto t0 = std::chrono::steady_clock::now();
            try {
                RunConfig local = config;
                set_sweep_param(local, param, values[i]);
                local.validate();
                const MethodOutput mo = run_method(ctx, local);
                row.metrics = evaluate_recon(mo.recon, centers, local.threshold_frac,
                                             ctx.scenario.true_domain.longest_edge());
                row.ok = true;
            } catch (const std::exception& e) {
                row.ok = false;
                row.error = e.what();
            }
            row.seconds = seconds_since(t0);
        }
    };
    const int n_workers = std::max(1, std::min<int>(jobs, static_cast<int>(values.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    if (!config.out_dir.empty()) {
        fs::create_directories(config.out_dir);
        std::ofstream out(fs::path(config.out_dir) / "sweep.csv");
        out << sweep_csv(rows, static_cast<int>(centers.size()));
    }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows, int n_targets) {
    std::ostringstream out;
    out << "value," << MetricsReport::csv_header(n_targets) << ",seconds,error\n";
    for (const auto& r : rows) {
        out << r.value << ",";
        if (r.ok) {
            out << r.metrics.csv_row();
        } else {
            out << "";
            for (int t = 0; t < n_targets; ++t) out << ",,";
        }
        out << "," << r.seconds << "," << (r.ok ? "" : r.error) << "\n";
    }
    return out.str();
}

nlohmann::json load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open report " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(std::string("report JSON: ") + e.what());
    }
    const std::string version = j.value("schema_version", "");
    const auto dot = version.find('.');
    const std::string major = dot == std::string::npos ? version : version.substr(0, dot);
    const std::string expected_major =
        std::string(kReportSchemaVersion).substr(0, std::string(kReportSchemaVersion).find('.'));
    if (major != expected_major) {
        throw ParseError("unsupported report schema version: " + version);
    }
    return j;
}

}  // namespace eit
