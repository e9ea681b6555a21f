#ifndef EIT_PIPELINE_HPP
#define EIT_PIPELINE_HPP

#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "eit/calderon.hpp"
#include "eit/dn.hpp"
#include "eit/metrics.hpp"
#include "eit/phantoms.hpp"
#include "eit/scattering.hpp"
#include "eit/voxel_grid.hpp"

namespace eit {

enum class Method { calderon, texp, t0, lindiff };
Method method_from_name(const std::string& name);
std::string method_name(Method m);

/// Everything one reconstruction run needs. All quantities SI; the CGO
/// methods convert to their decimeter convention internally.
struct RunConfig {
    std::string scenario_path;
    Method method = Method::calderon;
    ReconMode mode = ReconMode::absolute;

    // data sources; empty prefixes mean "simulate from the scenario"
    std::string frames_prefix;
    std::string ref_frames_prefix;

    std::string out_dir;
    bool force = false;
    std::uint64_t seed = 1;

    // Calderon parameters
    double t_z1 = 1.4;
    double t_z2 = 1.7;
    double mollifier_t = 0.1;
    int n_radial = 10;
    int n_theta = 10;
    int n_phi = 30;
    int xgrid_base = 0;  // 0 = auto (16, or 32 for elongated boxes)

    // scattering-transform parameters
    double t_xi = 11.0;
    double amplitude_cap = 20.0;
    int xi_nodes = 0;  // 0 = auto from the default node spacing
    int q_grid_n = 21;
    std::size_t schrodinger_tets = 21000;

    // linear difference parameters
    double std_mult = 16.0;
    double corr_frac = 0.125;  // correlation distance as fraction of the longest modeled edge
    double cov_pct = 1.0;      // covariance at that distance, percent of variance
    double lindiff_h = 0.022;  // reconstruction mesh size (m)

    // forward simulation / modeled-domain meshes (m)
    double sim_h_far = 0.018;
    double sim_h_electrode = 0.009;
    double model_h_far = 0.020;
    double model_h_electrode = 0.010;

    double threshold_frac = 0.70;
    int out_n = 64;

    void validate() const;
};

/// Shared state reused across method runs (and across sweep values): loaded
/// or simulated frames, the modeled-domain homogeneous simulation and the
/// assembled discrete maps.
struct PipelineContext {
    Scenario scenario;
    PatternSet data;
    PatternSet reference;
    CurrentPatternBasis basis;

    NDMatrix nd_data, nd_ref, nd_sim;
    DNMatrix dn_data, dn_ref, dn_sim;
    Eigen::MatrixXd simulated_voltages;  // sigma = 1 on the modeled domain, same currents

    double sigma_best_value = 0.0;  // best-fit constant vs the mode's reference
    double simulate_seconds = 0.0;
    double assemble_seconds = 0.0;
};

PipelineContext build_pipeline_context(const RunConfig& config);

struct MethodOutput {
    VoxelGrid recon;       // meters / S/m
    nlohmann::json diagnostics;
    double method_seconds = 0.0;
    std::optional<ScatteringData> scattering;  // kept for the CSV dump
};

/// Runs the configured method on a prepared context.
MethodOutput run_method(const PipelineContext& ctx, const RunConfig& config);

struct RunResult {
    VoxelGrid recon;
    std::optional<MetricsReport> metrics;
    double sigma_best_value = 0.0;
    nlohmann::json report;
};

/// Full pipeline: load/simulate -> assemble maps -> method -> evaluate,
/// writing recon.vtk, recon.csv, report.json (and metrics.json,
/// scattering.csv where applicable) under config.out_dir.
RunResult run_reconstruct(const RunConfig& config);

struct SweepRow {
    double value = 0.0;
    bool ok = false;
    std::string error;
    MetricsReport metrics;
    double seconds = 0.0;
};

/// One reconstruction per parameter value; failures become labeled rows and
/// the sweep continues. Writes sweep.csv under config.out_dir. Recognized
/// parameters: txi, cap, mollifier-t, tz1, tz2, threshold.
std::vector<SweepRow> run_sweep(const RunConfig& config, const std::string& param,
                                const std::vector<double>& values, int jobs = 1);

std::string sweep_csv(const std::vector<SweepRow>& rows, int n_targets);

/// Loads a report, rejecting unknown schema major versions.
nlohmann::json load_report(const std::string& path);

inline constexpr char kReportSchemaVersion[] = "1.0";

}  // namespace eit

#endif  // EIT_PIPELINE_HPP
