#include "eit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <queue>
#include <sstream>

#include "eit/errors.hpp"

namespace eit {

using nlohmann::json;

std::vector<Component> label_components(const VoxelGrid& recon, double threshold_frac) {
    const double vmax = recon.values.maxCoeff();
    const double threshold = threshold_frac * vmax;
    const int nx = recon.shape[0], ny = recon.shape[1], nz = recon.shape[2];

    std::vector<int> label(recon.size(), -1);
    std::vector<Component> components;
    auto above = [&](long idx) { return recon.values[idx] >= threshold; };

    for (int k = 0; k < nz; ++k) {
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                const long start = recon.index(i, j, k);
                if (!above(start) || label[start] >= 0) continue;
                const int id = static_cast<int>(components.size());
                Component comp;
                Vec3 sum = Vec3::Zero();
                std::queue<std::array<int, 3>> queue;
                queue.push({i, j, k});
                label[start] = id;
                while (!queue.empty()) {
                    const auto [ci, cj, ck] = queue.front();
                    queue.pop();
                    const long idx = recon.index(ci, cj, ck);
                    sum += recon.center(ci, cj, ck);
                    comp.voxels += 1;
                    comp.max_value = std::max(comp.max_value, recon.values[idx]);
                    constexpr int off[6][3] = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                                               {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};
                    for (const auto& o : off) {
                        const int ni = ci + o[0], nj = cj + o[1], nk = ck + o[2];
                        if (ni < 0 || nj < 0 || nk < 0 || ni >= nx || nj >= ny || nk >= nz)
                            continue;
                        const long nidx = recon.index(ni, nj, nk);
                        if (label[nidx] < 0 && above(nidx)) {
                            label[nidx] = id;
                            queue.push({ni, nj, nk});
                        }
                    }
                }
                comp.centroid = sum / static_cast<double>(comp.voxels);
                components.push_back(comp);
            }
        }
    }
    return components;
}

MetricsReport evaluate_recon(const VoxelGrid& recon, const std::vector<Vec3>& truth_centers,
                             double threshold_frac, double scale_length_m) {
    if (!(threshold_frac >= 0.5 && threshold_frac <= 0.9)) {
        throw ConfigError("evaluate_recon: threshold fraction must lie in [0.5, 0.9]");
    }
    if (recon.size() == 0 || !recon.values.allFinite()) {
        throw NoTargetsFound("evaluate_recon: empty or non-finite reconstruction");
    }
    const std::vector<Component> components = label_components(recon, threshold_frac);
    if (components.empty()) {
        throw NoTargetsFound("evaluate_recon: nothing above threshold");
    }

    MetricsReport report;
    report.threshold_frac = threshold_frac;
    report.scale_length_m = scale_length_m;
    report.components_found = static_cast<int>(components.size());
    report.targets.resize(truth_centers.size());

    // Greedy matching over ascending centroid distance.
    struct Pair {
        double d;
        int comp;
        int truth;
    };
    std::vector<Pair> pairs;
    for (int c = 0; c < static_cast<int>(components.size()); ++c) {
        for (int t = 0; t < static_cast<int>(truth_centers.size()); ++t) {
            pairs.push_back({(components[c].centroid - truth_centers[t]).norm(), c, t});
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.d < b.d; });
    std::vector<bool> comp_used(components.size(), false);
    std::vector<bool> truth_used(truth_centers.size(), false);
    for (const Pair& p : pairs) {
        if (comp_used[p.comp] || truth_used[p.truth]) continue;
        comp_used[p.comp] = true;
        truth_used[p.truth] = true;
        MetricsReport::Target& tg = report.targets[p.truth];
        tg.matched = true;
        tg.le_m = p.d;
        tg.scaled_le = p.d / scale_length_m;
        tg.max_conductivity = components[p.comp].max_value;
        tg.recon_centroid = components[p.comp].centroid;
    }
    for (auto& tg : report.targets) {
        if (!tg.matched) {
            tg.le_m = std::numeric_limits<double>::infinity();
            tg.scaled_le = std::numeric_limits<double>::infinity();
        }
    }
    return report;
}

std::string MetricsReport::to_json() const {
    json j;
    j["threshold_frac"] = threshold_frac;
    j["scale_length_m"] = scale_length_m;
    j["components_found"] = components_found;
    j["targets"] = json::array();
    for (const auto& t : targets) {
        json e;
        e["matched"] = t.matched;
        e["le_m"] = t.matched ? json(t.le_m) : json("unmatched");
        e["scaled_le"] = t.matched ? json(t.scaled_le) : json("unmatched");
        e["max_conductivity_S_per_m"] = t.max_conductivity;
        e["recon_centroid_m"] = {t.recon_centroid.x(), t.recon_centroid.y(),
                                 t.recon_centroid.z()};
        j["targets"].push_back(e);
    }
    return j.dump(2);
}

std::string MetricsReport::csv_header(int n_targets) {
    std::ostringstream out;
    out << "components_found";
    for (int t = 0; t < n_targets; ++t) {
        out << ",scaled_le_" << t + 1 << ",max_conductivity_" << t + 1;
    }
    return out.str();
}

std::string MetricsReport::csv_row() const {
    std::ostringstream out;
    out << components_found;
    for (const auto& t : targets) {
        out << "," << t.scaled_le << "," << t.max_conductivity;
    }
    return out.str();
}

}  // namespace eit
