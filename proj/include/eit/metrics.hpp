#ifndef EIT_METRICS_HPP
#define EIT_METRICS_HPP

#include <string>
#include <vector>

#include "eit/geometry.hpp"
#include "eit/voxel_grid.hpp"

namespace eit {

/// Localization and contrast metrics of a reconstruction against known
/// target centers.
struct MetricsReport {
    struct Target {
        bool matched = false;
        double le_m = 0.0;              // centroid distance (m); unmatched => inf
        double scaled_le = 0.0;         // le / scale_length; unmatched => inf
        double max_conductivity = 0.0;  // max reconstruction value in the matched component
        Vec3 recon_centroid = Vec3::Zero();
    };
    std::vector<Target> targets;        // one per truth center, same order
    double threshold_frac = 0.0;
    double scale_length_m = 0.0;
    int components_found = 0;

    std::string to_json() const;
    /// Header and one row for sweep tables.
    static std::string csv_header(int n_targets);
    std::string csv_row() const;
};

/// Connected component of the binarized reconstruction.
struct Component {
    Vec3 centroid = Vec3::Zero();
    long voxels = 0;
    double max_value = 0.0;
};

/// 6-connected components of {recon >= threshold_frac * max(recon)}.
std::vector<Component> label_components(const VoxelGrid& recon, double threshold_frac);

/// Binarizes at threshold_frac * max, labels 6-connected components, matches
/// components to truth centers greedily by centroid distance (each side used
/// at most once) and reports LE, LE / scale_length and the component maximum.
/// threshold_frac must lie in [0.5, 0.9]. Throws NoTargetsFound when the
/// binarized set is empty.
MetricsReport evaluate_recon(const VoxelGrid& recon, const std::vector<Vec3>& truth_centers,
                             double threshold_frac, double scale_length_m);

}  // namespace eit

#endif  // EIT_METRICS_HPP
