#ifndef EIT_FRAMES_IO_HPP
#define EIT_FRAMES_IO_HPP

#include <Eigen/Dense>
#include <string>

#include "eit/cem.hpp"

namespace eit {

struct FramesMetadata {
    double frequency_hz = 0.0;
    double background_mS_per_m = 0.0;
    int frame_count = 1;
};

/// Numeric CSV helpers (round-trip exact via %.17g formatting).
void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_csv_matrix(const std::string& path);

/// Writes <prefix>.I.csv (L x K), <prefix>.V.csv (L x K*frame_count; frames
/// are concatenated column blocks) and <prefix>.meta.json.
void save_frames(const std::string& prefix, const Eigen::MatrixXd& currents,
                 const Eigen::MatrixXd& voltages_frames, const FramesMetadata& meta);

/// Loads a frame bundle, validates shapes and mean-free currents, and
/// averages the voltage frames. Throws ParseError / ShapeMismatch /
/// NonMeanFreeCurrents.
PatternSet load_frames(const std::string& prefix, FramesMetadata* meta_out = nullptr);

/// Diagnostics printed by the validate-frames command.
struct FrameDiagnostics {
    int electrode_count = 0;
    int pattern_count = 0;
    int frame_count = 0;
    double max_current_colsum_rel = 0.0;   // max |sum I_k| / |I_k|
    double max_voltage_colsum_rel = 0.0;
    double nd_asymmetry_rel = 0.0;         // ||R - R^T||_F / ||R||_F of the fitted ND matrix
};

FrameDiagnostics diagnose_frames(const std::string& prefix);

}  // namespace eit

#endif  // EIT_FRAMES_IO_HPP
