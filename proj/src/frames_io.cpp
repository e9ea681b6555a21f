#include "eit/frames_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <vector>

#include "eit/dn.hpp"
#include "eit/errors.hpp"

namespace eit {

using nlohmann::json;

void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    char buf[64];
    for (long i = 0; i < m.rows(); ++i) {
        for (long j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
            out << buf;
            if (j + 1 < m.cols()) out << ',';
        }
        out << '\n';
    }
}

Eigen::MatrixXd read_csv_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t pos = 0;
                row.push_back(std::stod(cell, &pos));
            } catch (const std::exception&) {
                throw ParseError(path + ": bad number '" + cell + "'");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ParseError(path + ": ragged rows");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path + ": empty file");
    Eigen::MatrixXd m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    }
    return m;
}

void save_frames(const std::string& prefix, const Eigen::MatrixXd& currents,
                 const Eigen::MatrixXd& voltages_frames, const FramesMetadata& meta) {
    const long K = currents.cols();
    if (voltages_frames.rows() != currents.rows() ||
        voltages_frames.cols() != K * meta.frame_count) {
        throw ShapeMismatch("save_frames: voltage block shape disagrees with metadata");
    }
    write_csv_matrix(prefix + ".I.csv", currents);
    write_csv_matrix(prefix + ".V.csv", voltages_frames);
    json j;
    j["frequency_hz"] = meta.frequency_hz;
    j["background_mS_per_m"] = meta.background_mS_per_m;
    j["frame_count"] = meta.frame_count;
    std::ofstream out(prefix + ".meta.json");
    if (!out) throw Error("cannot open " + prefix + ".meta.json for writing");
    out << j.dump(2) << '\n';
}

namespace {

FramesMetadata read_meta(const std::string& prefix) {
    std::ifstream in(prefix + ".meta.json");
    if (!in) throw ParseError("cannot open " + prefix + ".meta.json");
    FramesMetadata meta;
    try {
        json j = json::parse(in);
        meta.frequency_hz = j.at("frequency_hz").get<double>();
        meta.background_mS_per_m = j.at("background_mS_per_m").get<double>();
        meta.frame_count = j.at("frame_count").get<int>();
    } catch (const json::exception& e) {
        throw ParseError(prefix + ".meta.json: " + e.what());
    }
    if (meta.frame_count < 1) throw ParseError(prefix + ".meta.json: frame_count < 1");
    return meta;
}

}  // namespace

PatternSet load_frames(const std::string& prefix, FramesMetadata* meta_out) {
    const FramesMetadata meta = read_meta(prefix);
    const Eigen::MatrixXd currents = read_csv_matrix(prefix + ".I.csv");
    const Eigen::MatrixXd vframes = read_csv_matrix(prefix + ".V.csv");
    const long K = currents.cols();
    if (vframes.rows() != currents.rows()) {
        throw ShapeMismatch(prefix + ": electrode counts of I and V disagree");
    }
    if (vframes.cols() != K * meta.frame_count) {
        throw ShapeMismatch(prefix + ": voltage columns do not match K * frame_count");
    }
    for (long k = 0; k < K; ++k) {
        const double n = currents.col(k).norm();
        if (std::abs(currents.col(k).sum()) > 1e-6 * std::max(n, 1e-300)) {
            throw NonMeanFreeCurrents(prefix + ": current column " + std::to_string(k) +
                                      " is not mean-free");
        }
    }
    PatternSet ps;
    ps.currents = currents;
    if (meta.frame_count == 1) {
        ps.voltages = vframes;
    } else {
        ps.voltages = Eigen::MatrixXd::Zero(vframes.rows(), K);
        for (int f = 0; f < meta.frame_count; ++f) {
            ps.voltages += vframes.middleCols(static_cast<long>(f) * K, K);
        }
        ps.voltages /= meta.frame_count;
    }
    if (meta_out != nullptr) *meta_out = meta;
    return ps;
}

FrameDiagnostics diagnose_frames(const std::string& prefix) {
    FramesMetadata meta;
    const PatternSet ps = load_frames(prefix, &meta);
    FrameDiagnostics d;
    d.electrode_count = ps.electrode_count();
    d.pattern_count = ps.pattern_count();
    d.frame_count = meta.frame_count;
    for (int k = 0; k < ps.pattern_count(); ++k) {
        const double ni = ps.currents.col(k).norm();
        const double nv = ps.voltages.col(k).norm();
        if (ni > 0) {
            d.max_current_colsum_rel =
                std::max(d.max_current_colsum_rel, std::abs(ps.currents.col(k).sum()) / ni);
        }
        if (nv > 0) {
            d.max_voltage_colsum_rel =
                std::max(d.max_voltage_colsum_rel, std::abs(ps.voltages.col(k).sum()) / nv);
        }
    }
    const CurrentPatternBasis basis = build_basis(ps.currents);
    NDMatrix nd;
    DNMatrix dn;
    assemble_nd_dn(ps, basis, nd, dn);
    d.nd_asymmetry_rel = nd.asymmetry_rel;
    return d;
}

}  // namespace eit
