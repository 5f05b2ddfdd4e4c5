#include "tclpop/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tclpop/errors.hpp"

namespace tclpop::io {

namespace {

std::string format(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

void write_or_throw(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ScenarioError("cannot open for writing: " + path);
    out << content;
    out.close();
    if (!out)
        throw ScenarioError("write failed: " + path);
}

} // namespace

void write_power_series(const std::string& path, const std::vector<PowerSample>& series) {
    std::string s;
    s.reserve(series.size() * 40 + 64);
    s += "# time_s power_w on_fraction\n";
    for (const PowerSample& p : series) {
        s += format("%.3f", p.time);
        s += ' ';
        s += format("%.6f", p.power_w);
        s += ' ';
        s += format("%.8f", p.on_fraction);
        s += '\n';
    }
    write_or_throw(path, s);
}

void write_density_family(const std::string& path, const std::vector<double>& edges,
                          const std::vector<double>& times,
                          const std::vector<std::vector<double>>& values) {
    if (times.size() != values.size())
        throw ScenarioError("density family: times and snapshots differ in count");
    const std::size_t n_bins = edges.size() >= 1 ? edges.size() - 1 : 0;
    std::string s;
    s += "# time_s center_k density_per_k\n";
    for (std::size_t t = 0; t < times.size(); ++t) {
        if (values[t].size() != n_bins)
            throw ScenarioError("density family: snapshot size does not match the edges");
        for (std::size_t j = 0; j < n_bins; ++j) {
            s += format("%.3f", times[t]);
            s += ' ';
            s += format("%.6f", 0.5 * (edges[j] + edges[j + 1]));
            s += ' ';
            s += format("%.10f", values[t][j]);
            s += '\n';
        }
    }
    write_or_throw(path, s);
}

void write_coo(const std::string& path, const SparseOp& m) {
    std::string s;
    s.reserve(static_cast<std::size_t>(m.nonZeros()) * 32 + 64);
    s += "# row col value\n";
    for (int c = 0; c < m.outerSize(); ++c)
        for (SparseOp::InnerIterator it(m, c); it; ++it) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", static_cast<long>(it.row()),
                          static_cast<long>(it.col()), it.value());
            s += buf;
        }
    write_or_throw(path, s);
}

nlohmann::json grid_manifest(const HybridGrid& grid) {
    nlohmann::json j;
    j["t_lo"] = grid.t_lo;
    j["t_min"] = grid.t_min;
    j["t_max"] = grid.t_max;
    j["t_hi"] = grid.t_hi;
    j["n_pad_left"] = grid.n_pad_left;
    j["n_band"] = grid.n_band;
    j["n_pad_right"] = grid.n_pad_right;
    j["dx_pad_left"] = grid.dx_pad_left;
    j["dx_band"] = grid.dx_band;
    j["dx_pad_right"] = grid.dx_pad_right;
    j["mask_cells_off"] = grid.mask_cells_off;
    j["mask_cells_on"] = grid.mask_cells_on;
    j["layout"] = "0a|0b|1b|1c";
    j["size"] = grid.size();
    j["segment_offsets"] = {grid.seg_offset(Segment::Zero_a), grid.seg_offset(Segment::Zero_b),
                            grid.seg_offset(Segment::One_b), grid.seg_offset(Segment::One_c)};
    return j;
}

void write_json(const std::string& path, const nlohmann::json& j) {
    write_or_throw(path, j.dump(2) + "\n");
}

void write_text(const std::string& path, const std::string& content) {
    write_or_throw(path, content);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ScenarioError("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void ensure_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (fs::exists(dir, ec)) {
        if (!fs::is_directory(dir, ec))
            throw ScenarioError("output path exists and is not a directory: " + dir);
        return;
    }
    fs::create_directories(dir, ec);
    if (ec)
        throw ScenarioError("cannot create directory " + dir + ": " + ec.message());
}

} // namespace tclpop::io
