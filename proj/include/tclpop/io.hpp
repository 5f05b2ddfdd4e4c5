#ifndef TCLPOP_IO_HPP
#define TCLPOP_IO_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "tclpop/fvm.hpp"
#include "tclpop/grid.hpp"
#include "tclpop/mc.hpp"

namespace tclpop::io {

/// One power series as "time_s  power_w  on_fraction" rows.
void write_power_series(const std::string& path, const std::vector<PowerSample>& series);

/// One density family: every snapshot stacked as
/// "time_s  center_k  density_per_k" rows, 60-per-snapshot blocks in time
/// order. MC and PDE outputs share this layout.
void write_density_family(const std::string& path, const std::vector<double>& edges,
                          const std::vector<double>& times,
                          const std::vector<std::vector<double>>& values);

/// Sparse operator in coordinate text form, one "row col value" per line,
/// column-major nonzero order.
void write_coo(const std::string& path, const SparseOp& m);

nlohmann::json grid_manifest(const HybridGrid& grid);
void write_json(const std::string& path, const nlohmann::json& j);

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

/// Creates the directory (and parents) if missing; errors if the path
/// exists and is not a directory.
void ensure_dir(const std::string& dir);

} // namespace tclpop::io

#endif
