#ifndef TCLPOP_METRICS_HPP
#define TCLPOP_METRICS_HPP

#include <vector>

namespace tclpop {

/// Conservative rebinning of a piecewise-constant density: each source
/// cell's mass is split over the destination cells by overlap length, so
/// total mass inside the covered range is preserved exactly. Mass falling
/// outside the destination edges is dropped.
std::vector<double> rebin_density(const std::vector<double>& src_edges,
                                  const std::vector<double>& src_values,
                                  const std::vector<double>& dst_edges);

/// Integral of |a - b| for two densities on the same edges.
double l1_distance(const std::vector<double>& edges, const std::vector<double>& a,
                   const std::vector<double>& b);

/// Integral of a density over its edges.
double density_mass(const std::vector<double>& edges, const std::vector<double>& values);

/// Root-mean-square difference of two equally long series.
double rmse(const std::vector<double>& a, const std::vector<double>& b);

double mean(const std::vector<double>& a);

/// Uniform edge list from lo to hi with the given cell count.
std::vector<double> uniform_edges(double lo, double hi, int cells);

} // namespace tclpop

#endif
