#include "tclpop/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tclpop/errors.hpp"

namespace tclpop {

namespace {

void check_density(const std::vector<double>& edges, const std::vector<double>& values,
                   const char* what) {
    if (edges.size() < 2 || values.size() + 1 != edges.size())
        throw ScenarioError(std::string(what) + ": edges and values are inconsistent");
    for (std::size_t j = 1; j < edges.size(); ++j)
        if (!(edges[j] > edges[j - 1]))
            throw ScenarioError(std::string(what) + ": edges must be strictly increasing");
}

} // namespace

std::vector<double> rebin_density(const std::vector<double>& src_edges,
                                  const std::vector<double>& src_values,
                                  const std::vector<double>& dst_edges) {
    check_density(src_edges, src_values, "rebin source");
    if (dst_edges.size() < 2)
        throw ScenarioError("rebin destination needs at least two edges");
    for (std::size_t j = 1; j < dst_edges.size(); ++j)
        if (!(dst_edges[j] > dst_edges[j - 1]))
            throw ScenarioError("rebin destination edges must be strictly increasing");

    const std::size_t ns = src_values.size();
    const std::size_t nd = dst_edges.size() - 1;
    std::vector<double> mass(nd, 0.0);

    std::size_t i = 0, j = 0;
    while (i < ns && j < nd) {
        const double lo = std::max(src_edges[i], dst_edges[j]);
        const double hi = std::min(src_edges[i + 1], dst_edges[j + 1]);
        if (hi > lo) mass[j] += src_values[i] * (hi - lo);
        if (src_edges[i + 1] <= dst_edges[j + 1])
            ++i;
        else
            ++j;
    }

    std::vector<double> out(nd);
    for (std::size_t k = 0; k < nd; ++k) out[k] = mass[k] / (dst_edges[k + 1] - dst_edges[k]);
    return out;
}

double l1_distance(const std::vector<double>& edges, const std::vector<double>& a,
                   const std::vector<double>& b) {
    check_density(edges, a, "l1 first density");
    check_density(edges, b, "l1 second density");
    double d = 0;
    for (std::size_t j = 0; j < a.size(); ++j)
        d += std::abs(a[j] - b[j]) * (edges[j + 1] - edges[j]);
    return d;
}

double density_mass(const std::vector<double>& edges, const std::vector<double>& values) {
    check_density(edges, values, "density mass");
    double m = 0;
    for (std::size_t j = 0; j < values.size(); ++j)
        m += values[j] * (edges[j + 1] - edges[j]);
    return m;
}

double rmse(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw ScenarioError("rmse needs equally long series");
    if (a.empty()) return 0;
    double acc = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.size()));
}

double mean(const std::vector<double>& a) {
    if (a.empty()) return 0;
    double acc = 0;
    for (double v : a) acc += v;
    return acc / static_cast<double>(a.size());
}

std::vector<double> uniform_edges(double lo, double hi, int cells) {
    if (!(hi > lo) || cells <= 0)
        throw ScenarioError("uniform_edges needs lo < hi and a positive cell count");
    std::vector<double> e(cells + 1);
    for (int j = 0; j <= cells; ++j)
        e[j] = lo + (hi - lo) * j / cells;
    e.back() = hi;
    return e;
}

} // namespace tclpop
