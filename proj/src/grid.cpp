#include "tclpop/grid.hpp"

#include <cmath>
#include <cstdio>

#include "tclpop/errors.hpp"

namespace tclpop {

int HybridGrid::seg_count(Segment s) const {
    switch (s) {
    case Segment::Zero_a: return n_pad_left;
    case Segment::Zero_b: return n_band;
    case Segment::One_b: return n_band;
    case Segment::One_c: return n_pad_right;
    }
    return 0;
}

double HybridGrid::seg_dx(Segment s) const {
    switch (s) {
    case Segment::Zero_a: return dx_pad_left;
    case Segment::One_c: return dx_pad_right;
    default: return dx_band;
    }
}

int HybridGrid::seg_offset(Segment s) const {
    switch (s) {
    case Segment::Zero_a: return 0;
    case Segment::Zero_b: return n_pad_left;
    case Segment::One_b: return n_pad_left + n_band;
    case Segment::One_c: return n_pad_left + 2 * n_band;
    }
    return 0;
}

int HybridGrid::flat_index(Segment s, int cell) const { return seg_offset(s) + cell; }

std::vector<double> HybridGrid::band_edges() const {
    std::vector<double> e(n_band + 1);
    for (int j = 0; j <= n_band; ++j) e[j] = t_min + j * dx_band;
    e.back() = t_max;
    return e;
}

std::vector<double> HybridGrid::mode_edges(int mode) const {
    std::vector<double> e;
    if (mode == 0) {
        e.reserve(n_pad_left + n_band + 1);
        for (int j = 0; j <= n_pad_left; ++j) e.push_back(t_lo + j * dx_pad_left);
        e.back() = t_min;
        for (int j = 1; j <= n_band; ++j) e.push_back(t_min + j * dx_band);
        e.back() = t_max;
    } else {
        e.reserve(n_band + n_pad_right + 1);
        for (int j = 0; j <= n_band; ++j) e.push_back(t_min + j * dx_band);
        e.back() = t_max;
        for (int j = 1; j <= n_pad_right; ++j) e.push_back(t_max + j * dx_pad_right);
        e.back() = t_hi;
    }
    return e;
}

std::vector<int> HybridGrid::mode_cells(int mode) const {
    std::vector<int> idx;
    if (mode == 0) {
        idx.reserve(n_pad_left + n_band);
        for (int j = 0; j < n_pad_left; ++j) idx.push_back(flat_index(Segment::Zero_a, j));
        for (int j = 0; j < n_band; ++j) idx.push_back(flat_index(Segment::Zero_b, j));
    } else {
        idx.reserve(n_band + n_pad_right);
        for (int j = 0; j < n_band; ++j) idx.push_back(flat_index(Segment::One_b, j));
        for (int j = 0; j < n_pad_right; ++j) idx.push_back(flat_index(Segment::One_c, j));
    }
    return idx;
}

namespace {

/// Smallest n >= wanted with n*frac integral for both mask fractions.
int smallest_aligned_count(double band, double d0, double d1, int wanted) {
    for (int n = wanted; n <= wanted + 4096; ++n) {
        const double k0 = d0 / band * n;
        const double k1 = d1 / band * n;
        if (std::abs(k0 - std::round(k0)) < 1e-9 * n && std::abs(k1 - std::round(k1)) < 1e-9 * n)
            return n;
    }
    return 0;
}

} // namespace

HybridGrid build_grid(const TclParams& p, double left_pad, double right_pad, int cells_per_band) {
    p.validate();
    if (!(left_pad > 0) || !(right_pad > 0))
        throw ScenarioError("grid pads must be positive");
    if (cells_per_band < 2)
        throw ScenarioError("cells_per_band must be at least 2");

    const double band = p.t_max - p.t_min;
    const double dx = band / cells_per_band;
    const double k0 = p.delta_t0 / dx;
    const double k1 = p.delta_t1 / dx;
    if (std::abs(k0 - std::round(k0)) > 1e-9 * cells_per_band ||
        std::abs(k1 - std::round(k1)) > 1e-9 * cells_per_band) {
        const int hint = smallest_aligned_count(band, p.delta_t0, p.delta_t1, cells_per_band);
        char msg[192];
        std::snprintf(msg, sizeof msg,
                      "cells_per_band=%d puts a masking boundary off the face lattice "
                      "(delta_t0/dx=%.6g, delta_t1/dx=%.6g); smallest acceptable count >= %d is %d",
                      cells_per_band, k0, k1, cells_per_band, hint);
        throw ScenarioError(msg);
    }

    HybridGrid g;
    g.t_min = p.t_min;
    g.t_max = p.t_max;
    g.t_lo = p.t_min - left_pad;
    g.t_hi = p.t_max + right_pad;
    g.n_band = cells_per_band;
    g.dx_band = dx;
    g.mask_cells_off = static_cast<int>(std::llround(k0));
    g.mask_cells_on = static_cast<int>(std::llround(k1));
    g.n_pad_left = static_cast<int>(std::ceil(left_pad / dx - 1e-9));
    g.n_pad_right = static_cast<int>(std::ceil(right_pad / dx - 1e-9));
    g.dx_pad_left = left_pad / g.n_pad_left;
    g.dx_pad_right = right_pad / g.n_pad_right;

    const int n = g.n_pad_left + 2 * g.n_band + g.n_pad_right;
    g.center.resize(n);
    g.width.resize(n);
    g.segment.resize(n);
    for (Segment s : {Segment::Zero_a, Segment::Zero_b, Segment::One_b, Segment::One_c}) {
        const int cnt = g.seg_count(s);
        const double w = g.seg_dx(s);
        double left;
        switch (s) {
        case Segment::Zero_a: left = g.t_lo; break;
        case Segment::One_c: left = g.t_max; break;
        default: left = g.t_min; break;
        }
        for (int j = 0; j < cnt; ++j) {
            const int i = g.flat_index(s, j);
            g.center[i] = left + (j + 0.5) * w;
            g.width[i] = w;
            g.segment[i] = s;
        }
    }
    return g;
}

} // namespace tclpop
