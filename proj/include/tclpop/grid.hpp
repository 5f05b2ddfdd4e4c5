#ifndef TCLPOP_GRID_HPP
#define TCLPOP_GRID_HPP

#include <vector>

#include "tclpop/params.hpp"

namespace tclpop {

/// The four hybrid subdomains, in flat storage order.
///   Zero_a: (t_lo, t_min) x {off}     Zero_b: (t_min, t_max) x {off}
///   One_b : (t_min, t_max) x {on}     One_c : (t_max, t_hi) x {on}
enum class Segment : int { Zero_a = 0, Zero_b = 1, One_b = 2, One_c = 3 };

/// Truncated temperature grid for the coupled density system. Each segment
/// is uniform; the flat state vector is the concatenation
/// [Zero_a | Zero_b | One_b | One_c]. The thermostat band [t_min, t_max] and
/// the masking boundaries t_min+delta_t1, t_max-delta_t0 all land on faces.
struct HybridGrid {
    double t_lo = 0, t_min = 0, t_max = 0, t_hi = 0;
    int n_pad_left = 0, n_band = 0, n_pad_right = 0;
    double dx_pad_left = 0, dx_band = 0, dx_pad_right = 0;
    int mask_cells_off = 0; // band cells spanned by delta_t0
    int mask_cells_on = 0;  // band cells spanned by delta_t1

    std::vector<double> center; // flat, size()
    std::vector<double> width;
    std::vector<Segment> segment;

    int size() const { return static_cast<int>(center.size()); }
    int seg_count(Segment s) const;
    double seg_dx(Segment s) const;
    int seg_offset(Segment s) const;
    int flat_index(Segment s, int cell) const;

    /// Band-local index ranges of the cells a broadcast rate can act on:
    /// switch-on transfers live in Zero_b cells [safe_on_begin, n_band);
    /// switch-off transfers live in One_b cells [0, safe_off_end).
    int safe_on_begin() const { return mask_cells_on; }
    int safe_off_end() const { return n_band - mask_cells_off; }

    /// Face positions t_min..t_max (n_band+1 values).
    std::vector<double> band_edges() const;
    /// Face positions of one mode's contiguous chain:
    /// mode 0 spans [t_lo, t_max], mode 1 spans [t_min, t_hi].
    std::vector<double> mode_edges(int mode) const;
    /// All-cell edge list of one mode chain paired with flat cell indices.
    std::vector<int> mode_cells(int mode) const;
};

/// Builds the grid. Pads are in kelvin and get ceil(pad/dx) cells of their
/// own uniform width. Rejects cell counts for which a masking boundary
/// misses the face lattice, naming the smallest acceptable count.
HybridGrid build_grid(const TclParams& p, double left_pad, double right_pad, int cells_per_band);

} // namespace tclpop

#endif
