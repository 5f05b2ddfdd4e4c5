#ifndef TCLPOP_FVM_HPP
#define TCLPOP_FVM_HPP

#include <array>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "tclpop/grid.hpp"
#include "tclpop/params.hpp"

namespace tclpop {

using SparseOp = Eigen::SparseMatrix<double>;
using RowSparseOp = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Cell-average density vector over the flat grid index.
struct PdfState {
    Eigen::VectorXd F;
    double time = 0;
};

/// F' = (A + B0*eps0 + B1*eps1) F.
struct BilinearModel {
    SparseOp A, B0, B1;
    HybridGrid grid;
    TclParams params;

    int size() const { return static_cast<int>(A.rows()); }
};

/// Face fluxes of both mode chains for one state. flux0/flux1 hold the
/// advective-diffusive face values of each chain in face order (the
/// junction entry is the band-side value, before reinjection). The named
/// scalars expose the thermostat bookkeeping at t_min and t_max.
struct FluxField {
    std::vector<double> face_x0, flux0; // mode-0 chain: t_lo .. t_max
    std::vector<double> face_x1, flux1; // mode-1 chain: t_min .. t_hi
    double absorbed_at_tmin = 0; // outflow of the on-chain at t_min (<= 0)
    double absorbed_at_tmax = 0; // outflow of the off-chain at t_max (>= 0)
    double h0b_at_tmin = 0, h0b_at_tmax = 0;
    double h1b_at_tmin = 0, h1b_at_tmax = 0;
    double h0a_at_tmin = 0; // off-chain flux at t_min seen from the pad side
    double h1c_at_tmax = 0; // on-chain flux at t_max seen from the pad side
};

/// Third-order upstream face value from three uniform-width cell averages,
/// ordered from the far upstream cell to the downstream cell.
inline double reconstruct_face(double f_upup, double f_up, double f_down) {
    return (-f_upup + 5.0 * f_up + 2.0 * f_down) / 6.0;
}

/// Quadratic-reconstruction weights for three contiguous cells with edges
/// e0 < e1 < e2 < e3, evaluated at position xf. The weights pair with the
/// cell averages over (e0,e1), (e1,e2), (e2,e3) and reproduce any
/// polynomial of degree <= 2 exactly.
std::array<double, 3> face_weights(double e0, double e1, double e2, double e3, double xf);

/// Drift-diffusion operator of the unactuated system: advective face fluxes
/// by upstream quadratic reconstruction, diffusive by central two-point
/// gradients, absorbing faces inside the band edges, zero-flux outer
/// truncation, and thermostat reinjection closing the mass balance.
SparseOp assemble_A(const HybridGrid& grid, const TclParams& p);

/// Unit-rate broadcast transfer operator. direction On builds B1
/// (off-band safe cells to the co-located on-band cells), Off builds B0.
SparseOp assemble_B(const HybridGrid& grid, const TclParams& p, SwitchDirection direction);

BilinearModel assemble_operators(const HybridGrid& grid, const TclParams& p);

/// y = M x with one fixed-order dot product per row, so the result is
/// bitwise identical at any thread count. The parallel form splits rows
/// across OpenMP threads; the serial form is the reference.
void apply_rowmajor_serial(const RowSparseOp& m, const Eigen::VectorXd& x, Eigen::VectorXd& y);
void apply_rowmajor_parallel(const RowSparseOp& m, const Eigen::VectorXd& x, Eigen::VectorXd& y);

/// A + eps0*B0 + eps1*B1 in row-major form for stepping.
RowSparseOp combined_operator(const BilinearModel& model, std::pair<double, double> eps);

/// Largest stable substep for the explicit integrator.
double stable_substep(const HybridGrid& grid, const TclParams& p, std::pair<double, double> eps);

/// Advances the state by dt_macro under constant eps with classical RK4,
/// internally substepping to satisfy the stability bound.
PdfState step(const BilinearModel& model, const PdfState& state, std::pair<double, double> eps,
              double dt_macro);

/// Mass-one stationary solution of the unactuated operator.
PdfState stationary_state(const BilinearModel& model);

double total_mass(const PdfState& state, const HybridGrid& grid);

/// Population-normalized expected power r * (on-segment mass).
double power_from_state(const PdfState& state, const HybridGrid& grid, const TclParams& p);

FluxField flux_diagnostics(const PdfState& state, const HybridGrid& grid, const TclParams& p);

/// Edge list covering the whole truncated domain (pad, band, pad), shared
/// by both modes; the layout Monte Carlo histograms use.
std::vector<double> histogram_edges(const HybridGrid& grid);

/// Per-mode cell averages expanded onto histogram_edges(grid); cells a mode
/// does not occupy read zero.
struct GriddedDensity {
    std::vector<double> edges;
    std::vector<double> f0, f1;
    double time = 0;
};
GriddedDensity density_on_grid(const PdfState& state, const HybridGrid& grid);

} // namespace tclpop

#endif
