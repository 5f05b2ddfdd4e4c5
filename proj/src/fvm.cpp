#include "tclpop/fvm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include <Eigen/SparseLU>

#include "tclpop/errors.hpp"
#include "tclpop/model.hpp"

namespace tclpop {

std::array<double, 3> face_weights(double e0, double e1, double e2, double e3, double xf) {
    // Match the three cell averages of a quadratic and evaluate it at xf.
    // Shifting by xf turns the target into the constant coefficient, so the
    // weights solve M^T w = (1,0,0) with M's rows the cells' moment rows.
    const double s0 = e0 - xf, s1 = e1 - xf, s2 = e2 - xf, s3 = e3 - xf;
    auto m1 = [](double l, double r) { return 0.5 * (l + r); };
    auto m2 = [](double l, double r) { return (l * l + l * r + r * r) / 3.0; };
    const double a[3][3] = {
        {1.0, 1.0, 1.0},
        {m1(s0, s1), m1(s1, s2), m1(s2, s3)},
        {m2(s0, s1), m2(s1, s2), m2(s2, s3)},
    };
    const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                     - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                     + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    const double span = e3 - e0;
    if (std::abs(det) < 1e-12 * span * span)
        return {0.0, 1.0, 0.0};
    auto cof = [&](int r, int c) {
        // cyclic index shift already carries the cofactor sign
        const int r1 = (r + 1) % 3, r2 = (r + 2) % 3;
        const int c1 = (c + 1) % 3, c2 = (c + 2) % 3;
        return a[r1][c1] * a[r2][c2] - a[r1][c2] * a[r2][c1];
    };
    // w = A^{-T} (1,0,0): first column of A^{-1}, i.e. cofactors of row 0.
    return {cof(0, 0) / det, cof(0, 1) / det, cof(0, 2) / det};
}

namespace {

struct FaceStencil {
    double x = 0;
    std::vector<std::pair<int, double>> terms; // flux = sum w_k * F[idx_k]
};

struct ChainScheme {
    std::vector<int> cells;   // flat indices in chain order
    std::vector<double> width;
    std::vector<FaceStencil> face; // cells.size() + 1
};

ChainScheme build_chain(const HybridGrid& g, const TclParams& p, int mode) {
    ChainScheme ch;
    ch.cells = g.mode_cells(mode);
    const std::vector<double> edges = g.mode_edges(mode);
    const int m = static_cast<int>(ch.cells.size());
    ch.width.resize(m);
    for (int j = 0; j < m; ++j) ch.width[j] = g.width[ch.cells[j]];
    ch.face.resize(m + 1);
    const double D = 0.5 * p.sigma * p.sigma;

    for (int i = 0; i <= m; ++i) {
        FaceStencil& fs = ch.face[i];
        fs.x = edges[i];
        const double u = drift(p, mode, fs.x);

        if (mode == 0 && i == 0) continue; // truncation face at t_lo, zero flux
        if (mode == 1 && i == m) continue; // truncation face at t_hi, zero flux

        if (mode == 1 && i == 0) {
            // absorbing face at t_min: the face density vanishes, leaving
            // leftward advection of the first cell plus one-sided diffusion
            double w = std::min(u, 0.0);
            if (D > 0) w -= 2.0 * D / ch.width[0];
            fs.terms.push_back({ch.cells[0], w});
            continue;
        }
        if (mode == 0 && i == m) {
            // absorbing face at t_max, mirrored
            double w = std::max(u, 0.0);
            if (D > 0) w += 2.0 * D / ch.width[m - 1];
            fs.terms.push_back({ch.cells[m - 1], w});
            continue;
        }

        // interior face between chain cells i-1 and i
        if (u >= 0) {
            if (i >= 2) {
                const auto w = face_weights(edges[i - 2], edges[i - 1], edges[i], edges[i + 1],
                                            edges[i]);
                fs.terms.push_back({ch.cells[i - 2], u * w[0]});
                fs.terms.push_back({ch.cells[i - 1], u * w[1]});
                fs.terms.push_back({ch.cells[i], u * w[2]});
            } else {
                fs.terms.push_back({ch.cells[i - 1], u});
            }
        } else {
            if (i + 1 < m) {
                const auto w = face_weights(edges[i - 1], edges[i], edges[i + 1], edges[i + 2],
                                            edges[i]);
                fs.terms.push_back({ch.cells[i - 1], u * w[0]});
                fs.terms.push_back({ch.cells[i], u * w[1]});
                fs.terms.push_back({ch.cells[i + 1], u * w[2]});
            } else {
                fs.terms.push_back({ch.cells[i], u});
            }
        }
        if (D > 0) {
            const double dc = 0.5 * (ch.width[i - 1] + ch.width[i]);
            fs.terms.push_back({ch.cells[i - 1], D / dc});
            fs.terms.push_back({ch.cells[i], -D / dc});
        }
    }
    return ch;
}

void check_consistent(const HybridGrid& g, const TclParams& p) {
    const bool ok = g.size() > 0 && std::abs(g.t_min - p.t_min) < 1e-12 &&
                    std::abs(g.t_max - p.t_max) < 1e-12 &&
                    std::abs(g.mask_cells_off * g.dx_band - p.delta_t0) < 1e-9 &&
                    std::abs(g.mask_cells_on * g.dx_band - p.delta_t1) < 1e-9;
    if (!ok)
        throw ScenarioError("grid does not match the parameter set it is used with");
}

double evaluate_flux(const FaceStencil& fs, const Eigen::VectorXd& F) {
    double v = 0;
    for (const auto& [idx, w] : fs.terms) v += w * F[idx];
    return v;
}

} // namespace

SparseOp assemble_A(const HybridGrid& grid, const TclParams& p) {
    p.validate();
    check_consistent(grid, p);

    const ChainScheme c0 = build_chain(grid, p, 0);
    const ChainScheme c1 = build_chain(grid, p, 1);

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(grid.size()) * 10);

    auto add_chain = [&trip](const ChainScheme& ch) {
        const int m = static_cast<int>(ch.cells.size());
        for (int j = 0; j < m; ++j) {
            const int row = ch.cells[j];
            const double inv_w = 1.0 / ch.width[j];
            for (const auto& [idx, w] : ch.face[j].terms)
                trip.emplace_back(row, idx, w * inv_w);
            for (const auto& [idx, w] : ch.face[j + 1].terms)
                trip.emplace_back(row, idx, -w * inv_w);
        }
    };
    add_chain(c0);
    add_chain(c1);

    // Thermostat reinjection: the on-chain outflow at t_min re-enters the
    // off chain through the pad-side face at t_min, and the off-chain
    // outflow at t_max enters the on pad at t_max. This closes the weighted
    // column sums exactly.
    {
        const int row = grid.flat_index(Segment::Zero_a, grid.n_pad_left - 1);
        const double inv_w = 1.0 / grid.width[row];
        for (const auto& [idx, w] : c1.face[0].terms)
            trip.emplace_back(row, idx, -w * inv_w);
    }
    {
        const int row = grid.flat_index(Segment::One_c, 0);
        const double inv_w = 1.0 / grid.width[row];
        for (const auto& [idx, w] : c0.face.back().terms)
            trip.emplace_back(row, idx, w * inv_w);
    }

    SparseOp A(grid.size(), grid.size());
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    return A;
}

SparseOp assemble_B(const HybridGrid& grid, const TclParams& p, SwitchDirection direction) {
    p.validate();
    check_consistent(grid, p);

    std::vector<Eigen::Triplet<double>> trip;
    if (direction == SwitchDirection::On) {
        for (int j = grid.safe_on_begin(); j < grid.n_band; ++j) {
            const int from = grid.flat_index(Segment::Zero_b, j);
            const int to = grid.flat_index(Segment::One_b, j);
            trip.emplace_back(from, from, -1.0);
            trip.emplace_back(to, from, 1.0);
        }
    } else {
        for (int j = 0; j < grid.safe_off_end(); ++j) {
            const int from = grid.flat_index(Segment::One_b, j);
            const int to = grid.flat_index(Segment::Zero_b, j);
            trip.emplace_back(from, from, -1.0);
            trip.emplace_back(to, from, 1.0);
        }
    }
    SparseOp B(grid.size(), grid.size());
    B.setFromTriplets(trip.begin(), trip.end());
    B.makeCompressed();
    return B;
}

BilinearModel assemble_operators(const HybridGrid& grid, const TclParams& p) {
    BilinearModel m;
    m.grid = grid;
    m.params = p;
    m.A = assemble_A(grid, p);
    m.B0 = assemble_B(grid, p, SwitchDirection::Off);
    m.B1 = assemble_B(grid, p, SwitchDirection::On);
    return m;
}

void apply_rowmajor_serial(const RowSparseOp& m, const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    const int rows = static_cast<int>(m.rows());
    y.resize(rows);
    const int* outer = m.outerIndexPtr();
    const int* inner = m.innerIndexPtr();
    const double* val = m.valuePtr();
    for (int r = 0; r < rows; ++r) {
        double acc = 0;
        for (int k = outer[r]; k < outer[r + 1]; ++k) acc += val[k] * x[inner[k]];
        y[r] = acc;
    }
}

void apply_rowmajor_parallel(const RowSparseOp& m, const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    const int rows = static_cast<int>(m.rows());
    y.resize(rows);
    const int* outer = m.outerIndexPtr();
    const int* inner = m.innerIndexPtr();
    const double* val = m.valuePtr();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int r = 0; r < rows; ++r) {
        double acc = 0;
        for (int k = outer[r]; k < outer[r + 1]; ++k) acc += val[k] * x[inner[k]];
        y[r] = acc;
    }
}

RowSparseOp combined_operator(const BilinearModel& model, std::pair<double, double> eps) {
    if (eps.first < 0 || eps.second < 0)
        throw ScenarioError("broadcast rates must be nonnegative");
    RowSparseOp m = model.A;
    if (eps.first > 0) m += RowSparseOp(eps.first * model.B0);
    if (eps.second > 0) m += RowSparseOp(eps.second * model.B1);
    m.makeCompressed();
    return m;
}

double stable_substep(const HybridGrid& grid, const TclParams& p, std::pair<double, double> eps) {
    double dx_min = grid.width[0];
    for (double w : grid.width) dx_min = std::min(dx_min, w);

    double umax = 0;
    for (double x : {grid.t_lo, grid.t_max})
        umax = std::max(umax, std::abs(drift(p, 0, x)));
    for (double x : {grid.t_min, grid.t_hi})
        umax = std::max(umax, std::abs(drift(p, 1, x)));

    double dt = std::numeric_limits<double>::infinity();
    if (umax > 0) dt = std::min(dt, dx_min / umax);
    if (p.sigma > 0) dt = std::min(dt, dx_min * dx_min / (p.sigma * p.sigma));
    const double rate = eps.first + eps.second;
    if (rate > 0) dt = std::min(dt, 1.0 / rate);
    if (!std::isfinite(dt))
        throw NumericalError("degenerate dynamics: no finite stability bound");
    return 0.5 * dt;
}

PdfState step(const BilinearModel& model, const PdfState& state, std::pair<double, double> eps,
              double dt_macro) {
    if (!(dt_macro > 0) || !std::isfinite(dt_macro))
        throw ScenarioError("step needs a positive macro interval");
    if (state.F.size() != model.size())
        throw ScenarioError("state size does not match the model");

    const RowSparseOp m = combined_operator(model, eps);
    const double h = stable_substep(model.grid, model.params, eps);
    const double n_sub_real = std::ceil(dt_macro / h);
    if (!(n_sub_real < 1e6))
        throw NumericalError("substep count exceeds the refinement limit; "
                             "the stability bound cannot be met");
    const long n_sub = std::max(1L, static_cast<long>(n_sub_real));
    const double dt = dt_macro / static_cast<double>(n_sub);

    Eigen::VectorXd F = state.F;
    Eigen::VectorXd k1, k2, k3, k4, tmp;
    for (long s = 0; s < n_sub; ++s) {
        apply_rowmajor_parallel(m, F, k1);
        tmp = F + (0.5 * dt) * k1;
        apply_rowmajor_parallel(m, tmp, k2);
        tmp = F + (0.5 * dt) * k2;
        apply_rowmajor_parallel(m, tmp, k3);
        tmp = F + dt * k3;
        apply_rowmajor_parallel(m, tmp, k4);
        F += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!F.allFinite())
        throw NumericalError("time integration diverged to a non-finite state");

    PdfState out;
    out.F = std::move(F);
    out.time = state.time + dt_macro;
    return out;
}

PdfState stationary_state(const BilinearModel& model) {
    const int n = model.size();
    const HybridGrid& g = model.grid;

    // Bordered system: one row of A replaced by the mass functional, pinned
    // to one. Any row works since the weighted column sums vanish.
    const int pin = g.flat_index(Segment::Zero_b, g.n_band / 2);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(model.A.nonZeros() + n);
    for (int c = 0; c < model.A.outerSize(); ++c)
        for (SparseOp::InnerIterator it(model.A, c); it; ++it)
            if (it.row() != pin) trip.emplace_back(it.row(), it.col(), it.value());
    for (int j = 0; j < n; ++j) trip.emplace_back(pin, j, g.width[j]);

    SparseOp M(n, n);
    M.setFromTriplets(trip.begin(), trip.end());
    M.makeCompressed();

    Eigen::SparseLU<SparseOp> lu;
    lu.analyzePattern(M);
    lu.factorize(M);
    if (lu.info() != Eigen::Success)
        throw NumericalError("stationary solve: factorization failed");

    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b[pin] = 1.0;
    Eigen::VectorXd F = lu.solve(b);
    for (int it = 0; it < 2; ++it) {
        Eigen::VectorXd r = b - M * F;
        F += lu.solve(r);
    }
    if (!F.allFinite())
        throw NumericalError("stationary solve: non-finite solution");

    double mass = 0;
    for (int j = 0; j < n; ++j) mass += F[j] * g.width[j];
    if (!(std::abs(mass) > 0))
        throw NumericalError("stationary solve: zero-mass null vector");
    F /= mass;

    PdfState st;
    st.F = std::move(F);
    st.time = 0;
    return st;
}

double total_mass(const PdfState& state, const HybridGrid& grid) {
    double m = 0;
    for (int j = 0; j < grid.size(); ++j) m += state.F[j] * grid.width[j];
    return m;
}

double power_from_state(const PdfState& state, const HybridGrid& grid, const TclParams& p) {
    double on_mass = 0;
    for (int j : grid.mode_cells(1)) on_mass += state.F[j] * grid.width[j];
    return p.rated_power * on_mass;
}

FluxField flux_diagnostics(const PdfState& state, const HybridGrid& grid, const TclParams& p) {
    p.validate();
    check_consistent(grid, p);
    if (state.F.size() != grid.size())
        throw ScenarioError("state size does not match the grid");

    const ChainScheme c0 = build_chain(grid, p, 0);
    const ChainScheme c1 = build_chain(grid, p, 1);

    FluxField out;
    out.face_x0.reserve(c0.face.size());
    out.flux0.reserve(c0.face.size());
    for (const FaceStencil& fs : c0.face) {
        out.face_x0.push_back(fs.x);
        out.flux0.push_back(evaluate_flux(fs, state.F));
    }
    out.face_x1.reserve(c1.face.size());
    out.flux1.reserve(c1.face.size());
    for (const FaceStencil& fs : c1.face) {
        out.face_x1.push_back(fs.x);
        out.flux1.push_back(evaluate_flux(fs, state.F));
    }

    const int junction0 = grid.n_pad_left; // face index of t_min in the off chain
    const int junction1 = grid.n_band;     // face index of t_max in the on chain
    out.absorbed_at_tmin = out.flux1.front();
    out.absorbed_at_tmax = out.flux0.back();
    out.h1b_at_tmin = out.flux1.front();
    out.h0b_at_tmin = out.flux0[junction0];
    out.h0a_at_tmin = out.flux0[junction0] + out.flux1.front();
    out.h0b_at_tmax = out.flux0.back();
    out.h1b_at_tmax = out.flux1[junction1];
    out.h1c_at_tmax = out.flux1[junction1] + out.flux0.back();
    return out;
}

std::vector<double> histogram_edges(const HybridGrid& grid) {
    std::vector<double> e;
    e.reserve(grid.n_pad_left + grid.n_band + grid.n_pad_right + 1);
    for (int j = 0; j <= grid.n_pad_left; ++j) e.push_back(grid.t_lo + j * grid.dx_pad_left);
    e.back() = grid.t_min;
    for (int j = 1; j <= grid.n_band; ++j) e.push_back(grid.t_min + j * grid.dx_band);
    e.back() = grid.t_max;
    for (int j = 1; j <= grid.n_pad_right; ++j) e.push_back(grid.t_max + j * grid.dx_pad_right);
    e.back() = grid.t_hi;
    return e;
}

GriddedDensity density_on_grid(const PdfState& state, const HybridGrid& grid) {
    if (state.F.size() != grid.size())
        throw ScenarioError("state size does not match the grid");
    GriddedDensity out;
    out.edges = histogram_edges(grid);
    const int n_bins = static_cast<int>(out.edges.size()) - 1;
    out.f0.assign(n_bins, 0.0);
    out.f1.assign(n_bins, 0.0);
    out.time = state.time;

    const std::vector<int> cells0 = grid.mode_cells(0);
    for (std::size_t j = 0; j < cells0.size(); ++j)
        out.f0[j] = state.F[cells0[j]];
    const std::vector<int> cells1 = grid.mode_cells(1);
    const int shift = grid.n_pad_left;
    for (std::size_t j = 0; j < cells1.size(); ++j)
        out.f1[shift + j] = state.F[cells1[j]];
    return out;
}

} // namespace tclpop
