#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "tclpop/errors.hpp"
#include "tclpop/fvm.hpp"
#include "tclpop/grid.hpp"
#include "tclpop/metrics.hpp"

using namespace tclpop;

namespace {

TclParams fridge() { return TclParams::fridge(); }

BilinearModel fridge_model(int cells = 120) {
    TclParams p = fridge();
    return assemble_operators(build_grid(p, 1.0, 1.0, cells), p);
}

double cell_avg_poly(double a, double b, int degree) {
    // average of x^degree over (a, b)
    switch (degree) {
    case 0: return 1.0;
    case 1: return 0.5 * (a + b);
    default: return (a * a + a * b + b * b) / 3.0;
    }
}

Eigen::VectorXd gaussian_bump(const HybridGrid& g, Segment seg, double center, double s) {
    Eigen::VectorXd F = Eigen::VectorXd::Zero(g.size());
    for (int j = 0; j < g.seg_count(seg); ++j) {
        const int i = g.flat_index(seg, j);
        const double x = g.center[i];
        F[i] = std::exp(-0.5 * (x - center) * (x - center) / (s * s));
    }
    double mass = 0;
    for (int i = 0; i < g.size(); ++i) mass += F[i] * g.width[i];
    F /= mass;
    return F;
}

} // namespace

TEST_CASE("face_weights reproduce polynomials exactly") {
    SUBCASE("uniform cells give the classic third-order upwind weights") {
        auto w = face_weights(0.0, 1.0, 2.0, 3.0, 2.0);
        CHECK(w[0] == doctest::Approx(-1.0 / 6.0));
        CHECK(w[1] == doctest::Approx(5.0 / 6.0));
        CHECK(w[2] == doctest::Approx(1.0 / 3.0));
        CHECK(w[0] * 1.1 + w[1] * 2.2 + w[2] * 3.3 ==
              doctest::Approx(reconstruct_face(1.1, 2.2, 3.3)));
    }

    SUBCASE("non-uniform cells still integrate degree <= 2 exactly") {
        const double e[4] = {0.0, 0.5, 2.0, 3.0};
        for (double xf : {0.5, 2.0, 1.3}) {
            auto w = face_weights(e[0], e[1], e[2], e[3], xf);
            for (int deg = 0; deg <= 2; ++deg) {
                double got = 0;
                for (int c = 0; c < 3; ++c) got += w[c] * cell_avg_poly(e[c], e[c + 1], deg);
                const double want = std::pow(xf, deg);
                CHECK(got == doctest::Approx(want).epsilon(1e-12));
            }
        }
    }

    SUBCASE("mixed pad/band widths at a junction face") {
        // 0.02475-wide pad cells meeting 0.025-wide band cells
        const double e[4] = {1.9505, 1.97525, 2.0, 2.025};
        auto w = face_weights(e[0], e[1], e[2], e[3], 2.0);
        for (int deg = 0; deg <= 2; ++deg) {
            double got = 0;
            for (int c = 0; c < 3; ++c) got += w[c] * cell_avg_poly(e[c], e[c + 1], deg);
            CHECK(got == doctest::Approx(std::pow(2.0, deg)).epsilon(1e-10));
        }
    }
}

TEST_CASE("drift operator conserves mass in the column sums") {
    SUBCASE("uniform grid: plain column sums vanish") {
        BilinearModel m = fridge_model(); // pads 1.0 at dx 0.025: fully uniform
        for (int c = 0; c < m.A.outerSize(); ++c) {
            double sum = 0, norm = 0;
            for (SparseOp::InnerIterator it(m.A, c); it; ++it) {
                sum += it.value();
                norm += std::abs(it.value());
            }
            CHECK(std::abs(sum) <= 1e-12 * std::max(1.0, norm));
        }
    }

    SUBCASE("non-uniform grid: width-weighted column sums vanish") {
        TclParams p = fridge();
        HybridGrid g = build_grid(p, 0.99, 0.77, 120); // pad dx != band dx
        SparseOp A = assemble_A(g, p);
        for (int c = 0; c < A.outerSize(); ++c) {
            double sum = 0, norm = 0;
            for (SparseOp::InnerIterator it(A, c); it; ++it) {
                sum += g.width[it.row()] * it.value();
                norm += std::abs(g.width[it.row()] * it.value());
            }
            CHECK(std::abs(sum) <= 1e-12 * std::max(1.0, norm));
        }
    }
}

TEST_CASE("broadcast operators transfer between co-located cells only") {
    TclParams p = fridge();
    HybridGrid g = build_grid(p, 1.0, 1.0, 120);
    SparseOp B0 = assemble_B(g, p, SwitchDirection::Off);
    SparseOp B1 = assemble_B(g, p, SwitchDirection::On);

    // column sums exactly zero; entries only in the expected places
    auto check_columns = [&](const SparseOp& B, Segment from_seg, Segment to_seg, int lo, int hi) {
        for (int c = 0; c < B.outerSize(); ++c) {
            double sum = 0;
            int nnz = 0;
            for (SparseOp::InnerIterator it(B, c); it; ++it) {
                sum += it.value();
                ++nnz;
            }
            CHECK(sum == 0.0);

            const int band_j = c - g.seg_offset(from_seg);
            const bool active = g.segment[c] == from_seg && band_j >= lo && band_j < hi;
            if (active) {
                REQUIRE(nnz == 2);
                SparseOp::InnerIterator it(B, c);
                // column-major iteration is row-sorted; check the pair
                double diag = 0, off = 0;
                int off_row = -1;
                for (; it; ++it) {
                    if (it.row() == c)
                        diag = it.value();
                    else {
                        off = it.value();
                        off_row = static_cast<int>(it.row());
                    }
                }
                CHECK(diag == -1.0);
                CHECK(off == 1.0);
                CHECK(off_row == g.flat_index(to_seg, band_j));
            } else {
                CHECK(nnz == 0);
            }
        }
    };

    check_columns(B1, Segment::Zero_b, Segment::One_b, g.safe_on_begin(), g.n_band);
    check_columns(B0, Segment::One_b, Segment::Zero_b, 0, g.safe_off_end());
}

TEST_CASE("combined_operator matches the explicit sum") {
    BilinearModel m = fridge_model(24);
    const std::pair<double, double> eps{0.003, 0.011};
    RowSparseOp c = combined_operator(m, eps);
    SparseOp want = m.A + eps.first * m.B0 + eps.second * m.B1;
    Eigen::MatrixXd diff = Eigen::MatrixXd(SparseOp(c)) - Eigen::MatrixXd(want);
    CHECK(diff.cwiseAbs().maxCoeff() <= 1e-15);

    CHECK_THROWS_AS(combined_operator(m, {-0.1, 0.0}), ScenarioError);
}

TEST_CASE("row-major apply matches Eigen's product") {
    BilinearModel m = fridge_model(36);
    RowSparseOp op = combined_operator(m, {0.001, 0.002});
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(m.size(), -1.0, 2.0);

    Eigen::VectorXd want = op * x;
    Eigen::VectorXd y_serial, y_parallel;
    apply_rowmajor_serial(op, x, y_serial);
    apply_rowmajor_parallel(op, x, y_parallel);

    CHECK((y_serial - want).cwiseAbs().maxCoeff() <= 1e-12 * want.cwiseAbs().maxCoeff());
    // serial and parallel must agree bitwise (fixed per-row order)
    for (int i = 0; i < m.size(); ++i) CHECK(y_serial[i] == y_parallel[i]);
}

TEST_CASE("time stepping conserves mass to machine precision") {
    BilinearModel m = fridge_model();
    PdfState st;
    st.F = gaussian_bump(m.grid, Segment::Zero_b, 3.2, 0.3);
    st.time = 0;
    CHECK(total_mass(st, m.grid) == doctest::Approx(1.0).epsilon(1e-13));

    for (int k = 0; k < 5; ++k) st = step(m, st, {0.004, 0.008}, 60.0);
    CHECK(st.time == doctest::Approx(300.0));
    CHECK(std::abs(total_mass(st, m.grid) - 1.0) <= 1e-12);
}

TEST_CASE("time stepping is linear in the state") {
    BilinearModel m = fridge_model(60);
    PdfState f, g;
    f.F = gaussian_bump(m.grid, Segment::Zero_b, 3.0, 0.25);
    g.F = gaussian_bump(m.grid, Segment::One_b, 4.0, 0.3);

    PdfState fg;
    fg.F = 2.0 * f.F + 3.0 * g.F;

    const std::pair<double, double> eps{0.002, 0.005};
    PdfState sf = step(m, f, eps, 120.0);
    PdfState sg = step(m, g, eps, 120.0);
    PdfState sfg = step(m, fg, eps, 120.0);

    Eigen::VectorXd want = 2.0 * sf.F + 3.0 * sg.F;
    CHECK((sfg.F - want).cwiseAbs().maxCoeff() <= 1e-10 * want.cwiseAbs().maxCoeff());
}

TEST_CASE("noise-free advection transports the center of mass exactly") {
    TclParams p = fridge();
    p.sigma = 0;
    HybridGrid g = build_grid(p, 1.0, 1.0, 120);
    BilinearModel m = assemble_operators(g, p);

    PdfState st;
    st.F = gaussian_bump(g, Segment::Zero_b, 3.0, 0.2);
    st.time = 0;

    auto com = [&](const PdfState& s) {
        double num = 0, den = 0;
        for (int i : g.mode_cells(0)) {
            num += g.center[i] * s.F[i] * g.width[i];
            den += s.F[i] * g.width[i];
        }
        return num / den;
    };

    const double com0 = com(st);
    const double horizon = 600.0;
    PdfState out = step(m, st, {0.0, 0.0}, horizon);

    // the mean of a density advected by u = a x + b obeys the same affine
    // dynamics as a single trajectory
    const double eq0 = -p.b0 / p.a;
    const double want = eq0 + (com0 - eq0) * std::exp(p.a * horizon);
    CHECK(want - com0 > 0.1); // the test actually moves the profile
    CHECK(com(out) == doctest::Approx(want).epsilon(1e-3 / std::abs(want)));
    CHECK(std::abs(total_mass(out, g) - 1.0) <= 1e-12);
}

TEST_CASE("stationary state: mass one, nonnegative, and a fixed point") {
    BilinearModel m = fridge_model();
    PdfState st = stationary_state(m);

    CHECK(total_mass(st, m.grid) == doctest::Approx(1.0).epsilon(1e-12));
    // undershoot allowance: the quadratic reconstruction rings slightly at the
    // absorbing faces, whose boundary layer is thinner than a band cell
    CHECK(st.F.minCoeff() >= -1e-3);

    // residual of the generator
    Eigen::VectorXd r = m.A * st.F;
    CHECK(r.cwiseAbs().maxCoeff() <= 1e-8 * st.F.cwiseAbs().maxCoeff());

    // an hour of unactuated evolution does not move it
    PdfState later = step(m, st, {0.0, 0.0}, 3600.0);
    CHECK((later.F - st.F).cwiseAbs().maxCoeff() <= 1e-8 * st.F.cwiseAbs().maxCoeff());
}

TEST_CASE("stationary circulation matches the thermostat cycle rate") {
    TclParams p = fridge();
    BilinearModel m = fridge_model();
    PdfState st = stationary_state(m);
    FluxField fl = flux_diagnostics(st, m.grid, p);

    // deterministic cycle times of the affine drift
    const double eq0 = -p.b0 / p.a;
    const double eq1 = -p.b1 / p.a;
    const double t_off = std::log((p.t_max - eq0) / (p.t_min - eq0)) / p.a;
    const double t_on = std::log((p.t_min - eq1) / (p.t_max - eq1)) / p.a;
    const double c = 1.0 / (t_off + t_on);

    // off population flows up through mid-band at the circulation rate,
    // on population flows down at the same rate
    const int mid0 = m.grid.n_pad_left + m.grid.n_band / 2;
    const int mid1 = m.grid.n_band / 2;
    CHECK(fl.flux0[mid0] == doctest::Approx(c).epsilon(0.15));
    CHECK(fl.flux1[mid1] == doctest::Approx(-c).epsilon(0.15));

    // the two modes cancel at every shared band face
    for (int j = 0; j <= m.grid.n_band; ++j) {
        const double sum = fl.flux0[m.grid.n_pad_left + j] + fl.flux1[j];
        CHECK(std::abs(sum) <= 1e-10);
    }

    // pads carry no net flux at the thermostat faces
    CHECK(std::abs(fl.h0a_at_tmin) <= 1e-10);
    CHECK(std::abs(fl.h1c_at_tmax) <= 1e-10);

    // absorbing faces drain in the expected directions
    CHECK(fl.absorbed_at_tmin < 0);
    CHECK(fl.absorbed_at_tmax > 0);
    CHECK(fl.absorbed_at_tmax == doctest::Approx(c).epsilon(0.15));
}

TEST_CASE("stationary power approximates the deterministic duty cycle") {
    TclParams p = fridge();
    BilinearModel m = fridge_model();
    PdfState st = stationary_state(m);

    const double eq0 = -p.b0 / p.a;
    const double eq1 = -p.b1 / p.a;
    const double t_off = std::log((p.t_max - eq0) / (p.t_min - eq0)) / p.a;
    const double t_on = std::log((p.t_min - eq1) / (p.t_max - eq1)) / p.a;
    const double duty = t_on / (t_on + t_off);

    CHECK(power_from_state(st, m.grid, p) ==
          doctest::Approx(duty * p.rated_power).epsilon(0.10));
}

TEST_CASE("stationary profile converges under refinement") {
    TclParams p = fridge();
    BilinearModel coarse = fridge_model(60);
    BilinearModel fine = fridge_model(120);

    GriddedDensity dc = density_on_grid(stationary_state(coarse), coarse.grid);
    GriddedDensity df = density_on_grid(stationary_state(fine), fine.grid);

    // compare on the coarse edges
    std::vector<double> f0 = rebin_density(df.edges, df.f0, dc.edges);
    std::vector<double> f1 = rebin_density(df.edges, df.f1, dc.edges);
    CHECK(l1_distance(dc.edges, dc.f0, f0) + l1_distance(dc.edges, dc.f1, f1) <= 0.05);
}

TEST_CASE("density_on_grid lays both modes on the shared edges") {
    BilinearModel m = fridge_model(24);
    const HybridGrid& g = m.grid;
    PdfState st = stationary_state(m);
    GriddedDensity d = density_on_grid(st, g);

    REQUIRE(static_cast<int>(d.edges.size()) ==
            g.n_pad_left + g.n_band + g.n_pad_right + 1);
    CHECK(d.edges.front() == doctest::Approx(g.t_lo));
    CHECK(d.edges.back() == doctest::Approx(g.t_hi));

    // mode 0 occupies [t_lo, t_max): the trailing pad bins must read zero
    for (std::size_t j = g.n_pad_left + g.n_band; j < d.f0.size(); ++j) CHECK(d.f0[j] == 0.0);
    // mode 1 occupies (t_min, t_hi]: the leading pad bins must read zero
    for (int j = 0; j < g.n_pad_left; ++j) CHECK(d.f1[j] == 0.0);

    double mass = 0;
    for (std::size_t j = 0; j + 1 < d.edges.size(); ++j)
        mass += (d.f0[j] + d.f1[j]) * (d.edges[j + 1] - d.edges[j]);
    CHECK(mass == doctest::Approx(total_mass(st, g)).epsilon(1e-12));
}

TEST_CASE("step rejects bad input and hopeless refinement") {
    BilinearModel m = fridge_model(24);
    PdfState st;
    st.F = gaussian_bump(m.grid, Segment::Zero_b, 3.0, 0.3);

    CHECK_THROWS_AS(step(m, st, {0.0, 0.0}, 0.0), ScenarioError);
    CHECK_THROWS_AS(step(m, st, {0.0, 0.0}, -5.0), ScenarioError);

    PdfState wrong;
    wrong.F = Eigen::VectorXd::Ones(3);
    CHECK_THROWS_AS(step(m, wrong, {0.0, 0.0}, 1.0), ScenarioError);

    CHECK_THROWS_AS(step(m, st, {0.0, 0.0}, 1e9), NumericalError);
}

TEST_CASE("operators reject a mismatched parameter set") {
    TclParams p = fridge();
    HybridGrid g = build_grid(p, 1.0, 1.0, 120);
    TclParams q = p;
    q.t_max = 5.5;
    CHECK_THROWS_AS(assemble_A(g, q), ScenarioError);
    CHECK_THROWS_AS(assemble_B(g, q, SwitchDirection::On), ScenarioError);
}

TEST_CASE("stable_substep honours each mechanism") {
    TclParams p = fridge();
    HybridGrid g = build_grid(p, 1.0, 1.0, 120);

    const double dt0 = stable_substep(g, p, {0.0, 0.0});
    CHECK(dt0 > 0);

    // a huge rate dominates the bound
    const double dt_rate = stable_substep(g, p, {50.0, 50.0});
    CHECK(dt_rate == doctest::Approx(0.5 / 100.0));

    // refining the grid shrinks the diffusion-limited bound quadratically
    TclParams q = p;
    q.sigma = 0.1; // diffusion-dominated
    HybridGrid g2 = build_grid(q, 1.0, 1.0, 240);
    const double a1 = stable_substep(g, q, {0.0, 0.0});
    const double a2 = stable_substep(g2, q, {0.0, 0.0});
    CHECK(a1 / a2 == doctest::Approx(4.0).epsilon(0.05));
}
