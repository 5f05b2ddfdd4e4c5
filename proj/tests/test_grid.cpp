#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>

#include "tclpop/errors.hpp"
#include "tclpop/grid.hpp"

using namespace tclpop;

TEST_CASE("band discretization and segment layout") {
    TclParams p = TclParams::fridge(); // band [2, 5]
    HybridGrid g = build_grid(p, 1.0, 1.0, 120);

    CHECK(g.n_band == 120);
    CHECK(g.dx_band == doctest::Approx(0.025));
    CHECK(g.t_lo == doctest::Approx(1.0));
    CHECK(g.t_hi == doctest::Approx(6.0));

    // flat layout [Zero_a | Zero_b | One_b | One_c]
    CHECK(g.seg_offset(Segment::Zero_a) == 0);
    CHECK(g.seg_offset(Segment::Zero_b) == g.n_pad_left);
    CHECK(g.seg_offset(Segment::One_b) == g.n_pad_left + g.n_band);
    CHECK(g.seg_offset(Segment::One_c) == g.n_pad_left + 2 * g.n_band);
    CHECK(g.size() == g.n_pad_left + 2 * g.n_band + g.n_pad_right);

    CHECK(g.seg_count(Segment::Zero_b) == 120);
    CHECK(g.seg_count(Segment::One_b) == 120);
    CHECK(g.seg_dx(Segment::Zero_b) == g.dx_band);

    // pads cover their kelvin width
    CHECK(g.n_pad_left * g.dx_pad_left == doctest::Approx(1.0));
    CHECK(g.n_pad_right * g.dx_pad_right == doctest::Approx(1.0));

    // mask boundaries land exactly on faces: delta = 0.5 = 20 cells of 0.025
    CHECK(g.mask_cells_on == 20);
    CHECK(g.mask_cells_off == 20);
    CHECK(g.safe_on_begin() == 20);
    CHECK(g.safe_off_end() == 100);
}

TEST_CASE("cell centers and widths are consistent") {
    TclParams p = TclParams::fridge();
    HybridGrid g = build_grid(p, 1.0, 1.0, 60);

    for (int i = 0; i < g.size(); ++i) {
        CHECK(g.width[i] > 0);
        CHECK(std::isfinite(g.center[i]));
    }

    // first band cell of mode 0 starts at t_min
    int i0 = g.flat_index(Segment::Zero_b, 0);
    CHECK(g.center[i0] == doctest::Approx(p.t_min + g.dx_band / 2));
    // last band cell of mode 1 ends at t_max
    int i1 = g.flat_index(Segment::One_b, g.n_band - 1);
    CHECK(g.center[i1] == doctest::Approx(p.t_max - g.dx_band / 2));
    // first pad cell starts at t_lo
    CHECK(g.center[0] == doctest::Approx(g.t_lo + g.dx_pad_left / 2));
    // last pad cell ends at t_hi
    CHECK(g.center[g.size() - 1] == doctest::Approx(g.t_hi - g.dx_pad_right / 2));

    // segment labels match the layout
    CHECK(g.segment[0] == Segment::Zero_a);
    CHECK(g.segment[g.flat_index(Segment::Zero_b, 0)] == Segment::Zero_b);
    CHECK(g.segment[g.flat_index(Segment::One_b, 5)] == Segment::One_b);
    CHECK(g.segment[g.size() - 1] == Segment::One_c);
}

TEST_CASE("misaligned mask boundaries are rejected with a usable hint") {
    TclParams p = TclParams::fridge(); // band 3 K, delta 0.5 K
    // 100 cells -> dx = 0.03, and 0.5 / 0.03 = 16.67 is not an integer
    CHECK_THROWS_AS(build_grid(p, 1.0, 1.0, 100), ScenarioError);
    try {
        build_grid(p, 1.0, 1.0, 100);
    } catch (const ScenarioError& err) {
        // the hint must name a count that actually works
        std::string msg = err.what();
        CHECK(msg.find("102") != std::string::npos); // 3/102 divides 0.5 evenly
        CHECK_NOTHROW(build_grid(p, 1.0, 1.0, 102));
    }
}

TEST_CASE("zero safe distances accept any cell count") {
    TclParams p = TclParams::fridge();
    p.delta_t0 = 0;
    p.delta_t1 = 0;
    HybridGrid g = build_grid(p, 1.0, 1.0, 100);
    CHECK(g.n_band == 100);
    CHECK(g.mask_cells_on == 0);
    CHECK(g.mask_cells_off == 0);
    CHECK(g.safe_on_begin() == 0);
    CHECK(g.safe_off_end() == 100);
}

TEST_CASE("grid construction rejects nonsense") {
    TclParams p = TclParams::fridge();
    CHECK_THROWS_AS(build_grid(p, -0.5, 1.0, 120), ScenarioError);
    CHECK_THROWS_AS(build_grid(p, 1.0, 1.0, 0), ScenarioError);
    TclParams bad = p;
    bad.t_min = bad.t_max;
    CHECK_THROWS_AS(build_grid(bad, 1.0, 1.0, 120), ScenarioError);
}

TEST_CASE("band and mode edge lists") {
    TclParams p = TclParams::fridge();
    HybridGrid g = build_grid(p, 1.0, 1.0, 12);

    auto band = g.band_edges();
    REQUIRE(band.size() == 13);
    CHECK(band.front() == doctest::Approx(p.t_min));
    CHECK(band.back() == doctest::Approx(p.t_max));
    for (std::size_t j = 0; j + 1 < band.size(); ++j)
        CHECK(band[j + 1] - band[j] == doctest::Approx(0.25));

    auto e0 = g.mode_edges(0);
    REQUIRE(static_cast<int>(e0.size()) == g.n_pad_left + g.n_band + 1);
    CHECK(e0.front() == doctest::Approx(g.t_lo));
    CHECK(e0.back() == doctest::Approx(p.t_max));

    auto e1 = g.mode_edges(1);
    REQUIRE(static_cast<int>(e1.size()) == g.n_band + g.n_pad_right + 1);
    CHECK(e1.front() == doctest::Approx(p.t_min));
    CHECK(e1.back() == doctest::Approx(g.t_hi));

    // mode chains list flat indices in ascending temperature order
    auto c0 = g.mode_cells(0);
    REQUIRE(static_cast<int>(c0.size()) == g.n_pad_left + g.n_band);
    CHECK(c0.front() == 0);
    CHECK(c0.back() == g.flat_index(Segment::Zero_b, g.n_band - 1));
    auto c1 = g.mode_cells(1);
    CHECK(c1.front() == g.flat_index(Segment::One_b, 0));
    CHECK(c1.back() == g.size() - 1);
    for (std::size_t j = 0; j + 1 < c0.size(); ++j)
        CHECK(g.center[c0[j]] < g.center[c0[j + 1]]);
    for (std::size_t j = 0; j + 1 < c1.size(); ++j)
        CHECK(g.center[c1[j]] < g.center[c1[j + 1]]);
}

TEST_CASE("pad cell counts cover fractional pads") {
    TclParams p = TclParams::fridge();
    HybridGrid g = build_grid(p, 0.99, 0.37, 120);
    // ceil(0.99 / 0.025) = 40 cells, ceil(0.37 / 0.025) = 15 cells
    CHECK(g.n_pad_left == 40);
    CHECK(g.n_pad_right == 15);
    CHECK(g.t_lo == doctest::Approx(p.t_min - 0.99));
    CHECK(g.t_hi == doctest::Approx(p.t_max + 0.37));
    CHECK(g.n_pad_left * g.dx_pad_left == doctest::Approx(0.99));
}
