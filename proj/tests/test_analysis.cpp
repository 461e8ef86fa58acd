#include "wgsf/analysis.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>

using namespace wgsf;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

using Points = std::vector<std::pair<double, double>>;

Points composite(double knee, double lo_slope, double hi_slope, int count, double noise, std::uint64_t seed) {
    Points p;
    NoiseStream r(seed, 0, 0);
    for (int i = 0; i < count; ++i) {
        const double x = 10.0 * std::pow(100.0, static_cast<double>(i) / (count - 1));  // 10 .. 1000
        const double y = x < knee ? std::pow(x / knee, lo_slope) : std::pow(x / knee, hi_slope);
        p.emplace_back(x, 37.0 * y * std::exp(noise * r.normal()));
    }
    return p;
}

}  // namespace

TEST_CASE("threshold fit recovers a synthetic slope-1 to slope-2 knee", "[analysis]") {
    // y = x below 100, x^2/100 above
    Points p;
    for (int i = 0; i < 20; ++i) {
        const double x = 10.0 * std::pow(100.0, i / 19.0);
        p.emplace_back(x, x < 100 ? x : x * x / 100.0);
    }
    const auto f = fit_threshold(p);
    CHECK(f.has_breakpoint);
    CHECK_THAT(f.breakpoint, WithinRel(100.0, 0.1));
    CHECK_THAT(f.slope_low, WithinAbs(1.0, 0.05));
    CHECK_THAT(f.slope_high, WithinAbs(2.0, 0.05));
    CHECK(f.residual >= 0.0);
    CHECK(f.breakpoint >= p.front().first);
    CHECK(f.breakpoint <= p.back().first);
}

TEST_CASE("threshold fit on noisy experiment-shaped data", "[analysis]") {
    const auto p = composite(150.0, 0.69, 2.0, 16, 0.03, 11);
    const auto f = fit_threshold(p);
    CHECK(f.has_breakpoint);
    CHECK_THAT(f.slope_low, WithinAbs(0.69, 0.15));
    CHECK_THAT(f.slope_high, WithinAbs(2.0, 0.15));
    CHECK(f.ci_low <= f.breakpoint);
    CHECK(f.ci_high >= f.breakpoint);
}

TEST_CASE("single power law reports no breakpoint", "[analysis]") {
    const auto p = composite(1.0, 1.7, 1.7, 15, 0.02, 5);
    const auto f = fit_threshold(p);
    CHECK_FALSE(f.has_breakpoint);
    CHECK(f.ci_low == Catch::Approx(p.front().first));
    CHECK(f.ci_high == Catch::Approx(p.back().first));
    CHECK_THAT(f.single_slope, WithinAbs(1.7, 0.05));
}

TEST_CASE("threshold fit is invariant under amplitude scaling", "[analysis]") {
    auto p = composite(80.0, 1.0, 2.0, 12, 0.05, 2);
    const auto a = fit_threshold(p);
    for (auto& q : p) q.second *= 123.4;
    const auto b = fit_threshold(p);
    CHECK_THAT(b.breakpoint, WithinRel(a.breakpoint, 1e-9));
    CHECK_THAT(b.slope_low, WithinAbs(a.slope_low, 1e-9));
    CHECK_THAT(b.slope_high, WithinAbs(a.slope_high, 1e-9));
    CHECK_THAT(b.intercept_low - a.intercept_low, WithinAbs(std::log(123.4), 1e-9));
    // order of the input points is irrelevant
    std::reverse(p.begin(), p.end());
    const auto c = fit_threshold(p);
    CHECK_THAT(c.breakpoint, WithinRel(b.breakpoint, 1e-12));
}

TEST_CASE("threshold fit input checks", "[analysis]") {
    Points few = {{1, 1}, {2, 2}, {3, 3}, {4, 4}, {5, 5}};
    CHECK_THROWS_AS(fit_threshold(few), InsufficientDataError);
    few.emplace_back(6, 0.0);
    CHECK_THROWS_AS(fit_threshold(few), DomainError);
    Points same(8, {5.0, 2.0});
    CHECK_THROWS_AS(fit_threshold(same), InsufficientDataError);
}

TEST_CASE("fwhm scaling fit", "[analysis]") {
    Points p;
    for (double n : {40.0, 57.0, 80.0, 113.0, 160.0}) p.emplace_back(n, 6.0 / n);
    const auto f = fit_fwhm_scaling(p, 1.0);
    CHECK_THAT(f.coefficient, WithinAbs(6.0, 1e-3));
    CHECK_THAT(f.exponent, WithinAbs(-1.0, 1e-3));
    const auto g = fit_fwhm_scaling(p, 2.0);
    CHECK_THAT(g.coefficient, WithinAbs(12.0, 1e-3));
    CHECK_THROWS_AS(fit_fwhm_scaling(std::span(p).first(3), 1.0), InsufficientDataError);
    p[1].second = -1.0;
    CHECK_THROWS_AS(fit_fwhm_scaling(p, 1.0), DomainError);
}

TEST_CASE("directionality sweep rows", "[analysis]") {
    SweepSpec spec;
    spec.base.gamma_1d = 1.0;
    spec.base.t_max = 0.25;
    spec.base.record_stride = 5;
    spec.base.n_traj = 300;
    spec.base.model_mode = ModelMode::dynamic_motion;
    spec.axis_n = {40, 20};
    spec.axis_sigma_v = {3.0, 0.0};
    spec.replicate_seeds = {7};
    const auto rows = sweep_directionality(spec);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].n_spins == 20);
    CHECK(rows[0].sigma_v == 0.0);
    for (const auto& r : rows) {
        CHECK(r.error.empty());
        if (r.sigma_v == 0.0) CHECK(std::abs(r.kappa) < 3.5 * r.standard_error);
    }
    auto permuted = spec;
    permuted.axis_n = {20, 40};
    permuted.axis_sigma_v = {0.0, 3.0};
    const auto again = sweep_directionality(permuted);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].kappa == again[i].kappa);
        CHECK(rows[i].r_plus == again[i].r_plus);
    }

    SweepSpec bad = spec;
    bad.axis_sigma_v = {-1.0};
    CHECK_THROWS_AS(validate(bad), ValidationError);
    bad.axis_sigma_v = {};
    CHECK_THROWS_AS(validate(bad), ValidationError);
}

TEST_CASE("sweep cells use the superradiant blur time on request", "[analysis]") {
    SweepSpec spec;
    spec.base.model_mode = ModelMode::static_blur;
    spec.base.tau_blur = 0.019;
    spec.axis_n = {100};
    spec.axis_sigma_v = {3.0};
    spec.replicate_seeds = {1};
    CHECK(sweep_cell(spec, 100, 3.0, 1).tau_blur == 0.019);
    spec.static_tau = StaticTau::superradiant;
    CHECK_THAT(*sweep_cell(spec, 100, 3.0, 1).tau_blur, WithinRel(0.02, 1e-14));
    CHECK_THAT(sweep_cell(spec, 100, 3.0, 1).v_bar, WithinRel(3.0, 1e-15));
}

TEST_CASE("oracle gate", "[analysis]") {
    SimulationConfig cfg;
    cfg.n_spins = 1;
    cfg.gamma_1d = 1e-9;
    cfg.gamma_single = 1.0;
    cfg.t_max = 2.0;
    cfg.record_stride = 100;
    cfg.n_traj = 20000;
    cfg.model_mode = ModelMode::frozen;
    const auto r = oracle_check(cfg);
    REQUIRE(r.free_decay_deviation);
    CHECK(*r.free_decay_deviation < 0.02);

    cfg.n_spins = 2;
    cfg.gamma_1d = 1.0;
    cfg.n_traj = 2000;
    EnsembleOptions bad;
    bad.run.symbol_phase = SymbolPhase::flipped;
    CHECK_FALSE(oracle_check(cfg, bad).passed);
}
