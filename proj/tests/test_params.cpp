#include "wgsf/params.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace wgsf;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("raman rate closed forms", "[params]") {
    CHECK_THAT(raman_rate(2.0, 3.0, 3.0, 0.0), WithinRel(1.0, 1e-15));
    CHECK(raman_rate(2.0, 0.0, 1.5, 0.0) == 0.0);
    CHECK_THROWS_AS(raman_rate(1.0, 1.0, 0.0, 0.0), DomainError);
    CHECK_THROWS_AS(raman_rate(1.0, 1.0, 1.0, -1.0), DomainError);
}

TEST_CASE("raman rate is bounded by gamma'/16 when S grows with the drive", "[params]") {
    // S = 4 Op^2 in units where the detuning is 1
    const double gp = 3.0, c = 4.0;
    double best = 0.0;
    for (double op = 1e-3; op < 1e3; op *= 1.01) best = std::max(best, raman_rate(gp, op, 1.0, c * op * op));
    CHECK(best <= gp / 16.0);
    CHECK_THAT(best, WithinRel(gp / 16.0, 1e-3));
    CHECK_THAT(raman_rate_supremum(gp, c), WithinRel(gp / 16.0, 1e-15));
}

TEST_CASE("raman rate monotonicity", "[params]") {
    double prev = -1.0;
    for (double op = 0.0; op < 5.0; op += 0.25) {
        const double r = raman_rate(1.0, op, 2.0, 0.3);
        CHECK(r > prev);
        prev = r;
    }
    prev = 1e300;
    for (double dp = 0.5; dp < 5.0; dp += 0.25) {
        const double r = raman_rate(1.0, 1.0, -dp, 0.3);
        CHECK(r < prev);
        prev = r;
    }
}

TEST_CASE("velocity spread", "[params]") {
    CHECK(velocity_spread(0.0, 1.0, 1.0) == 0.0);
    CHECK_THROWS_AS(velocity_spread(1.0, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(velocity_spread(1.0, 1.0, 0.0), DomainError);
    // v_bar fixed so that 33 kHz gives 3.0
    const double lambda = 852e-9;
    const double v = 3.0 * lambda * 2.0 * std::numbers::pi * 33e3;
    auto sv = [&](double khz) { return velocity_spread(v, lambda, 2.0 * std::numbers::pi * khz * 1e3); };
    CHECK_THAT(sv(20.0), WithinAbs(5.0, 0.05));
    CHECK_THAT(sv(33.0), WithinAbs(3.0, 1e-12));
    CHECK_THAT(sv(67.0), WithinAbs(1.5, 0.05));
    CHECK_THAT(sv(20.0) / sv(67.0), WithinRel(67.0 / 20.0, 1e-12));
}

TEST_CASE("cooperation number", "[params]") {
    const auto a = cooperation_number(100, 1.0, 1.0, 2.0);
    CHECK_THAT(a.per_direction, WithinRel(100.0, 1e-15));
    CHECK_THAT(a.total, WithinRel(200.0, 1e-15));
    const auto b = cooperation_number(1.0, 1.0, 1.0, 0.092);
    CHECK_THAT(b.per_direction, WithinRel(0.002116, 1e-12));
    for (double n : {1.0, 17.0, 5e4})
        for (double e : {0.1, 0.7}) {
            const auto c = cooperation_number(n, e, 0.5, 0.092);
            CHECK(c.total == 2.0 * c.per_direction);
        }
    CHECK_THROWS_AS(cooperation_number(10, 1.5, 1.0, 0.1), DomainError);
    CHECK_THROWS_AS(cooperation_number(-1, 1.0, 1.0, 0.1), DomainError);
}

TEST_CASE("superradiant time and timescale ratio", "[params]") {
    CHECK_THAT(superradiant_time(2.0, 1.0), WithinRel(1.0, 1e-15));
    CHECK_THAT(superradiant_time(50.0, 1.0), WithinRel(2.0 * superradiant_time(100.0, 1.0), 1e-15));
    CHECK_THROWS_AS(superradiant_time(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(superradiant_time(1.0, 0.0), DomainError);
    CHECK(timescale_ratio(0.0, 10.0) == 0.0);
    CHECK_THAT(timescale_ratio(3.0, 6.0), WithinRel(1.0, 1e-15));
    CHECK_THROWS_AS(timescale_ratio(1.0, 0.0), DomainError);

    const auto s = physical_scales(0.7, 1.3, 2.1, 40.0);
    CHECK_THAT(s.r_tau, WithinRel(s.tau_col / s.tau_th, 1e-13));
    CHECK(std::isinf(physical_scales(0.0, 1.0, 1.0, 10.0).tau_th));
}

TEST_CASE("derived scales are invariant under a change of time unit", "[params]") {
    const double a = 10.0;
    const double v = 0.8, lambda = 1.7, gamma = 2.3, n = 37.0, gp = 5.0, op = 1.1, dp = 0.9, st = 0.2;
    // t -> a t: rates divide by a, speeds divide by a, lengths stay
    CHECK_THAT(velocity_spread(v / a, lambda, gamma / a), WithinRel(velocity_spread(v, lambda, gamma), 1e-14));
    CHECK_THAT(timescale_ratio(velocity_spread(v / a, lambda, gamma / a), n),
               WithinRel(timescale_ratio(velocity_spread(v, lambda, gamma), n), 1e-14));
    CHECK_THAT(superradiant_time(n, gamma / a), WithinRel(a * superradiant_time(n, gamma), 1e-14));
    CHECK_THAT(raman_rate(gp / a, op / a, dp / a, st / (a * a)), WithinRel(raman_rate(gp, op, dp, st) / a, 1e-14));
}

TEST_CASE("config validation", "[params]") {
    SimulationConfig c;
    CHECK_NOTHROW(validate(c));
    CHECK(c.n_steps() == std::llround(c.t_max / c.dt));
    CHECK(c.n_records() == c.n_steps() / c.record_stride + 1);

    auto bad = [&](auto mutate) {
        SimulationConfig d;
        mutate(d);
        CHECK_THROWS_AS(validate(d), ValidationError);
    };
    bad([](SimulationConfig& d) { d.n_spins = 0; });
    bad([](SimulationConfig& d) { d.n_traj = 0; });
    bad([](SimulationConfig& d) { d.dt = 0.0; });
    bad([](SimulationConfig& d) { d.t_max = d.dt / 2; });
    bad([](SimulationConfig& d) { d.gamma_1d = 0.0; });
    bad([](SimulationConfig& d) { d.gamma_single = -1.0; });
    bad([](SimulationConfig& d) { d.lambda0 = 0.0; });
    bad([](SimulationConfig& d) { d.lambda_p = -1.0; });
    bad([](SimulationConfig& d) { d.v_bar = -0.1; });
    bad([](SimulationConfig& d) { d.model_mode = ModelMode::static_blur; });
    bad([](SimulationConfig& d) { d.beta_minus_override = 1.5; });

    SimulationConfig s;
    s.model_mode = ModelMode::static_blur;
    s.tau_blur = 0.019;
    CHECK_NOTHROW(validate(s));
}

TEST_CASE("model mode names round trip", "[params]") {
    for (auto m : {ModelMode::dynamic_motion, ModelMode::static_blur, ModelMode::frozen})
        CHECK(parse_model_mode(to_string(m)) == m);
    CHECK(parse_model_mode("dynamic") == ModelMode::dynamic_motion);
    CHECK_FALSE(parse_model_mode("bogus"));
}

TEST_CASE("laboratory inputs map onto reduced units", "[params]") {
    ExperimentParameters p{33e3, 852e-9, 3.0 * 852e-9 * 2.0 * std::numbers::pi * 33e3, 120.0};
    const auto c = from_experiment(p);
    CHECK(c.n_spins == 120);
    CHECK_THAT(c.v_bar, WithinRel(3.0, 1e-12));
    CHECK_THAT(c.t_max, WithinRel(kDefaultWindow, 1e-12));
    CHECK_THAT(reduced_coupling(1000.0, 0.3, 100.0), WithinRel(3.0, 1e-15));
    CHECK_THAT(effective_cooperation(c), WithinRel(120.0, 1e-15));
}
