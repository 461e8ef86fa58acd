#include "wgsf/analysis.hpp"
#include "wgsf/oracle.hpp"

#include <catch_amalgamated.hpp>

#include <numeric>

using namespace wgsf;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<double> grid(double t_max, int n) {
    std::vector<double> t(n + 1);
    for (int i = 0; i <= n; ++i) t[i] = t_max * i / n;
    return t;
}

OracleSeries evolve(const std::vector<double>& z, const WaveguideGeometry& geo, double gs, const std::vector<double>& t,
                    DensityState* fin = nullptr) {
    const auto c = build_couplings(geo, z);
    const auto [p, m] = field_modes(geo, z);
    return evolve_master_equation(c, gs, static_cast<int>(z.size()), t, p, m, geo.gamma_1d, {}, fin);
}

}  // namespace

TEST_CASE("single spin decays at the total rate", "[oracle]") {
    const auto t = grid(2.0, 20);
    const auto s = evolve({0.0}, dynamic_geometry(1.0, 1.0, 0.6), 0.4, t);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double p = 0.5 * (1.0 + s.sz_total[i]);
        CHECK_THAT(p, WithinAbs(std::exp(-t[i]), 1e-9));
        CHECK_THAT(s.i_plus[i], WithinAbs(0.3 * p, 1e-9));
    }
}

TEST_CASE("two coincident spins cascade through the symmetric state", "[oracle]") {
    const double g1d = 0.8;
    const auto t = grid(1.5, 15);
    const auto s = evolve({0.25, 0.25}, dynamic_geometry(1.0, 1.0, g1d), 0.0, t);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double r = 2.0 * g1d;
        const double p_ee = std::exp(-r * t[i]);
        const double p_s = r * t[i] * std::exp(-r * t[i]);
        CHECK_THAT(s.sz_total[i], WithinAbs(2.0 * p_ee + p_s - (2.0 - 2.0 * p_ee - p_s), 1e-8));
    }
    // fourth moment of the fully inverted state: (G1D/2)^2 * 2 N (N - 1)
    CHECK_THAT(s.fourth_plus[0], WithinRel(0.25 * g1d * g1d * 4.0, 1e-12));
}

TEST_CASE("mirror-symmetric arrangement emits equally and labels do not matter", "[oracle]") {
    // mirror-symmetric about 0.95: reflection maps the set onto itself and swaps the two directions
    const std::vector<double> z = {0.1, 1.8, 0.57, 1.33};
    const auto geo = dynamic_geometry(1.0, 1.0, 1.0);
    const auto t = grid(1.0, 20);
    const auto s = evolve(z, geo, 1.0, t);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK_THAT(s.i_plus[i], WithinAbs(s.i_minus[i], 1e-8));

    const std::vector<double> zp = {z[2], z[0], z[3], z[1]};
    const auto q = evolve(zp, geo, 1.0, t);
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK_THAT(q.i_plus[i], WithinAbs(s.i_plus[i], 1e-10));
        CHECK_THAT(q.i_minus[i], WithinAbs(s.i_minus[i], 1e-10));
        CHECK_THAT(q.sz_total[i], WithinAbs(s.sz_total[i], 1e-10));
        CHECK_THAT(q.fourth_plus[i], WithinAbs(s.fourth_plus[i], 1e-10));
    }
}

TEST_CASE("integrity holds along a chiral evolution", "[oracle]") {
    const std::vector<double> z = {0.0, 0.3, 0.55, 1.2, 1.9};
    DensityState fin;
    const auto s = evolve(z, static_geometry(0.2, 1.0, 1.0), 0.5, grid(2.0, 10), &fin);
    CHECK_THAT(fin.rho.trace().real(), WithinAbs(1.0, 1e-9));
    CHECK((fin.rho - fin.rho.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(s.i_plus[3] > s.i_minus[3]);
}

TEST_CASE("oracle domain checks", "[oracle]") {
    const std::vector<double> z(7, 0.0);
    const auto c = build_dynamic_couplings(z, 1.0, 1.0, 1.0);
    FieldMode f{std::vector<cplx>(7, 1.0), 1.0};
    const std::vector<double> t = {0.0};
    CHECK_THROWS_AS(evolve_master_equation(c, 1.0, 7, t, f, f, 1.0), DomainError);
    SimulationConfig cfg;
    cfg.n_spins = 5;
    CHECK_THROWS_AS(compare_twa_oracle(cfg), DomainError);
    cfg.n_spins = 2;
    cfg.model_mode = ModelMode::dynamic_motion;
    CHECK_THROWS_AS(compare_twa_oracle(cfg), DomainError);
}

TEST_CASE("phase-space fourth moment matches the oracle at t = 0", "[oracle]") {
    SimulationConfig cfg;
    cfg.n_spins = 3;
    cfg.sample_length = 10.0;
    cfg.t_max = 0.01;
    cfg.record_stride = 10;
    cfg.n_traj = 40000;
    cfg.model_mode = ModelMode::frozen;
    const auto z = sample_initial_state(cfg, 0).z;
    EnsembleOptions opt;
    opt.run.fixed_positions = z;
    const auto twa = run_ensemble(cfg, opt);
    const auto me = evolve_configuration(cfg, z, twa.time_grid);
    CHECK_THAT(twa.fourth_pp[0], WithinRel(me.fourth_plus[0], 0.03));
    CHECK_THAT(twa.fourth_mm[0], WithinRel(me.fourth_minus[0], 0.03));
    CHECK_THAT(twa.mean_i_plus[0], WithinRel(me.i_plus[0], 0.02));
}

TEST_CASE("phase-space ensemble tracks the oracle near the peak", "[oracle]") {
    SimulationConfig cfg;
    cfg.n_spins = 2;
    cfg.sample_length = 10.0;
    cfg.t_max = 2.0;
    cfg.dt = 1e-3;
    cfg.record_stride = 50;
    cfg.n_traj = 20000;
    cfg.model_mode = ModelMode::frozen;
    const auto r = compare_twa_oracle(cfg);
    CHECK(r.rel_i_plus_at_peak < 0.1);

    EnsembleOptions bad;
    bad.run.symbol_phase = SymbolPhase::flipped;
    cfg.n_traj = 4000;
    const auto f = compare_twa_oracle(cfg, bad);
    CHECK_FALSE(f.passed);
    CHECK(std::max(f.max_rel_i_plus, f.max_rel_i_minus) > 0.3);
}
