#include "wgsf/rng.hpp"
#include "wgsf/state.hpp"

#include <catch_amalgamated.hpp>

#include <numbers>

using namespace wgsf;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SpinPhaseState random_state(std::size_t n, std::uint64_t seed) {
    NoiseStream r(seed, 0, 0);
    SpinPhaseState st;
    st.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        st.theta[i] = std::numbers::pi * r.uniform();
        st.phi[i] = 2.0 * std::numbers::pi * r.uniform();
        st.z[i] = 5.0 * r.uniform();
    }
    return st;
}

}  // namespace

TEST_CASE("single-spin symbols at the excited point", "[state]") {
    CHECK_THAT(kThetaExcited, WithinAbs(0.955317, 1e-6));
    CHECK_THAT(kSqrt3 * std::cos(kThetaExcited), WithinAbs(1.0, 1e-15));
    CHECK_THAT(population_symbol(kThetaExcited), WithinAbs(1.0, 1e-15));
    CHECK_THAT(population_symbol(std::numbers::pi - kThetaExcited), WithinAbs(0.0, 1e-15));
    const cplx s = lowering_symbol(kThetaExcited, 0.4);
    CHECK_THAT(std::norm(s), WithinAbs(0.5, 1e-15));
    CHECK_THAT(std::arg(s), WithinAbs(-0.4, 1e-15));
    CHECK(lowering_symbol(kThetaExcited, 0.4, SymbolPhase::flipped) == std::conj(s));
}

TEST_CASE("intensity double sum matches the closed form", "[state]") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto st = random_state(3 + seed % 9, seed);
        for (const auto& geo : {dynamic_geometry(1.0, 0.9, 1.3), static_geometry(0.4, 1.3, 1.0)}) {
            ModePhases ph;
            ph.assign(geo, st.z);
            for (auto dir : {Direction::plus, Direction::minus}) {
                const auto& c = dir == Direction::plus ? ph.u : ph.w;
                const double alpha = dir == Direction::plus ? geo.alpha_f : geo.alpha_b;
                cplx x{};
                double s2 = 0, p = 0;
                for (std::size_t j = 0; j < st.size(); ++j) {
                    const cplx a = std::conj(c[j]) * lowering_symbol(st.theta[j], st.phi[j]);
                    x += a;
                    s2 += std::norm(a);
                    p += population_symbol(st.theta[j]);
                }
                const double closed = 0.5 * geo.gamma_1d * (alpha * (std::norm(x) - s2) + p);
                CHECK_THAT(intensity(st, dir, geo), WithinRel(closed, 1e-11));
            }
            // the field symbol carries the same coherent sum
            const auto e = field_symbols(st, geo);
            ModePhases q;
            q.assign(geo, st.z);
            cplx sum{};
            for (std::size_t j = 0; j < st.size(); ++j) sum += std::conj(q.u[j]) * lowering_symbol(st.theta[j], st.phi[j]);
            CHECK(std::abs(e.e_plus - kI * std::sqrt(0.5 * geo.gamma_1d * geo.alpha_f) * sum) < 1e-12);
        }
    }
}

TEST_CASE("fourth-moment fast sum agrees with the explicit index sum", "[state]") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const auto st = random_state(2 + seed, 40 + seed);
        const auto geo = seed % 2 ? dynamic_geometry(1.0, 0.85, 0.8) : static_geometry(0.3, 0.8, 1.0);
        ModePhases ph;
        ph.assign(geo, st.z);
        std::vector<cplx> s(st.size()), u(st.size()), w(st.size());
        std::vector<double> p(st.size());
        for (std::size_t j = 0; j < st.size(); ++j) {
            s[j] = lowering_symbol(st.theta[j], st.phi[j]);
            p[j] = population_symbol(st.theta[j]);
            u[j] = std::conj(ph.u[j]);
            w[j] = std::conj(ph.w[j]);
        }
        const double pre = 0.25 * geo.gamma_1d * geo.gamma_1d;
        const double pp = pre * fourth_moment_sum(s, p, u, geo.alpha_f, u, geo.alpha_f);
        const double mm = pre * fourth_moment_sum(s, p, w, geo.alpha_b, w, geo.alpha_b);
        const double pm = pre * fourth_moment_sum(s, p, u, geo.alpha_f, w, geo.alpha_b);
        CHECK_THAT(pp, WithinRel(fourth_moment_symbol(st, Direction::plus, Direction::plus, geo), 1e-10));
        CHECK_THAT(mm, WithinRel(fourth_moment_symbol(st, Direction::minus, Direction::minus, geo), 1e-10));
        CHECK_THAT(pm, WithinRel(fourth_moment_symbol(st, Direction::plus, Direction::minus, geo), 1e-10));
    }
}

TEST_CASE("phase averages of the initial symbols", "[state]") {
    // Fully inverted spins with uniform phases: <I> = (G1D/2) N and the normally
    // ordered fourth moment equals (G1D/2)^2 * 2 N (N - 1).
    const std::size_t n = 5;
    const auto geo = dynamic_geometry(1.0, 1.0, 1.0);
    NoiseStream r(3, 0, 0);
    double si = 0, sq = 0, sq2 = 0;
    const int samples = 40000;
    SpinPhaseState st;
    st.resize(n);
    for (std::size_t j = 0; j < n; ++j) st.z[j] = 0.37 * static_cast<double>(j);
    std::fill(st.theta.begin(), st.theta.end(), kThetaExcited);
    for (int k = 0; k < samples; ++k) {
        for (auto& ph : st.phi) ph = 2.0 * std::numbers::pi * r.uniform();
        si += intensity(st, Direction::plus, geo);
        const double q = fourth_moment_symbol(st, Direction::plus, Direction::plus, geo);
        sq += q;
        sq2 += q * q;
    }
    const double mq = sq / samples;
    const double se = std::sqrt((sq2 / samples - mq * mq) / samples);
    CHECK_THAT(si / samples, WithinAbs(0.5 * n, 0.05));
    CHECK(std::abs(mq - 0.25 * 2.0 * n * (n - 1)) < 4.0 * se);
}

TEST_CASE("total inversion symbol", "[state]") {
    SpinPhaseState st;
    st.resize(4);
    std::fill(st.theta.begin(), st.theta.end(), kThetaExcited);
    CHECK_THAT(sz_total(st), WithinAbs(4.0, 1e-14));
}
