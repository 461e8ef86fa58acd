#pragma once

// Phase-space state of N spins and the Weyl symbols evaluated on it.
//
// Symbols of the discrete spin-1/2 Wigner representation:
//   s^- = (sqrt3/2) sin(theta) e^{-i phi},  s^+ = conj(s^-),
//   s^z = sqrt3 cos(theta),  p = (1 + s^z)/2  (symbol of s^+ s^-).

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "wgsf/coupling.hpp"

namespace wgsf {

struct SpinPhaseState {
    std::vector<double> theta;
    std::vector<double> phi;
    std::vector<double> z;
    std::vector<double> v;
    double t = 0.0;

    std::size_t size() const { return theta.size(); }

    void resize(std::size_t n) {
        theta.assign(n, 0.0);
        phi.assign(n, 0.0);
        z.assign(n, 0.0);
        v.assign(n, 0.0);
    }
};

inline const double kSqrt3 = std::sqrt(3.0);
/// Polar angle of the fully excited spin, sqrt3 cos(theta) = 1.
inline const double kThetaExcited = std::acos(1.0 / std::sqrt(3.0));
inline constexpr double kThetaEps = 1e-6;

/// Sign of the azimuth in s^-; flipping it is a fault-injection switch.
enum class SymbolPhase { standard, flipped };

inline cplx lowering_symbol(double theta, double phi, SymbolPhase phase = SymbolPhase::standard) {
    const double a = phase == SymbolPhase::standard ? -phi : phi;
    return std::polar(0.5 * kSqrt3 * std::sin(theta), a);
}

inline double population_symbol(double theta) { return 0.5 * (1.0 + kSqrt3 * std::cos(theta)); }

struct FieldSymbols {
    cplx e_plus;
    cplx e_minus;
};

/// E+ = i sqrt(G1D a_f / 2) sum_n conj(u_n) s_n^-, E- likewise with w and a_b.
inline FieldSymbols field_symbols(const SpinPhaseState& st, const WaveguideGeometry& geo,
                                  SymbolPhase phase = SymbolPhase::standard) {
    ModePhases ph;
    ph.assign(geo, st.z);
    cplx sp{}, sm{};
    for (std::size_t n = 0; n < st.size(); ++n) {
        const cplx s = lowering_symbol(st.theta[n], st.phi[n], phase);
        sp += std::conj(ph.u[n]) * s;
        sm += std::conj(ph.w[n]) * s;
    }
    return {kI * std::sqrt(0.5 * geo.gamma_1d * geo.alpha_f) * sp, kI * std::sqrt(0.5 * geo.gamma_1d * geo.alpha_b) * sm};
}

inline FieldSymbols field_symbols(const SpinPhaseState& st, double lambda0, double lambda_p, double gamma_1d) {
    return field_symbols(st, dynamic_geometry(lambda0, lambda_p, gamma_1d));
}

enum class Direction { plus, minus };

/// Intensity symbol (G1D/2)[a sum_{j != l} c_j^* c_l s_j^+ s_l^- + sum_j p_j], evaluated as an
/// explicit double sum. The imaginary residual must vanish to 1e-10 relative.
inline double intensity(const SpinPhaseState& st, Direction dir, const WaveguideGeometry& geo,
                        SymbolPhase phase = SymbolPhase::standard) {
    ModePhases ph;
    ph.assign(geo, st.z);
    const auto& c = dir == Direction::plus ? ph.u : ph.w;
    const double alpha = dir == Direction::plus ? geo.alpha_f : geo.alpha_b;
    const std::size_t n = st.size();
    std::vector<cplx> a(n);
    for (std::size_t j = 0; j < n; ++j) a[j] = std::conj(c[j]) * lowering_symbol(st.theta[j], st.phi[j], phase);
    cplx cross{};
    double diag = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t l = 0; l < n; ++l) {
            if (j == l) continue;
            const cplx term = std::conj(a[j]) * a[l];
            cross += term;
            scale += std::abs(term);
        }
        diag += population_symbol(st.theta[j]);
        scale += std::abs(population_symbol(st.theta[j]));
    }
    const cplx total = 0.5 * geo.gamma_1d * (alpha * cross + diag);
    if (std::abs(total.imag()) > 1e-10 * std::max(0.5 * geo.gamma_1d * scale, std::abs(total.real())))
        throw SymbolizationError("intensity symbol has a non-negligible imaginary part");
    return total.real();
}

inline double intensity(const SpinPhaseState& st, Direction dir, double lambda0, double lambda_p, double gamma_1d) {
    return intensity(st, dir, dynamic_geometry(lambda0, lambda_p, gamma_1d));
}

/// Normally ordered equal-time fourth moment <E_a^dag E_b^dag E_b E_a> as a Weyl symbol,
/// written as an explicit sum over spin indices j != k, l != m. Spins shared between a
/// raising and a lowering factor use s^+ s^- -> p; distinct spins use symbol products.
/// Reference implementation, O(N^4).
inline double fourth_moment_symbol(const SpinPhaseState& st, Direction a, Direction b, const WaveguideGeometry& geo,
                                   SymbolPhase phase = SymbolPhase::standard) {
    ModePhases ph;
    ph.assign(geo, st.z);
    const std::size_t n = st.size();
    auto mode = [&](Direction d, std::size_t j) { return d == Direction::plus ? std::conj(ph.u[j]) : std::conj(ph.w[j]); };
    auto weight = [&](Direction d) { return std::sqrt(d == Direction::plus ? geo.alpha_f : geo.alpha_b); };
    // operator string: E_a^dag(j) E_b^dag(k) E_b(l) E_a(m)
    cplx total{};
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) {
            if (j == k) continue;
            for (std::size_t l = 0; l < n; ++l)
                for (std::size_t m = 0; m < n; ++m) {
                    if (l == m) continue;
                    const cplx cj = std::conj(mode(a, j)), ck = std::conj(mode(b, k)), cl = mode(b, l), cm = mode(a, m);
                    auto sym_lower = [&](std::size_t i) { return lowering_symbol(st.theta[i], st.phi[i], phase); };
                    auto site = [&](std::size_t i, bool raised, bool lowered) -> cplx {
                        if (raised && lowered) return population_symbol(st.theta[i]);
                        if (raised) return std::conj(sym_lower(i));
                        return sym_lower(i);
                    };
                    cplx term = cj * ck * cl * cm;
                    // spins are distinct within the raising pair and within the lowering pair
                    std::size_t sites[4] = {j, k, l, m};
                    for (std::size_t q = 0; q < 4; ++q) {
                        bool seen = false;
                        for (std::size_t r = 0; r < q; ++r) seen = seen || sites[r] == sites[q];
                        if (seen) continue;
                        const bool raised = sites[q] == j || sites[q] == k;
                        const bool lowered = sites[q] == l || sites[q] == m;
                        cplx w = site(sites[q], raised, lowered);
                        // weights follow the intensity convention: symbol factors carry sqrt(alpha)
                        if (!(raised && lowered)) {
                            if (sites[q] == j) w *= weight(a);
                            if (sites[q] == k) w *= weight(b);
                            if (sites[q] == l) w *= weight(b);
                            if (sites[q] == m) w *= weight(a);
                        }
                        term *= w;
                    }
                    total += term;
                }
        }
    return 0.25 * geo.gamma_1d * geo.gamma_1d * total.real();
}

/// O(N) evaluation of the same fourth-moment symbol (without the (G1D/2)^2 prefactor).
/// `ca`, `cb` are the unit-modulus field modes, `s` the lowering symbols, `p` the populations.
inline double fourth_moment_sum(std::span<const cplx> s, std::span<const double> p, std::span<const cplx> ca,
                                double alpha_a, std::span<const cplx> cb, double alpha_b) {
    const std::size_t n = s.size();
    const double ra = std::sqrt(alpha_a), rb = std::sqrt(alpha_b), rab = std::sqrt(alpha_a * alpha_b);
    cplx xa{}, xb{}, sab{};
    for (std::size_t j = 0; j < n; ++j) {
        const cplx a = ra * ca[j] * s[j], b = rb * cb[j] * s[j];
        xa += a;
        xb += b;
        sab += a * b;
    }
    const cplx lead = xa * xb - sab;
    cplx single{}, sum_ab{};
    double sum_ab2 = 0.0, sum_aa = 0.0, sum_bb = 0.0, sum_aabb = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const cplx a = ra * ca[j] * s[j], b = rb * cb[j] * s[j];
        const double s2 = std::norm(s[j]);
        const cplx d_ab = std::conj(ca[j]) * cb[j] * (p[j] - rab * s2);
        const double d_aa = p[j] - alpha_a * s2;
        const double d_bb = p[j] - alpha_b * s2;
        const cplx ra_ = xa - a, rb_ = xb - b;
        single += d_ab * std::conj(rb_) * ra_ + std::conj(d_ab) * std::conj(ra_) * rb_;
        single += d_aa * std::norm(rb_) + d_bb * std::norm(ra_);
        sum_ab += d_ab;
        sum_ab2 += std::norm(d_ab);
        sum_aa += d_aa;
        sum_bb += d_bb;
        sum_aabb += d_aa * d_bb;
    }
    const double dbl = (std::norm(sum_ab) - sum_ab2) + (sum_aa * sum_bb - sum_aabb);
    return std::norm(lead) + single.real() + dbl;
}

inline double sz_total(const SpinPhaseState& st) {
    double s = 0.0;
    for (double th : st.theta) s += kSqrt3 * std::cos(th);
    return s;
}

}  // namespace wgsf
