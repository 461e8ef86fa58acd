#pragma once

// Physical parameters, unit conventions and the scalar parameter formulas.
//
// Internal units: the single-atom decay rate Gamma sets the time unit and the
// transition wavelength lambda0 the length unit.  SimulationConfig values are
// interpreted in whatever consistent unit system the caller picks; the
// reduced system (Gamma = 1, lambda0 = 1) is the documented convention and
// `from_experiment` converts laboratory values into it.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "wgsf/errors.hpp"

namespace wgsf {

enum class ModelMode { dynamic_motion, static_blur, frozen };

inline std::string_view to_string(ModelMode m) {
    switch (m) {
        case ModelMode::dynamic_motion: return "dynamic_motion";
        case ModelMode::static_blur: return "static_blur";
        case ModelMode::frozen: return "frozen";
    }
    return "frozen";
}

inline std::optional<ModelMode> parse_model_mode(std::string_view s) {
    if (s == "dynamic_motion" || s == "dynamic") return ModelMode::dynamic_motion;
    if (s == "static_blur" || s == "static") return ModelMode::static_blur;
    if (s == "frozen") return ModelMode::frozen;
    return std::nullopt;
}

/// Length of the experimental measurement window (2.5 us) in units of 1/Gamma
/// for Gamma/2pi = 33 kHz, the decay rate of the sigma_v = 3 data set.
inline constexpr double kReferenceGammaHz = 33.0e3;
inline constexpr double kMeasurementWindowSeconds = 2.5e-6;
inline constexpr double kDefaultWindow = kMeasurementWindowSeconds * 2.0 * std::numbers::pi * kReferenceGammaHz;

struct SimulationConfig {
    int n_spins = 100;
    double gamma_1d = 1.0;      ///< per-atom waveguide coupling
    double gamma_single = 1.0;  ///< independent (non-waveguide) decay rate
    double lambda0 = 1.0;
    double lambda_p = 1.0;
    double v_bar = 0.0;  ///< rms velocity
    double sample_length = 100.0;
    double dt = 1e-3;
    double t_max = kDefaultWindow;
    int n_traj = 1000;
    std::uint64_t seed = 1;
    ModelMode model_mode = ModelMode::frozen;
    std::optional<double> beta_minus_override;
    std::optional<double> tau_blur;
    int record_stride = 10;  ///< observables recorded every k-th step

    long long n_steps() const { return std::llround(t_max / dt); }
    long long n_records() const { return n_steps() / record_stride + 1; }
};

/// Throws ValidationError on the first violated invariant.
inline void validate(const SimulationConfig& c) {
    auto fail = [](const std::string& msg) { throw ValidationError(msg); };
    auto finite = [](double x) { return std::isfinite(x); };
    if (c.n_spins < 1) fail("n_spins must be >= 1");
    if (c.n_traj < 1) fail("n_traj must be >= 1");
    if (!(c.dt > 0) || !finite(c.dt)) fail("dt must be > 0");
    if (!(c.t_max >= c.dt) || !finite(c.t_max)) fail("t_max must be >= dt");
    if (!(c.gamma_1d > 0) || !finite(c.gamma_1d)) fail("gamma_1d must be > 0");
    if (!(c.gamma_single >= 0) || !finite(c.gamma_single)) fail("gamma_single must be >= 0");
    if (!(c.lambda0 > 0) || !finite(c.lambda0)) fail("lambda0 must be > 0");
    if (!(c.lambda_p > 0) || !finite(c.lambda_p)) fail("lambda_p must be > 0");
    if (!(c.v_bar >= 0) || !finite(c.v_bar)) fail("v_bar must be >= 0");
    if (!(c.sample_length >= 0) || !finite(c.sample_length)) fail("sample_length must be >= 0");
    if (c.record_stride < 1) fail("record_stride must be >= 1");
    if (c.beta_minus_override && !(*c.beta_minus_override >= 0.0 && *c.beta_minus_override <= 1.0))
        fail("beta_minus_override must lie in [0, 1]");
    if (c.tau_blur && !(*c.tau_blur >= 0.0 && finite(*c.tau_blur))) fail("tau_blur must be >= 0");
    if (c.model_mode == ModelMode::static_blur && !c.tau_blur && !c.beta_minus_override)
        fail("static_blur mode requires tau_blur or beta_minus_override");
}

// ---------------------------------------------------------------------------
// Scalar formulas

/// Spontaneous Raman scattering rate 1/2 G' Op^2 / (Dp^2 + 2 S).  The Stark
/// term `stark_shift` enters in the units of delta_p squared.
inline double raman_rate(double gamma_prime, double omega_p, double delta_p, double stark_shift) {
    const double denom = delta_p * delta_p + 2.0 * stark_shift;
    if (!(denom > 0.0)) throw DomainError("raman_rate: delta_p^2 + 2 S must be positive");
    return 0.5 * gamma_prime * omega_p * omega_p / denom;
}

/// Supremum of raman_rate over the pump Rabi frequency when the Stark term
/// grows as S = c * omega_p^2.
inline double raman_rate_supremum(double gamma_prime, double stark_coefficient) {
    if (!(stark_coefficient > 0.0)) throw DomainError("raman_rate_supremum: coefficient must be positive");
    return gamma_prime / (4.0 * stark_coefficient);
}

/// sigma_v = v_bar / (lambda0 Gamma).
inline double velocity_spread(double v_bar, double lambda0, double gamma) {
    if (!(lambda0 > 0.0) || !(gamma > 0.0)) throw DomainError("velocity_spread: lambda0 and gamma must be positive");
    return v_bar / (lambda0 * gamma);
}

struct CooperationNumber {
    double per_direction;
    double total;
};

/// N_mc^(+-) = eta_s eta_inh (NA^2/4) N and N_mc = 2 N_mc^(+-).
inline CooperationNumber cooperation_number(double n_atoms, double eta_s, double eta_inh, double numerical_aperture) {
    if (n_atoms < 0 || eta_s < 0 || eta_inh < 0 || numerical_aperture < 0 || eta_s > 1 || eta_inh > 1)
        throw DomainError("cooperation_number: inputs must be >= 0 and eta factors <= 1");
    const double mu = numerical_aperture * numerical_aperture / 4.0;
    const double per = eta_s * eta_inh * mu * n_atoms;
    return {per, 2.0 * per};
}

/// Characteristic superradiant time (N_mc Gamma / 2)^-1.
inline double superradiant_time(double n_mc, double gamma) {
    if (!(n_mc > 0.0) || !(gamma > 0.0)) throw DomainError("superradiant_time: n_mc and gamma must be positive");
    return 2.0 / (n_mc * gamma);
}

/// R_tau = 2 sigma_v / N_mc, the collective-to-dephasing timescale ratio.
inline double timescale_ratio(double sigma_v, double n_mc) {
    if (!(n_mc > 0.0)) throw DomainError("timescale_ratio: n_mc must be positive");
    return 2.0 * sigma_v / n_mc;
}

struct PhysicalScales {
    double sigma_v;
    double r_tau;
    double tau_th;   ///< lambda0 / v_bar, infinite without motion
    double tau_col;  ///< 2 / (N Gamma)
};

/// Note r_tau = tau_col / tau_th.
inline PhysicalScales physical_scales(double v_bar, double lambda0, double gamma, double n_mc) {
    PhysicalScales s{};
    s.sigma_v = velocity_spread(v_bar, lambda0, gamma);
    s.r_tau = timescale_ratio(s.sigma_v, n_mc);
    s.tau_th = v_bar > 0 ? lambda0 / v_bar : std::numeric_limits<double>::infinity();
    s.tau_col = superradiant_time(n_mc, gamma);
    return s;
}

/// Cooperation number N Gamma_1D / Gamma of a configuration.
inline double effective_cooperation(const SimulationConfig& c) {
    return c.gamma_single > 0 ? c.n_spins * c.gamma_1d / c.gamma_single : static_cast<double>(c.n_spins);
}

/// Reduced-model coupling that keeps N * Gamma_1D fixed when simulating
/// `n_sim` emitters in place of `n_exp`.
inline double reduced_coupling(double n_exp, double gamma_1d_exp, double n_sim) {
    if (!(n_sim > 0.0)) throw DomainError("reduced_coupling: n_sim must be positive");
    return n_exp * gamma_1d_exp / n_sim;
}

/// Laboratory parameters of one measurement setting.
struct ExperimentParameters {
    double gamma_hz;         ///< Gamma / 2pi
    double lambda0_m;
    double v_bar_mps;        ///< rms thermal velocity
    double n_mc;             ///< cooperation number, simulated with Gamma_1D = Gamma
    double window_s = kMeasurementWindowSeconds;
    double sample_length_m = 0.0;  ///< 0 keeps the reduced default
};

/// Converts laboratory inputs into the reduced unit system (Gamma = 1, lambda0 = 1).
inline SimulationConfig from_experiment(const ExperimentParameters& p, SimulationConfig base = {}) {
    const double gamma = 2.0 * std::numbers::pi * p.gamma_hz;
    base.gamma_single = 1.0;
    base.gamma_1d = 1.0;
    base.lambda0 = 1.0;
    base.lambda_p = 1.0;
    base.n_spins = static_cast<int>(std::llround(p.n_mc));
    base.v_bar = velocity_spread(p.v_bar_mps, p.lambda0_m, gamma);
    base.t_max = p.window_s * gamma;
    if (p.sample_length_m > 0) base.sample_length = p.sample_length_m / p.lambda0_m;
    return base;
}

}  // namespace wgsf
