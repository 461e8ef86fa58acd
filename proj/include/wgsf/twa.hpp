#pragma once

// Truncated Wigner integration of the collective waveguide dynamics.
//
// Per spin n, with e_n = e^{i phi_n} (g s)_n and A_n = e^{i phi_n} (G xi)_n,
// xi_k = dW_theta_k + i dW_phi_k:
//   dtheta_n = [-2 Im e_n + (Gamma_nn / 2) cot th_n + G (cot th_n + csc th_n / sqrt3)] dt - Re A_n
//   dphi_n   = -2 cot th_n Re e_n dt + cot th_n Im A_n + sqrt(G f(th_n)) dW_n
// with f = 1 + 2 cot^2 + (2/sqrt3) csc cot and G the independent decay rate.
//
// Draw order of integration step s (stream s + 1): r draws dW_theta, r draws
// dW_phi, N single-particle draws, r the column count of the noise factor
// (2 for the structured kernel, N for the dense one).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "wgsf/coupling.hpp"
#include "wgsf/errors.hpp"
#include "wgsf/params.hpp"
#include "wgsf/rng.hpp"
#include "wgsf/state.hpp"

namespace wgsf {

/// Draws the initial phase-space point of one trajectory from stream 0:
/// N uniforms for z, N uniforms for phi, then N normals for v (dynamic mode only).
inline SpinPhaseState sample_initial_state(const SimulationConfig& cfg, std::uint64_t trajectory) {
    const auto n = static_cast<std::size_t>(cfg.n_spins);
    SpinPhaseState st;
    st.resize(n);
    NoiseStream rng(cfg.seed, trajectory, kInitStream);
    for (auto& z : st.z) z = cfg.sample_length * (1.0 - rng.uniform());
    for (auto& p : st.phi) p = 2.0 * std::numbers::pi * (1.0 - rng.uniform());
    std::fill(st.theta.begin(), st.theta.end(), kThetaExcited);
    if (cfg.model_mode == ModelMode::dynamic_motion)
        for (auto& v : st.v) v = cfg.v_bar * rng.normal();
    return st;
}

inline void update_positions(SpinPhaseState& st, double dt) {
    for (std::size_t n = 0; n < st.size(); ++n) st.z[n] += st.v[n] * dt;
}

/// Single-particle phi variance rate f(theta) = 1 + 2 cot^2 + (2/sqrt3) csc cot.
inline double single_particle_variance(double theta) {
    const double s = std::sin(theta), c = std::cos(theta);
    const double cot = c / s, csc = 1.0 / s;
    return 1.0 + 2.0 * cot * cot + 2.0 / kSqrt3 * csc * cot;
}

inline double single_particle_drift(double theta) {
    const double s = std::sin(theta);
    return std::cos(theta) / s + 1.0 / (kSqrt3 * s);
}

/// Noise coefficients per spin: columns [0, r) multiply dW_theta, [r, 2r) dW_phi.
struct DiffusionMap {
    Eigen::MatrixXd theta;
    Eigen::MatrixXd phi;
    std::vector<double> single;  ///< coefficient of the single-particle dW_n in dphi_n
};

struct DriftDiffusion {
    std::vector<double> drift_theta;
    std::vector<double> drift_phi;
    DiffusionMap diffusion;
    long long negative_variance = 0;
};

/// Drift and diffusion written out with J = J' + iJ'', Gamma = Gamma' + iGamma'', G = G' + iG''.
inline DriftDiffusion drift_diffusion(const SpinPhaseState& st, const CouplingSet& c, double gamma_single) {
    const auto n = static_cast<Eigen::Index>(st.size());
    if (c.size() != n) throw DomainError("drift_diffusion: coupling dimension does not match the state");
    const Eigen::Index r = c.noise_factor.cols();
    DriftDiffusion out;
    out.drift_theta.assign(n, 0.0);
    out.drift_phi.assign(n, 0.0);
    out.diffusion.theta = Eigen::MatrixXd::Zero(n, 2 * r);
    out.diffusion.phi = Eigen::MatrixXd::Zero(n, 2 * r);
    out.diffusion.single.assign(n, 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double th = st.theta[i];
        const double cot = std::cos(th) / std::sin(th);
        double sum_th = 0.0, sum_ph = 0.0;
        for (Eigen::Index m = 0; m < n; ++m) {
            const double jr = c.j_matrix(i, m).real(), ji = c.j_matrix(i, m).imag();
            const double gr = c.gamma_matrix(i, m).real(), gi = c.gamma_matrix(i, m).imag();
            const double d = st.phi[i] - st.phi[m];
            const double sm = std::sin(st.theta[m]);
            sum_th += sm * ((0.5 * gr - ji) * std::cos(d) - (jr + 0.5 * gi) * std::sin(d));
            sum_ph += sm * ((0.5 * gr - ji) * std::sin(d) + (jr + 0.5 * gi) * std::cos(d));
        }
        const double g_self = c.gamma_matrix(i, i).real();
        out.drift_theta[i] = kSqrt3 * sum_th + 0.5 * g_self * cot + gamma_single * single_particle_drift(th);
        out.drift_phi[i] = -kSqrt3 * cot * sum_ph;

        const double cp = std::cos(st.phi[i]), sp = std::sin(st.phi[i]);
        for (Eigen::Index k = 0; k < r; ++k) {
            const double g1 = c.noise_factor(i, k).real(), g2 = c.noise_factor(i, k).imag();
            const double p = g1 * cp - g2 * sp;
            const double q = g1 * sp + g2 * cp;
            out.diffusion.theta(i, k) = -p;
            out.diffusion.theta(i, r + k) = q;
            out.diffusion.phi(i, k) = cot * q;
            out.diffusion.phi(i, r + k) = cot * p;
        }
        double var = gamma_single * single_particle_variance(th);
        if (var < 0.0) {
            ++out.negative_variance;
            var = 0.0;
        }
        out.diffusion.single[i] = std::sqrt(var);
    }
    return out;
}

namespace detail {

inline double wrap_angle(double p) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    p = std::fmod(p, two_pi);
    if (p < 0.0) p += two_pi;
    if (p >= two_pi) p = 0.0;
    return p;
}

inline double clamp_theta(double th) { return std::clamp(th, kThetaEps, std::numbers::pi - kThetaEps); }

}  // namespace detail

/// One Euler-Maruyama step using the explicit dense drift/diffusion.
/// Consumes 2r + N normals from `noise` in the documented order.
inline void step_euler_maruyama(SpinPhaseState& st, const CouplingSet& c, double gamma_single, double dt,
                                NoiseStream& noise, long long step_index = 0) {
    if (!(dt > 0.0)) throw DomainError("step_euler_maruyama: dt must be positive");
    const auto dd = drift_diffusion(st, c, gamma_single);
    const auto n = static_cast<Eigen::Index>(st.size());
    const Eigen::Index r2 = dd.diffusion.theta.cols();
    const double sdt = std::sqrt(dt);
    Eigen::VectorXd w(r2);
    for (Eigen::Index k = 0; k < r2; ++k) w[k] = sdt * noise.normal();
    const Eigen::VectorXd nt = dd.diffusion.theta * w;
    const Eigen::VectorXd np = dd.diffusion.phi * w;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double dth = dd.drift_theta[i] * dt + nt[i];
        const double dph = dd.drift_phi[i] * dt + np[i] + dd.diffusion.single[i] * sdt * noise.normal();
        if (!std::isfinite(dth) || !std::isfinite(dph))
            throw IntegrationDivergedError("non-finite phase-space increment", step_index);
        st.theta[i] = detail::clamp_theta(st.theta[i] + dth);
        st.phi[i] = detail::wrap_angle(st.phi[i] + dph);
    }
    st.t += dt;
}

/// Kernel geometry implied by a configuration.
inline WaveguideGeometry geometry_for(const SimulationConfig& cfg) {
    if (cfg.model_mode == ModelMode::static_blur) {
        const double beta = cfg.beta_minus_override
                                ? *cfg.beta_minus_override
                                : suppression_factor(cfg.v_bar, cfg.tau_blur.value_or(0.0), cfg.lambda0);
        return static_geometry(beta, cfg.gamma_1d, cfg.lambda0);
    }
    return dynamic_geometry(cfg.lambda0, cfg.lambda_p, cfg.gamma_1d);
}

enum class KernelEvaluation { structured, dense };

struct RunOptions {
    KernelEvaluation kernel = KernelEvaluation::structured;
    SymbolPhase symbol_phase = SymbolPhase::standard;  ///< applied to recorded observables only
    std::optional<std::vector<double>> fixed_positions;  ///< overrides the sampled z
};

/// Observables of one recorded time point.
struct Snapshot {
    double t = 0.0;
    cplx e_plus;
    cplx e_minus;
    double i_plus = 0.0;
    double i_minus = 0.0;
    double sz = 0.0;
    double q_pp = 0.0;  ///< normally ordered <E+^dag E+^dag E+ E+> symbol
    double q_mm = 0.0;
    double q_pm = 0.0;  ///< <E+^dag E-^dag E- E+>
};

struct TrajectoryRecord {
    std::vector<double> time_grid;
    std::vector<cplx> e_plus;
    std::vector<cplx> e_minus;
    std::vector<double> i_plus;
    std::vector<double> i_minus;
    std::vector<double> sz_total;
    std::vector<double> q_pp;
    std::vector<double> q_mm;
    std::vector<double> q_pm;
    long long negative_variance = 0;
};

/// Reusable integrator for trajectories of one configuration; not thread-safe,
/// use one instance per worker.
class TrajectoryIntegrator {
public:
    explicit TrajectoryIntegrator(SimulationConfig cfg, RunOptions opt = {})
        : cfg_(std::move(cfg)), opt_(std::move(opt)), geo_(geometry_for(cfg_)), applier_(geo_) {
        validate(cfg_);
        if (opt_.fixed_positions && opt_.fixed_positions->size() != static_cast<std::size_t>(cfg_.n_spins))
            throw ValidationError("fixed_positions length must equal n_spins");
        const auto n = static_cast<std::size_t>(cfg_.n_spins);
        s_.resize(n);
        h_.resize(n);
        eiphi_.resize(n);
        cot_.resize(n);
        csc_.resize(n);
    }

    const SimulationConfig& config() const { return cfg_; }
    const WaveguideGeometry& geometry() const { return geo_; }

    /// Integrates trajectory `index`, calling sink(record_index, snapshot) on the record grid.
    /// Returns the number of negative single-particle variance events.
    template <class Sink>
    long long run(std::uint64_t index, Sink&& sink) {
        SpinPhaseState st = sample_initial_state(cfg_, index);
        if (opt_.fixed_positions) st.z = *opt_.fixed_positions;
        const bool moving = cfg_.model_mode == ModelMode::dynamic_motion;
        const bool dense = opt_.kernel == KernelEvaluation::dense;
        const std::size_t n = st.size();
        const long long steps = cfg_.n_steps();
        const double dt = cfg_.dt, sdt = std::sqrt(dt);
        const double g_self = geo_.gamma_self();
        const double gs = cfg_.gamma_single;
        long long negative = 0;

        refresh_couplings(st, dense);
        for (long long k = 0;; ++k) {
            // trig shared by observables and the step
            for (std::size_t i = 0; i < n; ++i) {
                const double s = std::sin(st.theta[i]), c = std::cos(st.theta[i]);
                eiphi_[i] = std::polar(1.0, st.phi[i]);
                s_[i] = 0.5 * kSqrt3 * s * std::conj(eiphi_[i]);
                cot_[i] = c / s;
                csc_[i] = 1.0 / s;
            }
            if (k % cfg_.record_stride == 0) sink(static_cast<std::size_t>(k / cfg_.record_stride), observe(st, k));
            if (k == steps) break;

            NoiseStream rng(cfg_.seed, index, static_cast<std::uint32_t>(k + 1));
            if (dense) {
                const Eigen::Index r = dense_.noise_factor.cols();
                Eigen::Map<const Eigen::VectorXcd> sv(s_.data(), static_cast<Eigen::Index>(n));
                Eigen::Map<Eigen::VectorXcd>(h_.data(), static_cast<Eigen::Index>(n)) = dense_.g * sv;
                xi_.resize(r);
                for (Eigen::Index j = 0; j < r; ++j) xi_[j] = sdt * rng.normal();
                for (Eigen::Index j = 0; j < r; ++j) xi_[j] += kI * (sdt * rng.normal());
                gxi_ = dense_.noise_factor * xi_;
            } else {
                applier_.apply(s_, h_);
                double x[4];
                for (double& d : x) d = sdt * rng.normal();
                const cplx xf{x[0], x[2]}, xb{x[1], x[3]};
                const double af = std::sqrt(0.5 * geo_.gamma_1d * geo_.alpha_f);
                const double ab = std::sqrt(0.5 * geo_.gamma_1d * geo_.alpha_b);
                const auto& ph = applier_.phases();
                gxi_.resize(static_cast<Eigen::Index>(n));
                for (std::size_t i = 0; i < n; ++i) gxi_[i] = af * ph.u[i] * xf + ab * ph.w[i] * xb;
            }
            for (std::size_t i = 0; i < n; ++i) {
                const cplx e = eiphi_[i] * h_[i];
                const cplx a = eiphi_[i] * gxi_[static_cast<Eigen::Index>(i)];
                double var = gs * (1.0 + 2.0 * cot_[i] * cot_[i] + 2.0 / kSqrt3 * csc_[i] * cot_[i]);
                if (var < 0.0) {
                    ++negative;
                    var = 0.0;
                }
                const double dth =
                    (-2.0 * e.imag() + 0.5 * g_self * cot_[i] + gs * (cot_[i] + csc_[i] / kSqrt3)) * dt - a.real();
                const double dph = -2.0 * cot_[i] * e.real() * dt + cot_[i] * a.imag() + std::sqrt(var) * sdt * rng.normal();
                if (!std::isfinite(dth) || !std::isfinite(dph))
                    throw IntegrationDivergedError("non-finite phase-space increment", k, static_cast<long long>(index));
                st.theta[i] = detail::clamp_theta(st.theta[i] + dth);
                st.phi[i] = detail::wrap_angle(st.phi[i] + dph);
            }
            st.t = static_cast<double>(k + 1) * dt;
            if (moving) {
                update_positions(st, dt);
                refresh_couplings(st, dense);
            }
        }
        return negative;
    }

    TrajectoryRecord run_record(std::uint64_t index) {
        TrajectoryRecord rec;
        const auto m = static_cast<std::size_t>(cfg_.n_records());
        rec.time_grid.resize(m);
        rec.e_plus.resize(m);
        rec.e_minus.resize(m);
        rec.i_plus.resize(m);
        rec.i_minus.resize(m);
        rec.sz_total.resize(m);
        rec.q_pp.resize(m);
        rec.q_mm.resize(m);
        rec.q_pm.resize(m);
        rec.negative_variance = run(index, [&](std::size_t j, const Snapshot& s) {
            rec.time_grid[j] = s.t;
            rec.e_plus[j] = s.e_plus;
            rec.e_minus[j] = s.e_minus;
            rec.i_plus[j] = s.i_plus;
            rec.i_minus[j] = s.i_minus;
            rec.sz_total[j] = s.sz;
            rec.q_pp[j] = s.q_pp;
            rec.q_mm[j] = s.q_mm;
            rec.q_pm[j] = s.q_pm;
        });
        return rec;
    }

private:
    void refresh_couplings(const SpinPhaseState& st, bool dense) {
        applier_.set_positions(st.z);
        if (dense) dense_ = build_couplings(geo_, st.z);
    }

    Snapshot observe(const SpinPhaseState& st, long long k) {
        const auto& ph = applier_.phases();
        const bool flip = opt_.symbol_phase == SymbolPhase::flipped;
        const std::size_t n = st.size();
        obs_s_.resize(n);
        obs_p_.resize(n);
        mode_p_.resize(n);
        mode_m_.resize(n);
        cplx sp{}, sm{};
        double self = 0.0, pop = 0.0, sz = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const cplx s = flip ? std::conj(s_[i]) : s_[i];
            mode_p_[i] = std::conj(ph.u[i]);
            mode_m_[i] = std::conj(ph.w[i]);
            sp += mode_p_[i] * s;
            sm += mode_m_[i] * s;
            self += std::norm(s);
            const double zc = kSqrt3 * std::cos(st.theta[i]);
            sz += zc;
            pop += 0.5 * (1.0 + zc);
            obs_s_[i] = s;
            obs_p_[i] = 0.5 * (1.0 + zc);
        }
        const double half = 0.5 * geo_.gamma_1d;
        Snapshot out;
        out.t = static_cast<double>(k) * cfg_.dt;
        out.e_plus = kI * std::sqrt(half * geo_.alpha_f) * sp;
        out.e_minus = kI * std::sqrt(half * geo_.alpha_b) * sm;
        out.i_plus = half * (geo_.alpha_f * (std::norm(sp) - self) + pop);
        out.i_minus = half * (geo_.alpha_b * (std::norm(sm) - self) + pop);
        out.sz = sz;
        const double h2 = half * half;
        out.q_pp = h2 * fourth_moment_sum(obs_s_, obs_p_, mode_p_, geo_.alpha_f, mode_p_, geo_.alpha_f);
        out.q_mm = h2 * fourth_moment_sum(obs_s_, obs_p_, mode_m_, geo_.alpha_b, mode_m_, geo_.alpha_b);
        out.q_pm = h2 * fourth_moment_sum(obs_s_, obs_p_, mode_p_, geo_.alpha_f, mode_m_, geo_.alpha_b);
        return out;
    }

    SimulationConfig cfg_;
    RunOptions opt_;
    WaveguideGeometry geo_;
    KernelApplier applier_;
    CouplingSet dense_;
    std::vector<cplx> s_, h_, eiphi_, obs_s_, mode_p_, mode_m_;
    std::vector<double> obs_p_;
    std::vector<double> cot_, csc_;
    Eigen::VectorXcd xi_, gxi_;
};

inline TrajectoryRecord run_trajectory(const SimulationConfig& cfg, std::uint64_t trajectory_index,
                                       const RunOptions& opt = {}) {
    TrajectoryIntegrator integ(cfg, opt);
    return integ.run_record(trajectory_index);
}

}  // namespace wgsf
