#pragma once

// Exact Lindblad evolution for a handful of spins, used as ground truth for
// the phase-space engine.
//
// Basis state index a has bit n set when spin n is excited.
//   d rho/dt = -i (H_eff rho - rho H_eff^dag) + sum_lm Gamma_lm s_m rho s_l^+ + G sum_n s_n rho s_n^+
//   H_eff = sum_lm g_lm s_l^+ s_m^- - (i G / 2) sum_n s_n^+ s_n^-

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "wgsf/coupling.hpp"
#include "wgsf/ensemble.hpp"
#include "wgsf/errors.hpp"
#include "wgsf/twa.hpp"

namespace wgsf {

inline constexpr int kOracleMaxSpins = 6;

struct DensityState {
    Eigen::MatrixXcd rho;
    double t = 0.0;
};

/// Emitted-field mode of one direction: E ~ sum_n mode_n s_n^-, with cross
/// terms weighted by `alpha` (1 for a coherent channel).
struct FieldMode {
    std::vector<cplx> mode;
    double alpha = 1.0;
};

struct OracleOptions {
    double max_step = 0.0;  ///< 0 selects from the coupling scale
    bool check_integrity = true;
};

struct OracleSeries {
    std::vector<double> time_grid;
    std::vector<double> i_plus;
    std::vector<double> i_minus;
    std::vector<double> sz_total;
    std::vector<double> fourth_plus;  ///< <E+^dag E+^dag E+ E+>
    std::vector<double> fourth_minus;
};

namespace detail {

struct SparseTerm {
    int row;
    int col;
    cplx value;
};

class Liouvillian {
public:
    Liouvillian(const CouplingSet& c, double gamma_single, int n)
        : n_(n), dim_(1 << n), gamma_(c.gamma_matrix), gs_(gamma_single) {
        // H_eff rows: s_l^+ s_m^- maps |b> (l clear or l == m, m set) to |b - m + l>
        for (int b = 0; b < dim_; ++b) {
            for (int m = 0; m < n; ++m) {
                if (!(b >> m & 1)) continue;
                const int bm = b & ~(1 << m);
                for (int l = 0; l < n; ++l) {
                    if (bm >> l & 1) continue;
                    cplx v = c.g(l, m);
                    if (l == m) v += cplx{0.0, -0.5 * gamma_single};
                    if (v != cplx{}) h_.push_back({bm | (1 << l), b, v});
                }
            }
        }
    }

    int dim() const { return dim_; }

    void apply(const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out) const {
        out.setZero(dim_, dim_);
        // -i H rho + i rho H^dag
        for (const auto& t : h_) {
            out.row(t.row) += cplx{0.0, -1.0} * t.value * rho.row(t.col);
            out.col(t.row) += cplx{0.0, 1.0} * std::conj(t.value) * rho.col(t.col);
        }
        // jumps: (s_m rho s_l^+)_{ab} = rho_{a+m, b+l}
        for (int a = 0; a < dim_; ++a) {
            for (int b = 0; b < dim_; ++b) {
                cplx acc{};
                for (int m = 0; m < n_; ++m) {
                    if (a >> m & 1) continue;
                    const int am = a | (1 << m);
                    for (int l = 0; l < n_; ++l) {
                        if (b >> l & 1) continue;
                        cplx w = gamma_(l, m);
                        if (l == m) w += gs_;
                        acc += w * rho(am, b | (1 << l));
                    }
                }
                out(a, b) += acc;
            }
        }
    }

private:
    int n_;
    int dim_;
    Eigen::MatrixXcd gamma_;
    double gs_;
    std::vector<SparseTerm> h_;
};

inline Eigen::MatrixXcd lowering_field(const std::vector<cplx>& mode, int n) {
    const int dim = 1 << n;
    Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(dim, dim);
    for (int b = 0; b < dim; ++b)
        for (int k = 0; k < n; ++k)
            if (b >> k & 1) e(b & ~(1 << k), b) += mode[k];
    return e;
}

/// <s_j^+ s_l^-> for all j, l.
inline Eigen::MatrixXcd pair_correlations(const Eigen::MatrixXcd& rho, int n) {
    const int dim = 1 << n;
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(n, n);
    for (int b = 0; b < dim; ++b) {
        for (int l = 0; l < n; ++l) {
            if (!(b >> l & 1)) continue;
            const int bl = b & ~(1 << l);
            for (int j = 0; j < n; ++j) {
                if (bl >> j & 1) continue;
                // Tr(s_j^+ s_l^- rho) = sum_b rho_{b, a}, a = b - l + j
                c(j, l) += rho(b, bl | (1 << j));
            }
        }
    }
    return c;
}

inline double field_intensity(const Eigen::MatrixXcd& corr, const FieldMode& f, double gamma_1d) {
    const auto n = corr.rows();
    cplx cross{};
    double diag = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        diag += corr(j, j).real();
        for (Eigen::Index l = 0; l < n; ++l)
            if (j != l) cross += std::conj(f.mode[j]) * f.mode[l] * corr(j, l);
    }
    return 0.5 * gamma_1d * (f.alpha * cross.real() + diag);
}

inline void check_integrity(const Eigen::MatrixXcd& rho, double t) {
    const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    if (herm > 1e-10) throw OracleIntegrityError("density matrix not Hermitian at t = " + std::to_string(t));
    const double tr = std::abs(rho.trace() - cplx{1.0, 0.0});
    if (tr > 1e-8) throw OracleIntegrityError("trace drift " + std::to_string(tr) + " at t = " + std::to_string(t));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-8)
        throw OracleIntegrityError("negative density-matrix eigenvalue at t = " + std::to_string(t));
}

}  // namespace detail

/// Fully inverted initial state.
inline DensityState excited_state(int n_spins) {
    const int dim = 1 << n_spins;
    DensityState s;
    s.rho = Eigen::MatrixXcd::Zero(dim, dim);
    s.rho(dim - 1, dim - 1) = 1.0;
    return s;
}

/// Integrates the master equation from the fully excited state with classical RK4 and
/// records field observables on `time_grid` (non-decreasing, starting at >= 0).
inline OracleSeries evolve_master_equation(const CouplingSet& c, double gamma_single, int n_spins,
                                           std::span<const double> time_grid, const FieldMode& plus,
                                           const FieldMode& minus, double gamma_1d, const OracleOptions& opt = {},
                                           DensityState* final_state = nullptr) {
    if (n_spins < 1 || n_spins > kOracleMaxSpins) throw DomainError("evolve_master_equation: need 1 <= n_spins <= 6");
    if (c.size() != n_spins) throw DomainError("evolve_master_equation: coupling dimension mismatch");
    if (static_cast<int>(plus.mode.size()) != n_spins || static_cast<int>(minus.mode.size()) != n_spins)
        throw DomainError("evolve_master_equation: field mode dimension mismatch");
    detail::Liouvillian L(c, gamma_single, n_spins);
    double step = opt.max_step;
    if (!(step > 0.0)) {
        const double rate = c.g.cwiseAbs().rowwise().sum().maxCoeff() + gamma_single + c.gamma_matrix.cwiseAbs().sum();
        step = std::min(1e-3, 0.02 / std::max(rate, 1e-12));
    }
    const auto ep = detail::lowering_field(plus.mode, n_spins);
    const auto em = detail::lowering_field(minus.mode, n_spins);
    const int dim = L.dim();

    DensityState st = excited_state(n_spins);
    OracleSeries out;
    Eigen::MatrixXcd k1, k2, k3, k4, tmp;
    for (double target : time_grid) {
        if (target < st.t - 1e-12) throw DomainError("evolve_master_equation: time grid must be non-decreasing");
        const double span = target - st.t;
        const long long sub = span > 0 ? static_cast<long long>(std::ceil(span / step - 1e-9)) : 0;
        const double h = sub ? span / static_cast<double>(sub) : 0.0;
        for (long long s = 0; s < sub; ++s) {
            L.apply(st.rho, k1);
            tmp = st.rho + 0.5 * h * k1;
            L.apply(tmp, k2);
            tmp = st.rho + 0.5 * h * k2;
            L.apply(tmp, k3);
            tmp = st.rho + h * k3;
            L.apply(tmp, k4);
            st.rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        st.t = target;
        if (opt.check_integrity) detail::check_integrity(st.rho, st.t);
        const auto corr = detail::pair_correlations(st.rho, n_spins);
        out.time_grid.push_back(target);
        out.i_plus.push_back(detail::field_intensity(corr, plus, gamma_1d));
        out.i_minus.push_back(detail::field_intensity(corr, minus, gamma_1d));
        double sz = 0.0;
        for (int a = 0; a < dim; ++a) sz += st.rho(a, a).real() * (2.0 * std::popcount(static_cast<unsigned>(a)) - n_spins);
        out.sz_total.push_back(sz);
        const double scale2 = 0.25 * gamma_1d * gamma_1d;
        out.fourth_plus.push_back(scale2 * plus.alpha * plus.alpha * (ep * ep * st.rho * ep.adjoint() * ep.adjoint()).trace().real());
        out.fourth_minus.push_back(scale2 * minus.alpha * minus.alpha *
                                   (em * em * st.rho * em.adjoint() * em.adjoint()).trace().real());
    }
    if (final_state) *final_state = st;
    return out;
}

/// Field modes (+, -) of a geometry at given positions, matching the phase-space intensity.
inline std::pair<FieldMode, FieldMode> field_modes(const WaveguideGeometry& geo, std::span<const double> z) {
    ModePhases ph;
    ph.assign(geo, z);
    FieldMode p, m;
    for (std::size_t n = 0; n < z.size(); ++n) {
        p.mode.push_back(std::conj(ph.u[n]));
        m.mode.push_back(std::conj(ph.w[n]));
    }
    p.alpha = geo.alpha_f;
    m.alpha = geo.alpha_b;
    return {p, m};
}

/// Oracle evolution for a configuration at fixed positions.
inline OracleSeries evolve_configuration(const SimulationConfig& cfg, std::span<const double> z,
                                         std::span<const double> time_grid, const OracleOptions& opt = {}) {
    const auto geo = geometry_for(cfg);
    const auto c = build_couplings(geo, z);
    const auto [p, m] = field_modes(geo, z);
    return evolve_master_equation(c, cfg.gamma_single, cfg.n_spins, time_grid, p, m, cfg.gamma_1d, opt);
}

struct OracleComparison {
    std::vector<double> positions;
    std::vector<double> time_grid;
    OracleSeries oracle;
    ObservableSeries twa;
    double max_rel_i_plus = 0.0;   ///< over t where the oracle intensity exceeds 1 % of its peak
    double max_rel_i_minus = 0.0;
    double max_rel_sz = 0.0;       ///< |delta <sum sigma_z>| / N
    double max_z_i_plus = 0.0;     ///< largest deviation in standard errors
    double max_z_i_minus = 0.0;
    double rel_i_plus_at_peak = 0.0;
    bool passed = false;           ///< all intensity deviations within `tolerance`
    double tolerance = 0.1;
};

/// Runs the phase-space ensemble at the positions of trajectory 0 and compares it with the
/// exact evolution on the record grid.
inline OracleComparison compare_twa_oracle(const SimulationConfig& cfg, const EnsembleOptions& ens = {},
                                           double tolerance = 0.1, const OracleOptions& oopt = {}) {
    if (cfg.n_spins > 4) throw DomainError("compare_twa_oracle: n_spins must be <= 4");
    if (cfg.model_mode == ModelMode::dynamic_motion)
        throw DomainError("compare_twa_oracle: the oracle has no motion; use frozen or static_blur");
    OracleComparison r;
    r.tolerance = tolerance;
    r.positions = sample_initial_state(cfg, 0).z;
    r.time_grid = record_grid(cfg);
    auto opt = ens;
    opt.run.fixed_positions = r.positions;
    r.twa = run_ensemble(cfg, opt);
    r.oracle = evolve_configuration(cfg, r.positions, r.time_grid, oopt);

    auto rel = [&](const std::vector<double>& twa, const std::vector<double>& se, const std::vector<double>& me,
                   double& max_rel, double& max_z) {
        const double peak = *std::max_element(me.begin(), me.end());
        for (std::size_t i = 0; i < me.size(); ++i) {
            if (!(me[i] > 0.01 * peak)) continue;
            max_rel = std::max(max_rel, std::abs(twa[i] - me[i]) / me[i]);
            if (se[i] > 0) max_z = std::max(max_z, std::abs(twa[i] - me[i]) / se[i]);
        }
    };
    rel(r.twa.mean_i_plus, r.twa.se_i_plus, r.oracle.i_plus, r.max_rel_i_plus, r.max_z_i_plus);
    rel(r.twa.mean_i_minus, r.twa.se_i_minus, r.oracle.i_minus, r.max_rel_i_minus, r.max_z_i_minus);
    for (std::size_t i = 0; i < r.time_grid.size(); ++i)
        r.max_rel_sz = std::max(r.max_rel_sz, std::abs(r.twa.sz_mean[i] - r.oracle.sz_total[i]) / cfg.n_spins);
    const auto ip = std::max_element(r.oracle.i_plus.begin(), r.oracle.i_plus.end()) - r.oracle.i_plus.begin();
    r.rel_i_plus_at_peak = std::abs(r.twa.mean_i_plus[ip] - r.oracle.i_plus[ip]) / r.oracle.i_plus[ip];
    r.passed = r.max_rel_i_plus <= tolerance && r.max_rel_i_minus <= tolerance;
    return r;
}

}  // namespace wgsf
