#pragma once

// Collective exchange (J) and decay (Gamma) matrices of emitters on a 1D
// waveguide, and the noise factor G with G G^dagger = Gamma.
//
// Index convention: element (l, m) couples sigma_l^+ sigma_m^-, i.e.
//   H_eff = sum_lm g_lm s_l^+ s_m^-,  g = J - i Gamma / 2,
//   dissipator sum_lm Gamma_lm (s_m^- rho s_l^+ - {s_l^+ s_m^-, rho} / 2),
// and the separation entering element (l, m) is z_lm = z_l - z_m.  With this
// ordering the two jump modes of Gamma carry exactly the spatial phases of the
// emitted fields E+- ~ sum_n exp(i (k_p -+ k_0) z_n) s_n^-.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "wgsf/errors.hpp"

namespace wgsf {

using cplx = std::complex<double>;
inline constexpr cplx kI{0.0, 1.0};

/// Both the dynamic kernel and the motion-averaged static kernel have the form
///   g_lm = -i (G1D/2) * { a_f exp(+i q_f z_lm)  if z_lm > 0
///                        { a_b exp(-i q_b z_lm)  if z_lm < 0
///                        { (a_f + a_b)/2          if z_lm = 0
/// so Gamma = (G1D/2)(a_f u u^dag + a_b w w^dag) with u_n = exp(i q_f z_n),
/// w_n = exp(-i q_b z_n): rank two, and sums over the kernel reduce to prefix
/// sums over position-sorted emitters.
struct WaveguideGeometry {
    double gamma_1d = 1.0;
    double alpha_f = 1.0;  ///< weight of the forward-propagating (+) channel
    double alpha_b = 1.0;  ///< weight of the backward-propagating (-) channel
    double q_f = 0.0;
    double q_b = 0.0;

    /// Diagonal of Gamma.
    double gamma_self() const { return 0.5 * gamma_1d * (alpha_f + alpha_b); }
    double beta_plus() const { return 0.5 * alpha_f; }
    double beta_minus() const { return 0.5 * alpha_b; }
};

/// Kernel with the pump phase: g_lm = -i(G1D/2) exp(i k0 |z_lm|) exp(-i kp z_lm).
inline WaveguideGeometry dynamic_geometry(double lambda0, double lambda_p, double gamma_1d) {
    const double k0 = 2.0 * std::numbers::pi / lambda0;
    const double kp = 2.0 * std::numbers::pi / lambda_p;
    return {gamma_1d, 1.0, 1.0, k0 - kp, k0 + kp};
}

/// Position-blur averaged kernel; the pump phase is gauged away (k_p ~ k_0).
inline WaveguideGeometry static_geometry(double beta_minus, double gamma_1d, double lambda0) {
    if (!(beta_minus >= 0.0 && beta_minus <= 1.0))
        throw DomainError("static couplings: beta_minus must lie in [0, 1]");
    const double k0 = 2.0 * std::numbers::pi / lambda0;
    return {gamma_1d, 1.0, beta_minus, k0, k0};
}

inline cplx kernel_entry(const WaveguideGeometry& geo, double z_l, double z_m) {
    const double d = z_l - z_m;
    const cplx pre = -kI * (0.5 * geo.gamma_1d);
    if (d > 0) return pre * geo.alpha_f * std::polar(1.0, geo.q_f * d);
    if (d < 0) return pre * geo.alpha_b * std::polar(1.0, -geo.q_b * d);
    return pre * (0.5 * (geo.alpha_f + geo.alpha_b));
}

/// exp(-((4 pi v_bar tau) / lambda0)^2), the motion-averaged weight of the
/// backward channel.
inline double suppression_factor(double v_bar, double tau, double lambda0) {
    if (!(lambda0 > 0.0)) throw DomainError("suppression_factor: lambda0 must be positive");
    if (v_bar < 0.0 || tau < 0.0) throw DomainError("suppression_factor: v_bar and tau must be >= 0");
    const double x = 4.0 * std::numbers::pi * v_bar * tau / lambda0;
    return std::exp(-x * x);
}

struct CouplingSet {
    Eigen::MatrixXcd g;
    Eigen::MatrixXcd j_matrix;
    Eigen::MatrixXcd gamma_matrix;
    Eigen::MatrixXcd noise_factor;
    double beta_plus = 0.5;
    double beta_minus = 0.5;

    Eigen::Index size() const { return g.rows(); }
};

inline constexpr double kDefaultClipTol = 1e-10;

/// Hermitian square root of the eigenvalue-clipped Gamma, so G G^dag = Gamma.
/// Eigenvalues in [-clip_tol * max, 0) are set to zero; anything below that
/// raises MatrixNotPsdError.
inline Eigen::MatrixXcd noise_factorization(const Eigen::MatrixXcd& gamma_matrix, double clip_tol = kDefaultClipTol) {
    const Eigen::Index n = gamma_matrix.rows();
    if (n == 0) return {};
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gamma_matrix);
    if (eig.info() != Eigen::Success) throw Error("noise_factorization: eigendecomposition failed");
    Eigen::VectorXd lambda = eig.eigenvalues();
    const double lmax = lambda.maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (lambda[i] < 0.0) {
            if (lambda[i] < -clip_tol * std::max(lmax, 0.0)) throw MatrixNotPsdError(lambda[i], lmax);
            lambda[i] = 0.0;
        }
    }
    const Eigen::MatrixXcd& v = eig.eigenvectors();
    return v * lambda.cwiseSqrt().asDiagonal() * v.adjoint();
}

inline CouplingSet build_couplings(const WaveguideGeometry& geo, std::span<const double> positions,
                                   double clip_tol = kDefaultClipTol) {
    const auto n = static_cast<Eigen::Index>(positions.size());
    CouplingSet c;
    c.g.resize(n, n);
    for (Eigen::Index l = 0; l < n; ++l)
        for (Eigen::Index m = 0; m < n; ++m) c.g(l, m) = kernel_entry(geo, positions[l], positions[m]);
    c.j_matrix = 0.5 * (c.g + c.g.adjoint());
    c.gamma_matrix = kI * (c.g - c.g.adjoint());
    c.noise_factor = noise_factorization(c.gamma_matrix, clip_tol);
    c.beta_plus = geo.beta_plus();
    c.beta_minus = geo.beta_minus();
    return c;
}

inline CouplingSet build_dynamic_couplings(std::span<const double> positions, double lambda0, double lambda_p,
                                           double gamma_1d, double clip_tol = kDefaultClipTol) {
    if (!(lambda0 > 0 && lambda_p > 0 && gamma_1d > 0))
        throw DomainError("build_dynamic_couplings: lambda0, lambda_p and gamma_1d must be positive");
    return build_couplings(dynamic_geometry(lambda0, lambda_p, gamma_1d), positions, clip_tol);
}

/// Gamma_lm = (G1D/2)(e^{ik0 z_lm} + b e^{-ik0 z_lm}),
/// J_lm = sgn(z_lm)(G1D/4i)(e^{ik0 z_lm} - b e^{-ik0 z_lm}), sgn(0) = 0.
inline CouplingSet build_static_couplings(std::span<const double> positions, double beta_minus, double gamma_1d,
                                          double lambda0, double clip_tol = kDefaultClipTol) {
    const auto geo = static_geometry(beta_minus, gamma_1d, lambda0);
    const double k0 = 2.0 * std::numbers::pi / lambda0;
    const auto n = static_cast<Eigen::Index>(positions.size());
    CouplingSet c;
    c.gamma_matrix.resize(n, n);
    c.j_matrix.resize(n, n);
    for (Eigen::Index l = 0; l < n; ++l) {
        for (Eigen::Index m = 0; m < n; ++m) {
            const double d = positions[l] - positions[m];
            const cplx fwd = std::polar(1.0, k0 * d);
            const cplx bwd = beta_minus * std::polar(1.0, -k0 * d);
            const double sgn = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
            c.gamma_matrix(l, m) = 0.5 * gamma_1d * (fwd + bwd);
            c.j_matrix(l, m) = sgn * gamma_1d / (4.0 * kI) * (fwd - bwd);
        }
    }
    c.g = c.j_matrix - 0.5 * kI * c.gamma_matrix;
    c.noise_factor = noise_factorization(c.gamma_matrix, clip_tol);
    c.beta_plus = geo.beta_plus();
    c.beta_minus = geo.beta_minus();
    return c;
}

/// Per-emitter phases of the two channels: u_n = exp(i q_f z_n), w_n = exp(-i q_b z_n).
/// The emitted fields use the conjugates: E+ ~ sum conj(u_n) s_n, E- ~ sum conj(w_n) s_n.
struct ModePhases {
    std::vector<cplx> u;
    std::vector<cplx> w;

    void assign(const WaveguideGeometry& geo, std::span<const double> z) {
        u.resize(z.size());
        w.resize(z.size());
        for (std::size_t n = 0; n < z.size(); ++n) {
            u[n] = std::polar(1.0, geo.q_f * z[n]);
            w[n] = std::polar(1.0, -geo.q_b * z[n]);
        }
    }
};

/// Rank-two factor G (N x 2) with G G^dag = Gamma for a waveguide kernel.
inline Eigen::MatrixXcd low_rank_noise_factor(const WaveguideGeometry& geo, std::span<const double> positions) {
    ModePhases ph;
    ph.assign(geo, positions);
    const auto n = static_cast<Eigen::Index>(positions.size());
    Eigen::MatrixXcd gf(n, 2);
    const double af = std::sqrt(0.5 * geo.gamma_1d * geo.alpha_f);
    const double ab = std::sqrt(0.5 * geo.gamma_1d * geo.alpha_b);
    for (Eigen::Index i = 0; i < n; ++i) {
        gf(i, 0) = af * ph.u[i];
        gf(i, 1) = ab * ph.w[i];
    }
    return gf;
}

/// Evaluates h_l = sum_m g_lm x_m in O(N) over position-sorted emitters.
class KernelApplier {
public:
    explicit KernelApplier(WaveguideGeometry geo) : geo_(geo) {}

    const WaveguideGeometry& geometry() const { return geo_; }

    /// Recomputes the sort order and the channel phases for new positions.
    void set_positions(std::span<const double> z) {
        const std::size_t n = z.size();
        if (order_.size() != n) {
            order_.resize(n);
            std::iota(order_.begin(), order_.end(), std::size_t{0});
        }
        // insertion sort: the previous order is nearly sorted after a small move
        for (std::size_t i = 1; i < n; ++i) {
            const std::size_t key = order_[i];
            std::size_t j = i;
            while (j > 0 && z[order_[j - 1]] > z[key]) {
                order_[j] = order_[j - 1];
                --j;
            }
            order_[j] = key;
        }
        z_.assign(z.begin(), z.end());
        phases_.assign(geo_, z);
    }

    const ModePhases& phases() const { return phases_; }

    void apply(std::span<const cplx> x, std::span<cplx> h) const {
        const std::size_t n = order_.size();
        const cplx pre = -kI * (0.5 * geo_.gamma_1d);
        const double a_tie = 0.5 * (geo_.alpha_f + geo_.alpha_b);
        cplx acc{};
        // forward pass over groups of equal position
        for (std::size_t i = 0; i < n;) {
            std::size_t j = i;
            cplx tie{};
            while (j < n && z_[order_[j]] == z_[order_[i]]) tie += x[order_[j++]];
            cplx add{};
            for (std::size_t k = i; k < j; ++k) {
                const std::size_t l = order_[k];
                h[l] = pre * (geo_.alpha_f * phases_.u[l] * acc + a_tie * tie);
                add += std::conj(phases_.u[l]) * x[l];
            }
            acc += add;
            i = j;
        }
        acc = cplx{};
        for (std::size_t i = n; i > 0;) {
            std::size_t j = i;
            while (j > 0 && z_[order_[j - 1]] == z_[order_[i - 1]]) --j;
            cplx add{};
            for (std::size_t k = j; k < i; ++k) {
                const std::size_t l = order_[k];
                h[l] += pre * geo_.alpha_b * phases_.w[l] * acc;
                add += std::conj(phases_.w[l]) * x[l];
            }
            acc += add;
            i = j;
        }
    }

private:
    WaveguideGeometry geo_;
    std::vector<std::size_t> order_;
    std::vector<double> z_;
    ModePhases phases_;
};

}  // namespace wgsf
