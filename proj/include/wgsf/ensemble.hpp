#pragma once

// Parallel trajectory ensembles with a reproducible reduction.
//
// Trajectories are grouped in fixed blocks of kBlockSize consecutive indices.
// Each block is reduced sequentially by one worker and blocks are merged in
// index order, so the result is bit-identical for any number of workers.

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include "wgsf/observables.hpp"
#include "wgsf/twa.hpp"

namespace wgsf {

inline constexpr std::uint64_t kBlockSize = 64;
/// Largest tolerated fraction of diverged trajectories.
inline constexpr double kMaxDivergedFraction = 1e-3;

struct EnsembleOptions {
    unsigned jobs = 0;  ///< 0 picks hardware_concurrency
    RunOptions run;
    std::uint64_t first_trajectory = 0;  ///< trajectories [first, first + n_traj) are run
};

inline std::vector<double> record_grid(const SimulationConfig& cfg) {
    std::vector<double> t(static_cast<std::size_t>(cfg.n_records()));
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = static_cast<double>(j * cfg.record_stride) * cfg.dt;
    return t;
}

/// Runs trajectories [first, first + count) and returns the unnormalized sums.
inline EnsembleAccumulator accumulate_ensemble(const SimulationConfig& cfg, const EnsembleOptions& opt = {}) {
    validate(cfg);
    const auto grid = record_grid(cfg);
    const auto n_traj = static_cast<std::uint64_t>(cfg.n_traj);
    const std::uint64_t n_blocks = (n_traj + kBlockSize - 1) / kBlockSize;
    unsigned jobs = opt.jobs ? opt.jobs : std::max(1u, std::thread::hardware_concurrency());
    jobs = static_cast<unsigned>(std::min<std::uint64_t>(jobs, std::max<std::uint64_t>(n_blocks, 1)));

    EnsembleAccumulator total(grid);
    std::mutex mu;
    std::condition_variable cv;
    std::map<std::uint64_t, EnsembleAccumulator> pending;
    std::uint64_t next_merge = 0;
    std::atomic<std::uint64_t> next_block{0};
    std::exception_ptr failure;

    auto worker = [&] {
        try {
            TrajectoryIntegrator integ(cfg, opt.run);
            const std::size_t m = grid.size();
            std::vector<double> ip(m), im(m), sz(m), qpp(m), qmm(m), qpm(m);
            for (;;) {
                const std::uint64_t b = next_block.fetch_add(1);
                if (b >= n_blocks) break;
                {
                    std::lock_guard lk(mu);
                    if (failure) break;
                }
                EnsembleAccumulator acc(grid);
                const std::uint64_t lo = b * kBlockSize, hi = std::min(n_traj, lo + kBlockSize);
                for (std::uint64_t k = lo; k < hi; ++k) {
                    try {
                        const long long neg = integ.run(opt.first_trajectory + k, [&](std::size_t j, const Snapshot& s) {
                            ip[j] = s.i_plus;
                            im[j] = s.i_minus;
                            sz[j] = s.sz;
                            qpp[j] = s.q_pp;
                            qmm[j] = s.q_mm;
                            qpm[j] = s.q_pm;
                        });
                        acc.add(ip, im, sz, qpp, qmm, qpm);
                        acc.add_negative_variance(neg);
                    } catch (const IntegrationDivergedError&) {
                        acc.add_diverged();
                    }
                }
                std::unique_lock lk(mu);
                pending.emplace(b, std::move(acc));
                while (true) {
                    auto it = pending.find(next_merge);
                    if (it == pending.end()) break;
                    total.merge(it->second);
                    pending.erase(it);
                    ++next_merge;
                }
                // bound memory: do not run too far ahead of the merge front
                cv.notify_all();
                cv.wait(lk, [&] { return failure || b < next_merge + 4 * jobs; });
            }
        } catch (...) {
            std::lock_guard lk(mu);
            if (!failure) failure = std::current_exception();
        }
        cv.notify_all();
    };

    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < jobs; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return total;
}

/// Ensemble moments of `cfg.n_traj` trajectories. Fails with
/// IntegrationDivergedError when more than 0.1 % of them diverge.
inline ObservableSeries run_ensemble(const SimulationConfig& cfg, const EnsembleOptions& opt = {}) {
    const auto acc = accumulate_ensemble(cfg, opt);
    auto series = acc.finalize();
    if (static_cast<double>(series.n_diverged) > kMaxDivergedFraction * cfg.n_traj)
        throw IntegrationDivergedError(std::to_string(series.n_diverged) + " of " + std::to_string(cfg.n_traj) +
                                           " trajectories diverged",
                                       -1);
    return series;
}

}  // namespace wgsf
