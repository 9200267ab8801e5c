#pragma once

#include "qmc/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace qmc {

// ---------------------------------------------------------------------------
// Philox4x32-10 counter-based generator
// ---------------------------------------------------------------------------

class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += 0x9E3779B9u;
                key[1] += 0xBB67AE85u;
            }
            const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }
};

/// Uniform doubles from Philox keyed by the seed; the stream index occupies the upper half of the counter.
class PhiloxStream {
public:
    PhiloxStream(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, stream_(stream) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() {
        if (pos_ == 4) refill();
        const std::uint32_t a = buf_[pos_] >> 5, b = buf_[pos_ + 1] >> 6;
        pos_ += 2;
        return (a * 67108864.0 + b) / 9007199254740992.0;
    }

private:
    void refill() {
        const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
        buf_ = Philox4x32::generate(ctr, key_);
        ++block_;
        pos_ = 0;
    }

    Philox4x32::Key key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    Philox4x32::Counter buf_{};
    int pos_ = 4;
};

// ---------------------------------------------------------------------------
// Unraveling
// ---------------------------------------------------------------------------

inline constexpr double branch_guard = 1e-12;

/// Worker count: QMC_SPECTRA_THREADS when set, else the hardware concurrency.
inline int thread_budget() {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const char* env = std::getenv("QMC_SPECTRA_THREADS");
    if (env == nullptr || *env == '\0') return static_cast<int>(hw);
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw SchemaError(std::string("QMC_SPECTRA_THREADS must be a positive integer, got '") + env + "'");
    return static_cast<int>(v);
}

struct TrajectoryConfig {
    QmcModel model;
    int site = 0;
    Density rho;
    int steps = 10;
    int trajectories = 100000;
    std::uint64_t seed = 0;
    std::optional<int> threads;  ///< defaults to thread_budget()
};

struct TrajectoryStep {
    int site;
    CMatrix state;
};

struct Trajectory {
    std::vector<TrajectoryStep> path;  ///< path[n] is the position after n steps
    std::optional<int> killed_at;      ///< step at which the walker left the chain (substochastic columns)
};

namespace detail {

struct Branch {
    int target;
    const CMatrix* effect;
};

/// Every (direction, effect) pair leaving `site`.
inline std::vector<Branch> branches(const QmcModel& m, int site) {
    std::vector<Branch> out;
    const std::pair<BlockKind, int> dirs[] = {{BlockKind::A, 1}, {BlockKind::B, 0}, {BlockKind::C, -1}};
    for (auto [kind, shift] : dirs) {
        const Block* b = m.active_block(kind, site);
        if (b == nullptr) continue;
        if (!b->has_kraus()) throw SchemaError("trajectories need Kraus effects; a block at site " + std::to_string(site) + " only has its superoperator");
        for (const auto& k : b->kraus) out.push_back({site + shift, &k});
    }
    return out;
}

inline void require_config(const TrajectoryConfig& c) {
    if (c.model.copies() != 1) throw SchemaError("trajectories need an unfolded model");
    if (!c.model.topology().contains(c.site)) throw SchemaError("initial site outside topology");
    if (c.rho.dim() != c.model.dim()) throw SchemaError("density dimension does not match the model");
    if (c.steps < 0) throw SchemaError("number of steps must be non-negative");
}

/// One step from (site, rho); returns false when the walker is killed.
inline bool advance(const QmcModel& m, int& site, CMatrix& rho, PhiloxStream& rng) {
    const auto br = branches(m, site);
    std::vector<double> prob(br.size());
    double total = 0.0;
    for (std::size_t k = 0; k < br.size(); ++k) {
        const CMatrix& e = *br[k].effect;
        prob[k] = (e * rho * e.adjoint()).trace().real();
        if (prob[k] < -branch_guard) throw NumericalError("negative branch probability " + std::to_string(prob[k]));
        prob[k] = std::max(prob[k], 0.0);
        total += prob[k];
    }
    if (total > 1.0 + 1e-9) throw NumericalError("branch probabilities at site " + std::to_string(site) + " sum to " + std::to_string(total));
    const double u = rng.uniform();
    double cum = 0.0;
    for (std::size_t k = 0; k < br.size(); ++k) {
        cum += prob[k];
        if (u < cum) {
            const CMatrix& e = *br[k].effect;
            rho = e * rho * e.adjoint() / prob[k];
            rho = 0.5 * (rho + rho.adjoint());
            site = br[k].target;
            return true;
        }
    }
    return false;
}

}  // namespace detail

/// Path of trajectory number `index` (its own Philox stream).
inline Trajectory sample_trajectory(const TrajectoryConfig& c, std::uint64_t index = 0) {
    detail::require_config(c);
    PhiloxStream rng(c.seed, index);
    Trajectory t;
    int site = c.site;
    CMatrix rho = c.rho.matrix();
    t.path.push_back({site, rho});
    for (int n = 1; n <= c.steps; ++n) {
        if (!detail::advance(c.model, site, rho, rng)) {
            t.killed_at = n;
            break;
        }
        t.path.push_back({site, rho});
    }
    return t;
}

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Occupation frequencies for steps 0..steps and sites origin-steps..origin+steps.
class OccupationEstimate {
public:
    OccupationEstimate(int origin, int steps, std::int64_t trajectories, std::uint64_t seed)
        : origin_(origin), steps_(steps), n_(trajectories), seed_(seed),
          counts_(static_cast<std::size_t>(steps + 1) * static_cast<std::size_t>(2 * steps + 1), 0),
          killed_(static_cast<std::size_t>(steps + 1), 0) {}

    int steps() const { return steps_; }
    int lowest_site() const { return origin_ - steps_; }
    int highest_site() const { return origin_ + steps_; }
    std::int64_t trajectories() const { return n_; }
    std::uint64_t seed() const { return seed_; }

    Estimate at(int site, int step) const {
        if (step < 0 || step > steps_) throw SchemaError("step outside the simulated range");
        if (site < lowest_site() || site > highest_site()) return {};
        return bernoulli(count(site, step));
    }

    /// Fraction of trajectories killed at or before `step`.
    Estimate absorbed(int step) const {
        if (step < 0 || step > steps_) throw SchemaError("step outside the simulated range");
        std::int64_t k = 0;
        for (int n = 0; n <= step; ++n) k += killed_[static_cast<std::size_t>(n)];
        return bernoulli(k);
    }

    std::int64_t& count(int site, int step) { return counts_[index(site, step)]; }
    std::int64_t count(int site, int step) const { return counts_[index(site, step)]; }
    std::int64_t& killed(int step) { return killed_[static_cast<std::size_t>(step)]; }

    void merge(const OccupationEstimate& o) {
        for (std::size_t k = 0; k < counts_.size(); ++k) counts_[k] += o.counts_[k];
        for (std::size_t k = 0; k < killed_.size(); ++k) killed_[k] += o.killed_[k];
    }

private:
    std::size_t index(int site, int step) const {
        return static_cast<std::size_t>(step) * static_cast<std::size_t>(2 * steps_ + 1) +
               static_cast<std::size_t>(site - lowest_site());
    }

    Estimate bernoulli(std::int64_t k) const {
        const double p = static_cast<double>(k) / static_cast<double>(n_);
        return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n_))};
    }

    int origin_, steps_;
    std::int64_t n_;
    std::uint64_t seed_;
    std::vector<std::int64_t> counts_;
    std::vector<std::int64_t> killed_;
};

/// Monte Carlo site occupations; identical for a given seed whatever the number of workers.
inline OccupationEstimate estimate_site_prob(const TrajectoryConfig& c) {
    detail::require_config(c);
    if (c.trajectories < 100) throw SchemaError("at least 100 trajectories are required");
    const int workers = std::max(1, std::min(c.threads.value_or(thread_budget()), c.trajectories));
    std::vector<OccupationEstimate> partial(static_cast<std::size_t>(workers),
                                           OccupationEstimate(c.site, c.steps, c.trajectories, c.seed));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    auto work = [&](int w) {
        try {
            auto& out = partial[static_cast<std::size_t>(w)];
            for (int t = w; t < c.trajectories; t += workers) {
                PhiloxStream rng(c.seed, static_cast<std::uint64_t>(t));
                int site = c.site;
                CMatrix rho = c.rho.matrix();
                ++out.count(site, 0);
                for (int n = 1; n <= c.steps; ++n) {
                    if (!detail::advance(c.model, site, rho, rng)) {
                        ++out.killed(n);
                        break;
                    }
                    ++out.count(site, n);
                }
            }
        } catch (...) {
            errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(work, w);
    work(0);
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    OccupationEstimate total = partial.front();
    for (std::size_t w = 1; w < partial.size(); ++w) total.merge(partial[w]);
    return total;
}

}  // namespace qmc
