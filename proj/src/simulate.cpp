#include "mvtc/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>
#include <vector>

#include "mvtc/errors.hpp"

namespace mvtc {

namespace {

// Independent per-path stream: splitmix64 over (seed, path index) keys a
// 64-bit xorshift-style generator; normals by the polar method.
struct PathRng {
    std::uint64_t s;

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    PathRng(std::uint64_t seed, std::uint64_t path) {
        // scramble the start state so consecutive paths do not sit one
        // increment apart on the shared Weyl orbit
        s = mix(seed + 0x9e3779b97f4a7c15ULL * (path + 1));
    }
    std::uint64_t next() { return mix(s += 0x9e3779b97f4a7c15ULL); }
    double uniform() { return (next() >> 11) * 0x1.0p-53; }  // in [0, 1)

    bool have_spare = false;
    double spare = 0.0;
    double normal() {
        if (have_spare) {
            have_spare = false;
            return spare;
        }
        double a, b, q;
        do {
            a = 2.0 * uniform() - 1.0;
            b = 2.0 * uniform() - 1.0;
            q = a * a + b * b;
        } while (q >= 1.0 || q == 0.0);
        const double f = std::sqrt(-2.0 * std::log(q) / q);
        spare = b * f;
        have_spare = true;
        return a * f;
    }
};

void note_conservation(double before, double after, StepCounters* c) {
    const double rel = std::abs(after - before) / std::max(1.0, std::abs(before));
    if (c && rel > c->max_conservation_error) c->max_conservation_error = rel;
}

struct BlockStats {
    double s1 = 0, s2 = 0, s3 = 0, s4 = 0;  // raw moments of terminal W
    double sum_m = 0, sum_n = 0;
    long contact_sell = 0, contact_buy = 0;
    long buy_after_t0 = 0, short_covers = 0, corner_events = 0;
    long discarded = 0;
    double max_cons = 0.0;
};

}  // namespace

PathState step(const PathState& state, double dt, double dw, const FreeBoundaries& bounds,
               const MarketParams& params, StepCounters* counters) {
    PathState s = state;
    s.t = state.t + dt;
    s.bond = state.bond * (1.0 + params.r * dt);
    s.stock = state.stock * (1.0 + params.alpha * dt + params.sigma * dw);
    const bool after_t0 = s.t >= bounds.t0;

    if (s.stock <= 0.0) {
        // short positions are covered at once: to the buy boundary while the
        // buy region exists, straight to zero stock afterwards
        const double c = s.bond + (1.0 + params.lambda) * s.stock;
        double y_new;
        if (!after_t0) {
            const double xb = bounds.buy_at(s.t);
            y_new = c / (xb + 1.0 + params.lambda);
            if (counters) ++counters->buy_contacts;
        } else {
            y_new = 0.0;
            if (counters) ++counters->short_covers;
        }
        const double bought = y_new - s.stock;
        s.bought += bought;
        s.stock = y_new;
        s.bond = c - (1.0 + params.lambda) * y_new;
        note_conservation(c, s.bond + (1.0 + params.lambda) * s.stock, counters);
        return s;
    }

    const double xs = bounds.sell_at(s.t);
    const double xb = bounds.buy_at(s.t);
    const double ratio = s.bond / s.stock;
    const bool hit_sell = ratio >= xs;
    const bool hit_buy = std::isfinite(xb) && ratio <= xb;
    if (hit_sell && hit_buy && counters) ++counters->corner_events;

    if (hit_sell) {
        const double c = s.bond + (1.0 - params.mu) * s.stock;
        const double y_new = c / (xs + 1.0 - params.mu);
        s.sold += s.stock - y_new;
        s.stock = y_new;
        s.bond = xs * y_new;
        note_conservation(c, s.bond + (1.0 - params.mu) * s.stock, counters);
        if (counters) ++counters->sell_contacts;
    }
    if (hit_buy && (!hit_sell || s.bond / s.stock <= xb)) {
        const double c = s.bond + (1.0 + params.lambda) * s.stock;
        const double y_new = c / (xb + 1.0 + params.lambda);
        s.bought += y_new - s.stock;
        s.stock = y_new;
        s.bond = xb * y_new;
        note_conservation(c, s.bond + (1.0 + params.lambda) * s.stock, counters);
        if (counters) {
            ++counters->buy_contacts;
            if (after_t0) ++counters->buy_contacts_after_t0;
        }
    }
    return s;
}

SimulationReport simulate(const Position& post_trade, double ell_star,
                          const FreeBoundaries& bounds, const MarketParams& params,
                          const McConfig& cfg) {
    if (cfg.n_paths <= 0 || cfg.n_steps <= 0)
        throw ConfigError("simulation needs positive n_paths and n_steps");
    const double T = bounds.horizon();
    const double dt = T / cfg.n_steps;
    const long block_size = 4096;
    const long n_blocks = (cfg.n_paths + block_size - 1) / block_size;
    std::vector<BlockStats> blocks(n_blocks);

    if (cfg.trace_paths > 0 && !cfg.trace_dir.empty())
        std::filesystem::create_directories(cfg.trace_dir);

    auto run_block = [&](long b) {
        BlockStats& st = blocks[b];
        const long first = b * block_size;
        const long last = std::min(first + block_size, cfg.n_paths);
        for (long pi = first; pi < last; ++pi) {
            PathRng rng(cfg.seed, static_cast<std::uint64_t>(pi));
            PathState ps{0.0, post_trade.bond, post_trade.stock, 0.0, 0.0};
            StepCounters pc;
            std::ofstream trace;
            const bool tracing = pi < cfg.trace_paths && !cfg.trace_dir.empty();
            if (tracing) {
                trace.open(cfg.trace_dir + "/path_" + std::to_string(pi) + ".csv");
                trace << "t,X,Y,M,N\n";
                char line[160];
                std::snprintf(line, sizeof line, "%.10g,%.10g,%.10g,%.10g,%.10g\n", ps.t, ps.bond,
                              ps.stock, ps.bought, ps.sold);
                trace << line;
            }
            bool bad = false;
            for (int k = 0; k < cfg.n_steps; ++k) {
                ps = step(ps, dt, std::sqrt(dt) * rng.normal(), bounds, params, &pc);
                if (!std::isfinite(ps.bond) || !std::isfinite(ps.stock)) {
                    bad = true;
                    break;
                }
                if (tracing) {
                    char line[160];
                    std::snprintf(line, sizeof line, "%.10g,%.10g,%.10g,%.10g,%.10g\n", ps.t,
                                  ps.bond, ps.stock, ps.bought, ps.sold);
                    trace << line;
                }
            }
            if (bad) {
                ++st.discarded;
                continue;
            }
            const double w = net_wealth({ps.bond, ps.stock}, params) + ell_star;
            const double w2 = w * w;
            st.s1 += w;
            st.s2 += w2;
            st.s3 += w2 * w;
            st.s4 += w2 * w2;
            st.sum_m += ps.bought;
            st.sum_n += ps.sold;
            st.contact_sell += pc.sell_contacts;
            st.contact_buy += pc.buy_contacts;
            st.buy_after_t0 += pc.buy_contacts_after_t0;
            st.short_covers += pc.short_covers;
            st.corner_events += pc.corner_events;
            st.max_cons = std::max(st.max_cons, pc.max_conservation_error);
        }
    };

    int n_threads = cfg.n_threads > 0 ? cfg.n_threads
                                      : static_cast<int>(std::thread::hardware_concurrency());
    if (n_threads < 1) n_threads = 1;
    std::atomic<long> next_block{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < n_threads; ++w)
        pool.emplace_back([&] {
            for (long b = next_block.fetch_add(1); b < n_blocks; b = next_block.fetch_add(1))
                run_block(b);
        });
    for (auto& th : pool) th.join();

    // fixed-order reduction: results do not depend on the thread count
    BlockStats tot;
    for (const BlockStats& st : blocks) {
        tot.s1 += st.s1;
        tot.s2 += st.s2;
        tot.s3 += st.s3;
        tot.s4 += st.s4;
        tot.sum_m += st.sum_m;
        tot.sum_n += st.sum_n;
        tot.contact_sell += st.contact_sell;
        tot.contact_buy += st.contact_buy;
        tot.buy_after_t0 += st.buy_after_t0;
        tot.short_covers += st.short_covers;
        tot.corner_events += st.corner_events;
        tot.discarded += st.discarded;
        tot.max_cons = std::max(tot.max_cons, st.max_cons);
    }
    if (tot.discarded * 1000 > cfg.n_paths)
        throw NumericalError("more than 0.1% of simulated paths went non-finite");

    const double n = static_cast<double>(cfg.n_paths - tot.discarded);
    if (n < 2) throw NumericalError("too few surviving paths");
    const double mean = tot.s1 / n;
    const double m2 = tot.s2 / n - mean * mean;
    const double var = std::max(m2 * n / (n - 1), 0.0);
    // central fourth moment from raw sums, for the variance CI
    const double m4 = tot.s4 / n - 4.0 * mean * tot.s3 / n + 6.0 * mean * mean * tot.s2 / n -
                      3.0 * mean * mean * mean * mean;
    const double z95 = 1.959963984540054;

    SimulationReport rep;
    rep.n_paths = cfg.n_paths - tot.discarded;
    rep.n_steps = cfg.n_steps;
    rep.mean_w = mean;
    rep.mean_w_ci = z95 * std::sqrt(var / n);
    rep.var_w = var;
    rep.var_w_ci = z95 * std::sqrt(std::max(m4 - m2 * m2, 0.0) / n);
    rep.mean_bought = tot.sum_m / n;
    rep.mean_sold = tot.sum_n / n;
    const double total_steps = n * cfg.n_steps;
    rep.fraction_time_on_sell = tot.contact_sell / total_steps;
    rep.fraction_time_on_buy = tot.contact_buy / total_steps;
    rep.buy_contacts_after_t0 = tot.buy_after_t0;
    rep.short_covers = tot.short_covers;
    rep.corner_events = tot.corner_events;
    rep.discarded = tot.discarded;
    rep.max_conservation_error = tot.max_cons;
    return rep;
}

}  // namespace mvtc
