#include "mlepi/epidemic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "mlepi/rng.hpp"

namespace mlepi {

double reed_frost_prob(const std::vector<std::pair<double, uint32_t>>& taus_and_counts) {
    double escape = 1.0;
    for (auto [tau, count] : taus_and_counts) {
        if (count == 0) continue;
        escape *= std::pow(1.0 - tau, static_cast<double>(count));
    }
    return 1.0 - escape;
}

namespace {

enum class State : uint8_t { susceptible, infected, recovered };

void validate(const MultiplexNetwork& net, const EpiParams& p) {
    for (const auto& [layer, tau] : p.tau_by_layer) {
        if (tau < 0.0 || tau > 1.0)
            throw std::invalid_argument("epidemic: tau for layer '" + layer +
                                        "' must be in [0, 1]");
        if (net.find_layer(layer) == nullptr)
            throw std::invalid_argument("epidemic: tau names unknown layer '" +
                                        layer + "'");
    }
    if (p.weibull_shape <= 0 || p.weibull_scale <= 0)
        throw std::invalid_argument("epidemic: Weibull shape and scale must be > 0");
    if (p.n_seeds < 1) throw std::invalid_argument("epidemic: n_seeds must be >= 1");
    if (p.n_seeds > net.n_nodes())
        throw std::invalid_argument("epidemic: n_seeds exceeds network size");
}

} // namespace

InfectionRecord simulate(const MultiplexNetwork& net, const EpiParams& params) {
    validate(net, params);
    const std::size_t n = net.n_nodes();
    const std::size_t n_layers = net.n_layers();

    std::vector<double> tau(n_layers, 0.0);
    std::vector<double> log1m_tau(n_layers, 0.0);
    for (std::size_t l = 0; l < n_layers; ++l) {
        auto it = params.tau_by_layer.find(net.layers[l].name);
        tau[l] = it == params.tau_by_layer.end() ? 0.0 : it->second;
        log1m_tau[l] = std::log1p(-tau[l]);
    }

    Rng rng(derive_seed(params.rng_seed, "epidemic"));

    InfectionRecord rec;
    rec.infection_week.assign(n, kNeverInfected);
    rec.recovery_week.assign(n, kNeverInfected);
    std::vector<State> state(n, State::susceptible);
    std::vector<double> recovery_days(n, 0.0);

    std::vector<NodeIndex> infected; // current infected set
    for (uint32_t s : rng.sample_without_replacement(static_cast<uint32_t>(n),
                                                     params.n_seeds)) {
        state[s] = State::infected;
        rec.infection_week[s] = 0;
        recovery_days[s] = rng.weibull(params.weibull_shape, params.weibull_scale);
        infected.push_back(s);
    }
    std::sort(infected.begin(), infected.end());

    uint64_t n_infected = infected.size();
    uint64_t n_recovered = 0;
    rec.curve.push_back({0, n - n_infected, n_infected, 0});

    // per-susceptible log escape probability accumulated layer by layer
    std::vector<double> log_escape(n, 0.0);
    std::vector<NodeIndex> touched;

    uint32_t week = 0;
    while (!infected.empty() && week < params.max_weeks) {
        ++week;

        // accumulate infected-neighbor pressure on susceptible nodes,
        // using the infected set of week-1 (synchronous update)
        touched.clear();
        for (std::size_t l = 0; l < n_layers; ++l) {
            if (tau[l] == 0.0) continue;
            const auto& g = net.layers[l];
            const double lt = log1m_tau[l];
            for (NodeIndex i : infected) {
                for (NodeIndex j : g.neighbors_of(i)) {
                    if (state[j] != State::susceptible) continue;
                    if (log_escape[j] == 0.0) touched.push_back(j);
                    log_escape[j] += lt;
                }
            }
        }
        // draw infections in node order for determinism
        std::sort(touched.begin(), touched.end());
        touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
        std::vector<NodeIndex> newly_infected;
        for (NodeIndex j : touched) {
            const double p_infect = -std::expm1(log_escape[j]);
            log_escape[j] = 0.0;
            if (rng.next_double() < p_infect) newly_infected.push_back(j);
        }

        // recoveries for nodes infected in earlier weeks
        std::vector<NodeIndex> still_infected;
        still_infected.reserve(infected.size());
        for (NodeIndex i : infected) {
            const double days = static_cast<double>(week - rec.infection_week[i]) * 7.0;
            if (days > recovery_days[i]) {
                state[i] = State::recovered;
                rec.recovery_week[i] = week;
                ++n_recovered;
                --n_infected;
            } else {
                still_infected.push_back(i);
            }
        }

        for (NodeIndex j : newly_infected) {
            state[j] = State::infected;
            rec.infection_week[j] = week;
            recovery_days[j] = rng.weibull(params.weibull_shape, params.weibull_scale);
            still_infected.push_back(j);
            ++n_infected;
        }
        std::sort(still_infected.begin(), still_infected.end());
        infected = std::move(still_infected);

        rec.curve.push_back({week, n - n_infected - n_recovered, n_infected, n_recovered});
    }

    rec.censor_week = week;
    rec.hit_week_cap = !infected.empty();
    return rec;
}

std::vector<InfectionRecord> run_ensemble(const MultiplexNetwork& net,
                                          const EpiParams& params, uint32_t k,
                                          uint32_t n_threads) {
    if (k < 1) throw std::invalid_argument("run_ensemble: k must be >= 1");
    validate(net, params);

    std::vector<InfectionRecord> records(k);
    auto worker_body = [&](std::atomic<uint32_t>& next) {
        while (true) {
            uint32_t j = next.fetch_add(1);
            if (j >= k) break;
            EpiParams child = params;
            child.rng_seed = derive_seed(params.rng_seed, "replicate", j);
            records[j] = simulate(net, child);
        }
    };

    if (n_threads <= 1) {
        std::atomic<uint32_t> next{0};
        worker_body(next);
    } else {
        std::atomic<uint32_t> next{0};
        std::vector<std::thread> pool;
        uint32_t nt = std::min(n_threads, k);
        pool.reserve(nt);
        for (uint32_t t = 0; t < nt; ++t)
            pool.emplace_back([&] { worker_body(next); });
        for (auto& t : pool) t.join();
    }
    return records;
}

namespace {

EpidemicSummary::Stat summarize(std::vector<double> v) {
    EpidemicSummary::Stat s{};
    if (v.empty()) return s;
    std::sort(v.begin(), v.end());
    s.min = v.front();
    s.max = v.back();
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    s.median = v.size() % 2 == 1 ? v[v.size() / 2]
                                 : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
    double var = 0.0;
    for (double x : v) var += (x - s.mean) * (x - s.mean);
    s.sd = v.size() > 1 ? std::sqrt(var / (static_cast<double>(v.size()) - 1.0)) : 0.0;
    return s;
}

} // namespace

EpidemicSummary epidemic_summary(const std::vector<InfectionRecord>& records) {
    if (records.empty())
        throw std::invalid_argument("epidemic_summary: need at least one record");
    const std::size_t n = records.front().infection_week.size();

    std::vector<double> duration, pct_inf, mean_tti, pct_peak, peak_week;
    std::vector<uint64_t> infection_counts(n, 0);
    for (const auto& r : records) {
        duration.push_back(r.censor_week);
        uint64_t events = 0;
        double tti_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (r.infection_week[i] != kNeverInfected) {
                ++events;
                ++infection_counts[i];
                tti_sum += r.infection_week[i];
            }
        }
        pct_inf.push_back(100.0 * static_cast<double>(events) / static_cast<double>(n));
        mean_tti.push_back(events > 0 ? tti_sum / static_cast<double>(events) : 0.0);
        uint64_t peak = 0;
        uint32_t peak_w = 0;
        for (const auto& wc : r.curve)
            if (wc.infected > peak) {
                peak = wc.infected;
                peak_w = wc.week;
            }
        pct_peak.push_back(100.0 * static_cast<double>(peak) / static_cast<double>(n));
        peak_week.push_back(peak_w);
    }

    EpidemicSummary s;
    s.duration_weeks = summarize(std::move(duration));
    s.pct_infected = summarize(std::move(pct_inf));
    s.mean_time_to_infection = summarize(std::move(mean_tti));
    s.pct_infected_at_peak = summarize(std::move(pct_peak));
    s.peak_week = summarize(std::move(peak_week));
    s.per_node_infection_pct.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        s.per_node_infection_pct[i] = 100.0 * static_cast<double>(infection_counts[i]) /
                                      static_cast<double>(records.size());
    return s;
}

} // namespace mlepi
