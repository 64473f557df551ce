#pragma once
// Discrete-time (weekly) SIR simulation with per-layer chain-binomial
// infection probabilities and Weibull-sampled recovery times.
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "mlepi/multiplex.hpp"

namespace mlepi {

struct EpiParams {
    std::map<std::string, double> tau_by_layer = {
        {"family", 0.15}, {"household", 0.20}, {"school", 0.10}, {"work", 0.05}};
    double weibull_shape = 1.0;   // eta
    double weibull_scale = 5.0;   // lambda, days
    uint32_t n_seeds = 10;
    uint32_t max_weeks = 200;
    uint64_t rng_seed = 0;
};

constexpr uint32_t kNeverInfected = std::numeric_limits<uint32_t>::max();

struct WeeklyCounts {
    uint32_t week;
    uint64_t susceptible, infected, recovered;
};

struct InfectionRecord {
    std::vector<uint32_t> infection_week;  // kNeverInfected when censored
    std::vector<uint32_t> recovery_week;   // kNeverInfected when not recovered
    uint32_t censor_week = 0;              // last simulated week
    bool hit_week_cap = false;
    std::vector<WeeklyCounts> curve;

    bool event(std::size_t node) const { return infection_week[node] != kNeverInfected; }
};

// Probability 1 - prod_l (1 - tau_l)^{gamma_l}: the per-week infection
// probability of a susceptible node with gamma_l infected neighbors in
// layer l. Equivalent in distribution to OR-ing independent per-layer
// Bernoulli draws.
double reed_frost_prob(const std::vector<std::pair<double, uint32_t>>& taus_and_counts);

// One run. Seeds are n_seeds distinct uniform nodes infected at week 0;
// updates are synchronous (infections at week t use the infected sets of
// week t-1); an infected node recovers at week t once (t - t_inf) * 7
// exceeds its recovery draw. Deterministic given params.rng_seed.
InfectionRecord simulate(const MultiplexNetwork& net, const EpiParams& params);

// k replicates; replicate j runs with a child seed derived from
// (params.rng_seed, j), so results are independent of execution order.
std::vector<InfectionRecord> run_ensemble(const MultiplexNetwork& net,
                                          const EpiParams& params, uint32_t k,
                                          uint32_t n_threads = 1);

struct EpidemicSummary {
    struct Stat {
        double min, mean, median, max, sd;
    };
    Stat duration_weeks;
    Stat pct_infected;
    Stat mean_time_to_infection;
    Stat pct_infected_at_peak;
    Stat peak_week;
    std::vector<double> per_node_infection_pct; // share of replicates infected, %
};

EpidemicSummary epidemic_summary(const std::vector<InfectionRecord>& records);

} // namespace mlepi
