#pragma once
// Statistical evaluation of centrality vs. infection outcomes: rank
// correlations with Fisher-z ensemble averaging, Cox proportional-hazards
// fitting (Efron ties), Kaplan-Meier, and Uno's IPCW concordance index.
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mlepi {

// Pearson correlation of mid-ranks (average ranks for ties). Throws on
// length mismatch, n < 2, or a constant vector.
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

enum class FisherKind { correlation, cindex };

struct FisherMean {
    double mean;
    double ci_low, ci_high; // 95%
};

// atanh-average of correlation-like values; C-indexes are mapped through
// 2C-1 first. Values must lie strictly inside the open interval.
FisherMean fisher_z_mean(const std::vector<double>& values, FisherKind kind);

struct SurvivalDataset {
    std::vector<double> time;            // weeks to infection or censoring
    std::vector<uint8_t> event;
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> features; // column-major
    std::size_t n() const { return time.size(); }
};

// One multiplicative term of a Cox model: product of base features raised
// to small powers.
struct ModelTerm {
    std::vector<std::pair<std::string, uint32_t>> factors; // (feature, power<=3)
    std::string name() const;
};

struct ModelSpec {
    uint32_t id = 0;
    std::vector<ModelTerm> terms;

    // "degree^2" or "degree*eigenvector" style term list, ';'-separated
    static ModelSpec parse(uint32_t id, const std::string& term_list);
};

// Load the shipped model grid: CSV with columns id,terms.
std::vector<ModelSpec> load_model_grid(const std::string& path);
std::vector<ModelSpec> default_model_grid();

// Standardizes base features (mean 0, SD 1), then builds the spec's
// product terms. Column order follows the spec's term order.
void expand_model(const ModelSpec& spec,
                  const std::vector<std::string>& base_names,
                  const std::vector<std::vector<double>>& base_columns,
                  SurvivalDataset& data);

struct CoxFit {
    std::vector<double> beta;
    std::vector<double> std_error;
    double log_likelihood = 0.0;
    uint64_t iterations = 0;
    bool converged = false;
    double gradient_norm = 0.0;
    bool separation_suspected = false;
};

struct CoxOptions {
    double gradient_tolerance = 1e-8;
    double loglik_rel_tolerance = 1e-10;
    uint64_t max_iterations = 100;
};

// Newton-Raphson on the Efron-approximated partial likelihood (the weekly
// grid produces heavy ties). Throws on constant columns or no events;
// non-convergence is reported through the returned diagnostics.
CoxFit fit_cox(const SurvivalDataset& data, const CoxOptions& opts = {});

// Right-continuous product-limit estimator of P(T > t).
struct KaplanMeier {
    std::vector<double> times;  // event times, ascending
    std::vector<double> surv;   // value on [times[k], times[k+1])
    double at(double t) const;        // S(t)
    double at_left(double t) const;   // S(t-)
};
KaplanMeier kaplan_meier(const std::vector<double>& times,
                         const std::vector<uint8_t>& events);

struct UnoResult {
    double c_index;
    uint64_t comparable_pairs;
    uint64_t excluded_pairs; // G(t_i) == 0
};

// IPCW concordance: pairs (i,j) with t_i < t_j, t_i < truncation, and
// event_i = 1, weighted by 1/G(t_i-)^2 where G is the Kaplan-Meier curve
// of the censoring distribution. Risk ties count one half.
UnoResult uno_c_index(const std::vector<double>& risk,
                      const std::vector<double>& times,
                      const std::vector<uint8_t>& events,
                      double truncation);

struct GridCell {
    uint32_t model_id;
    std::string structure; // "multi" | "single"
    FisherMean c;
    uint32_t n_replicates_ok;
    uint32_t n_replicates_failed;
};

struct GridOptions {
    double truncation = 0.0; // <= 0: largest event time across the ensemble
    uint32_t n_threads = 1;
    CoxOptions cox;
};

struct ReplicateOutcome {
    std::vector<double> time;
    std::vector<uint8_t> event;
};

// Per replicate: fit the Cox model on that replicate's survival data and
// score it with Uno's C; aggregate across replicates with fisher_z_mean.
// Per-model fit failures are counted, not fatal.
std::vector<GridCell> evaluate_grid(
    const std::vector<ModelSpec>& specs,
    const std::vector<std::string>& base_names,
    const std::vector<std::vector<double>>& multi_columns,
    const std::vector<std::vector<double>>& single_columns,
    const std::vector<ReplicateOutcome>& replicates,
    const GridOptions& opts = {});

} // namespace mlepi
