#include "mlepi/survival.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "mlepi/csv.hpp"

namespace mlepi {

namespace {

std::vector<double> mid_ranks(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&x](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        const double r = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw std::invalid_argument("spearman_rho: constant vector, correlation undefined");
    return sxy / std::sqrt(sxx * syy);
}

} // namespace

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size())
        throw std::invalid_argument("spearman_rho: length mismatch");
    if (x.size() < 2) throw std::invalid_argument("spearman_rho: need n >= 2");
    return pearson(mid_ranks(x), mid_ranks(y));
}

FisherMean fisher_z_mean(const std::vector<double>& values, FisherKind kind) {
    if (values.empty()) throw std::invalid_argument("fisher_z_mean: no values");
    std::vector<double> z;
    z.reserve(values.size());
    for (double v : values) {
        double r = kind == FisherKind::cindex ? 2.0 * v - 1.0 : v;
        if (r <= -1.0 || r >= 1.0)
            throw std::invalid_argument("fisher_z_mean: value at interval boundary");
        z.push_back(std::atanh(r));
    }
    const auto k = static_cast<double>(z.size());
    double mean_z = 0.0;
    for (double v : z) mean_z += v;
    mean_z /= k;
    double var = 0.0;
    for (double v : z) var += (v - mean_z) * (v - mean_z);
    const double sd = z.size() > 1 ? std::sqrt(var / (k - 1.0)) : 0.0;
    const double half = 1.96 * sd / std::sqrt(k);

    auto back = [kind](double zz) {
        double r = std::tanh(zz);
        return kind == FisherKind::cindex ? (r + 1.0) / 2.0 : r;
    };
    return {back(mean_z), back(mean_z - half), back(mean_z + half)};
}

std::string ModelTerm::name() const {
    std::string out;
    for (std::size_t i = 0; i < factors.size(); ++i) {
        if (i > 0) out += "*";
        out += factors[i].first;
        if (factors[i].second > 1) out += "^" + std::to_string(factors[i].second);
    }
    return out;
}

ModelSpec ModelSpec::parse(uint32_t id, const std::string& term_list) {
    ModelSpec spec;
    spec.id = id;
    std::stringstream ss(term_list);
    std::string term;
    while (std::getline(ss, term, ';')) {
        term.erase(std::remove(term.begin(), term.end(), ' '), term.end());
        if (term.empty()) continue;
        ModelTerm t;
        std::stringstream fs(term);
        std::string factor;
        while (std::getline(fs, factor, '*')) {
            std::size_t caret = factor.find('^');
            std::string feat = factor.substr(0, caret);
            uint32_t power = 1;
            if (caret != std::string::npos)
                power = static_cast<uint32_t>(std::stoul(factor.substr(caret + 1)));
            if (power < 1 || power > 3)
                throw std::invalid_argument("model term '" + term +
                                            "': powers must be in 1..3");
            t.factors.emplace_back(feat, power);
        }
        if (t.factors.size() > 3)
            throw std::invalid_argument("model term '" + term +
                                        "': at most three-way interactions");
        spec.terms.push_back(std::move(t));
    }
    if (spec.terms.empty())
        throw std::invalid_argument("model " + std::to_string(id) + ": no terms");
    return spec;
}

std::vector<ModelSpec> load_model_grid(const std::string& path) {
    auto table = csv::read(path);
    int cid = table.column("id");
    int cterms = table.column("terms");
    if (cid < 0 || cterms < 0)
        throw std::invalid_argument("model grid " + path + ": need columns id,terms");
    std::vector<ModelSpec> specs;
    for (const auto& row : table.rows)
        specs.push_back(ModelSpec::parse(
            static_cast<uint32_t>(std::stoul(row[static_cast<std::size_t>(cid)])),
            row[static_cast<std::size_t>(cterms)]));
    return specs;
}

std::vector<ModelSpec> default_model_grid() {
    // Our reading of the 25-model table: pure polynomials per measure,
    // pairs with and without interactions/squares, and the full triple.
    static const char* kTerms[25] = {
        "degree",
        "degree;degree^2",
        "degree;degree^2;degree^3",
        "eigenvector",
        "eigenvector;eigenvector^2",
        "eigenvector;eigenvector^2;eigenvector^3",
        "pagerank",
        "pagerank;pagerank^2",
        "pagerank;pagerank^2;pagerank^3",
        "degree;eigenvector",
        "degree;eigenvector;degree*eigenvector",
        "eigenvector;pagerank",
        "eigenvector;pagerank;eigenvector*pagerank",
        "degree;pagerank",
        "degree;pagerank;degree*pagerank",
        "degree;degree^2;eigenvector;eigenvector^2;degree*eigenvector",
        "eigenvector;eigenvector^2;pagerank;pagerank^2;eigenvector*pagerank",
        "degree;degree^2;pagerank;pagerank^2;degree*pagerank",
        "degree;eigenvector;pagerank",
        "degree;eigenvector;pagerank;degree*eigenvector;degree*pagerank;eigenvector*pagerank",
        "degree;eigenvector;pagerank;degree*eigenvector*pagerank",
        "degree;degree^2;eigenvector;eigenvector^2;pagerank;pagerank^2",
        "degree;degree^2;eigenvector;eigenvector^2;pagerank;pagerank^2;"
        "degree*eigenvector;degree*pagerank;eigenvector*pagerank",
        "degree;degree^2;degree^3;eigenvector;eigenvector^2;eigenvector^3;"
        "pagerank;pagerank^2;pagerank^3",
        "degree;degree^2;degree^3;eigenvector;eigenvector^2;eigenvector^3;"
        "pagerank;pagerank^2;pagerank^3;degree*eigenvector*pagerank",
    };
    std::vector<ModelSpec> specs;
    for (uint32_t i = 0; i < 25; ++i) specs.push_back(ModelSpec::parse(i + 1, kTerms[i]));
    return specs;
}

void expand_model(const ModelSpec& spec,
                  const std::vector<std::string>& base_names,
                  const std::vector<std::vector<double>>& base_columns,
                  SurvivalDataset& data) {
    if (base_names.size() != base_columns.size())
        throw std::invalid_argument("expand_model: names/columns mismatch");
    const std::size_t n = base_columns.empty() ? 0 : base_columns.front().size();

    // standardize base features once
    std::vector<std::vector<double>> std_cols(base_columns.size());
    for (std::size_t c = 0; c < base_columns.size(); ++c) {
        const auto& col = base_columns[c];
        double mean = 0.0;
        for (double v : col) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double v : col) var += (v - mean) * (v - mean);
        double sd = std::sqrt(var / (static_cast<double>(n) - 1.0));
        if (sd == 0.0) sd = 1.0;
        std_cols[c].resize(n);
        for (std::size_t i = 0; i < n; ++i) std_cols[c][i] = (col[i] - mean) / sd;
    }

    data.feature_names.clear();
    data.features.clear();
    for (const auto& term : spec.terms) {
        std::vector<double> col(n, 1.0);
        for (const auto& [feat, power] : term.factors) {
            auto it = std::find(base_names.begin(), base_names.end(), feat);
            if (it == base_names.end())
                throw std::invalid_argument("expand_model: unknown feature '" + feat + "'");
            const auto& base = std_cols[static_cast<std::size_t>(it - base_names.begin())];
            for (uint32_t p = 0; p < power; ++p)
                for (std::size_t i = 0; i < n; ++i) col[i] *= base[i];
        }
        data.feature_names.push_back(term.name());
        data.features.push_back(std::move(col));
    }
}

namespace {

// dense symmetric positive-definite solve, in-place Cholesky
bool cholesky_solve(std::vector<double>& a, std::vector<double>& b, std::size_t p) {
    for (std::size_t j = 0; j < p; ++j) {
        double d = a[j * p + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * p + k] * a[j * p + k];
        if (d <= 0.0) return false;
        d = std::sqrt(d);
        a[j * p + j] = d;
        for (std::size_t i = j + 1; i < p; ++i) {
            double s = a[i * p + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * p + k] * a[j * p + k];
            a[i * p + j] = s / d;
        }
    }
    // forward then backward substitution
    for (std::size_t i = 0; i < p; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * p + k] * b[k];
        b[i] = s / a[i * p + i];
    }
    for (std::size_t ii = p; ii > 0; --ii) {
        std::size_t i = ii - 1;
        double s = b[i];
        for (std::size_t k = i + 1; k < p; ++k) s -= a[k * p + i] * b[k];
        b[i] = s / a[i * p + i];
    }
    return true;
}

bool invert_spd(std::vector<double> a, std::vector<double>& inv, std::size_t p) {
    inv.assign(p * p, 0.0);
    for (std::size_t c = 0; c < p; ++c) {
        std::vector<double> e(p, 0.0);
        e[c] = 1.0;
        std::vector<double> acopy = a;
        if (!cholesky_solve(acopy, e, p)) return false;
        for (std::size_t i = 0; i < p; ++i) inv[i * p + c] = e[i];
    }
    return true;
}

struct EfronWork {
    std::vector<std::size_t> order;             // by time ascending
    std::vector<std::pair<std::size_t, std::size_t>> groups; // [begin,end) in order, same time
};

EfronWork prepare(const SurvivalDataset& data) {
    EfronWork w;
    const std::size_t n = data.n();
    w.order.resize(n);
    std::iota(w.order.begin(), w.order.end(), 0);
    std::sort(w.order.begin(), w.order.end(), [&data](std::size_t a, std::size_t b) {
        return data.time[a] < data.time[b];
    });
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && data.time[w.order[j + 1]] == data.time[w.order[i]]) ++j;
        w.groups.emplace_back(i, j + 1);
        i = j + 1;
    }
    return w;
}

// Efron log partial likelihood with gradient and information matrix.
double efron_loglik(const SurvivalDataset& data, const EfronWork& w,
                    const std::vector<double>& beta, std::vector<double>* grad,
                    std::vector<double>* info) {
    const std::size_t n = data.n();
    const std::size_t p = beta.size();
    std::vector<double> eta(n, 0.0), ex(n);
    for (std::size_t c = 0; c < p; ++c) {
        const auto& col = data.features[c];
        const double b = beta[c];
        for (std::size_t i = 0; i < n; ++i) eta[i] += b * col[i];
    }
    for (std::size_t i = 0; i < n; ++i) ex[i] = std::exp(eta[i]);

    double ll = 0.0;
    if (grad) std::fill(grad->begin(), grad->end(), 0.0);
    if (info) std::fill(info->begin(), info->end(), 0.0);

    // accumulate risk-set sums from the largest time downward
    double s0 = 0.0;
    std::vector<double> s1(p, 0.0), s2(p * p, 0.0);
    std::vector<double> d1(p), d2(p * p), zm(p);
    std::vector<double> xi(p);

    for (std::size_t g = w.groups.size(); g > 0; --g) {
        auto [beg, end] = w.groups[g - 1];
        // everyone with this time enters the risk set
        double d0 = 0.0;
        std::fill(d1.begin(), d1.end(), 0.0);
        std::fill(d2.begin(), d2.end(), 0.0);
        std::size_t n_events = 0;
        double event_eta_sum = 0.0;
        for (std::size_t k = beg; k < end; ++k) {
            const std::size_t i = w.order[k];
            const double e = ex[i];
            for (std::size_t c = 0; c < p; ++c) xi[c] = data.features[c][i];
            s0 += e;
            for (std::size_t c = 0; c < p; ++c) s1[c] += e * xi[c];
            if (info)
                for (std::size_t a = 0; a < p; ++a)
                    for (std::size_t b = a; b < p; ++b) s2[a * p + b] += e * xi[a] * xi[b];
            if (data.event[i]) {
                ++n_events;
                event_eta_sum += eta[i];
                d0 += e;
                for (std::size_t c = 0; c < p; ++c) d1[c] += e * xi[c];
                if (info)
                    for (std::size_t a = 0; a < p; ++a)
                        for (std::size_t b = a; b < p; ++b)
                            d2[a * p + b] += e * xi[a] * xi[b];
                if (grad)
                    for (std::size_t c = 0; c < p; ++c) (*grad)[c] += xi[c];
            }
        }
        if (n_events == 0) continue;
        ll += event_eta_sum;
        const double d = static_cast<double>(n_events);
        for (std::size_t m = 0; m < n_events; ++m) {
            const double f = static_cast<double>(m) / d;
            const double phi = s0 - f * d0;
            ll -= std::log(phi);
            if (grad || info) {
                for (std::size_t c = 0; c < p; ++c) zm[c] = (s1[c] - f * d1[c]) / phi;
                if (grad)
                    for (std::size_t c = 0; c < p; ++c) (*grad)[c] -= zm[c];
                if (info) {
                    for (std::size_t a = 0; a < p; ++a)
                        for (std::size_t b = a; b < p; ++b) {
                            const double v =
                                (s2[a * p + b] - f * d2[a * p + b]) / phi - zm[a] * zm[b];
                            (*info)[a * p + b] += v;
                        }
                }
            }
        }
    }
    if (info)
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < a; ++b) (*info)[a * p + b] = (*info)[b * p + a];
    return ll;
}

} // namespace

CoxFit fit_cox(const SurvivalDataset& data, const CoxOptions& opts) {
    const std::size_t n = data.n();
    const std::size_t p = data.features.size();
    if (n < 2) throw std::invalid_argument("fit_cox: need at least 2 observations");
    if (p == 0) throw std::invalid_argument("fit_cox: no features");
    std::size_t n_events = 0;
    for (auto e : data.event) n_events += e;
    if (n_events == 0) throw std::invalid_argument("fit_cox: no events");
    for (std::size_t c = 0; c < p; ++c) {
        const auto& col = data.features[c];
        bool constant = true;
        for (std::size_t i = 1; i < n && constant; ++i) constant = col[i] == col[0];
        if (constant)
            throw std::invalid_argument("fit_cox: feature '" + data.feature_names[c] +
                                        "' is constant");
    }

    auto work = prepare(data);
    CoxFit fit;
    fit.beta.assign(p, 0.0);
    std::vector<double> grad(p), info(p * p);
    double ll = efron_loglik(data, work, fit.beta, &grad, &info);

    for (uint64_t it = 1; it <= opts.max_iterations; ++it) {
        fit.iterations = it;
        double gmax = 0.0;
        for (double g : grad) gmax = std::max(gmax, std::fabs(g));
        fit.gradient_norm = gmax;
        if (gmax < opts.gradient_tolerance) {
            fit.converged = true;
            break;
        }

        std::vector<double> step = grad;
        std::vector<double> a = info;
        if (!cholesky_solve(a, step, p)) {
            // information matrix not positive definite; ridge it
            a = info;
            double ridge = 1e-8;
            for (std::size_t i = 0; i < p; ++i) a[i * p + i] += ridge;
            step = grad;
            if (!cholesky_solve(a, step, p)) break;
        }

        // step halving on likelihood decrease
        double scale = 1.0;
        std::vector<double> beta_new(p);
        double ll_new = -std::numeric_limits<double>::infinity();
        for (int half = 0; half < 30; ++half) {
            for (std::size_t c = 0; c < p; ++c)
                beta_new[c] = fit.beta[c] + scale * step[c];
            ll_new = efron_loglik(data, work, beta_new, nullptr, nullptr);
            if (std::isfinite(ll_new) && ll_new >= ll) break;
            scale *= 0.5;
        }
        if (!std::isfinite(ll_new) || ll_new < ll - 1e-12) {
            // no uphill step found
            break;
        }

        fit.beta = beta_new;
        const double rel = std::fabs(ll_new - ll) / (std::fabs(ll_new) + 1.0);
        ll = ll_new;
        efron_loglik(data, work, fit.beta, &grad, &info);
        double bnorm = 0.0;
        for (double b : fit.beta) bnorm += b * b;
        if (std::sqrt(bnorm) > 50.0) {
            fit.separation_suspected = true;
            break;
        }
        if (rel < opts.loglik_rel_tolerance) {
            double gmax2 = 0.0;
            for (double g : grad) gmax2 = std::max(gmax2, std::fabs(g));
            fit.gradient_norm = gmax2;
            fit.converged = true;
            break;
        }
    }

    fit.log_likelihood = ll;
    {
        double gmax = 0.0;
        for (double g : grad) gmax = std::max(gmax, std::fabs(g));
        fit.gradient_norm = gmax;
        if (gmax < opts.gradient_tolerance) fit.converged = true;
    }
    // under separation the gradient underflows before the norm guard above
    // trips: a "converged" coefficient this large is a runaway, not a fit
    for (double b : fit.beta)
        if (std::fabs(b) > 15.0) fit.separation_suspected = true;
    std::vector<double> inv;
    fit.std_error.assign(p, std::nan(""));
    if (invert_spd(info, inv, p))
        for (std::size_t c = 0; c < p; ++c)
            fit.std_error[c] = std::sqrt(std::max(0.0, inv[c * p + c]));
    return fit;
}

KaplanMeier kaplan_meier(const std::vector<double>& times,
                         const std::vector<uint8_t>& events) {
    if (times.empty()) throw std::invalid_argument("kaplan_meier: empty input");
    if (times.size() != events.size())
        throw std::invalid_argument("kaplan_meier: length mismatch");
    const std::size_t n = times.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&times](std::size_t a, std::size_t b) { return times[a] < times[b]; });

    KaplanMeier km;
    double surv = 1.0;
    double at_risk = static_cast<double>(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        double d = 0, c = 0;
        while (j < n && times[order[j]] == times[order[i]]) {
            if (events[order[j]]) ++d;
            else ++c;
            ++j;
        }
        if (d > 0) {
            surv *= 1.0 - d / at_risk;
            km.times.push_back(times[order[i]]);
            km.surv.push_back(surv);
        }
        at_risk -= d + c;
        i = j;
    }
    return km;
}

double KaplanMeier::at(double t) const {
    // right-continuous: value after all drops at times <= t
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 1.0;
    return surv[static_cast<std::size_t>(it - times.begin()) - 1];
}

double KaplanMeier::at_left(double t) const {
    auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 1.0;
    return surv[static_cast<std::size_t>(it - times.begin()) - 1];
}

namespace {

struct Fenwick {
    std::vector<double> tree;
    explicit Fenwick(std::size_t n) : tree(n + 1, 0.0) {}
    void add(std::size_t i, double v) {
        for (++i; i < tree.size(); i += i & (~i + 1)) tree[i] += v;
    }
    double prefix(std::size_t i) const { // sum of [0, i)
        double s = 0.0;
        for (; i > 0; i -= i & (~i + 1)) s += tree[i];
        return s;
    }
};

} // namespace

UnoResult uno_c_index(const std::vector<double>& risk,
                      const std::vector<double>& times,
                      const std::vector<uint8_t>& events, double truncation) {
    const std::size_t n = risk.size();
    if (times.size() != n || events.size() != n)
        throw std::invalid_argument("uno_c_index: length mismatch");

    // censoring survival G: Kaplan-Meier with flipped event flags
    std::vector<uint8_t> censored(n);
    for (std::size_t i = 0; i < n; ++i) censored[i] = events[i] ? 0 : 1;
    auto g_curve = kaplan_meier(times, censored);

    // dense risk ranks
    std::vector<double> sorted_risk = risk;
    std::sort(sorted_risk.begin(), sorted_risk.end());
    sorted_risk.erase(std::unique(sorted_risk.begin(), sorted_risk.end()),
                      sorted_risk.end());
    auto rank_of = [&sorted_risk](double v) {
        return static_cast<std::size_t>(
            std::lower_bound(sorted_risk.begin(), sorted_risk.end(), v) -
            sorted_risk.begin());
    };

    // sweep times descending; subjects with larger time sit in the Fenwick
    // tree when the events at the current time are scored
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&times](std::size_t a, std::size_t b) { return times[a] > times[b]; });

    Fenwick counts(sorted_risk.size());
    double num = 0.0, den = 0.0;
    uint64_t comparable = 0, excluded = 0;
    double in_tree = 0.0;

    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && times[order[j]] == times[order[i]]) ++j;
        // score events at this time against strictly later times
        for (std::size_t k = i; k < j; ++k) {
            const std::size_t idx = order[k];
            if (!events[idx]) continue;
            if (times[idx] >= truncation) continue;
            if (in_tree == 0.0) continue;
            const double g = g_curve.at_left(times[idx]);
            const auto n_later = static_cast<uint64_t>(in_tree);
            if (g <= 0.0) {
                excluded += n_later;
                continue;
            }
            const double w = 1.0 / (g * g);
            const std::size_t r = rank_of(risk[idx]);
            const double lower = counts.prefix(r);                   // risk_j < risk_i
            const double equal = counts.prefix(r + 1) - lower;       // ties
            comparable += n_later;
            num += w * (lower + 0.5 * equal);
            den += w * in_tree;
        }
        for (std::size_t k = i; k < j; ++k) {
            counts.add(rank_of(risk[order[k]]), 1.0);
            in_tree += 1.0;
        }
        i = j;
    }
    if (den == 0.0)
        throw std::invalid_argument("uno_c_index: no comparable pairs");
    return {num / den, comparable, excluded};
}

std::vector<GridCell> evaluate_grid(
    const std::vector<ModelSpec>& specs,
    const std::vector<std::string>& base_names,
    const std::vector<std::vector<double>>& multi_columns,
    const std::vector<std::vector<double>>& single_columns,
    const std::vector<ReplicateOutcome>& replicates, const GridOptions& opts) {
    if (replicates.empty())
        throw std::invalid_argument("evaluate_grid: no replicates");

    double truncation = opts.truncation;
    if (truncation <= 0.0) {
        for (const auto& rep : replicates)
            for (std::size_t i = 0; i < rep.time.size(); ++i)
                if (rep.event[i]) truncation = std::max(truncation, rep.time[i]);
        truncation = std::nextafter(truncation, std::numeric_limits<double>::infinity());
    }

    struct Cell {
        uint32_t model_id;
        const char* structure;
        const std::vector<std::vector<double>>* columns;
    };
    std::vector<Cell> cells;
    for (const auto& spec : specs) {
        cells.push_back({spec.id, "multi", &multi_columns});
        cells.push_back({spec.id, "single", &single_columns});
    }

    std::vector<GridCell> out(cells.size());
    auto run_cell = [&](std::size_t ci) {
        const auto& cell = cells[ci];
        const ModelSpec* spec = nullptr;
        for (const auto& s : specs)
            if (s.id == cell.model_id) spec = &s;
        SurvivalDataset data;
        expand_model(*spec, base_names, *cell.columns, data);

        std::vector<double> c_values;
        uint32_t failed = 0;
        for (const auto& rep : replicates) {
            data.time = rep.time;
            data.event = rep.event;
            try {
                auto fit = fit_cox(data, opts.cox);
                if (!fit.converged) {
                    ++failed;
                    continue;
                }
                std::vector<double> risk(data.n(), 0.0);
                for (std::size_t c = 0; c < data.features.size(); ++c)
                    for (std::size_t i = 0; i < data.n(); ++i)
                        risk[i] += fit.beta[c] * data.features[c][i];
                auto uno = uno_c_index(risk, data.time, data.event, truncation);
                c_values.push_back(uno.c_index);
            } catch (const std::exception&) {
                ++failed;
            }
        }
        GridCell& g = out[ci];
        g.model_id = cell.model_id;
        g.structure = cell.structure;
        g.n_replicates_ok = static_cast<uint32_t>(c_values.size());
        g.n_replicates_failed = failed;
        if (!c_values.empty())
            g.c = fisher_z_mean(c_values, FisherKind::cindex);
        else
            g.c = {std::nan(""), std::nan(""), std::nan("")};
    };

    if (opts.n_threads <= 1) {
        for (std::size_t ci = 0; ci < cells.size(); ++ci) run_cell(ci);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (uint32_t t = 0; t < opts.n_threads; ++t)
            pool.emplace_back([&] {
                while (true) {
                    std::size_t ci = next.fetch_add(1);
                    if (ci >= cells.size()) break;
                    run_cell(ci);
                }
            });
        for (auto& th : pool) th.join();
    }
    return out;
}

} // namespace mlepi
