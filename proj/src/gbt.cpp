#include "mlepi/gbt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "mlepi/rng.hpp"

namespace mlepi {

double Tree::predict(const std::vector<std::vector<double>>& columns,
                     std::size_t row) const {
    std::size_t node = 0;
    while (nodes[node].feature >= 0) {
        const auto& nd = nodes[node];
        node = columns[static_cast<std::size_t>(nd.feature)][row] <= nd.threshold
                   ? static_cast<std::size_t>(nd.left)
                   : static_cast<std::size_t>(nd.right);
    }
    return nodes[node].value;
}

namespace {

void validate(const std::vector<std::vector<double>>& columns,
              const std::vector<double>& target, const GbtParams& p) {
    if (p.n_trees < 1) throw std::invalid_argument("gbt: n_trees must be >= 1");
    if (p.learning_rate <= 0 || p.learning_rate > 1)
        throw std::invalid_argument("gbt: learning_rate must be in (0, 1]");
    if (p.row_subsample <= 0 || p.row_subsample > 1)
        throw std::invalid_argument("gbt: row_subsample must be in (0, 1]");
    if (p.max_depth < 1) throw std::invalid_argument("gbt: max_depth must be >= 1");
    if (columns.empty()) throw std::invalid_argument("gbt: no features");
    const std::size_t n = target.size();
    if (n < 2ULL * p.min_node_size)
        throw std::invalid_argument("gbt: need at least 2*min_node_size rows");
    for (const auto& c : columns) {
        if (c.size() != n) throw std::invalid_argument("gbt: ragged feature matrix");
        for (double v : c)
            if (!std::isfinite(v)) throw std::invalid_argument("gbt: non-finite feature");
    }
    for (double v : target)
        if (!std::isfinite(v)) throw std::invalid_argument("gbt: non-finite target");
}

struct SplitChoice {
    int32_t feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

} // namespace

TreeEnsemble fit_gbt(const std::vector<std::vector<double>>& columns,
                     const std::vector<double>& target, const GbtParams& params) {
    validate(columns, target, params);
    const std::size_t n = target.size();
    const std::size_t n_features = columns.size();

    TreeEnsemble ens;
    ens.n_features = static_cast<uint32_t>(n_features);
    ens.learning_rate = params.learning_rate;
    ens.base_score = std::accumulate(target.begin(), target.end(), 0.0) /
                     static_cast<double>(n);

    std::vector<double> pred(n, ens.base_score);
    Rng rng(derive_seed(params.rng_seed, "gbt"));

    const auto sample_size = std::max<std::size_t>(
        2 * params.min_node_size,
        static_cast<std::size_t>(params.row_subsample * static_cast<double>(n)));

    std::vector<uint32_t> rows;                // subsampled rows, ascending
    std::vector<double> residual;              // per sampled position
    std::vector<std::vector<uint32_t>> sorted; // per feature: sample positions
    std::vector<int32_t> node_of;              // per sample position

    for (uint32_t t = 0; t < params.n_trees; ++t) {
        if (sample_size >= n) {
            rows.resize(n);
            std::iota(rows.begin(), rows.end(), 0);
        } else {
            rows = rng.sample_without_replacement(static_cast<uint32_t>(n),
                                                  static_cast<uint32_t>(sample_size));
            std::sort(rows.begin(), rows.end());
        }
        const std::size_t m = rows.size();
        residual.resize(m);
        for (std::size_t k = 0; k < m; ++k)
            residual[k] = target[rows[k]] - pred[rows[k]];

        sorted.assign(n_features, {});
        for (std::size_t f = 0; f < n_features; ++f) {
            auto& ord = sorted[f];
            ord.resize(m);
            std::iota(ord.begin(), ord.end(), 0);
            const auto& col = columns[f];
            std::stable_sort(ord.begin(), ord.end(), [&](uint32_t a, uint32_t b) {
                return col[rows[a]] < col[rows[b]];
            });
        }

        Tree tree;
        tree.nodes.push_back({});
        tree.nodes[0].n_rows = m;
        node_of.assign(m, 0);

        std::vector<int32_t> level_nodes = {0};
        std::vector<double> node_sum(1, std::accumulate(residual.begin(), residual.end(), 0.0));
        std::vector<uint64_t> node_cnt(1, m);

        for (uint32_t depth = 0; depth < params.max_depth && !level_nodes.empty();
             ++depth) {
            // best split per active node, found by one sweep per feature
            std::vector<SplitChoice> best(tree.nodes.size());
            std::vector<double> left_sum(tree.nodes.size());
            std::vector<uint64_t> left_cnt(tree.nodes.size());
            std::vector<double> prev_val(tree.nodes.size());
            std::vector<uint8_t> active(tree.nodes.size(), 0);
            for (int32_t v : level_nodes)
                if (node_cnt[static_cast<std::size_t>(v)] >= 2ULL * params.min_node_size)
                    active[static_cast<std::size_t>(v)] = 1;

            for (std::size_t f = 0; f < n_features; ++f) {
                const auto& col = columns[f];
                for (int32_t v : level_nodes) {
                    left_sum[static_cast<std::size_t>(v)] = 0.0;
                    left_cnt[static_cast<std::size_t>(v)] = 0;
                }
                std::vector<uint8_t> seen(tree.nodes.size(), 0);
                for (uint32_t pos : sorted[f]) {
                    const auto v = static_cast<std::size_t>(node_of[pos]);
                    if (!active[v]) continue;
                    const double x = col[rows[pos]];
                    if (seen[v] && x != prev_val[v] &&
                        left_cnt[v] >= params.min_node_size &&
                        node_cnt[v] - left_cnt[v] >= params.min_node_size) {
                        const double lc = static_cast<double>(left_cnt[v]);
                        const double rc = static_cast<double>(node_cnt[v] - left_cnt[v]);
                        const double ls = left_sum[v];
                        const double rs = node_sum[v] - ls;
                        const double tot = static_cast<double>(node_cnt[v]);
                        const double gain = ls * ls / lc + rs * rs / rc -
                                            node_sum[v] * node_sum[v] / tot;
                        // strict > keeps the lowest feature index and,
                        // within a feature, the lowest threshold on ties
                        if (gain > params.min_loss_reduction &&
                            (best[v].feature < 0 || gain > best[v].gain)) {
                            best[v].feature = static_cast<int32_t>(f);
                            best[v].threshold = 0.5 * (prev_val[v] + x);
                            best[v].gain = gain;
                        }
                    }
                    if (seen[v] && x != prev_val[v]) prev_val[v] = x;
                    if (!seen[v]) {
                        seen[v] = 1;
                        prev_val[v] = x;
                    }
                    left_sum[v] += residual[pos];
                    ++left_cnt[v];
                }
            }

            // materialize accepted splits, partition rows
            std::vector<int32_t> next_level;
            for (int32_t v : level_nodes) {
                const auto vi = static_cast<std::size_t>(v);
                if (best[vi].feature < 0) continue;
                auto& nd = tree.nodes[vi];
                nd.feature = best[vi].feature;
                nd.threshold = best[vi].threshold;
                nd.gain = best[vi].gain;
                nd.left = static_cast<int32_t>(tree.nodes.size());
                nd.right = nd.left + 1;
                tree.nodes.push_back({});
                tree.nodes.push_back({});
                node_sum.resize(tree.nodes.size(), 0.0);
                node_cnt.resize(tree.nodes.size(), 0);
                next_level.push_back(nd.left);
                next_level.push_back(nd.right);
            }
            if (next_level.empty()) break;
            for (std::size_t k = 0; k < m; ++k) {
                const auto v = static_cast<std::size_t>(node_of[k]);
                const auto& nd = tree.nodes[v];
                if (nd.feature < 0) continue;
                const bool go_left =
                    columns[static_cast<std::size_t>(nd.feature)][rows[k]] <= nd.threshold;
                const int32_t child = go_left ? nd.left : nd.right;
                node_of[k] = child;
                node_sum[static_cast<std::size_t>(child)] += residual[k];
                node_cnt[static_cast<std::size_t>(child)]++;
            }
            for (int32_t c : next_level)
                tree.nodes[static_cast<std::size_t>(c)].n_rows =
                    node_cnt[static_cast<std::size_t>(c)];
            level_nodes = std::move(next_level);
        }

        // leaf values
        for (std::size_t v = 0; v < tree.nodes.size(); ++v)
            if (tree.nodes[v].feature < 0 && node_cnt[v] > 0)
                tree.nodes[v].value = node_sum[v] / static_cast<double>(node_cnt[v]);

        // update predictions on all rows
        for (std::size_t i = 0; i < n; ++i)
            pred[i] += params.learning_rate * tree.predict(columns, i);
        ens.trees.push_back(std::move(tree));
    }
    return ens;
}

std::vector<double> predict(const TreeEnsemble& ensemble,
                            const std::vector<std::vector<double>>& columns) {
    if (columns.size() != ensemble.n_features)
        throw std::invalid_argument("gbt predict: feature arity mismatch (got " +
                                    std::to_string(columns.size()) + ", trained on " +
                                    std::to_string(ensemble.n_features) + ")");
    const std::size_t n = columns.empty() ? 0 : columns.front().size();
    std::vector<double> out(n, ensemble.base_score);
    for (const auto& tree : ensemble.trees)
        for (std::size_t i = 0; i < n; ++i)
            out[i] += ensemble.learning_rate * tree.predict(columns, i);
    return out;
}

GbtImportance importance(const TreeEnsemble& ensemble) {
    const std::size_t p = ensemble.n_features;
    GbtImportance imp;
    imp.cover.assign(p, 0.0);
    imp.frequency.assign(p, 0.0);
    imp.gain.assign(p, 0.0);
    for (const auto& tree : ensemble.trees)
        for (const auto& nd : tree.nodes) {
            if (nd.feature < 0) continue;
            const auto f = static_cast<std::size_t>(nd.feature);
            imp.cover[f] += static_cast<double>(nd.n_rows);
            imp.frequency[f] += 1.0;
            imp.gain[f] += nd.gain;
            imp.any_splits = true;
        }
    if (imp.any_splits) {
        for (auto* v : {&imp.cover, &imp.frequency, &imp.gain}) {
            double s = std::accumulate(v->begin(), v->end(), 0.0);
            if (s > 0)
                for (auto& x : *v) x /= s;
        }
    }
    return imp;
}

std::vector<ProtocolRow> evaluate_protocol(
    const std::vector<std::string>& feature_names,
    const std::vector<std::vector<double>>& multi_columns,
    const std::vector<std::vector<double>>& single_columns,
    const std::vector<ReplicateTarget>& replicates,
    const std::vector<std::vector<double>>& extra_columns,
    const ProtocolOptions& opts) {
    if (replicates.empty())
        throw std::invalid_argument("evaluate_protocol: no replicates");
    (void)feature_names;

    struct Job {
        uint32_t replicate;
        const char* structure;
        const std::vector<std::vector<double>>* columns;
    };
    std::vector<Job> jobs;
    for (uint32_t r = 0; r < replicates.size(); ++r) {
        jobs.push_back({r, "multi", &multi_columns});
        jobs.push_back({r, "single", &single_columns});
    }

    std::vector<ProtocolRow> out(jobs.size());
    auto run_job_inner = [&](std::size_t ji) {
        const auto& job = jobs[ji];
        const auto& rep = replicates[job.replicate];
        const std::size_t n_all = rep.time.size();

        // rows entering the regression
        std::vector<uint32_t> keep;
        keep.reserve(n_all);
        for (std::size_t i = 0; i < n_all; ++i)
            if (opts.include_censored || rep.event[i])
                keep.push_back(static_cast<uint32_t>(i));

        std::vector<std::vector<double>> cols;
        for (const auto* src : {job.columns, &extra_columns})
            for (const auto& c : *src) {
                std::vector<double> v(keep.size());
                for (std::size_t k = 0; k < keep.size(); ++k) v[k] = c[keep[k]];
                cols.push_back(std::move(v));
            }
        std::vector<double> y(keep.size());
        for (std::size_t k = 0; k < keep.size(); ++k) y[k] = rep.time[keep[k]];

        // deterministic train/test split from the replicate seed
        Rng rng(derive_seed(opts.master_seed, "gbt-split", job.replicate));
        const auto n = static_cast<uint32_t>(keep.size());
        auto n_train = static_cast<uint32_t>(opts.train_fraction * n);
        n_train = std::max(n_train, 2 * opts.gbt.min_node_size);
        auto train_rows = rng.sample_without_replacement(n, n_train);
        std::sort(train_rows.begin(), train_rows.end());
        std::vector<uint8_t> in_train(n, 0);
        for (uint32_t r : train_rows) in_train[r] = 1;

        auto subset = [&](const std::vector<std::vector<double>>& src, bool train) {
            std::vector<std::vector<double>> out_cols(src.size());
            for (std::size_t c = 0; c < src.size(); ++c)
                for (uint32_t i = 0; i < n; ++i)
                    if (in_train[i] == (train ? 1 : 0)) out_cols[c].push_back(src[c][i]);
            return out_cols;
        };
        auto train_cols = subset(cols, true);
        auto test_cols = subset(cols, false);
        std::vector<double> y_train, y_test;
        for (uint32_t i = 0; i < n; ++i)
            (in_train[i] ? y_train : y_test).push_back(y[i]);

        GbtParams gp = opts.gbt;
        gp.rng_seed = derive_seed(opts.master_seed, "gbt-fit", job.replicate * 2 +
                                                                  (job.columns == &multi_columns ? 0 : 1));
        auto ens = fit_gbt(train_cols, y_train, gp);
        auto yhat = predict(ens, test_cols);

        double sse = 0.0, sst = 0.0, mean_y = 0.0;
        for (double v : y_test) mean_y += v;
        mean_y /= static_cast<double>(y_test.size());
        for (std::size_t i = 0; i < y_test.size(); ++i) {
            sse += (y_test[i] - yhat[i]) * (y_test[i] - yhat[i]);
            sst += (y_test[i] - mean_y) * (y_test[i] - mean_y);
        }
        ProtocolRow& row = out[ji];
        row.replicate = job.replicate;
        row.structure = job.structure;
        row.rmse = std::sqrt(sse / static_cast<double>(y_test.size()));
        row.r2 = sst > 0 ? 1.0 - sse / sst : 0.0;
        auto imp = importance(ens);
        row.cover = imp.cover;
        row.frequency = imp.frequency;
        row.gain = imp.gain;
    };
    // fit failures mark the row and leave the rest of the ensemble intact
    auto run_job = [&](std::size_t ji) {
        try {
            run_job_inner(ji);
        } catch (const std::exception&) {
            out[ji].replicate = jobs[ji].replicate;
            out[ji].structure = jobs[ji].structure;
            out[ji].r2 = std::nan("");
            out[ji].rmse = std::nan("");
        }
    };

    if (opts.n_threads <= 1) {
        for (std::size_t ji = 0; ji < jobs.size(); ++ji) run_job(ji);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (uint32_t t = 0; t < opts.n_threads; ++t)
            pool.emplace_back([&] {
                while (true) {
                    std::size_t ji = next.fetch_add(1);
                    if (ji >= jobs.size()) break;
                    run_job(ji);
                }
            });
        for (auto& th : pool) th.join();
    }
    return out;
}

} // namespace mlepi
