#include "mlepi/centrality.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "mlepi/kernels.hpp"

namespace mlepi {

std::string to_string(Measure m) {
    switch (m) {
    case Measure::degree: return "degree";
    case Measure::eigenvector: return "eigenvector";
    case Measure::pagerank: return "pagerank";
    }
    return "";
}

std::string to_string(Structure s) {
    return s == Structure::multi ? "multi" : "single";
}

CentralityVector degree(const MultiplexNetwork& net, Structure structure) {
    CentralityVector cv;
    cv.measure = Measure::degree;
    cv.structure = structure;
    cv.scores.resize(net.n_nodes());
    if (structure == Structure::multi) {
        for (std::size_t i = 0; i < net.n_nodes(); ++i)
            cv.scores[i] = net.multidegree(static_cast<NodeIndex>(i));
    } else {
        auto agg = aggregate(net);
        cv.scores = agg.strength;
    }
    return cv;
}

namespace {

using ApplyFn = std::function<void(std::span<const double>, std::span<double>)>;

void validate_cfg(const SolverConfig& cfg) {
    if (cfg.tolerance <= 0) throw std::invalid_argument("solver tolerance must be > 0");
    if (cfg.teleport_rate <= 0 || cfg.teleport_rate > 1)
        throw std::invalid_argument("teleport rate must be in (0, 1]");
    if (cfg.coupling_weight < 0)
        throw std::invalid_argument("coupling weight must be >= 0");
}

// y = A x for the weighted aggregate graph
void apply_weighted(const AggregateGraph& g, std::span<const double> x,
                    std::span<double> y) {
    const std::size_t n = g.n_nodes();
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (uint64_t k = g.offsets[i]; k < g.offsets[i + 1]; ++k)
            s += g.weights[k] * x[g.neighbors[k]];
        y[i] = s;
    }
}

struct PowerResult {
    std::vector<double> vec; // unit L2
    double eigenvalue = 0.0;
    double residual = 0.0;
    uint64_t iterations = 0;
};

// Eigen-decomposition of a small symmetric matrix by cyclic Jacobi.
// a is n x n row-major and is destroyed; eigenvectors end up in the
// columns of v.
void jacobi_eig(std::vector<double>& a, std::vector<double>& v, std::size_t n) {
    v.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        if (off < 1e-30) return;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a[p * n + q];
                if (std::fabs(apq) < 1e-300) continue;
                double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a[k * n + p], akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a[p * n + k], aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = v[k * n + p], vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
}

// Restarted Lanczos with full reorthogonalization for the leading
// (algebraically largest) eigenpair. Plain power iteration stalls when the
// top eigenvalues cluster -- near-identical large cliques produce gaps of
// 1e-3 and worse -- while a Krylov subspace resolves the cluster in a few
// restarts. cfg.max_iterations counts matrix-vector products.
PowerResult power_iteration(const ApplyFn& apply, std::size_t dim,
                            const SolverConfig& cfg) {
    const std::size_t m = std::min<std::size_t>(dim, 32);
    std::vector<double> x(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
    std::vector<std::vector<double>> V(m + 1, std::vector<double>(dim));
    std::vector<double> w(dim), alpha(m), beta(m);
    uint64_t matvecs = 0;
    double theta = 0.0, resid = std::numeric_limits<double>::infinity();

    while (matvecs < cfg.max_iterations) {
        // Lanczos chunk, at most the remaining matvec budget
        const std::size_t steps =
            std::min<std::size_t>(m, cfg.max_iterations - matvecs);
        V[0] = x;
        std::size_t built = 0;
        for (std::size_t j = 0; j < steps; ++j) {
            apply(V[j], w);
            ++matvecs;
            alpha[j] = kernels::dot(w, V[j]);
            kernels::axpy(-alpha[j], V[j], w);
            if (j > 0) kernels::axpy(-beta[j - 1], V[j - 1], w);
            // full reorthogonalization keeps the basis usable after many
            // restarts near convergence
            for (std::size_t k = 0; k <= j; ++k)
                kernels::axpy(-kernels::dot(w, V[k]), V[k], w);
            built = j + 1;
            beta[j] = std::sqrt(kernels::l2_norm_sq(w));
            if (beta[j] < 1e-14) break; // invariant subspace found
            const double inv = 1.0 / beta[j];
            for (std::size_t i = 0; i < dim; ++i) V[j + 1][i] = w[i] * inv;
        }
        if (built == 0) break;

        // leading Ritz pair of the tridiagonal
        std::vector<double> T(built * built, 0.0), Q;
        for (std::size_t j = 0; j < built; ++j) {
            T[j * built + j] = alpha[j];
            if (j + 1 < built) {
                T[j * built + j + 1] = beta[j];
                T[(j + 1) * built + j] = beta[j];
            }
        }
        jacobi_eig(T, Q, built);
        std::size_t top = 0;
        for (std::size_t j = 1; j < built; ++j)
            if (T[j * built + j] > T[top * built + top]) top = j;
        theta = T[top * built + top];
        for (std::size_t i = 0; i < dim; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < built; ++j) s += Q[j * built + top] * V[j][i];
            x[i] = s;
        }
        double norm = std::sqrt(kernels::l2_norm_sq(x));
        for (std::size_t i = 0; i < dim; ++i) x[i] /= norm;

        // explicit residual ||Ax - theta x||_2
        if (matvecs < cfg.max_iterations) {
            apply(x, w);
            ++matvecs;
            theta = kernels::dot(x, w);
            double rsq = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                double d = w[i] - theta * x[i];
                rsq += d * d;
            }
            resid = std::sqrt(rsq);
        }
        if (resid <= cfg.tolerance) {
            double sum = 0.0;
            for (double s : x) sum += s;
            if (sum < 0)
                for (auto& s : x) s = -s; // Perron orientation
            PowerResult r;
            r.vec = std::move(x);
            r.eigenvalue = theta;
            r.residual = resid;
            r.iterations = matvecs;
            return r;
        }
    }
    throw ConvergenceError("eigenvector solver did not converge: residual " +
                               std::to_string(resid) + " after " +
                               std::to_string(matvecs) + " matrix products",
                           resid, matvecs);
}

} // namespace

CentralityVector eigenvector(const MultiplexNetwork& net, Structure structure,
                             const SolverConfig& cfg) {
    validate_cfg(cfg);
    if (net.n_nodes() == 0) throw std::invalid_argument("eigenvector: empty network");
    if (net.total_edges() == 0)
        throw std::invalid_argument("eigenvector: network has no edges");

    CentralityVector cv;
    cv.measure = Measure::eigenvector;
    cv.structure = structure;
    const std::size_t n = net.n_nodes();

    if (structure == Structure::multi) {
        SupraAdjacency supra(net, cfg.coupling_weight);
        auto pr = power_iteration(
            [&supra](std::span<const double> x, std::span<double> y) {
                supra.apply(x, y);
            },
            supra.dimension(), cfg);
        cv.scores.assign(n, 0.0);
        for (std::size_t a = 0; a < net.n_layers(); ++a)
            for (std::size_t i = 0; i < n; ++i)
                cv.scores[i] += pr.vec[a * n + i];
        cv.leading_eigenvalue = pr.eigenvalue;
        cv.residual = pr.residual;
        cv.iterations = pr.iterations;
    } else {
        auto agg = aggregate(net);
        auto pr = power_iteration(
            [&agg](std::span<const double> x, std::span<double> y) {
                apply_weighted(agg, x, y);
            },
            n, cfg);
        cv.scores = std::move(pr.vec);
        cv.leading_eigenvalue = pr.eigenvalue;
        cv.residual = pr.residual;
        cv.iterations = pr.iterations;
    }
    // Perron orientation
    for (auto& s : cv.scores)
        if (s < 0 && s > -1e-15) s = 0.0;
    return cv;
}

namespace {

struct WalkOperator {
    // y = A (x ./ strength), dangling entries skipped
    ApplyFn apply_adj;
    std::vector<double> strength;
    std::size_t dim;
};

CentralityVector pagerank_impl(const WalkOperator& op, const SolverConfig& cfg,
                               std::size_t n_nodes, std::size_t n_layers) {
    const std::size_t dim = op.dim;
    const double r = cfg.teleport_rate;
    const double teleport = (1.0 - r) / static_cast<double>(dim);

    std::vector<double> x(dim, 1.0 / static_cast<double>(dim));
    std::vector<double> z(dim), y(dim);
    uint64_t it = 0;
    double diff = 0.0;
    for (it = 1; it <= cfg.max_iterations; ++it) {
        double dangling_mass = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            if (op.strength[i] > 0.0) {
                z[i] = x[i] / op.strength[i];
            } else {
                z[i] = 0.0;
                dangling_mass += x[i];
            }
        }
        op.apply_adj(z, y);
        const double base = r * dangling_mass / static_cast<double>(dim) + teleport;
        for (std::size_t i = 0; i < dim; ++i) y[i] = r * y[i] + base;
        // renormalize against drift
        double l1 = kernels::l1_norm(y);
        for (std::size_t i = 0; i < dim; ++i) y[i] /= l1;
        diff = kernels::l1_diff(x, y);
        x.swap(y);
        if (diff <= cfg.tolerance) break;
    }
    if (diff > cfg.tolerance)
        throw ConvergenceError("pagerank did not converge: L1 change " +
                                   std::to_string(diff) + " after " +
                                   std::to_string(cfg.max_iterations) + " iterations",
                               diff, cfg.max_iterations);

    CentralityVector cv;
    cv.measure = Measure::pagerank;
    cv.scores.assign(n_nodes, 0.0);
    for (std::size_t a = 0; a < n_layers; ++a)
        for (std::size_t i = 0; i < n_nodes; ++i) cv.scores[i] += x[a * n_nodes + i];
    cv.iterations = it;
    cv.residual = diff;
    return cv;
}

} // namespace

CentralityVector pagerank(const MultiplexNetwork& net, Structure structure,
                          const SolverConfig& cfg) {
    validate_cfg(cfg);
    if (net.n_nodes() == 0) throw std::invalid_argument("pagerank: empty network");

    CentralityVector cv;
    if (structure == Structure::multi) {
        SupraAdjacency supra(net, cfg.coupling_weight);
        WalkOperator op;
        op.dim = supra.dimension();
        op.strength = supra.strengths();
        op.apply_adj = [&supra](std::span<const double> x, std::span<double> y) {
            supra.apply(x, y);
        };
        cv = pagerank_impl(op, cfg, net.n_nodes(), net.n_layers());
    } else {
        auto agg = aggregate(net);
        WalkOperator op;
        op.dim = net.n_nodes();
        op.strength = agg.strength;
        op.apply_adj = [&agg](std::span<const double> x, std::span<double> y) {
            apply_weighted(agg, x, y);
        };
        cv = pagerank_impl(op, cfg, net.n_nodes(), 1);
    }
    cv.structure = structure;
    return cv;
}

std::vector<CentralityVector> all_centralities(const MultiplexNetwork& net,
                                               const SolverConfig& cfg) {
    std::vector<CentralityVector> out;
    for (auto st : {Structure::multi, Structure::single}) {
        out.push_back(degree(net, st));
        out.push_back(eigenvector(net, st, cfg));
        out.push_back(pagerank(net, st, cfg));
    }
    return out;
}

} // namespace mlepi
