#pragma once
// Degree, Eigenvector, and PageRank centralities in both the multiplex
// (supra-adjacency) and collapsed single-layer representations, computed
// with sparse power iteration.
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlepi/multiplex.hpp"

namespace mlepi {

enum class Measure { degree, eigenvector, pagerank };
enum class Structure { multi, single };

std::string to_string(Measure m);
std::string to_string(Structure s);

struct SolverConfig {
    double tolerance = 1e-10;
    uint64_t max_iterations = 10000;
    double teleport_rate = 0.85;   // r: probability of following an edge
    double coupling_weight = 1.0;
};

struct CentralityVector {
    Measure measure;
    Structure structure;
    std::vector<double> scores;     // per node, layer-contracted
    uint64_t iterations = 0;
    double residual = 0.0;
    double leading_eigenvalue = 0.0; // eigenvector only
};

struct ConvergenceError : std::runtime_error {
    double last_residual;
    uint64_t iterations;
    ConvergenceError(const std::string& what, double residual, uint64_t iters)
        : std::runtime_error(what), last_residual(residual), iterations(iters) {}
};

// Multidegree (intra-layer degrees summed, couplings excluded) or
// aggregate strength; the two coincide by construction.
CentralityVector degree(const MultiplexNetwork& net, Structure structure);

// Power iteration; scores are the nonnegative Perron vector contracted
// over layers, supra vector normalized to unit L2.
CentralityVector eigenvector(const MultiplexNetwork& net, Structure structure,
                             const SolverConfig& cfg = {});

// Random-walk PageRank with teleport mass (1-r)/(NL); copies with zero
// walk strength are dangling and spread their mass uniformly. Scores sum
// to 1 over nodes.
CentralityVector pagerank(const MultiplexNetwork& net, Structure structure,
                          const SolverConfig& cfg = {});

std::vector<CentralityVector> all_centralities(const MultiplexNetwork& net,
                                               const SolverConfig& cfg = {});

} // namespace mlepi
