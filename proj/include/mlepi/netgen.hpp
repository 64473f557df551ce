#pragma once
// Synthetic registry-like four-layer multiplex generator: school-year
// cliques over students, household cliques, family star-plus-sibling
// components, and capped workplace neighborhoods over adults.
#include <cstdint>
#include <string>
#include <vector>

#include "mlepi/multiplex.hpp"
#include "mlepi/rng.hpp"

namespace mlepi {

struct IntDist {
    enum class Kind { fixed, uniform, poisson, lognormal };
    Kind kind = Kind::fixed;
    double a = 1.0;       // fixed: value; uniform: lo; poisson: mean; lognormal: median
    double b = 0.0;       // uniform: hi; lognormal: sigma (log scale)
    int64_t min_value = 0;

    int64_t sample(Rng& rng) const;
    // "fixed:5", "uniform:2:6", "poisson:48[:min]", "lognormal:90:0.8[:min]"
    static IntDist parse(const std::string& text);
    std::string to_string() const;
};

struct GenParams {
    uint64_t n_students = 1000;
    IntDist school_year_size{IntDist::Kind::poisson, 48, 0, 2};
    IntDist household_size{IntDist::Kind::poisson, 4.3, 0, 1};
    IntDist siblings_per_student{IntDist::Kind::poisson, 0.4, 0, 0};
    IntDist workplace_size{IntDist::Kind::lognormal, 90, 0.8, 2};
    uint32_t parents_per_student = 2;
    uint32_t work_degree_cap = 100;
    bool bridge_components = true;
    uint64_t rng_seed = 0;
};

struct GenResult {
    MultiplexNetwork net;
    std::vector<LayerEdgeList> edge_lists; // family, household, school, work
    std::vector<NodeId> registry;
    uint64_t n_students = 0;
    uint64_t n_adults = 0; // parents + extra household members (workforce)
    uint64_t bridge_edges_added = 0;
};

// Fully deterministic given params.rng_seed. Throws std::invalid_argument
// on degenerate parameters.
GenResult generate(const GenParams& params);

// Keeps {i,j} iff (i,j) or (j,i) is present; output sorted, deduplicated,
// self-pairs dropped.
std::vector<std::pair<NodeId, NodeId>>
enforce_reciprocity(const std::vector<std::pair<NodeId, NodeId>>& directed_pairs);

} // namespace mlepi
