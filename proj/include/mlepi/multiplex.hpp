#pragma once
// Node-aligned multiplex network: the same node set in every layer,
// inter-layer structure restricted to categorical couplings (each node
// to its own copies), so couplings are never materialized as edges.
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mlepi {

using NodeId = uint64_t;   // external identifier
using NodeIndex = uint32_t; // dense 0..n-1 index

// Undirected simple graph in CSR form, neighbor lists sorted.
struct LayerGraph {
    std::string name;
    std::vector<uint64_t> offsets;   // size n+1
    std::vector<NodeIndex> neighbors;
    uint64_t edge_count = 0;         // undirected edges

    std::span<const NodeIndex> neighbors_of(NodeIndex i) const {
        return {neighbors.data() + offsets[i], neighbors.data() + offsets[i + 1]};
    }
    uint32_t degree(NodeIndex i) const {
        return static_cast<uint32_t>(offsets[i + 1] - offsets[i]);
    }
    std::size_t n_nodes() const { return offsets.size() - 1; }
    bool has_edge(NodeIndex i, NodeIndex j) const;
};

struct MultiplexNetwork {
    std::vector<NodeId> node_ids;    // sorted; index -> external id
    std::vector<LayerGraph> layers;

    std::size_t n_nodes() const { return node_ids.size(); }
    std::size_t n_layers() const { return layers.size(); }
    uint64_t total_edges() const;
    uint32_t multidegree(NodeIndex i) const;
    const LayerGraph* find_layer(const std::string& name) const;
};

// Weighted collapse of all layers: w(i,j) = number of layers with edge (i,j).
struct AggregateGraph {
    std::vector<uint64_t> offsets;
    std::vector<NodeIndex> neighbors;
    std::vector<double> weights;
    std::vector<double> strength;    // per node, sum of incident weights

    std::size_t n_nodes() const { return offsets.size() - 1; }
};

// Supra-adjacency operator over (node, layer) copies, laid out
// layer-major: index(i, alpha) = alpha * n + i. Layer adjacencies on the
// block diagonal, coupling_weight * I on every off-diagonal block.
// Matrix-vector products never densify.
class SupraAdjacency {
public:
    SupraAdjacency(const MultiplexNetwork& net, double coupling_weight);

    std::size_t dimension() const { return n_ * l_; }
    std::size_t n_nodes() const { return n_; }
    std::size_t n_layers() const { return l_; }
    double coupling_weight() const { return coupling_; }

    // y = A x
    void apply(std::span<const double> x, std::span<double> y) const;

    // strength (row sum) of each supra copy, couplings included
    std::vector<double> strengths() const;

private:
    const MultiplexNetwork& net_;
    std::size_t n_, l_;
    double coupling_;
};

struct LayerStats {
    std::string layer;
    uint64_t active_nodes = 0;       // degree > 0
    uint64_t ties = 0;
    double clustering = 0.0;         // global transitivity; NaN when undefined
    uint64_t components = 0;         // over active nodes
    double giant_share = 0.0;        // % of active nodes in largest component
    double deg_p5 = 0, deg_mean = 0, deg_median = 0, deg_p95 = 0, deg_sd = 0;
};

// Per-layer edge lists keyed by layer name, in layer order.
struct LayerEdgeList {
    std::string name;
    std::vector<std::pair<NodeId, NodeId>> edges;
};

// Indices assigned by sorted external id; duplicate and reversed edges
// deduplicated. Throws std::invalid_argument on unknown ids or self-loops,
// naming the offending id and layer.
MultiplexNetwork build_multiplex(const std::vector<LayerEdgeList>& edge_lists,
                                 const std::vector<NodeId>& registry);

AggregateGraph aggregate(const MultiplexNetwork& net);

// Stats per layer plus one "aggregate" row (unweighted view of the collapse).
std::vector<LayerStats> descriptive_stats(const MultiplexNetwork& net);

// Connected components over nodes with degree > 0 in the given adjacency;
// returns component id per node (-1 for inactive) and sizes.
struct ComponentInfo {
    std::vector<int64_t> component;  // -1 for degree-0 nodes
    std::vector<uint64_t> sizes;
    uint64_t giant() const;
};
ComponentInfo connected_components(const std::vector<uint64_t>& offsets,
                                   const std::vector<NodeIndex>& neighbors);

} // namespace mlepi
