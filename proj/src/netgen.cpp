#include "mlepi/netgen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mlepi {

int64_t IntDist::sample(Rng& rng) const {
    int64_t v = 0;
    switch (kind) {
    case Kind::fixed:
        v = static_cast<int64_t>(a);
        break;
    case Kind::uniform: {
        auto lo = static_cast<int64_t>(a);
        auto hi = static_cast<int64_t>(b);
        if (hi < lo) throw std::invalid_argument("IntDist uniform: hi < lo");
        v = lo + static_cast<int64_t>(rng.next_below(static_cast<uint64_t>(hi - lo + 1)));
        break;
    }
    case Kind::poisson: {
        // Knuth; fine for the means used here
        double limit = std::exp(-a);
        double p = 1.0;
        int64_t k = 0;
        do {
            ++k;
            p *= rng.next_double_open();
        } while (p > limit);
        v = k - 1;
        break;
    }
    case Kind::lognormal: {
        double x = std::exp(std::log(a) + b * rng.normal());
        v = static_cast<int64_t>(std::llround(x));
        break;
    }
    }
    return std::max(v, min_value);
}

IntDist IntDist::parse(const std::string& text) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = text.find(':', start);
        if (pos == std::string::npos) {
            parts.push_back(text.substr(start));
            break;
        }
        parts.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    if (parts.empty()) throw std::invalid_argument("empty distribution spec");
    IntDist d;
    const std::string& k = parts[0];
    auto need = [&](std::size_t n) {
        if (parts.size() < n + 1)
            throw std::invalid_argument("distribution '" + text + "': missing parameters");
    };
    if (k == "fixed") {
        need(1);
        d.kind = Kind::fixed;
        d.a = std::stod(parts[1]);
    } else if (k == "uniform") {
        need(2);
        d.kind = Kind::uniform;
        d.a = std::stod(parts[1]);
        d.b = std::stod(parts[2]);
    } else if (k == "poisson") {
        need(1);
        d.kind = Kind::poisson;
        d.a = std::stod(parts[1]);
        if (parts.size() > 2) d.min_value = std::stoll(parts[2]);
    } else if (k == "lognormal") {
        need(2);
        d.kind = Kind::lognormal;
        d.a = std::stod(parts[1]);
        d.b = std::stod(parts[2]);
        if (parts.size() > 3) d.min_value = std::stoll(parts[3]);
    } else {
        throw std::invalid_argument("unknown distribution kind '" + k + "'");
    }
    return d;
}

std::string IntDist::to_string() const {
    auto num = [](double v) {
        std::string s = std::to_string(v);
        s.erase(s.find_last_not_of('0') + 1);
        if (!s.empty() && s.back() == '.') s.pop_back();
        return s;
    };
    switch (kind) {
    case Kind::fixed: return "fixed:" + num(a);
    case Kind::uniform: return "uniform:" + num(a) + ":" + num(b);
    case Kind::poisson: return "poisson:" + num(a) + ":" + std::to_string(min_value);
    case Kind::lognormal:
        return "lognormal:" + num(a) + ":" + num(b) + ":" + std::to_string(min_value);
    }
    return "";
}

std::vector<std::pair<NodeId, NodeId>>
enforce_reciprocity(const std::vector<std::pair<NodeId, NodeId>>& directed_pairs) {
    std::vector<std::pair<NodeId, NodeId>> out;
    out.reserve(directed_pairs.size());
    for (auto [i, j] : directed_pairs) {
        if (i == j) continue;
        out.emplace_back(std::min(i, j), std::max(i, j));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

void add_clique(std::vector<std::pair<NodeId, NodeId>>& edges,
                const std::vector<NodeId>& members) {
    for (std::size_t i = 0; i < members.size(); ++i)
        for (std::size_t j = i + 1; j < members.size(); ++j)
            edges.emplace_back(members[i], members[j]);
}

void validate(const GenParams& p) {
    if (p.n_students < 1)
        throw std::invalid_argument("netgen: n_students must be >= 1");
    if (p.work_degree_cap < 1)
        throw std::invalid_argument("netgen: work_degree_cap must be >= 1");
    auto check_size_dist = [](const IntDist& d, const char* name) {
        bool degenerate = false;
        switch (d.kind) {
        case IntDist::Kind::fixed: degenerate = d.a < 1; break;
        case IntDist::Kind::uniform: degenerate = d.b < 1; break;
        case IntDist::Kind::poisson: degenerate = d.a <= 0 && d.min_value < 1; break;
        case IntDist::Kind::lognormal: degenerate = d.a <= 0 || d.b < 0; break;
        }
        if (degenerate)
            throw std::invalid_argument(std::string("netgen: degenerate ") + name +
                                        " distribution");
    };
    check_size_dist(p.school_year_size, "school_year_size");
    check_size_dist(p.household_size, "household_size");
    check_size_dist(p.workplace_size, "workplace_size");
}

} // namespace

GenResult generate(const GenParams& p) {
    validate(p);
    Rng rng(derive_seed(p.rng_seed, "netgen"));

    GenResult res;
    res.n_students = p.n_students;
    NodeId next_id = 0;

    std::vector<NodeId> students(p.n_students);
    for (auto& s : students) s = next_id++;

    std::vector<std::pair<NodeId, NodeId>> family_edges, household_edges,
        school_edges, work_edges;

    // school years: disjoint cliques over students
    {
        std::size_t assigned = 0;
        while (assigned < students.size()) {
            auto size = static_cast<std::size_t>(
                std::max<int64_t>(1, p.school_year_size.sample(rng)));
            size = std::min(size, students.size() - assigned);
            std::vector<NodeId> year(students.begin() + static_cast<std::ptrdiff_t>(assigned),
                                     students.begin() + static_cast<std::ptrdiff_t>(assigned + size));
            add_clique(school_edges, year);
            assigned += size;
        }
    }

    // families and households, one per student
    std::vector<NodeId> adults;
    for (NodeId s : students) {
        std::vector<NodeId> parents;
        for (uint32_t k = 0; k < p.parents_per_student; ++k) {
            parents.push_back(next_id++);
            adults.push_back(parents.back());
        }
        auto n_sib = static_cast<std::size_t>(
            std::max<int64_t>(0, p.siblings_per_student.sample(rng)));
        std::vector<NodeId> children{s};
        for (std::size_t k = 0; k < n_sib; ++k) children.push_back(next_id++);

        // family: every child tied to every parent and every other child;
        // no parent-parent tie, which keeps family clustering below 1
        for (NodeId c : children)
            for (NodeId q : parents) family_edges.emplace_back(c, q);
        add_clique(family_edges, children);

        // household: family members plus co-residents up to the drawn size
        std::vector<NodeId> household = children;
        household.insert(household.end(), parents.begin(), parents.end());
        auto target = static_cast<std::size_t>(
            std::max<int64_t>(1, p.household_size.sample(rng)));
        while (household.size() < target) {
            household.push_back(next_id++);
            adults.push_back(household.back());
        }
        add_clique(household_edges, household);
    }
    res.n_adults = adults.size();

    // workplaces over shuffled adults
    std::vector<std::vector<NodeId>> workplaces;
    if (!adults.empty()) {
        for (std::size_t i = adults.size(); i > 1; --i)
            std::swap(adults[i - 1], adults[rng.next_below(i)]);
        std::size_t assigned = 0;
        while (assigned < adults.size()) {
            auto size = static_cast<std::size_t>(
                std::max<int64_t>(1, p.workplace_size.sample(rng)));
            size = std::min(size, adults.size() - assigned);
            workplaces.emplace_back(adults.begin() + static_cast<std::ptrdiff_t>(assigned),
                                    adults.begin() + static_cast<std::ptrdiff_t>(assigned + size));
            assigned += size;
        }
    }

    auto add_workplace_edges = [&](const std::vector<NodeId>& members) {
        if (members.size() <= 1) return;
        if (members.size() - 1 <= p.work_degree_cap) {
            add_clique(work_edges, members);
            return;
        }
        // each worker samples work_degree_cap colleagues; reciprocity
        // closure afterwards, so post-closure degrees can exceed the cap
        std::vector<std::pair<NodeId, NodeId>> directed;
        directed.reserve(members.size() * p.work_degree_cap);
        for (std::size_t w = 0; w < members.size(); ++w) {
            auto picks = rng.sample_without_replacement(
                static_cast<uint32_t>(members.size() - 1), p.work_degree_cap);
            for (uint32_t pk : picks) {
                std::size_t idx = pk < w ? pk : pk + 1; // skip self
                directed.emplace_back(members[w], members[idx]);
            }
        }
        auto undirected = enforce_reciprocity(directed);
        work_edges.insert(work_edges.end(), undirected.begin(), undirected.end());
    };
    for (const auto& wp : workplaces) add_workplace_edges(wp);

    std::vector<NodeId> registry(next_id);
    for (NodeId i = 0; i < next_id; ++i) registry[i] = i;

    auto assemble = [&]() {
        std::vector<LayerEdgeList> lists = {
            {"family", family_edges},
            {"household", household_edges},
            {"school", school_edges},
            {"work", work_edges},
        };
        return build_multiplex(lists, registry);
    };
    MultiplexNetwork net = assemble();

    if (p.bridge_components && net.n_nodes() > 1) {
        // attach every non-giant aggregate component to a workplace of the
        // giant component through one of its members
        auto agg = aggregate(net);
        auto comp = connected_components(agg.offsets, agg.neighbors);
        // treat isolated nodes as their own components too
        std::size_t giant_comp = 0;
        for (std::size_t c = 0; c < comp.sizes.size(); ++c)
            if (comp.sizes[c] > comp.sizes[giant_comp]) giant_comp = c;

        // host workplace: first workplace whose first member is in the giant
        const std::vector<NodeId>* host = nullptr;
        for (const auto& wp : workplaces) {
            if (!wp.empty() &&
                comp.component[wp.front()] == static_cast<int64_t>(giant_comp)) {
                host = &wp;
                break;
            }
        }
        if (host != nullptr && !comp.sizes.empty()) {
            std::vector<bool> bridged(comp.sizes.size(), false);
            bridged[giant_comp] = true;
            auto link = [&](NodeId node) {
                std::size_t fan = std::min<std::size_t>(p.work_degree_cap, host->size());
                auto picks = rng.sample_without_replacement(
                    static_cast<uint32_t>(host->size()), static_cast<uint32_t>(fan));
                for (uint32_t pk : picks)
                    if ((*host)[pk] != node) {
                        work_edges.emplace_back(node, (*host)[pk]);
                        ++res.bridge_edges_added;
                    }
            };
            for (std::size_t i = 0; i < net.n_nodes(); ++i) {
                int64_t c = comp.component[i];
                if (c < 0) {
                    link(registry[i]); // isolated in every layer
                } else if (!bridged[static_cast<std::size_t>(c)]) {
                    bridged[static_cast<std::size_t>(c)] = true;
                    link(registry[i]);
                }
            }
            if (res.bridge_edges_added > 0) net = assemble();
        }
    }

    res.edge_lists = {
        {"family", std::move(family_edges)},
        {"household", std::move(household_edges)},
        {"school", std::move(school_edges)},
        {"work", std::move(work_edges)},
    };
    res.registry = std::move(registry);
    res.net = std::move(net);
    return res;
}

} // namespace mlepi
