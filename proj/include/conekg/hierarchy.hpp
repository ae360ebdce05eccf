#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "conekg/data.hpp"
#include "conekg/model.hpp"

namespace conekg {

// Four digraph statistics, each clamped to [0,1]; a tree scores (1,1,1,1).
//   connectedness: undirected-connected node pairs / (n(n-1)/2)
//   hierarchy:     one-directional reachable ordered pairs / all reachable ordered pairs
//   efficiency:    1 - 500 * (edges beyond a spanning forest) / ((n-1)(n-2)/2)
//   lubedness:     ordered pairs with a single-relation common ancestor / (n(n-1))
struct KrackhardtScores {
    double connectedness = 0.0;
    double hierarchy = 0.0;
    double efficiency = 0.0;
    double lubedness = 0.0;
};

// Per-relation hierarchical-ness on the relation's induced subgraph.
// total = asymmetry + |tree_likeness|; kind is hyponym when total clears the
// threshold with tree_likeness > 0, hypernym when it clears with < 0.
struct HierarchicalnessScores {
    std::string relation;
    double asymmetry = 0.0;
    double tree_likeness = 0.0;
    double total = 0.0;
    RelationKind kind = RelationKind::kNone;
    std::size_t nodes = 0;
    std::size_t edges = 0;
};

// Whole-graph scores over the given split. Connectedness/hierarchy/efficiency
// use the union of all relations' edges; lubedness unions single-relation
// ancestor coverage over `lub_relations` (empty = every relation).
// Throws DataError when the store has fewer than two entities or is too large
// for the pairwise lubedness bitmap.
KrackhardtScores krackhardt(const TripleStore& store, Split split = Split::kTrain,
                            const std::vector<std::int32_t>& lub_relations = {});

// Scores one relation; throws DataError when the relation has no edges in the
// split. Classification threshold defaults to 1.1.
HierarchicalnessScores relation_scores(const TripleStore& store, std::int32_t relation,
                                       double threshold = 1.1, Split split = Split::kTrain);

// Scores every relation in dictionary order; relations with no edges in the
// split come back all-zero and non-hierarchical.
std::vector<HierarchicalnessScores> classify_all(const TripleStore& store,
                                                 double threshold = 1.1,
                                                 Split split = Split::kTrain);

}  // namespace conekg
