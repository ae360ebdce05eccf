#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "conekg/data.hpp"
#include "conekg/model.hpp"
#include "conekg/rng.hpp"

namespace conekg {

struct RankingStats {
    double mrr = 0.0;
    double hits1 = 0.0, hits3 = 0.0, hits10 = 0.0;
    std::size_t queries = 0;
};

struct RelationRankingStats {
    std::string relation;
    RankingStats stats;
};

struct RankingReport {
    RankingStats overall;
    std::vector<RelationRankingStats> per_relation;  // base relations, both directions pooled
};

struct AdReport {
    double map = 0.0;
    double auroc = 0.0;
    std::vector<std::pair<std::int32_t, double>> per_gap_map;  // (gap, mAP vs all negatives)
    std::size_t positives = 0, negatives = 0;
};

struct LcaQuery {
    std::int32_t u = 0, v = 0;
    std::int32_t relation = 0;            // base hierarchical relation
    std::vector<std::int32_t> truth;      // argmin of summed gaps; any is correct
    std::int32_t hops = 0;                // min over truth of max(gap to u, gap to v)
};

struct LcaReport {
    RankingStats overall;
    std::size_t skipped_no_ancestor = 0;
};

// Fractional tie rank: 1 + (strictly better) + (tied others)/2. "Better" is
// higher score.
double tie_rank(double true_score, const std::vector<double>& scores,
                const std::vector<bool>& filtered, std::size_t true_index);

// Filtered link prediction over a split; head queries run through the
// reciprocal relation ids. MRR/Hits are averaged over both directions.
RankingReport kg_completion(const Model& model, const TripleStore& store, Split split,
                            const FilterIndex& filter);

// Ranks pairs ascending by cone violation of (ancestor, descendant); AP over
// the pooled list, rank-sum AUROC, and per-gap mAP where each gap's positives
// are ranked against every negative.
AdReport ad_predict(const Model& model, const std::vector<AdPair>& pairs);

// Average precision / AUROC on a scored list where LOWER scores should rank
// positives first. Ties contribute precision at the end of their block (AP)
// and midranks (AUROC). Exposed for the metric-equivalence tests.
double average_precision(const std::vector<double>& scores, const std::vector<bool>& positive);
double auroc(const std::vector<double>& scores, const std::vector<bool>& positive);

// Samples entity pairs with at least one common ancestor under the relation's
// closure whose best LCA lies within `hops`; truth sets are exact gap-sum
// argmins (reflexive: an entity is its own ancestor at gap 0).
std::vector<LcaQuery> build_lca_queries(const Closure& closure, std::int32_t relation,
                                        std::size_t entity_count, int hops, std::size_t count,
                                        Rng& rng);

// Ranks every entity by the masked-plane aperture-minus-angles score,
// descending; a query scores by its best-ranked true LCA.
LcaReport lca_predict(const Model& model, const std::vector<LcaQuery>& queries);

}  // namespace conekg
