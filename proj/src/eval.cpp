#include "conekg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace conekg {

double tie_rank(double true_score, const std::vector<double>& scores,
                const std::vector<bool>& filtered, std::size_t true_index) {
    std::size_t greater = 0, tied = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (i == true_index || filtered[i]) continue;
        if (scores[i] > true_score)
            ++greater;
        else if (scores[i] == true_score)
            ++tied;
    }
    return 1.0 + static_cast<double>(greater) + 0.5 * static_cast<double>(tied);
}

namespace {

void tally(RankingStats& stats, double rank) {
    stats.mrr += 1.0 / rank;
    if (rank <= 1.0) stats.hits1 += 1.0;
    if (rank <= 3.0) stats.hits3 += 1.0;
    if (rank <= 10.0) stats.hits10 += 1.0;
    ++stats.queries;
}

void finalize(RankingStats& stats) {
    if (stats.queries == 0) return;
    const double n = static_cast<double>(stats.queries);
    stats.mrr /= n;
    stats.hits1 /= n;
    stats.hits3 /= n;
    stats.hits10 /= n;
}

// Candidate-side restricted-rotation cache for hypernym-direction queries:
// masked-plane images f2(e_i, r) for every entity e. Row-major by entity.
struct CandidateCache {
    std::vector<int> masked_planes;
    std::vector<geom::PlanePoint> points;  // entity * masked_planes.size() + slot
};

CandidateCache build_candidate_cache(const Model& model, std::size_t r2) {
    CandidateCache cache;
    const int d = model.config().dim;
    for (int i = 0; i < d; ++i)
        if (model.masked(r2, i)) cache.masked_planes.push_back(i);
    cache.points.resize(model.entity_count() * cache.masked_planes.size());
    for (std::size_t e = 0; e < model.entity_count(); ++e) {
        for (std::size_t slot = 0; slot < cache.masked_planes.size(); ++slot) {
            const int i = cache.masked_planes[slot];
            cache.points[e * cache.masked_planes.size() + slot] =
                f2_plane(model.entity_plane(e, i), model.effective_scale(r2, i),
                         model.effective_angle(r2, i), model.config().cone_k);
        }
    }
    return cache;
}

// Scores psi(x, r2, c) for every candidate tail c. For hypernym-kind
// relations the masked planes run the restricted rotation from the candidate
// back to x, served from the cache.
void score_candidates(const Model& model, std::size_t x, std::size_t r2,
                      const CandidateCache* cache, std::vector<double>& out) {
    const int d = model.config().dim;
    const double cone_k = model.config().cone_k;
    const bool reverse = model.kind(r2) == RelationKind::kHypernym;
    const std::size_t n = model.entity_count();
    out.assign(n, 0.0);

    std::vector<geom::PlanePoint> source(static_cast<std::size_t>(d));
    std::vector<bool> candidate_side(static_cast<std::size_t>(d), false);
    for (int i = 0; i < d; ++i) {
        const geom::PlanePoint xi = model.entity_plane(x, i);
        if (model.masked(r2, i)) {
            if (reverse) {
                candidate_side[static_cast<std::size_t>(i)] = true;
                source[static_cast<std::size_t>(i)] = xi;  // distance target
            } else {
                source[static_cast<std::size_t>(i)] =
                    f2_plane(xi, model.effective_scale(r2, i), model.effective_angle(r2, i),
                             cone_k);
            }
        } else {
            source[static_cast<std::size_t>(i)] = f1_plane(xi, model.effective_angle(r2, i));
        }
    }
    std::vector<std::size_t> cache_slot(static_cast<std::size_t>(d), 0);
    if (cache != nullptr)
        for (std::size_t slot = 0; slot < cache->masked_planes.size(); ++slot)
            cache_slot[static_cast<std::size_t>(cache->masked_planes[slot])] = slot;

    const double inv_d = 1.0 / static_cast<double>(d);
    const double bias_x = model.entity_bias(x);
    for (std::size_t c = 0; c < n; ++c) {
        double acc = 0.0;
        for (int i = 0; i < d; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            if (candidate_side[idx]) {
                const geom::PlanePoint img =
                    cache->points[c * cache->masked_planes.size() + cache_slot[idx]];
                acc += geom::distance(img, source[idx]);
            } else {
                acc += geom::distance(source[idx], model.entity_plane(c, i));
            }
        }
        out[c] = -inv_d * acc + bias_x + model.entity_bias(c);
    }
}

struct Query {
    std::int32_t x;     // fixed side
    std::int32_t r2;    // relation id in [0, 2R)
    std::int32_t truth; // entity to rank
};

}  // namespace

RankingReport kg_completion(const Model& model, const TripleStore& store, Split split,
                            const FilterIndex& filter) {
    if (store.entity_count() != model.entity_count() ||
        store.relation_count() != model.base_relation_count())
        throw std::invalid_argument("kg_completion: store and model dictionaries differ");
    const auto r_count = static_cast<std::int32_t>(store.relation_count());
    std::vector<Query> queries;
    queries.reserve(2 * store.split(split).size());
    for (const Triple& t : store.split(split)) {
        queries.push_back({t.h, t.r, t.t});
        queries.push_back({t.t, t.r + r_count, t.h});
    }
    std::stable_sort(queries.begin(), queries.end(),
                     [](const Query& a, const Query& b) { return a.r2 < b.r2; });

    RankingStats overall;
    std::map<std::int32_t, RankingStats> by_base;
    std::vector<double> scores;
    std::vector<bool> filtered;
    std::size_t qi = 0;
    while (qi < queries.size()) {
        const std::int32_t r2 = queries[qi].r2;
        CandidateCache cache;
        const bool needs_cache = model.kind(static_cast<std::size_t>(r2)) ==
                                     RelationKind::kHypernym &&
                                 model.mask_popcount(static_cast<std::size_t>(r2)) > 0;
        if (needs_cache) cache = build_candidate_cache(model, static_cast<std::size_t>(r2));
        for (; qi < queries.size() && queries[qi].r2 == r2; ++qi) {
            const Query& q = queries[qi];
            score_candidates(model, static_cast<std::size_t>(q.x), static_cast<std::size_t>(r2),
                             needs_cache ? &cache : nullptr, scores);
            filtered.assign(scores.size(), false);
            for (std::int32_t other : filter.tails(q.x, r2))
                if (other != q.truth) filtered[static_cast<std::size_t>(other)] = true;
            const double rank = tie_rank(scores[static_cast<std::size_t>(q.truth)], scores,
                                         filtered, static_cast<std::size_t>(q.truth));
            tally(overall, rank);
            tally(by_base[r2 % r_count], rank);
        }
    }
    finalize(overall);
    RankingReport report;
    report.overall = overall;
    for (auto& [base, stats] : by_base) {
        finalize(stats);
        report.per_relation.push_back(
            {store.relation_names[static_cast<std::size_t>(base)], stats});
    }
    return report;
}

// ---------------------------------------------------------------------------

namespace {

// Blocks of equal score, ascending; lower scores are better.
std::vector<std::size_t> ascending_order(const std::vector<double>& scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    return order;
}

}  // namespace

double average_precision(const std::vector<double>& scores, const std::vector<bool>& positive) {
    if (scores.size() != positive.size())
        throw std::invalid_argument("average_precision: size mismatch");
    const std::size_t total_pos =
        static_cast<std::size_t>(std::count(positive.begin(), positive.end(), true));
    if (total_pos == 0) return 0.0;
    const std::vector<std::size_t> order = ascending_order(scores);
    double sum = 0.0;
    std::size_t cum_pos = 0, cum_total = 0, i = 0;
    while (i < order.size()) {
        std::size_t j = i, block_pos = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            if (positive[order[j]]) ++block_pos;
            ++j;
        }
        cum_pos += block_pos;
        cum_total += j - i;
        // Every positive in a tie block sees the block-end precision.
        sum += static_cast<double>(block_pos) *
               (static_cast<double>(cum_pos) / static_cast<double>(cum_total));
        i = j;
    }
    return sum / static_cast<double>(total_pos);
}

double auroc(const std::vector<double>& scores, const std::vector<bool>& positive) {
    if (scores.size() != positive.size()) throw std::invalid_argument("auroc: size mismatch");
    std::size_t n_pos = 0, n_neg = 0;
    for (bool p : positive) (p ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0) return 0.5;
    const std::vector<std::size_t> order = ascending_order(scores);
    // Midrank sum of positives, ascending; positives ranking low is good.
    double rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i, block_pos = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            if (positive[order[j]]) ++block_pos;
            ++j;
        }
        const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        rank_sum += midrank * static_cast<double>(block_pos);
        i = j;
    }
    const double p = static_cast<double>(n_pos);
    const double u_pos = rank_sum - 0.5 * p * (p + 1.0);  // wins of positives over negatives
    return 1.0 - u_pos / (p * static_cast<double>(n_neg));
}

AdReport ad_predict(const Model& model, const std::vector<AdPair>& pairs) {
    if (pairs.empty()) throw std::invalid_argument("ad_predict: empty pair list");
    std::vector<double> scores(pairs.size());
    std::vector<bool> positive(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        scores[i] = model.pair_violation(static_cast<std::size_t>(pairs[i].ancestor),
                                         static_cast<std::size_t>(pairs[i].descendant),
                                         static_cast<std::size_t>(pairs[i].relation));
        positive[i] = pairs[i].positive;
    }
    AdReport report;
    report.map = average_precision(scores, positive);
    report.auroc = auroc(scores, positive);
    for (bool p : positive) (p ? report.positives : report.negatives) += 1;

    std::vector<std::int32_t> gaps;
    for (const AdPair& p : pairs)
        if (p.positive) gaps.push_back(p.gap);
    std::sort(gaps.begin(), gaps.end());
    gaps.erase(std::unique(gaps.begin(), gaps.end()), gaps.end());
    for (std::int32_t g : gaps) {
        std::vector<double> sub_scores;
        std::vector<bool> sub_positive;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            if (pairs[i].positive && pairs[i].gap != g) continue;
            sub_scores.push_back(scores[i]);
            sub_positive.push_back(positive[i]);
        }
        report.per_gap_map.emplace_back(g, average_precision(sub_scores, sub_positive));
    }
    return report;
}

// ---------------------------------------------------------------------------

std::vector<LcaQuery> build_lca_queries(const Closure& closure, std::int32_t relation,
                                        std::size_t entity_count, int hops, std::size_t count,
                                        Rng& rng) {
    if (hops < 1) throw std::invalid_argument("lca queries need hops >= 1");
    // Ancestor lists inverted from the closure; every entity is additionally
    // its own ancestor at gap 0.
    std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>> up(entity_count);
    for (std::size_t anc = 0; anc < closure.down.size(); ++anc)
        for (const auto& [desc, gap] : closure.down[anc])
            up[static_cast<std::size_t>(desc)].emplace_back(static_cast<std::int32_t>(anc), gap);

    std::vector<LcaQuery> out;
    std::unordered_set<std::uint64_t> seen;
    std::unordered_map<std::int32_t, std::int32_t> anc_u;
    const std::size_t max_attempts = std::max<std::size_t>(1000, 400 * count);
    for (std::size_t attempt = 0; attempt < max_attempts && out.size() < count; ++attempt) {
        auto u = static_cast<std::int32_t>(rng.uniform_int(entity_count));
        auto v = static_cast<std::int32_t>(rng.uniform_int(entity_count));
        if (u == v) continue;
        if (u > v) std::swap(u, v);
        const std::uint64_t key =
            (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
            static_cast<std::uint32_t>(v);
        if (seen.contains(key)) continue;
        seen.insert(key);

        anc_u.clear();
        anc_u.emplace(u, 0);
        for (const auto& [anc, gap] : up[static_cast<std::size_t>(u)]) anc_u.emplace(anc, gap);
        std::int64_t best_sum = -1;
        std::vector<std::int32_t> truth;
        std::int32_t best_hops = 0;
        auto consider = [&](std::int32_t w, std::int32_t gu, std::int32_t gv) {
            const std::int64_t sum = static_cast<std::int64_t>(gu) + gv;
            const std::int32_t reach = std::max(gu, gv);
            if (best_sum < 0 || sum < best_sum) {
                best_sum = sum;
                truth.assign(1, w);
                best_hops = reach;
            } else if (sum == best_sum) {
                truth.push_back(w);
                best_hops = std::min(best_hops, reach);
            }
        };
        if (auto it = anc_u.find(v); it != anc_u.end()) consider(v, it->second, 0);
        for (const auto& [anc, gap] : up[static_cast<std::size_t>(v)]) {
            if (auto it = anc_u.find(anc); it != anc_u.end()) consider(anc, it->second, gap);
        }
        if (best_sum < 0 || best_hops > hops) continue;
        std::sort(truth.begin(), truth.end());
        out.push_back({u, v, relation, std::move(truth), best_hops});
    }
    return out;
}

LcaReport lca_predict(const Model& model, const std::vector<LcaQuery>& queries) {
    LcaReport report;
    std::vector<double> scores;
    for (const LcaQuery& q : queries) {
        if (q.truth.empty()) {
            ++report.skipped_no_ancestor;
            continue;
        }
        const auto rel = static_cast<std::size_t>(q.relation);
        scores.assign(model.entity_count(), 0.0);
        for (std::size_t w = 0; w < model.entity_count(); ++w)
            scores[w] = model.lca_score(w, static_cast<std::size_t>(q.u),
                                        static_cast<std::size_t>(q.v), rel);
        // Other true LCAs are filtered while ranking each one ("any of them
        // to be correct"), mirroring the filtered KGC convention.
        std::vector<bool> filtered(scores.size(), false);
        for (std::int32_t w : q.truth) filtered[static_cast<std::size_t>(w)] = true;
        double best_rank = 0.0;
        bool first = true;
        for (std::int32_t w : q.truth) {
            const double rank =
                tie_rank(scores[static_cast<std::size_t>(w)], scores, filtered,
                         static_cast<std::size_t>(w));
            if (first || rank < best_rank) {
                best_rank = rank;
                first = false;
            }
        }
        tally(report.overall, best_rank);
    }
    finalize(report.overall);
    return report;
}

}  // namespace conekg
