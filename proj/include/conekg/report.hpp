#pragma once

#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "conekg/errors.hpp"
#include "conekg/eval.hpp"
#include "conekg/hierarchy.hpp"
#include "conekg/training.hpp"

// Every command emits a human-readable table on the text stream and, when a
// report path is set, one JSON object per line for machine consumption.
namespace conekg::report {

using nlohmann::json;

class Emitter {
  public:
    explicit Emitter(std::ostream& text) : text_(text) {}

    void open_sink(const std::string& path) {
        if (path.empty()) return;
        sink_.open(path, std::ios::trunc);
        if (!sink_) throw DataError("cannot open report file: " + path);
    }

    std::ostream& text() { return text_; }

    void line(const json& j) {
        if (sink_.is_open()) sink_ << j.dump() << '\n';
    }

  private:
    std::ostream& text_;
    std::ofstream sink_;
};

inline json ranking_json(const RankingStats& s) {
    return {{"mrr", s.mrr},   {"hits1", s.hits1},     {"hits3", s.hits3},
            {"hits10", s.hits10}, {"queries", s.queries}};
}

inline void print_ranking_row(std::ostream& os, const std::string& label,
                              const RankingStats& s) {
    os << "  " << std::left << std::setw(28) << label << std::right << std::fixed
       << std::setprecision(4) << "  MRR " << s.mrr << "  H@1 " << s.hits1 << "  H@3 " << s.hits3
       << "  H@10 " << s.hits10 << "  (" << s.queries << " queries)\n";
}

inline void emit_ranking(Emitter& em, const RankingReport& report, const std::string& label) {
    em.text() << label << ":\n";
    print_ranking_row(em.text(), "overall", report.overall);
    json overall = ranking_json(report.overall);
    overall["report"] = "kgc";
    overall["scope"] = "overall";
    em.line(overall);
    for (const RelationRankingStats& rel : report.per_relation) {
        print_ranking_row(em.text(), rel.relation, rel.stats);
        json j = ranking_json(rel.stats);
        j["report"] = "kgc";
        j["scope"] = "relation";
        j["relation"] = rel.relation;
        em.line(j);
    }
}

inline void emit_ad(Emitter& em, const AdReport& report, int inferred_percent) {
    em.text() << "ancestor-descendant prediction (" << inferred_percent << "% inferred):\n"
              << std::fixed << std::setprecision(4) << "  mAP   " << report.map << "\n"
              << "  AUROC " << report.auroc << "\n"
              << "  pairs " << report.positives << " positive / " << report.negatives
              << " negative\n";
    em.line({{"report", "ad"},
             {"inferred_percent", inferred_percent},
             {"map", report.map},
             {"auroc", report.auroc},
             {"positives", report.positives},
             {"negatives", report.negatives}});
    for (const auto& [gap, ap] : report.per_gap_map) {
        em.text() << "  gap " << gap << " mAP " << std::fixed << std::setprecision(4) << ap
                  << "\n";
        em.line({{"report", "ad_gap"}, {"inferred_percent", inferred_percent}, {"gap", gap},
                 {"map", ap}});
    }
}

inline void emit_lca(Emitter& em, const LcaReport& report, int hops) {
    em.text() << "LCA prediction (<= " << hops << " hops):\n";
    print_ranking_row(em.text(), "overall", report.overall);
    if (report.skipped_no_ancestor > 0)
        em.text() << "  skipped (no common ancestor): " << report.skipped_no_ancestor << "\n";
    json j = ranking_json(report.overall);
    j["report"] = "lca";
    j["hops"] = hops;
    j["skipped"] = report.skipped_no_ancestor;
    em.line(j);
}

inline void emit_krackhardt(Emitter& em, const KrackhardtScores& k) {
    em.text() << std::fixed << std::setprecision(4) << "graph statistics:\n"
              << "  connectedness " << k.connectedness << "\n"
              << "  hierarchy     " << k.hierarchy << "\n"
              << "  efficiency    " << k.efficiency << "\n"
              << "  LUBedness     " << k.lubedness << "\n";
    em.line({{"report", "krackhardt"},
             {"connectedness", k.connectedness},
             {"hierarchy", k.hierarchy},
             {"efficiency", k.efficiency},
             {"lubedness", k.lubedness}});
}

inline void emit_relations(Emitter& em, const std::vector<HierarchicalnessScores>& scores,
                           double threshold) {
    em.text() << "relation classification (threshold " << std::setprecision(2) << std::fixed
              << threshold << "):\n";
    em.text() << "  " << std::left << std::setw(32) << "relation" << std::right << std::setw(10)
              << "asym" << std::setw(12) << "tree" << std::setw(10) << "total" << "  kind\n";
    for (const HierarchicalnessScores& s : scores) {
        em.text() << "  " << std::left << std::setw(32) << s.relation << std::right << std::fixed
                  << std::setprecision(4) << std::setw(10) << s.asymmetry << std::setw(12)
                  << s.tree_likeness << std::setw(10) << s.total << "  " << to_string(s.kind)
                  << "\n";
        em.line({{"report", "relation"},
                 {"relation", s.relation},
                 {"asymmetry", s.asymmetry},
                 {"tree_likeness", s.tree_likeness},
                 {"total", s.total},
                 {"kind", to_string(s.kind)},
                 {"nodes", s.nodes},
                 {"edges", s.edges}});
    }
}

inline void emit_history(Emitter& em, const TrainHistory& history) {
    for (const EpochStats& e : history.epochs) {
        json j = {{"report", "epoch"},
                  {"phase", e.pretraining ? "pretrain" : "main"},
                  {"epoch", e.epoch},
                  {"distance", e.distance},
                  {"angle", e.angle},
                  {"total", e.total}};
        if (e.val_mrr >= 0.0) j["val_mrr"] = e.val_mrr;
        em.line(j);
    }
    em.line({{"report", "train"},
             {"best_val_mrr", history.best_val_mrr},
             {"best_epoch", history.best_epoch}});
}

}  // namespace conekg::report
