#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "conekg/checkpoint.hpp"
#include "conekg/data.hpp"
#include "conekg/errors.hpp"
#include "conekg/eval.hpp"
#include "conekg/hierarchy.hpp"
#include "conekg/model.hpp"
#include "conekg/report.hpp"
#include "conekg/rng.hpp"
#include "conekg/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace conekg;

namespace {

json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file: " + path);
    try {
        json j;
        in >> j;
        if (!j.is_object()) throw UsageError("config file must hold a JSON object: " + path);
        return j;
    } catch (const json::exception& e) {
        throw UsageError("config file " + path + ": " + e.what());
    }
}

// Precedence: explicit flag > config-file key > checkpoint-embedded value >
// built-in default.
template <class T>
T pick(const std::optional<T>& flag, const json& config, const char* key,
       const std::optional<T>& from_checkpoint, T fallback) {
    if (flag) return *flag;
    if (config.contains(key)) {
        try {
            return config.at(key).get<T>();
        } catch (const json::exception& e) {
            throw UsageError(std::string("config key '") + key + "': " + e.what());
        }
    }
    if (from_checkpoint) return *from_checkpoint;
    return fallback;
}

struct GlobalOpts {
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool deterministic = false;
    std::string report_path;
    std::string config_path;

    std::uint64_t resolved_seed(const json& config) const {
        return pick<std::uint64_t>(seed, config, "seed", {}, 0);
    }
    int resolved_threads(const json& config) const {
        if (deterministic) return 1;
        if (threads) return *threads;
        if (config.contains("threads")) return config.at("threads").get<int>();
        if (const char* env = std::getenv("CONE_KG_THREADS")) {
            try {
                return std::max(1, std::stoi(env));
            } catch (const std::exception&) {
                throw UsageError("CONE_KG_THREADS is not an integer");
            }
        }
        const unsigned hw = std::thread::hardware_concurrency();
        return hw == 0 ? 1 : static_cast<int>(hw);
    }
};

SynthSpec parse_synth_spec(const std::string& arg) {
    SynthSpec spec;
    if (arg == "default") return spec;
    std::ifstream in(arg);
    if (!in) throw UsageError("--synthetic expects 'default' or a JSON spec file: " + arg);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw UsageError("synthetic spec " + arg + ": " + e.what());
    }
    if (j.contains("entities")) spec.entities = j.at("entities").get<std::size_t>();
    if (j.contains("hierarchies")) spec.hierarchies = j.at("hierarchies").get<int>();
    if (j.contains("depth")) spec.depth = j.at("depth").get<int>();
    if (j.contains("branching")) spec.branching = j.at("branching").get<int>();
    if (j.contains("sibling_links")) spec.sibling_links = j.at("sibling_links").get<std::size_t>();
    if (j.contains("withheld_fraction"))
        spec.withheld_fraction = j.at("withheld_fraction").get<double>();
    spec.validate();
    return spec;
}

// A store either read from --data (classifying relations when no kind
// metadata exists) or generated from --synthetic (kinds are ground truth).
TripleStore resolve_store(const std::string& data_dir, const std::string& synthetic,
                          const std::optional<std::string>& meta, std::uint64_t seed,
                          report::Emitter* em) {
    if (data_dir.empty() == synthetic.empty())
        throw UsageError("exactly one of --data or --synthetic is required");
    if (!synthetic.empty()) {
        Rng base(seed);
        Rng gen = base.fork(7);
        return synthetic_kg(parse_synth_spec(synthetic), gen);
    }
    TripleStore store = load_dir(data_dir, meta);
    bool any_kind = false;
    for (RelationKind k : store.relation_kinds) any_kind |= is_hierarchical(k);
    const bool meta_present =
        meta.has_value() || fs::exists(fs::path(data_dir) / "relation_kinds.tsv");
    if (!meta_present && !any_kind) {
        const std::vector<HierarchicalnessScores> scores = classify_all(store);
        for (std::size_t r = 0; r < scores.size(); ++r) store.relation_kinds[r] = scores[r].kind;
        if (em != nullptr) {
            em->text() << "no relation metadata found; classified relations from train split\n";
            report::emit_relations(*em, scores, 1.1);
        }
    }
    return store;
}

std::vector<std::int32_t> hierarchical_relations(const TripleStore& store) {
    std::vector<std::int32_t> out;
    for (std::size_t r = 0; r < store.relation_count(); ++r)
        if (is_hierarchical(store.relation_kinds[r])) out.push_back(static_cast<std::int32_t>(r));
    return out;
}

// Loads the evaluation store re-expressed in the checkpoint's dictionaries so
// entity/relation ids match the embedding tables.
TripleStore aligned_store(const Model& model, const std::string& data_dir,
                          const std::string& synthetic, std::uint64_t seed) {
    TripleStore raw = resolve_store(data_dir, synthetic, {}, seed, nullptr);
    std::vector<RelationKind> base_kinds(model.kinds().begin(),
                                         model.kinds().begin() +
                                             static_cast<std::ptrdiff_t>(model.base_relation_count()));
    return align_to_dictionaries(raw, model.entity_names(), model.relation_names(), base_kinds);
}

int cmd_train(const GlobalOpts& globals, const std::string& data_dir,
              const std::string& synthetic, const std::optional<std::string>& meta,
              const std::string& out_path, const std::string& from_checkpoint,
              const std::optional<int>& dim, const std::optional<int>& subspace_dim,
              const std::optional<double>& cone_k, const std::optional<double>& angle_weight,
              const std::optional<double>& adv_temperature, const std::optional<int>& negatives,
              const std::optional<int>& epochs, const std::optional<int>& pretrain_epochs,
              const std::optional<int>& batch, const std::optional<double>& lr,
              const std::optional<int>& validate_every, bool orthogonal) {
    const json config = load_config_file(globals.config_path);
    report::Emitter em(std::cout);
    em.open_sink(globals.report_path);

    std::optional<ModelConfig> ckpt_cfg;
    if (!from_checkpoint.empty()) ckpt_cfg = load_checkpoint(from_checkpoint).config();
    auto ck_i = [&](int ModelConfig::* field) -> std::optional<int> {
        if (!ckpt_cfg) return {};
        return (*ckpt_cfg).*field;
    };
    auto ck_d = [&](double ModelConfig::* field) -> std::optional<double> {
        if (!ckpt_cfg) return {};
        return (*ckpt_cfg).*field;
    };

    ModelConfig cfg;
    cfg.dim = pick(dim, config, "dim", ck_i(&ModelConfig::dim), cfg.dim);
    cfg.subspace_dim =
        pick(subspace_dim, config, "subspace_dim", ck_i(&ModelConfig::subspace_dim),
             cfg.subspace_dim);
    cfg.cone_k = pick(cone_k, config, "cone_k", ck_d(&ModelConfig::cone_k), cfg.cone_k);
    cfg.angle_weight = pick(angle_weight, config, "angle_weight",
                            ck_d(&ModelConfig::angle_weight), cfg.angle_weight);
    cfg.adv_temperature = pick(adv_temperature, config, "adv_temperature",
                               ck_d(&ModelConfig::adv_temperature), cfg.adv_temperature);
    cfg.negatives = pick(negatives, config, "negatives", ck_i(&ModelConfig::negatives),
                         cfg.negatives);

    TrainSchedule sched;
    sched.epochs = pick(epochs, config, "epochs", {}, sched.epochs);
    sched.pretrain_epochs = pick(pretrain_epochs, config, "pretrain_epochs", {},
                                 sched.pretrain_epochs);
    sched.batch_size = pick(batch, config, "batch", {}, sched.batch_size);
    sched.lr = pick(lr, config, "lr", {}, sched.lr);
    sched.validation_every = pick(validate_every, config, "validate_every", {},
                                  sched.validation_every);
    sched.seed = globals.resolved_seed(config);
    sched.threads = globals.resolved_threads(config);
    sched.deterministic = globals.deterministic;
    sched.orthogonal_subspaces = orthogonal;

    const TripleStore store = resolve_store(data_dir, synthetic, meta, sched.seed, &em);
    em.text() << "training on " << store.train.size() << " triples, " << store.entity_count()
              << " entities, " << store.relation_count() << " relations (d=" << cfg.dim
              << ", d_s=" << cfg.subspace_dim << ", w=" << cfg.angle_weight << ", "
              << sched.epochs << " epochs + " << sched.resolved_pretrain_epochs()
              << " pretrain)\n";

    TrainHistory history;
    Model model = train(store, cfg, sched, &history);
    save_checkpoint(model, out_path);

    for (const EpochStats& e : history.epochs) {
        const bool show = e.epoch == 1 || e.epoch % 25 == 0 || e.val_mrr >= 0.0;
        if (!show) continue;
        em.text() << "  " << (e.pretraining ? "pretrain" : "epoch") << " " << std::setw(4)
                  << e.epoch << "  distance " << std::fixed << std::setprecision(5) << e.distance
                  << "  angle " << e.angle;
        if (e.val_mrr >= 0.0) em.text() << "  val MRR " << std::setprecision(4) << e.val_mrr;
        em.text() << "\n";
    }
    report::emit_history(em, history);
    if (history.best_epoch >= 0)
        em.text() << "best validation MRR " << std::fixed << std::setprecision(4)
                  << history.best_val_mrr << " at epoch " << history.best_epoch << "\n";
    em.text() << "checkpoint written to " << out_path << "\n";
    em.line({{"report", "checkpoint"}, {"path", out_path}});
    return 0;
}

int cmd_eval_kgc(const GlobalOpts& globals, const std::string& checkpoint,
                 const std::string& data_dir, const std::string& synthetic,
                 const std::string& split_name) {
    const json config = load_config_file(globals.config_path);
    report::Emitter em(std::cout);
    em.open_sink(globals.report_path);
    const Model model = load_checkpoint(checkpoint);
    const TripleStore store =
        aligned_store(model, data_dir, synthetic, globals.resolved_seed(config));
    Split split = Split::kTest;
    if (split_name == "valid")
        split = Split::kValid;
    else if (split_name != "test")
        throw UsageError("--split must be test or valid");
    if (store.split(split).empty()) throw DataError("no triples in the requested split");
    const FilterIndex filter(store);
    const RankingReport report = kg_completion(model, store, split, filter);
    report::emit_ranking(em, report, "link prediction (" + split_name + ", filtered)");
    return 0;
}

int cmd_eval_ad(const GlobalOpts& globals, const std::string& checkpoint,
                const std::string& data_dir, const std::string& synthetic, int inferred,
                std::size_t pairs, const std::string& write_pairs) {
    if (inferred != 0 && inferred != 50 && inferred != 100)
        throw UsageError("--inferred must be 0, 50 or 100");
    const json config = load_config_file(globals.config_path);
    report::Emitter em(std::cout);
    em.open_sink(globals.report_path);
    const Model model = load_checkpoint(checkpoint);
    const TripleStore store =
        aligned_store(model, data_dir, synthetic, globals.resolved_seed(config));

    std::vector<Closure> closure_train(store.relation_count());
    std::vector<Closure> closure_all(store.relation_count());
    for (std::int32_t r : hierarchical_relations(store)) {
        closure_train[static_cast<std::size_t>(r)] = transitive_closure(store, r, true);
        closure_all[static_cast<std::size_t>(r)] = transitive_closure(store, r, false);
    }
    Rng base(globals.resolved_seed(config));
    Rng rng = base.fork(11);
    const std::vector<AdPair> testset = build_ad_testset(
        store, closure_train, closure_all, static_cast<double>(inferred) / 100.0, pairs, rng);
    if (!write_pairs.empty()) write_ad_pairs(write_pairs, store, testset);
    const AdReport report = ad_predict(model, testset);
    report::emit_ad(em, report, inferred);
    return 0;
}

int cmd_eval_lca(const GlobalOpts& globals, const std::string& checkpoint,
                 const std::string& data_dir, const std::string& synthetic, int hops,
                 std::size_t count) {
    if (hops < 1 || hops > 3) throw UsageError("--hops must be 1, 2 or 3");
    const json config = load_config_file(globals.config_path);
    report::Emitter em(std::cout);
    em.open_sink(globals.report_path);
    const Model model = load_checkpoint(checkpoint);
    const TripleStore store =
        aligned_store(model, data_dir, synthetic, globals.resolved_seed(config));

    Rng base(globals.resolved_seed(config));
    std::vector<LcaQuery> queries;
    for (std::int32_t r : hierarchical_relations(store)) {
        const Closure closure = transitive_closure(store, r, false);
        Rng rng = base.fork(12 + static_cast<std::uint64_t>(r));
        std::vector<LcaQuery> per =
            build_lca_queries(closure, r, store.entity_count(), hops, count, rng);
        queries.insert(queries.end(), per.begin(), per.end());
    }
    if (queries.empty()) throw DataError("no LCA queries could be built (no hierarchical relation?)");
    const LcaReport report = lca_predict(model, queries);
    report::emit_lca(em, report, hops);
    return 0;
}

int cmd_analyze(const GlobalOpts& globals, const std::string& data_dir, bool relations_mode,
                double threshold, const std::string& write_meta) {
    const json config = load_config_file(globals.config_path);
    (void)config;
    report::Emitter em(std::cout);
    em.open_sink(globals.report_path);
    if (data_dir.empty()) throw UsageError("--data is required");
    const TripleStore store = load_dir(data_dir);
    if (relations_mode) {
        const std::vector<HierarchicalnessScores> scores = classify_all(store, threshold);
        report::emit_relations(em, scores, threshold);
        if (!write_meta.empty()) {
            std::vector<RelationKind> kinds;
            kinds.reserve(scores.size());
            for (const HierarchicalnessScores& s : scores) kinds.push_back(s.kind);
            write_relation_meta(write_meta, store.relation_names, kinds);
            em.text() << "relation metadata written to " << write_meta << "\n";
        }
    } else {
        // Single-relation ancestor coverage unions hierarchical relations when
        // kinds are known, every relation otherwise.
        std::vector<std::int32_t> lub = hierarchical_relations(store);
        const KrackhardtScores scores = krackhardt(store, Split::kTrain, lub);
        report::emit_krackhardt(em, scores);
    }
    return 0;
}

int cmd_synth(const GlobalOpts& globals, const std::string& spec_arg, const std::string& out_dir) {
    const json config = load_config_file(globals.config_path);
    report::Emitter em(std::cout);
    em.open_sink(globals.report_path);
    Rng base(globals.resolved_seed(config));
    Rng rng = base.fork(7);
    const TripleStore store = synthetic_kg(parse_synth_spec(spec_arg), rng);
    write_store_dir(store, out_dir);
    em.text() << "synthetic KG written to " << out_dir << ": " << store.entity_count()
              << " entities, " << store.relation_count() << " relations, " << store.train.size()
              << " train / " << store.valid.size() << " valid / " << store.test.size()
              << " test triples\n";
    em.line({{"report", "synth"},
             {"dir", out_dir},
             {"entities", store.entity_count()},
             {"relations", store.relation_count()},
             {"train", store.train.size()},
             {"valid", store.valid.size()},
             {"test", store.test.size()}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hyperbolic cone embeddings for heterogeneous knowledge graphs"};
    app.require_subcommand(1);

    GlobalOpts globals;
    app.add_option("--seed", globals.seed, "random seed (default 0)");
    app.add_option("--threads", globals.threads,
                   "worker threads (default: CONE_KG_THREADS or hardware)");
    app.add_flag("--deterministic", globals.deterministic,
                 "bit-reproducible mode (forces --threads 1)");
    app.add_option("--report", globals.report_path, "write JSON-lines report to this file");
    app.add_option("--config", globals.config_path, "JSON config file (flags take precedence)");

    // train ------------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "learn embeddings");
    train_cmd->fallthrough();
    std::string data_dir, synthetic, out_path = "model.ckpt", from_checkpoint;
    std::optional<std::string> meta;
    std::optional<int> dim, subspace_dim, negatives, epochs, pretrain_epochs, batch,
        validate_every;
    std::optional<double> cone_k, angle_weight, adv_temperature, lr;
    bool orthogonal = false;
    train_cmd->add_option("--data", data_dir, "directory with train.txt/valid.txt/test.txt");
    train_cmd->add_option("--synthetic", synthetic, "'default' or a JSON spec file");
    train_cmd->add_option("--meta", meta, "relation kind TSV (name<TAB>kind)");
    train_cmd->add_option("--out", out_path, "checkpoint output path");
    train_cmd->add_option("--from-checkpoint", from_checkpoint,
                          "borrow model hyperparameters from an existing checkpoint");
    train_cmd->add_option("--dim", dim, "hyperbolic planes (default 500)");
    train_cmd->add_option("--subspace-dim", subspace_dim, "masked planes per relation (default 100)");
    train_cmd->add_option("--cone-k", cone_k, "aperture constant (default 0.1)");
    train_cmd->add_option("--angle-weight", angle_weight, "angle loss weight w (default 0.5)");
    train_cmd->add_option("--adv-temperature", adv_temperature,
                          "self-adversarial temperature (default 0.5)");
    train_cmd->add_option("--neg,--negatives", negatives, "negatives per positive (default 50)");
    train_cmd->add_option("--epochs", epochs, "main-phase epochs (default 500)");
    train_cmd->add_option("--pretrain-epochs", pretrain_epochs,
                          "rotation-only pretraining epochs (default 0.3 * epochs)");
    train_cmd->add_option("--batch", batch, "batch size (default 1024)");
    train_cmd->add_option("--lr", lr, "Adam learning rate (default 0.001)");
    train_cmd->add_option("--validate-every", validate_every,
                          "epochs between validation MRR checks (default 10, 0 disables)");
    train_cmd->add_flag("--orthogonal-subspaces", orthogonal,
                        "allocate disjoint masked subspaces across relations");

    // eval -------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    eval_cmd->fallthrough();
    eval_cmd->require_subcommand(1);
    std::string checkpoint, eval_data, eval_synth;
    eval_cmd->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
    eval_cmd->add_option("--data", eval_data, "evaluation data directory");
    eval_cmd->add_option("--synthetic", eval_synth, "'default' or JSON spec file");

    auto* kgc_cmd = eval_cmd->add_subcommand("kgc", "filtered link prediction");
    kgc_cmd->fallthrough();
    std::string split_name = "test";
    kgc_cmd->add_option("--split", split_name, "test or valid (default test)");

    auto* ad_cmd = eval_cmd->add_subcommand("ad", "ancestor-descendant prediction");
    ad_cmd->fallthrough();
    int inferred = 0;
    std::size_t ad_pairs = 1000;
    std::string write_pairs;
    ad_cmd->add_option("--inferred", inferred, "percent inferred pairs: 0, 50 or 100");
    ad_cmd->add_option("--pairs", ad_pairs, "positive pairs to sample (default 1000)");
    ad_cmd->add_option("--write-pairs", write_pairs, "dump the sampled pairs as TSV");

    auto* lca_cmd = eval_cmd->add_subcommand("lca", "lowest common ancestor prediction");
    lca_cmd->fallthrough();
    int hops = 1;
    std::size_t lca_count = 500;
    lca_cmd->add_option("--hops", hops, "max hierarchy gap of the true LCA: 1, 2 or 3");
    lca_cmd->add_option("--count", lca_count, "queries per hierarchical relation (default 500)");

    // analyze ----------------------------------------------------------
    auto* analyze_cmd = app.add_subcommand("analyze", "graph statistics");
    analyze_cmd->fallthrough();
    analyze_cmd->require_subcommand(1);
    std::string analyze_data;
    analyze_cmd->add_option("--data", analyze_data, "data directory")->required();
    analyze_cmd->add_subcommand("krackhardt", "whole-graph statistics")->fallthrough();
    auto* rel_cmd = analyze_cmd->add_subcommand("relations", "per-relation classification");
    rel_cmd->fallthrough();
    double threshold = 1.1;
    std::string write_meta;
    rel_cmd->add_option("--threshold", threshold, "classification threshold (default 1.1)");
    rel_cmd->add_option("--write-meta", write_meta, "write classified kinds as TSV");

    // synth --------------------------------------------------------------
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic KG");
    synth_cmd->fallthrough();
    std::string synth_spec = "default", synth_out;
    synth_cmd->add_option("--spec", synth_spec, "'default' or a JSON spec file");
    synth_cmd->add_option("--out", synth_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (train_cmd->parsed())
            return cmd_train(globals, data_dir, synthetic, meta, out_path, from_checkpoint, dim,
                             subspace_dim, cone_k, angle_weight, adv_temperature, negatives,
                             epochs, pretrain_epochs, batch, lr, validate_every, orthogonal);
        if (eval_cmd->parsed()) {
            if (kgc_cmd->parsed())
                return cmd_eval_kgc(globals, checkpoint, eval_data, eval_synth, split_name);
            if (ad_cmd->parsed())
                return cmd_eval_ad(globals, checkpoint, eval_data, eval_synth, inferred, ad_pairs,
                                   write_pairs);
            if (lca_cmd->parsed())
                return cmd_eval_lca(globals, checkpoint, eval_data, eval_synth, hops, lca_count);
        }
        if (analyze_cmd->parsed())
            return cmd_analyze(globals, analyze_data, rel_cmd->parsed(), threshold, write_meta);
        if (synth_cmd->parsed()) return cmd_synth(globals, synth_spec, synth_out);
        throw UsageError("no subcommand given");
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
