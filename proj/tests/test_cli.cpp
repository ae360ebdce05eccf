#include "doctest.h"

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

// Exercises the installed binary end to end; CONEKG_BIN is injected by the
// build so the tests track the freshly built executable.
#ifndef CONEKG_BIN
#error "CONEKG_BIN must point at the conekg executable"
#endif

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr interleaved
};

RunResult run(const std::string& args) {
    const fs::path log = fs::temp_directory_path() / "conekg_cli_out.txt";
    const std::string cmd = std::string(CONEKG_BIN) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    r.output = ss.str();
    return r;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("conekg_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Complete binary tree; optionally holds the last `withheld` edges out as test.
fs::path tree_dir(const std::string& name, int withheld) {
    const fs::path dir = fresh_dir(name);
    std::ofstream train(dir / "train.txt");
    std::ofstream test(dir / "test.txt");
    int written = 0;
    for (int parent = 0; parent < 7; ++parent) {
        for (int child : {2 * parent + 1, 2 * parent + 2}) {
            std::ostream& out = written < 14 - withheld ? train : test;
            out << "n" << parent << "\tedge\tn" << child << "\n";
            ++written;
        }
    }
    std::ofstream meta(dir / "relation_kinds.tsv");
    meta << "edge\thyponym\n";
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
    std::size_t n = 0;
    for (std::size_t pos = haystack.find(needle); pos != std::string::npos;
         pos = haystack.find(needle, pos + needle.size()))
        ++n;
    return n;
}

}  // namespace

TEST_CASE("help exits cleanly and lists the subcommands") {
    const RunResult r = run("--help");
    CHECK(r.exit_code == 0);
    for (const char* sub : {"train", "eval", "analyze", "synth"})
        CHECK(r.output.find(sub) != std::string::npos);
}

TEST_CASE("unknown flags and missing subcommands are usage errors") {
    CHECK(run("--definitely-not-a-flag").exit_code == 1);
    CHECK(run("").exit_code == 1);
    CHECK(run("train --synthetic default --data somewhere --out x.ckpt").exit_code == 1);
}

TEST_CASE("missing data directories are data errors, not crashes") {
    const RunResult r = run("analyze krackhardt --data /nonexistent/conekg");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("train.txt") != std::string::npos);
}

TEST_CASE("a tree scores four perfect statistics through the CLI") {
    const fs::path dir = tree_dir("tree_full", 0);
    const RunResult r = run("analyze krackhardt --data " + dir.string());
    CHECK(r.exit_code == 0);
    CHECK(count_occurrences(r.output, "1.0000") >= 4);
    CHECK(r.output.find("connectedness") != std::string::npos);
}

TEST_CASE("relation classification spots the tree and writes metadata") {
    const fs::path dir = tree_dir("tree_classify", 0);
    const fs::path meta = dir / "classified.tsv";
    const RunResult r =
        run("analyze relations --data " + dir.string() + " --write-meta " + meta.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("edge") != std::string::npos);
    CHECK(slurp(meta).find("edge\thyponym") != std::string::npos);
}

TEST_CASE("training writes a checkpoint that evaluation can reuse") {
    const fs::path dir = tree_dir("tree_train", 2);
    const fs::path ckpt = fs::temp_directory_path() / "conekg_cli_tree.ckpt";
    fs::remove(ckpt);
    const RunResult t = run("train --data " + dir.string() + " --out " + ckpt.string() +
                            " --dim 4 --subspace-dim 2 --epochs 2 --pretrain-epochs 1" +
                            " --batch 64 --neg 4 --seed 3");
    CHECK(t.exit_code == 0);
    REQUIRE(fs::exists(ckpt));
    CHECK(fs::file_size(ckpt) > 0);

    const fs::path report = fs::temp_directory_path() / "conekg_cli_kgc.jsonl";
    fs::remove(report);
    const RunResult e = run("eval --checkpoint " + ckpt.string() + " --data " + dir.string() +
                            " kgc --split test --report " + report.string());
    CHECK(e.exit_code == 0);
    CHECK(e.output.find("MRR") != std::string::npos);
    const std::string lines = slurp(report);
    CHECK(lines.find("\"report\":\"kgc\"") != std::string::npos);

    const RunResult ad = run("eval --checkpoint " + ckpt.string() + " --data " + dir.string() +
                             " ad --inferred 0 --pairs 30");
    CHECK(ad.exit_code == 0);
    CHECK(ad.output.find("mAP") != std::string::npos);

    const RunResult lca = run("eval --checkpoint " + ckpt.string() + " --data " + dir.string() +
                              " lca --hops 2 --count 40");
    CHECK(lca.exit_code == 0);
    CHECK(lca.output.find("H@1") != std::string::npos);
}

TEST_CASE("synthetic generation is byte-deterministic in the seed") {
    const fs::path a = fresh_dir("synth_a");
    const fs::path b = fresh_dir("synth_b");
    const fs::path c = fresh_dir("synth_c");
    CHECK(run("synth --out " + a.string() + " --seed 5").exit_code == 0);
    CHECK(run("synth --out " + b.string() + " --seed 5").exit_code == 0);
    CHECK(run("synth --out " + c.string() + " --seed 6").exit_code == 0);
    for (const char* f : {"train.txt", "valid.txt", "test.txt", "relation_kinds.tsv"}) {
        CHECK(slurp(a / f) == slurp(b / f));
        CHECK(!slurp(a / f).empty());
    }
    CHECK(slurp(a / "train.txt") != slurp(c / "train.txt"));
}

TEST_CASE("invalid option values surface as usage errors") {
    const fs::path dir = tree_dir("tree_badopts", 0);
    const fs::path ckpt = fs::temp_directory_path() / "conekg_cli_unused.ckpt";
    CHECK(run("train --data " + dir.string() + " --out " + ckpt.string() +
              " --dim 4 --subspace-dim 9 --epochs 0")
              .exit_code == 1);
    CHECK(run("eval --checkpoint /nonexistent.ckpt --data " + dir.string() + " kgc").exit_code ==
          2);
}
