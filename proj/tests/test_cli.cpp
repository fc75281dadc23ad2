#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#ifndef AMP_CLI_PATH
#error "AMP_CLI_PATH must point at the amp binary"
#endif

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;  // stdout + stderr
};

CliResult run_shell(const std::string& cmd) {
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    CliResult r;
    std::array<char, 4096> buf;
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    int status = pclose(p);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

CliResult run_cli(const std::string& args) {
    return run_shell(std::string(AMP_CLI_PATH) + " " + args + " 2>&1");
}

}  // namespace

TEST_CASE("zero-step train writes a manifest and empty metrics, exit 0") {
    std::string dir = "/tmp/amp_cli_run0";
    fs::remove_all(dir);
    auto r = run_cli("train --task permutation --mode ia --preset desk --seed 1 --steps 0 --out " +
                     dir);
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(dir + "/manifest.txt"));
    CHECK(fs::exists(dir + "/x_final.ckpt"));
    std::ifstream m(dir + "/metrics.csv");
    std::string header, extra;
    std::getline(m, header);
    CHECK(header.rfind("step,mode,task", 0) == 0);
    CHECK(!std::getline(m, extra));  // no data rows
}

TEST_CASE("unknown task exits 2 and lists the tasks") {
    auto r = run_cli("train --task nosuchtask --steps 0");
    CHECK(r.exit_code == 2);
    CHECK(r.out.find("permutation") != std::string::npos);
    CHECK(r.out.find("shortestpath") != std::string::npos);
}

TEST_CASE("config file drives the run and flags override it") {
    std::string dir = "/tmp/amp_cli_cfg";
    fs::remove_all(dir);
    std::string cfg_path = "/tmp/amp_cli_cfg.txt";
    {
        std::ofstream os(cfg_path);
        os << "# comment line\nsteps = 7\nmax_difficulty = 9\n";
    }
    auto r = run_cli("train --task wildcard --mode supervised --preset desk --seed 4 --steps 0"
                     " --config " + cfg_path + " --out " + dir);
    CHECK(r.exit_code == 0);  // --steps 0 overrides the file's 7
    std::ifstream c(dir + "/config.txt");
    std::string text((std::istreambuf_iterator<char>(c)), std::istreambuf_iterator<char>());
    CHECK(text.find("steps = 0") != std::string::npos);
    CHECK(text.find("max_difficulty = 9") != std::string::npos);
    CHECK(text.find("task = wildcard") != std::string::npos);
}

TEST_CASE("union-find difficulty rounds to a perfect square, noted in the manifest") {
    std::string dir = "/tmp/amp_cli_uf";
    fs::remove_all(dir);
    auto r = run_cli("train --task unionfind --preset desk --steps 0 --max-difficulty 10 --out " +
                     dir);
    CHECK(r.exit_code == 0);
    std::ifstream m(dir + "/manifest.txt");
    std::string text((std::istreambuf_iterator<char>(m)), std::istreambuf_iterator<char>());
    CHECK(text.find("rounded to 9") != std::string::npos);
}

TEST_CASE("oracle-check passes on every task and is byte-identical under a seed") {
    for (const char* task : {"permutation", "assignments", "unionfind", "wildcard",
                             "shortestpath"}) {
        std::string args = std::string("oracle-check --task ") + task +
                           " --n 8 --episodes 40 --seed 11";
        auto a = run_cli(args);
        CHECK(a.exit_code == 0);
        CHECK(a.out.find("rate=1") != std::string::npos);
        auto b = run_cli(args);
        CHECK(a.out == b.out);
    }
}

TEST_CASE("oracle-check with zero episodes warns and passes vacuously") {
    auto r = run_cli("oracle-check --task permutation --episodes 0");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("vacuous") != std::string::npos);
}

TEST_CASE("dynamics at p=1 is perfect at every depth; p=0 dies past the primitives") {
    auto perfect = run_cli("dynamics --task permutation --accuracy 1 --depths 3 --trials 60"
                           " --seed 5");
    CHECK(perfect.exit_code == 0);
    std::istringstream is(perfect.out);
    std::string line;
    std::getline(is, line);
    CHECK(line == "depth,trials,accuracy");
    int rows = 0;
    while (std::getline(is, line)) {
        CHECK(line.substr(line.rfind(',') + 1) == "1");
        ++rows;
    }
    CHECK(rows >= 3);

    // depth-1 permutation questions decompose into primitive lookups only, so
    // they survive p=0; anything deeper requires an X subcall and dies
    auto dead = run_cli("dynamics --task permutation --accuracy 0 --depths 2 --trials 60"
                        " --seed 5");
    CHECK(dead.exit_code == 0);
    CHECK(dead.out.find("1,60,1") != std::string::npos);
    CHECK(dead.out.find("2,60,0") != std::string::npos);
}

TEST_CASE("dynamics output is byte-identical across invocations") {
    std::string args = "dynamics --task unionfind --accuracy 0.8 --depths 2 --trials 40 --seed 9";
    auto a = run_cli(args);
    auto b = run_cli(args);
    CHECK(a.exit_code == 0);
    CHECK(a.out == b.out);
}

TEST_CASE("report aggregates paired runs and refuses bad input") {
    std::string d1 = "/tmp/amp_cli_rep_ia", d2 = "/tmp/amp_cli_rep_sup";
    fs::remove_all(d1);
    fs::remove_all(d2);
    CHECK(run_cli("train --task assignments --mode ia --preset desk --seed 2 --steps 0 --out " +
                  d1).exit_code == 0);
    CHECK(run_cli("train --task assignments --mode supervised --preset desk --seed 2 --steps 0"
                  " --out " + d2).exit_code == 0);
    auto rep = run_cli("report --runs " + d1 + " " + d2);
    CHECK(rep.exit_code == 0);
    CHECK(rep.out.find("# accuracy series") != std::string::npos);
    CHECK(rep.out.find("# depth-split series") != std::string::npos);
    CHECK(rep.out.find("# oracle ledger summary") != std::string::npos);
    CHECK(rep.out.find(d1 + ",assignments,ia") != std::string::npos);

    // empty directory -> usage error
    std::string empty = "/tmp/amp_cli_rep_empty";
    fs::remove_all(empty);
    fs::create_directories(empty);
    CHECK(run_cli("report --runs " + empty).exit_code == 2);

    // mismatched tasks -> refused
    std::string d3 = "/tmp/amp_cli_rep_other";
    fs::remove_all(d3);
    CHECK(run_cli("train --task wildcard --preset desk --steps 0 --out " + d3).exit_code == 0);
    auto mixed = run_cli("report --runs " + d1 + " " + d3);
    CHECK(mixed.exit_code == 2);
    CHECK(mixed.out.find("different tasks") != std::string::npos);
}

TEST_CASE("AMP_SEED supplies the default seed") {
    std::string base = " oracle-check --task permutation --n 8 --episodes 20";
    auto with_env = run_shell(std::string("AMP_SEED=77 ") + AMP_CLI_PATH + base + " 2>&1");
    auto with_flag = run_cli(base + " --seed 77");
    CHECK(with_env.exit_code == 0);
    CHECK(with_env.out == with_flag.out);
}
