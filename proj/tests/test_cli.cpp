#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <sys/wait.h>

#include "offrl/io.hpp"

using namespace offrl;
namespace fs = std::filesystem;

namespace {

struct Run {
    int status;
    std::string out;
    std::string err;
};

fs::path workdir() {
    const auto dir = fs::temp_directory_path() / "offrl_cli_tests";
    fs::create_directories(dir);
    return dir;
}

Run run(const std::string& args) {
    const auto err_path = workdir() / "stderr.txt";
    const std::string cmd = std::string(OFFRL_CLI_PATH) + " " + args + " 2>" + err_path.string();
    Run r{};
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    std::size_t got;
    while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.err = read_text(err_path);
    return r;
}

std::string path(const std::string& name) { return (workdir() / name).string(); }

}  // namespace

TEST_CASE("generate, sample, plan and evaluate") {
    REQUIRE(run("gen --family random --param states=3 --param actions=2 --param horizon=4 --seed 3 -o " +
                path("m.json") + " --mu-out " + path("mu.json"))
                .status == 0);
    const Mdp m = load_mdp(path("m.json"));
    CHECK(m.horizon() == 4);

    REQUIRE(run("sample --mdp " + path("m.json") + " --policy " + path("mu.json") + " -n 400 --seed 8 -o " +
                path("d.csv"))
                .status == 0);
    REQUIRE(run("sample --mdp " + path("m.json") + " --policy " + path("mu.json") + " -n 400 --seed 8 --threads 3 -o " +
                path("d.bin"))
                .status == 0);
    CHECK(load_dataset(path("d.csv")) == load_dataset(path("d.bin")));

    const auto plan = run("plan --dataset " + path("d.bin") + " --algorithm apvi --mdp " + path("m.json"));
    REQUIRE(plan.status == 0);
    const Json pj = Json::parse(plan.out);
    CHECK(pj.contains("policy"));
    CHECK(pj["gap"].get<double>() >= -1e-10);

    const auto ope = run("ope --dataset " + path("d.csv") + " --policy " + path("mu.json"));
    REQUIRE(ope.status == 0);
    const double v = Json::parse(ope.out)["v_hat"].get<double>();
    CHECK(v >= 0.0);
    CHECK(v <= 4.0);

    const auto bound = run("bound --mdp " + path("m.json") + " --mu " + path("mu.json") + " -n 1000 --per-cell-csv " +
                           path("cells.csv"));
    REQUIRE(bound.status == 0);
    CHECK(Json::parse(bound.out)["main_term"].get<double>() > 0.0);
    CHECK(read_text(path("cells.csv")).rfind("h,s,a,value", 0) == 0);
}

TEST_CASE("randomized commands refuse to run without a seed") {
    run("gen --family random --param states=3 --param actions=2 --param horizon=2 --seed 1 -o " + path("m2.json") +
        " --mu-out " + path("mu2.json"));
    for (const std::string args :
         {std::string("gen --family random --param states=3"), "sample --mdp " + path("m2.json") + " --policy " + path("mu2.json") + " -n 5"}) {
        const auto r = run(args);
        CHECK(r.status == 2);
        const Json e = Json::parse(r.err);
        CHECK(e["error"]["type"] == "usage");
    }
}

TEST_CASE("malformed inputs yield a parse error document") {
    write_text(path("broken.json"), "{\"H\": 2,\n \"S\": [}\n");
    const auto r = run("bound --mdp " + path("broken.json") + " --mu " + path("broken.json") + " -n 10");
    CHECK(r.status == 1);
    const Json e = Json::parse(r.err);
    CHECK(e["error"]["type"] == "parse");
    CHECK(e["error"]["location"].get<std::string>().rfind("line 2", 0) == 0);

    write_text(path("bad.csv"), "# offrl-dataset num_episodes=1 horizon=1 num_states=1 num_actions=1 seed=0\n"
                                "episode,h,s,a,r,s_next\n0,0,0,0,zzz,0\n");
    const auto c = run("ope --dataset " + path("bad.csv") + " --policy " + path("mu2.json"));
    CHECK(c.status == 1);
    CHECK(Json::parse(c.err)["error"]["location"] == "line 3");
}

TEST_CASE("sweep and perturb") {
    write_text(path("cfg.json"), R"({
        "instance": {"family": "random", "params": {"states": 3, "actions": 2, "horizon": 3, "seed": 4}},
        "algorithms": ["apvi", "vpvi"],
        "n_grid": [100, 400, 1600],
        "num_seeds": 3
    })");
    const std::string base = "sweep --config " + path("cfg.json") + " --no-wall-time --csv " + path("rows.csv");
    CHECK(run(base).status == 2);
    const auto a = run(base + " --seed 5");
    const auto b = run(base + " --seed 5 --parallelism 3");
    REQUIRE(a.status == 0);
    CHECK(a.out == b.out);
    const Json sj = Json::parse(a.out);
    CHECK(sj["rows"].size() == 18);

    const auto p = run("perturb --mdp " + path("m.json") + " --mu " + path("mu.json") + " -n 100000000");
    REQUIRE(p.status == 0);
    const Mdp alt = mdp_from_json(Json::parse(p.out));
    CHECK(alt.horizon() == 4);

    // A rare transition into a worthless state forces negative entries at small n.
    Mdp rare(2, 3, 1);
    rare.initial() = {0.5, 0.0, 0.5};
    rare.transition(0, 0, 0)[1] = 0.999;
    rare.transition(0, 0, 0)[2] = 0.001;
    for (int h = 0; h < 2; ++h) {
        rare.transition(h, 1, 0)[1] = 1.0;
        rare.transition(h, 2, 0)[2] = 1.0;
    }
    rare.transition(1, 0, 0)[0] = 1.0;
    rare.reward(1, 1, 0) = 1.0;
    save_mdp(path("rare.json"), rare);
    const auto low = run("perturb --mdp " + path("rare.json") + " -n 2");
    CHECK(low.status == 1);
    const Json le = Json::parse(low.err);
    CHECK(le["error"]["type"] == "nonnegativity");
    CHECK(le["error"]["next_state"] == 2);
}
