#include <cstdio>
#include <fstream>
#include <sstream>

#include "cwhyst/config.hpp"
#include "cwhyst/io.hpp"
#include "doctest.h"

using namespace cwhyst;

TEST_SUITE("io") {

TEST_CASE("fnv1a64 is stable") {
    CHECK(io::fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(io::fnv1a64("a") == io::fnv1a64("a"));
    CHECK(io::fnv1a64("a") != io::fnv1a64("b"));
}

TEST_CASE("columnar writer emits header and rows") {
    const std::string path = "/tmp/cwhyst_test_columnar.txt";
    io::write_columnar(path, "cwhyst.path.v1", "deadbeef", 42, {"t", "m"},
                       {{0.0, 1.0, 2.0}, {0.5, 0.25, 0.125}});
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line1, line2;
    std::getline(in, line1);
    std::getline(in, line2);
    CHECK(line1 == "# cwhyst.path.v1 config=deadbeef seed=42");
    CHECK(line2 == "# t m");
    int rows = 0;
    double t, m;
    while (in >> t >> m) ++rows;
    CHECK(rows == 3);
    std::remove(path.c_str());
}

TEST_CASE("journal round trip preserves the event sequence") {
    const ModelParams p = make_params(2.0);
    rng::Stream s(4242, 0);
    const ChainTrajectory traj =
        simulate(p, 100, [](double) { return 0.07; }, 0.0, 30.0, 0.0, s);
    REQUIRE(traj.events.size() > 10);
    const std::string path = "/tmp/cwhyst_test_journal.bin";
    io::write_journal(path, traj, 0x1234, 4242);
    const io::JournalData j = io::read_journal(path);
    CHECK(j.N == traj.N);
    CHECK(j.beta == p.beta);
    CHECK(j.config_hash == 0x1234);
    CHECK(j.seed == 4242);
    CHECK(j.t_start == traj.t_start);
    CHECK(j.t_end == traj.t_end);
    CHECK(j.k_start == traj.k_start);
    REQUIRE(j.events.size() == traj.events.size());
    for (std::size_t i = 0; i < j.events.size(); ++i) {
        CHECK(j.events[i].t == traj.events[i].t);
        CHECK(j.events[i].k == traj.events[i].k);
    }
    std::remove(path.c_str());
}

TEST_CASE("journal rejects corrupted headers") {
    const std::string path = "/tmp/cwhyst_test_badjournal.bin";
    std::ofstream out(path, std::ios::binary);
    out << "NOTAJRNL0000000000000000";
    out.close();
    CHECK_THROWS_AS(io::read_journal(path), ConfigError);
    std::remove(path.c_str());
}

TEST_CASE("config parsing applies keys and validates") {
    const std::string text = R"(
# experiment
beta = 2.0
N = [1000, 10000]
kappa = 0.6666666666666666
T = 5.0
replicas = 200
seed = 77
gamma = 0.1
gamma_prime = 0.25
eta = 0.3
format = "csv"
out = "results"
)";
    const ExperimentConfig cfg = parse_config(text);
    CHECK(cfg.beta == 2.0);
    CHECK(cfg.N_list.size() == 2);
    CHECK(cfg.N_list[1] == 10000);
    CHECK(cfg.replicas == 200);
    CHECK(cfg.seed == 77);
    CHECK(cfg.format == "csv");
    CHECK(cfg.out_dir == "results");
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse_config("unknown_key = 3"), ConfigError);
    CHECK_THROWS_AS(parse_config("beta = abc"), ConfigError);
    CHECK_THROWS_AS(parse_config("[section]\nbeta = 2"), ConfigError);
    CHECK_THROWS_AS(parse_config("beta = 0.5"), ConfigError);
    CHECK_THROWS_AS(parse_config("gamma = 0.3\ngamma_prime = 0.2"), ConfigError);
    CHECK_THROWS_AS(load_config("/tmp/definitely_missing_cwhyst.toml"), ConfigError);
}

TEST_CASE("config hash depends on content, not formatting") {
    const ExperimentConfig a = parse_config("beta = 2.0\nreplicas = 500");
    const ExperimentConfig b = parse_config("replicas = 500   # comment\n\nbeta = 2.00");
    const ExperimentConfig c = parse_config("replicas = 501\nbeta = 2.0");
    CHECK(a.hash() == b.hash());
    CHECK(a.hash() != c.hash());
    CHECK(a.hash_hex().size() == 16);
}

}  // TEST_SUITE
