#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wavelab/pipeline.hpp"

using namespace wavelab;
namespace fs = std::filesystem;

namespace {

RunConfig small_config() {
    RunConfig cfg;
    cfg.n_r = 16;
    cfg.n_theta = 24;
    cfg.n_t = 64;
    cfg.corpus_size = 6;
    cfg.s_count = 12;
    cfg.family_count = 5;
    cfg.max_iter = 30;
    cfg.noise_levels = {0.005, 0.02};
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

}  // namespace

TEST_CASE("config echo round-trips") {
    RunConfig cfg = small_config();
    cfg.metric_name = "conformal-poly";
    cfg.metric_params = {1.0, 0.1, 0.05};
    cfg.seed = 99;
    const std::string echo = config_echo(cfg);
    const RunConfig back = parse_config_string(echo);
    CHECK(config_echo(back) == echo);
    CHECK(config_hash(back) == config_hash(cfg));
}

TEST_CASE("parse errors name the offending line") {
    CHECK_THROWS_WITH_AS(parse_config_string("[mesh]\nbogus = 1\n"),
                         doctest::Contains("line 2"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_string("[nope]\n"), doctest::Contains("unknown section"),
                         ConfigError);
    CHECK_THROWS_AS(parse_config_string("r0 = 1\n"), ConfigError);       // outside section
    CHECK_THROWS_AS(parse_config_string("[mesh]\nr0 = abc\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_string("[mesh]\nr0 1\n"), ConfigError);  // no '='
}

TEST_CASE("validation names the violated condition") {
    RunConfig cfg = small_config();
    cfg.T = 1.2;  // below T* = 1.5
    CHECK_THROWS_AS(validate_config(cfg), FeasibilityError);
    cfg = small_config();
    cfg.gamma_rule = "sideways";
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
    cfg = small_config();
    cfg.family_count = 3;
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
    CHECK_NOTHROW(validate_config(small_config()));
}

TEST_CASE("check-weight reports the Example-1 constants") {
    const RunConfig cfg = small_config();
    const fs::path out = "cli_out_checkweight";
    fs::remove_all(out);
    CHECK(run_command("check-weight", cfg, out.string()) == 0);

    nlohmann::json j = nlohmann::json::parse(slurp(out / "check-weight.json"));
    CHECK(j["schema"] == "wavelab-report-v1");
    CHECK(j.contains("config_hash"));
    CHECK(j["admissibility"]["admissible"].get<bool>());
    CHECK(j["constants"]["t_star"].get<double>() == doctest::Approx(1.5).epsilon(1e-10));
    CHECK(j["constants"]["m_frak"].get<double>() == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(fs::exists(out / "constants.csv"));
}

TEST_CASE("cli entry point exit codes") {
    CHECK(cli_main({}) == 2);
    CHECK(cli_main({"check-weight"}) == 2);  // missing --config
    CHECK(cli_main({"check-weight", "--config", "no_such_file.ini"}) == 2);

    write_file("cli_bad.ini", "[mesh]\nwhatever = 3\n");
    CHECK(cli_main({"check-weight", "--config", "cli_bad.ini"}) == 2);

    write_file("cli_infeasible.ini", "[time]\nT = 1.2\n");
    CHECK(cli_main({"check-weight", "--config", "cli_infeasible.ini"}) == 3);

    write_file("cli_ok.ini",
               "[mesh]\nn_r = 16\nn_theta = 24\n[time]\nn_t = 64\n[run]\nout_dir = "
               "cli_out_entry\n");
    CHECK(cli_main({"check-weight", "--config", "cli_ok.ini"}) == 0);
    CHECK(cli_main({"check-weight", "--config", "cli_ok.ini", "--out", "cli_out_entry2"}) ==
          0);
    CHECK(fs::exists("cli_out_entry2/check-weight.json"));
}

TEST_CASE("identical config and seed give byte-identical CSVs") {
    const RunConfig cfg = small_config();
    const fs::path out_a = "cli_out_a", out_b = "cli_out_b";
    fs::remove_all(out_a);
    fs::remove_all(out_b);

    for (const std::string cmd : {"verify-carleman", "reconstruct"}) {
        CHECK(run_command(cmd, cfg, out_a.string()) == 0);
        CHECK(run_command(cmd, cfg, out_b.string()) == 0);
    }
    int compared = 0;
    for (const auto& entry : fs::directory_iterator(out_a)) {
        if (entry.path().extension() != ".csv") continue;
        const fs::path twin = out_b / entry.path().filename();
        REQUIRE(fs::exists(twin));
        CHECK(slurp(entry.path()) == slurp(twin));
        ++compared;
    }
    CHECK(compared >= 4);
}

TEST_CASE("a different seed changes the noisy outputs") {
    RunConfig cfg = small_config();
    const fs::path out_a = "cli_out_seed_a", out_b = "cli_out_seed_b";
    fs::remove_all(out_a);
    fs::remove_all(out_b);
    CHECK(run_command("reconstruct", cfg, out_a.string()) == 0);
    cfg.seed = 777;
    CHECK(run_command("reconstruct", cfg, out_b.string()) == 0);
    CHECK(slurp(out_a / "noise_sweep.csv") != slurp(out_b / "noise_sweep.csv"));
}
