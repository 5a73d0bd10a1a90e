#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "spindrift/config_io.hpp"

using namespace spindrift;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, sep)) out.push_back(tok);
    return out;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) rows.push_back(split(line, ','));
    return rows;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run_binary(const std::string& args) {
    const std::string cmd = std::string(SPINDRIFT_CLI_BINARY) + " " + args;
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

// A cheap but complete run: coarse grid, five implicit steps.
const char* kTinyConfig = R"({
  "device": {"grid_points": 30, "dt": 0.1},
  "solver": {"max_time": 0.5},
  "run": {"snapshot_every": 2, "out": "OUT"}
})";

std::string tiny_config(const std::string& out_dir) {
    std::string text = kTinyConfig;
    text.replace(text.find("OUT"), 3, out_dir);
    return text;
}

}  // namespace

TEST_CASE("an empty document parses to the built-in defaults") {
    const ParsedRun pr = parse_config_text("{}");
    const ParsedRun def = default_run();
    CHECK(pr.spec.preset == Preset::Steady);
    CHECK(pr.spec.mode == PotentialMode::SelfConsistent);
    CHECK(pr.spec.out_dir == "out");
    CHECK(pr.spec.snapshot_every == 100);
    CHECK(pr.device.grid_points == def.device.grid_points);
    CHECK(pr.device.U == def.device.U);
    CHECK(pr.settings.dt == def.settings.dt);
    CHECK(pr.spec.p_sweep.empty());
}

TEST_CASE("device and solver overrides land on top of the preset") {
    const ParsedRun pr = parse_config_text(R"({
        "run": {"preset": "small-device", "mode": "linear-potential"},
        "device": {"grid_points": 90, "U": 0.5, "polarization": 0.7},
        "solver": {"steady_tol": 1e-9, "max_time": 40}
    })");
    CHECK(pr.spec.preset == Preset::SmallDevice);
    CHECK(pr.spec.mode == PotentialMode::LinearPotential);
    CHECK(pr.device.length == doctest::Approx(0.4e-6));  // small-device base
    CHECK(pr.device.grid_points == 90);
    CHECK(pr.device.U == 0.5);
    CHECK(pr.device.layers[1].p == doctest::Approx(0.7));
    CHECK(pr.settings.steady_tol == 1e-9);
    CHECK(pr.settings.max_time == 40.0);
}

TEST_CASE("the zero-bias preset forces U = 0 unless overridden") {
    CHECK(parse_config_text(R"({"run": {"preset": "transient-entropy"}})")
              .device.U == 0.0);
    CHECK(parse_config_text(
              R"({"run": {"preset": "transient-entropy"}, "device": {"U": 0.2}})")
              .device.U == 0.2);
}

TEST_CASE("config errors name the offending key or location") {
    auto message_of = [](const std::string& text) {
        try {
            parse_config_text(text);
        } catch (const std::invalid_argument& e) {
            return std::string(e.what());
        }
        return std::string("(no error)");
    };
    CHECK(message_of(R"({"devise": {}})").find("devise") != std::string::npos);
    CHECK(message_of(R"({"device": {"grid_pts": 10}})").find("grid_pts") !=
          std::string::npos);
    CHECK(message_of(R"({"device": {"grid_points": "many"}})").find("grid_points") !=
          std::string::npos);
    CHECK(message_of("{\"device\": ").find("config:") != std::string::npos);
    CHECK(message_of(R"({"run": {"preset": "warp"}})").find("warp") !=
          std::string::npos);
    CHECK(message_of(R"({"run": {"mode": "psychic"}})").find("psychic") !=
          std::string::npos);
    CHECK(message_of(R"({"run": {"p": [0.2, 1.0]}})").find("p") != std::string::npos);
    CHECK(message_of(R"({"run": {"snapshot_every": 0}})").find("snapshot_every") !=
          std::string::npos);
    CHECK(message_of(R"({"device": {"polarization": 1.0}})").find("polarization") !=
          std::string::npos);
    CHECK(message_of(R"({"device": {"layers": 3}})").find("layers") !=
          std::string::npos);
    CHECK(message_of(R"([1, 2])").find("object") != std::string::npos);
    // Semantic validation still runs after parsing.
    CHECK(message_of(R"({"device": {"dt": -1}})") != "(no error)");
}

TEST_CASE("preset and mode names round-trip") {
    for (Preset p : {Preset::Steady, Preset::TransientEntropy, Preset::SmallDevice,
                     Preset::Sweep}) {
        CHECK(preset_from_name(preset_name(p)) == p);
    }
    for (PotentialMode m :
         {PotentialMode::SelfConsistent, PotentialMode::LinearPotential}) {
        CHECK(mode_from_name(mode_name(m)) == m);
    }
    CHECK_THROWS_AS(preset_from_name("bogus"), std::invalid_argument);
    CHECK_THROWS_AS(mode_from_name("bogus"), std::invalid_argument);
}

TEST_CASE("profile output is physical and divides back to solver units") {
    DeviceConfig cfg = default_device();
    cfg.grid_points = 30;
    const SolverContext ctx = make_context(cfg);
    StateField s = make_initial_state(ctx);
    s.n[10] = Vec3(0.0, 0.0, 0.02);
    const PotentialField V = make_linear_potential(ctx);
    const fs::path dir = fresh_dir("spindrift_profile_test");
    const std::string path = (dir / "profile.csv").string();
    write_profile_csv(path, s, V, ctx);

    const auto rows = read_csv(path);
    REQUIRE(static_cast<int>(rows.size()) == ctx.grid.nodes() + 1);
    CHECK(rows[0][0] == "x_um");
    REQUIRE(rows[0].size() == 8);
    CHECK(std::stod(rows[1][0]) == 0.0);
    CHECK(std::stod(rows.back()[0]) == doctest::Approx(1.2));  // um
    for (int i = 0; i < ctx.grid.nodes(); ++i) {
        const auto& row = rows[i + 1];
        CHECK(std::stod(row[0]) / (ctx.scal.length * 1e6) ==
              doctest::Approx(ctx.grid.node_x[i]).epsilon(1e-12));
        CHECK(std::stod(row[1]) / ctx.scal.density ==
              doctest::Approx(s.n0[i]).epsilon(1e-12));
        CHECK(std::stod(row[4]) / ctx.scal.density ==
              doctest::Approx(s.n[i](2)).epsilon(1e-12));
        CHECK(std::stod(row[7]) / ctx.scal.potential ==
              doctest::Approx(V.v[i]).epsilon(1e-12));
        // n_plus + n_minus recombines to n0 in physical units.
        CHECK(std::stod(row[5]) + std::stod(row[6]) ==
              doctest::Approx(std::stod(row[1])).epsilon(1e-12));
    }

    // Identical input produces identical bytes.
    const std::string path2 = (dir / "profile2.csv").string();
    write_profile_csv(path2, s, V, ctx);
    CHECK(read_file(path) == read_file(path2));
}

TEST_CASE("series output keeps picosecond time and marks undefined HQ") {
    std::vector<DiagnosticsRecord> records(2);
    records[0].t = 0.5;
    records[0].H0 = 1.25;
    records[0].HQ = 1.25;
    records[0].HQ_defined = true;
    records[0].gummel_iters = 3;
    records[1].t = 1.0;
    records[1].H0 = 0.75;
    records[1].HQ = std::numeric_limits<double>::quiet_NaN();
    records[1].HQ_defined = false;
    ScalingSet scal;
    scal.time = 2e-12;
    const fs::path dir = fresh_dir("spindrift_series_test");
    const std::string path = (dir / "series.csv").string();
    write_series_csv(path, records, scal);
    const auto rows = read_csv(path);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0][0] == "t_ps");
    REQUIRE(rows[0].size() == 10);
    CHECK(std::stod(rows[1][0]) == doctest::Approx(1.0));  // 0.5 * 2 ps
    CHECK(std::stod(rows[2][0]) == doctest::Approx(2.0));
    CHECK(std::stod(rows[1][1]) == doctest::Approx(1.25));
    CHECK(rows[2][2] == "nan");
    CHECK(rows[1][9] == "3");
}

TEST_CASE("a full run writes snapshots, series and manifest deterministically") {
    const fs::path base = fresh_dir("spindrift_run_test");
    const std::string out1 = (base / "a").string();
    const std::string out2 = (base / "b").string();

    const ParsedRun pr1 = parse_config_text(tiny_config(out1));
    REQUIRE(spindrift::run(pr1) == 0);
    const ParsedRun pr2 = parse_config_text(tiny_config(out2));
    REQUIRE(spindrift::run(pr2) == 0);

    // Five steps at cadence two: snapshots at 2 and 4, final state at 5.
    for (const char* name : {"profile_t0.csv", "profile_t2.csv", "profile_t4.csv",
                             "profile_t5.csv", "series.csv", "run_manifest.json"}) {
        CHECK(fs::exists(fs::path(out1) / name));
    }
    CHECK(!fs::exists(fs::path(out1) / "profile_t3.csv"));

    for (const char* name :
         {"profile_t0.csv", "profile_t5.csv", "series.csv"}) {
        CHECK(read_file((fs::path(out1) / name).string()) ==
              read_file((fs::path(out2) / name).string()));
    }

    const auto series = read_csv((fs::path(out1) / "series.csv").string());
    REQUIRE(series.size() == 6);  // header + five per-step records

    nlohmann::json manifest =
        nlohmann::json::parse(read_file((fs::path(out1) / "run_manifest.json").string()));
    CHECK(manifest.at("preset") == "steady");
    CHECK(manifest.at("mode") == "self-consistent");
    CHECK(manifest.at("device").at("grid_points") == 30);
    CHECK(manifest.at("solver").at("max_time") == 0.5);
    CHECK(manifest.at("scaling").at("density_per_m3").get<double>() ==
          doctest::Approx(1e21));
    CHECK(manifest.at("outputs").size() == 5);
}

TEST_CASE("sweep runs write one subdirectory per polarization") {
    const fs::path base = fresh_dir("spindrift_sweep_test");
    const std::string out = (base / "sweep").string();
    std::string text = R"({
      "device": {"grid_points": 30, "dt": 0.1},
      "solver": {"max_time": 0.3},
      "run": {"preset": "sweep", "p": [0.0, 0.3], "out": "OUT"}
    })";
    text.replace(text.find("OUT"), 3, out);
    const ParsedRun pr = parse_config_text(text);
    REQUIRE(spindrift::run(pr) == 0);
    CHECK(fs::exists(fs::path(out) / "p_0" / "series.csv"));
    CHECK(fs::exists(fs::path(out) / "p_0.3" / "series.csv"));
    nlohmann::json manifest = nlohmann::json::parse(
        read_file((fs::path(out) / "p_0.3" / "run_manifest.json").string()));
    CHECK(manifest.at("device").at("layers")[1].at("p").get<double>() ==
          doctest::Approx(0.3));
}

TEST_CASE("the command-line binary wires flags through to a full run") {
    const fs::path base = fresh_dir("spindrift_cli_bin_test");
    const std::string out = (base / "run").string();
    std::ostringstream args;
    args << "--preset steady --grid-points 30 --dt-over-tau 0.1 --max-time-ps 0.5 "
         << "--snapshot-every 3 --out " << out << " > /dev/null";
    REQUIRE(run_binary(args.str()) == 0);
    CHECK(fs::exists(fs::path(out) / "profile_t3.csv"));
    CHECK(fs::exists(fs::path(out) / "profile_t5.csv"));
    CHECK(fs::exists(fs::path(out) / "series.csv"));

    // A config file plus flag overrides: the flag wins.
    const std::string cfg_path = (base / "cfg.json").string();
    std::ofstream(cfg_path) << tiny_config((base / "cfg_out").string());
    std::ostringstream args2;
    const std::string out2 = (base / "run2").string();
    args2 << "--config " << cfg_path << " --out " << out2 << " > /dev/null";
    REQUIRE(run_binary(args2.str()) == 0);
    CHECK(fs::exists(fs::path(out2) / "series.csv"));
    CHECK(!fs::exists(base / "cfg_out"));

    CHECK(run_binary("--help > /dev/null") == 0);
    CHECK(run_binary("--no-such-flag > /dev/null 2>&1") != 0);
    CHECK(run_binary("--preset bogus > /dev/null 2>&1") != 0);
}
