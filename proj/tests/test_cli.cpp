#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "catch_amalgamated.hpp"

#include "support/oracles.hpp"
#include "vlv/cli.hpp"

using namespace vlv;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = "./vlv " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("vlv_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("cli exit codes") {
  REQUIRE(fs::exists("./vlv"));
  SECTION("unknown flag exits 2") { CHECK(run_cli("--frobnicate") == 2); }
  SECTION("unknown subcommand exits 2") { CHECK(run_cli("launch-rockets") == 2); }
  SECTION("missing input file exits 3") {
    const fs::path dir = temp_dir("missing");
    CHECK(run_cli("train-q --out " + dir.string()) == 3);
  }
  SECTION("bad baseline name exits 2") {
    const fs::path dir = temp_dir("badbase");
    CHECK(run_cli("train-baseline dqn --out " + dir.string()) == 2);
  }
  SECTION("help exits 0") { CHECK(run_cli("--help") == 0); }
}

TEST_CASE("config files parse flat key = value lines") {
  const fs::path dir = temp_dir("config");
  {
    std::ofstream f(dir / "cfg.txt");
    f << "# comment line\n"
      << "q.iterations = 123\n"
      << "videos.noise_p=0.5   # trailing comment\n"
      << "\n";
  }
  cli::Config cfg;
  cfg.load_file((dir / "cfg.txt").string());
  CHECK(cfg.get_int("q.iterations") == 123);
  CHECK(cfg.get_double("videos.noise_p") == 0.5);
  {
    std::ofstream f(dir / "bad.txt");
    f << "this line has no equals\n";
  }
  cli::Config bad;
  CHECK_THROWS_AS(bad.load_file((dir / "bad.txt").string()), FormatError);
  CHECK_THROWS_AS(cfg.get("no.such.key"), ValidationError);
}

TEST_CASE("pipeline driver refuses inputs with mismatched config hashes") {
  const fs::path dir = temp_dir("hash");
  cli::Driver drv;
  drv.out = dir;
  drv.verify = true;
  const GridWorld w = generate_world(1, {24, 24, 3, 4, 8, 1.0});
  fs::create_directories(dir / "worlds");
  const std::string path = (dir / "worlds" / "train_00.txt").string();
  save_world(w, path, 0x1111);
  drv.note_output(path, 0x2222);  // simulate a stale artifact
  CHECK_THROWS_AS(drv.load_world_split("train", 1), ValidationError);
  drv.note_output(path, 0x1111);
  CHECK(drv.load_world_split("train", 1).size() == 1);
  drv.verify = false;  // standalone commands skip the check
  drv.note_output(path, 0x2222);
  CHECK(drv.load_world_split("train", 1).size() == 1);
}

TEST_CASE("value maps render as valid PGM with the flat-map guard") {
  GridWorld w = oracles::empty_room(14, 14);
  oracles::place_object(w, Category::DiningTable, {{7, 10}});
  SECTION("all-zero model maps free cells to mid-gray") {
    Mlp zero({kObsDim, 8, kNumMoveActions * kNumCategories}, 1);
    for (auto& layer : zero.weights) std::fill(layer.begin(), layer.end(), 0.0);
    for (auto& layer : zero.biases) std::fill(layer.begin(), layer.end(), 0.0);
    const std::string pgm_text = cli::value_map_pgm(w, zero, Category::DiningTable, 0x9);
    const auto pgm = oracles::read_pgm(pgm_text);
    CHECK(pgm.width == w.width);
    CHECK(pgm.height == w.height);
    CHECK(pgm.maxval == 255);
    for (int r = 0; r < w.height; ++r)
      for (int c = 0; c < w.width; ++c) {
        const int px = pgm.pixels[static_cast<size_t>(r) * w.width + c];
        if (w.is_free(r, c))
          CHECK(px == 128);
        else
          CHECK(px == 0);
      }
  }
}

TEST_CASE("ablation rows each flip exactly one stage") {
  const auto rows = ablation_rows();
  REQUIRE(rows.size() == 6);
  for (const auto& [name, toggle] : rows) {
    CAPTURE(name);
    CHECK(toggle.count() == 1);
  }
  CHECK(AblationToggle{}.count() == 0);
}

TEST_CASE("stop config files round-trip") {
  const fs::path dir = temp_dir("stop");
  std::map<std::string, StopConfig> stops;
  StopConfig sc;
  sc.tau = 0.75;
  sc.d_c = {0.5, 1.0, 1.5, 2.0, 2.5};
  stops["vlv"] = sc;
  const std::string path = (dir / "stop.txt").string();
  cli::save_stop_configs(stops, path, 0x42);
  const auto [loaded, h] = cli::load_stop_configs(path);
  CHECK(h == 0x42);
  REQUIRE(loaded.count("vlv") == 1);
  CHECK(loaded.at("vlv").tau == 0.75);
  CHECK(loaded.at("vlv").d_c == sc.d_c);
}
