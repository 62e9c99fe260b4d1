// vlv: value-learning-from-videos laboratory. Generates worlds and video
// tours, trains the inverse/Q/baseline models, and evaluates the hierarchical
// ObjectGoal policy. See README.md for the pipeline walkthrough.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vlv/cli.hpp"

namespace {

int run(int argc, char** argv) {
  CLI::App app{"value learning from videos: desk-scale lab"};
  app.require_subcommand(1);

  std::uint64_t seed = 7;
  if (const char* env = std::getenv("VLV_SEED")) seed = std::strtoull(env, nullptr, 10);
  std::string out_dir = "out";
  std::string config_path;
  std::vector<std::string> overrides;
  int jobs = 1;
  app.add_option("--seed", seed, "master seed (default: $VLV_SEED or 7)");
  app.add_option("--out", out_dir, "artifact directory (default: out)");
  app.add_option("--config", config_path, "flat key = value config file");
  app.add_option("--set", overrides, "config override, key=value (repeatable)");
  app.add_option("--jobs", jobs, "worker threads for episode evaluation");

  auto* gen_worlds = app.add_subcommand("gen-worlds", "generate train/video/test worlds");
  auto* collect = app.add_subcommand("collect-interaction", "random-action interaction data");
  auto* gen_videos = app.add_subcommand("gen-videos", "action-free video tours");
  auto* train_inverse = app.add_subcommand("train-inverse", "fit the one-step inverse model");
  auto* pseudo = app.add_subcommand("pseudo-label", "impute video actions with the inverse model");
  auto* label = app.add_subcommand("label-rewards", "detector rewards and quadruples");
  auto* train_q = app.add_subcommand("train-q", "Q-learning on the quadruples");
  auto* baseline = app.add_subcommand("train-baseline", "train td0|mc|bc|strong|joint");
  std::string baseline_kind;
  baseline->add_option("kind", baseline_kind, "td0|mc|bc|strong|joint")->required();
  auto* calibrate = app.add_subcommand("calibrate-stop", "per-category stopping distances");
  auto* eval_cmd = app.add_subcommand("eval", "ObjectGoal suite on the test worlds");
  auto* ablate = app.add_subcommand("ablate", "single-stage ablation rows");
  auto* branching = app.add_subcommand("branching", "branching-environment experiment");
  auto* value_map = app.add_subcommand("value-map", "PGM map of predicted values");
  std::string vm_world, vm_model, vm_category, vm_out = "value_map.pgm";
  value_map->add_option("--world", vm_world, "world file")->required();
  value_map->add_option("--model", vm_model, "model file")->required();
  value_map->add_option("--category", vm_category, "bed|chair|couch|dining_table|toilet")
      ->required();
  value_map->add_option("--out-file", vm_out, "output PGM path");
  auto* pipeline = app.add_subcommand("pipeline", "run every stage in order");
  bool with_ablations = false;
  pipeline->add_flag("--with-ablations", with_ablations, "also run the ablation suite");

  app.parse(argc, argv);

  vlv::cli::Driver drv;
  if (!config_path.empty()) drv.cfg.load_file(config_path);
  drv.cfg.set("seed", std::to_string(seed));
  drv.cfg.set("eval.jobs", std::to_string(jobs));
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw vlv::ValidationError("--set expects key=value, got '" + kv + "'");
    drv.cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  drv.out = out_dir;

  if (gen_worlds->parsed()) vlv::cli::cmd_gen_worlds(drv);
  if (collect->parsed()) vlv::cli::cmd_collect_interaction(drv);
  if (gen_videos->parsed()) vlv::cli::cmd_gen_videos(drv);
  if (train_inverse->parsed()) vlv::cli::cmd_train_inverse(drv);
  if (pseudo->parsed()) vlv::cli::cmd_pseudo_label(drv);
  if (label->parsed()) vlv::cli::cmd_label_rewards(drv);
  if (train_q->parsed()) vlv::cli::cmd_train_q(drv);
  if (baseline->parsed()) vlv::cli::cmd_train_baseline(drv, baseline_kind);
  if (calibrate->parsed()) vlv::cli::cmd_calibrate_stop(drv);
  if (eval_cmd->parsed()) vlv::cli::cmd_eval(drv);
  if (ablate->parsed()) vlv::cli::cmd_ablate(drv);
  if (branching->parsed()) vlv::cli::cmd_branching(drv);
  if (value_map->parsed()) vlv::cli::cmd_value_map(drv, vm_world, vm_model, vm_category, vm_out);
  if (pipeline->parsed()) vlv::cli::cmd_pipeline(drv, with_ablations);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;  // --help
    std::cerr << e.what() << "\n\nRun with --help for usage.\n";
    return 2;
  } catch (const vlv::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const vlv::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const vlv::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
