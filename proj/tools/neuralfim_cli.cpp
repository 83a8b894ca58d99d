#include "neuralfim/config.hpp"
#include "neuralfim/data.hpp"
#include "neuralfim/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nfim;

namespace {

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string out_dir;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

config::RunConfig resolve(const CommonOptions& opts) {
  try {
    json doc = config::load_document(opts.config_file.empty() ? std::nullopt
                                                              : std::optional<std::string>(opts.config_file));
    for (const auto& o : opts.overrides) config::apply_override(doc, o);
    return config::from_json(doc);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

std::string out_dir_for(const CommonOptions& opts, const config::RunConfig& cfg) {
  return opts.out_dir.empty() ? cfg.output_dir : opts.out_dir;
}

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("-c,--config", opts.config_file, "JSON config file");
  cmd->add_option("-s,--set", opts.overrides, "Override a config key, e.g. --set diffusion.t=10");
  cmd->add_option("-o,--out", opts.out_dir, "Output directory (default: output_dir from config)");
}

int fail(const std::string& category, const std::string& message) {
  std::string flat = message;
  for (char& ch : flat)
    if (ch == '\n') ch = ' ';
  std::cerr << "error: " << category << ": " << flat << '\n';
  return 1;
}

void write_gen_outputs(const PointCloud& pc, const std::string& out_csv, json meta) {
  const fs::path csv_path(out_csv);
  if (csv_path.has_parent_path()) fs::create_directories(csv_path.parent_path());
  data::save_csv(out_csv, pc);
  meta["rows"] = pc.size();
  meta["dim"] = pc.dim();
  meta["has_labels"] = pc.labels.has_value();
  meta["intrinsic_columns"] = pc.intrinsic ? pc.intrinsic->cols() : 0;
  fs::path meta_path = csv_path;
  meta_path.replace_extension(".json");
  pipeline::write_json(meta_path.string(), meta);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"neuralfim: diffusion geometry, neural Fisher information metrics and geodesics"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "Generate a synthetic point cloud");
  gen->require_subcommand(1);
  std::string gen_out = "points.csv";
  std::uint64_t gen_seed = 7;

  auto* tree = gen->add_subcommand("tree", "Branching tree");
  int branches = 5, per_branch = 60, dim = 10;
  double tree_noise = 0.05;
  tree->add_option("--branches", branches, "Number of branches")->capture_default_str()->check(CLI::PositiveNumber);
  tree->add_option("--per-branch", per_branch, "Points per branch")->capture_default_str()->check(CLI::Range(2, 1 << 20));
  tree->add_option("--dim", dim, "Ambient dimension")->capture_default_str()->check(CLI::PositiveNumber);
  tree->add_option("--noise", tree_noise, "Gaussian noise standard deviation")->capture_default_str()->check(CLI::NonNegativeNumber);
  tree->add_option("--seed", gen_seed, "Random seed")->capture_default_str();
  tree->add_option("-o,--out", gen_out, "Output CSV (metadata JSON written alongside)");

  auto* roll = gen->add_subcommand("swiss-roll", "Swiss roll with intrinsic coordinates");
  int roll_n = 400;
  double roll_noise = 0.0;
  roll->add_option("--n", roll_n, "Number of points")->capture_default_str()->check(CLI::PositiveNumber);
  roll->add_option("--noise", roll_noise, "Gaussian noise standard deviation")->capture_default_str()->check(CLI::NonNegativeNumber);
  roll->add_option("--seed", gen_seed, "Random seed")->capture_default_str();
  roll->add_option("-o,--out", gen_out, "Output CSV (metadata JSON written alongside)");

  CommonOptions pipe_opts, geo_opts, scan_opts, sens_opts;
  std::string preset;
  auto* pipe = app.add_subcommand("pipeline", "diffuse, embed, train and evaluate the FIM field");
  add_common(pipe, pipe_opts);
  auto* geo = app.add_subcommand("geodesic", "Learn a geodesic with a neural ODE");
  add_common(geo, geo_opts);
  geo->add_option("--preset", preset, "Preset endpoints and metric")->check(CLI::IsMember({"sphere", "euclidean", "swiss-roll"}));
  auto* scan = app.add_subcommand("param-scan", "FIM volume heatmap over (t, sigma)");
  add_common(scan, scan_opts);
  auto* sens = app.add_subcommand("sensitivity", "FIM trace correlations across knn, noise and encoder");
  add_common(sens, sens_opts);
  auto* show = app.add_subcommand("config", "Print the effective configuration");
  CommonOptions show_opts;
  show->add_option("-c,--config", show_opts.config_file, "JSON config file");
  show->add_option("-s,--set", show_opts.overrides, "Override a config key");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help() << '\n';
    return fail("usage", e.what());
  }

  try {
    if (*tree) {
      const auto pc = data::gen_tree(branches, per_branch, dim, tree_noise, gen_seed);
      write_gen_outputs(pc, gen_out,
                        json{{"generator", "tree"}, {"branches", branches}, {"per_branch", per_branch},
                             {"dim", dim}, {"noise", tree_noise}, {"seed", gen_seed}});
    } else if (*roll) {
      const auto pc = data::gen_swiss_roll(roll_n, gen_seed, roll_noise);
      write_gen_outputs(pc, gen_out,
                        json{{"generator", "swiss-roll"}, {"n", roll_n}, {"noise", roll_noise}, {"seed", gen_seed}});
    } else if (*pipe) {
      const auto cfg = resolve(pipe_opts);
      const auto r = pipeline::cmd_pipeline(cfg, out_dir_for(pipe_opts, cfg));
      std::cout << "final loss " << r.trained.loss_history.back() << ", mean trace " << r.field.trace.mean()
                << '\n';
    } else if (*geo) {
      auto cfg = resolve(geo_opts);
      if (!preset.empty()) cfg.geodesic.preset = preset;
      const auto r = pipeline::cmd_geodesic(cfg, out_dir_for(geo_opts, cfg));
      std::cout << r.summary.dump() << '\n';
    } else if (*scan) {
      const auto cfg = resolve(scan_opts);
      const auto g = pipeline::cmd_param_scan(cfg, out_dir_for(scan_opts, cfg));
      std::cout << "grid " << g.volume.rows() << "x" << g.volume.cols() << ", failed cells "
                << g.failures.size() << '\n';
    } else if (*sens) {
      const auto cfg = resolve(sens_opts);
      const auto t = pipeline::cmd_sensitivity(cfg, out_dir_for(sens_opts, cfg));
      std::cout << "knn\n" << t.knn << "\nnoise\n" << t.noise << "\nencoder\n" << t.encoder << '\n';
    } else if (*show) {
      std::cout << config::to_json(resolve(show_opts)).dump(2) << '\n';
    }
  } catch (const pipeline::StageError& e) {
    return fail("stage." + e.stage(), e.what());
  } catch (const ConfigError& e) {
    return fail("config", e.what());
  } catch (const json::exception& e) {
    return fail("config", e.what());
  } catch (const std::domain_error& e) {
    return fail("numerical", e.what());
  } catch (const std::invalid_argument& e) {
    return fail("invalid", e.what());
  } catch (const std::exception& e) {
    return fail("runtime", e.what());
  }
  return 0;
}
