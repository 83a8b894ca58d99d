#pragma once

#include "neuralfim/diffusion.hpp"
#include "neuralfim/fim.hpp"
#include "neuralfim/geodesic.hpp"
#include "neuralfim/nn.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nfim::config {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kConfigDirEnv = "NEURALFIM_CONFIG_DIR";

struct DataConfig {
  std::string source = "tree";  // tree | swiss-roll | csv
  std::string path;
  bool has_header = true;
  std::optional<std::string> label_column;
  int tree_branches = 5;
  int tree_per_branch = 60;
  int tree_dim = 10;
  double tree_noise = 0.05;
  int swiss_roll_n = 1000;
  double swiss_roll_noise = 0.0;
  std::uint64_t seed = 7;
  double extra_noise = 0.0;  // add_noise level applied after loading
  std::uint64_t extra_noise_seed = 11;
};

struct DiffusionConfig {
  diffusion::KernelConfig kernel;
  double t = 5.0;
  double floor_eps = 1e-7;
};

struct MdsConfig {
  int k = 20;
  int max_iters = 300;
  double tol = 1e-7;
};

struct NetworkConfig {
  std::vector<int> encoder{100, 100, 50};
  nn::Activation activation = nn::Activation::Relu;
};

struct ScanConfig {
  double t_min = 1.0, t_max = 15.0;
  double sigma_min = 50.0, sigma_max = 150.0;
  int t_steps = 8;
  int sigma_steps = 8;
  int subsample = 50;
  std::uint64_t subsample_seed = 3;
  double data_scale = 10.0;  // coordinates multiplied by this before the scan
  double h_t = 1e-2;
  double h_sigma_rel = 1e-2;
};

struct GeodesicRunConfig {
  std::string preset;  // "", sphere, euclidean, swiss-roll
  std::string metric = "sphere";  // euclidean | sphere | learned-fim
  std::string checkpoint;
  std::vector<double> start;
  std::vector<double> target;
  geodesic::GeodesicConfig solver;
  int swiss_roll_pairs = 5;
  std::uint64_t pair_seed = 5;
  double swiss_roll_t = 100.0;  // diffusion time used by the swiss-roll preset
  int swiss_roll_epochs = 2000;  // geodesic epochs used by the swiss-roll preset
};

struct SensitivityConfig {
  std::vector<int> knn_values{5, 10, 15};
  std::vector<double> noise_levels{0.0005, 0.0010, 0.0015};
  std::vector<std::vector<int>> encoders{{100, 100, 50}, {100, 80, 30}, {100, 70, 20}};
};

struct RunConfig {
  DataConfig data;
  DiffusionConfig diffusion;
  MdsConfig mds;
  NetworkConfig network;
  nn::TrainConfig training;
  fim::FimMode fim_mode = fim::FimMode::Standard;
  GeodesicRunConfig geodesic;
  ScanConfig scan;
  SensitivityConfig sensitivity;
  std::string output_dir = "neuralfim_out";
};

// Document with every key and its default value.
nlohmann::json default_document();

nlohmann::json to_json(const RunConfig& cfg);
// Rejects keys that do not appear in the default document.
RunConfig from_json(const nlohmann::json& doc);

// Overlays patch onto base, throwing on unknown keys; returns the merged document.
nlohmann::json overlay(nlohmann::json base, const nlohmann::json& patch, const std::string& where = "");

// default document <- $NEURALFIM_CONFIG_DIR/default.json <- file (if given).
nlohmann::json load_document(const std::optional<std::string>& file);

// "section.key=value" override; value parsed as JSON, falling back to a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

}  // namespace nfim::config
