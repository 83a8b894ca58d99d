#pragma once

#include "neuralfim/config.hpp"
#include "neuralfim/data.hpp"
#include "neuralfim/fim.hpp"
#include "neuralfim/geodesic.hpp"
#include "neuralfim/mds.hpp"
#include "neuralfim/nn.hpp"
#include "neuralfim/paramscan.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <vector>

namespace nfim::pipeline {

class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& cause)
      : std::runtime_error(stage + ": " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

PointCloud load_data(const config::DataConfig& cfg);

struct PipelineResult {
  PointCloud data;
  mds::EmbeddingTargets targets;
  nn::TrainResult trained;
  fim::FimField field;
  nlohmann::json timings;
};

// diffuse -> JSD targets -> train -> FIM field. Stage failures raise StageError.
PipelineResult run_pipeline(const config::RunConfig& cfg, const PointCloud& pc);
// Same, FIM evaluated at field_points instead of the training points.
PipelineResult run_pipeline(const config::RunConfig& cfg, const PointCloud& pc,
                            const PointCloud& field_points);

// Writes effective_config.json, targets.csv, checkpoint.json, loss_history.csv,
// fim_field.csv and summary.json under out_dir. A FAILED file marks an aborted run.
PipelineResult cmd_pipeline(const config::RunConfig& cfg, const std::string& out_dir);

struct GeodesicRun {
  std::vector<geodesic::GeodesicResult> results;
  std::vector<double> oracle_lengths;  // sphere/swiss-roll presets
  double correlation = 0.0;            // swiss-roll preset only
  nlohmann::json summary;
};

GeodesicRun cmd_geodesic(const config::RunConfig& cfg, const std::string& out_dir);

paramscan::ParamGrid cmd_param_scan(const config::RunConfig& cfg, const std::string& out_dir);

struct SensitivityTables {
  Eigen::Matrix3d knn;
  Eigen::Matrix3d noise;
  Eigen::Matrix3d encoder;
};

SensitivityTables cmd_sensitivity(const config::RunConfig& cfg, const std::string& out_dir);

// Applies the named preset ("sphere", "euclidean", "swiss-roll") to cfg.geodesic.
void apply_geodesic_preset(config::RunConfig& cfg);

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Index sets on a noiseless tree: points within `radius` of a branch attachment
// and the tip_fraction of all points nearest a branch end (excluding junctions).
struct TreeRegions {
  std::vector<Eigen::Index> junction;
  std::vector<Eigen::Index> tips;
};
TreeRegions tree_regions(const PointCloud& noiseless_tree, double radius = 0.15,
                         double tip_fraction = 0.10);

void write_geodesic_csv(const std::string& path, const geodesic::GeodesicResult& r);
void write_json(const std::string& path, const nlohmann::json& j);

}  // namespace nfim::pipeline
