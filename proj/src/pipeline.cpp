#include "neuralfim/pipeline.hpp"

#include "neuralfim/csv.hpp"
#include "neuralfim/diffusion.hpp"
#include "neuralfim/infogeo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

namespace nfim::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <typename F>
auto stage(const std::string& name, json& timings, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      timings[name] = seconds_since(t0);
    } else {
      auto r = f();
      timings[name] = seconds_since(t0);
      return r;
    }
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

void ensure_dir(const std::string& dir) { fs::create_directories(dir); }

void write_vector_csv(const std::string& path, const std::string& name, const std::vector<double>& v) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 2);
  for (std::size_t i = 0; i < v.size(); ++i) {
    m(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i + 1);
    m(static_cast<Eigen::Index>(i), 1) = v[i];
  }
  csv::write_matrix(path, m, {"epoch", name});
}

}  // namespace

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

PointCloud load_data(const config::DataConfig& cfg) {
  PointCloud pc;
  if (cfg.source == "tree")
    pc = data::gen_tree(cfg.tree_branches, cfg.tree_per_branch, cfg.tree_dim, cfg.tree_noise, cfg.seed);
  else if (cfg.source == "swiss-roll")
    pc = data::gen_swiss_roll(cfg.swiss_roll_n, cfg.seed, cfg.swiss_roll_noise);
  else if (cfg.source == "csv")
    pc = data::load_csv(cfg.path, cfg.has_header, cfg.label_column);
  else
    throw std::invalid_argument("unknown data source '" + cfg.source + "'");
  if (cfg.extra_noise > 0.0) pc = data::add_noise(pc, cfg.extra_noise, cfg.extra_noise_seed);
  pc.validate();
  return pc;
}

PipelineResult run_pipeline(const config::RunConfig& cfg, const PointCloud& pc) {
  return run_pipeline(cfg, pc, pc);
}

PipelineResult run_pipeline(const config::RunConfig& cfg, const PointCloud& pc,
                            const PointCloud& field_points) {
  PipelineResult r;
  r.data = pc;
  r.timings = json::object();
  const Eigen::MatrixXd Pt = stage("diffuse", r.timings, [&] {
    const auto op = diffusion::diffuse(pc, cfg.diffusion.kernel);
    return diffusion::matrix_power(op, cfg.diffusion.t);
  });
  r.targets = stage("targets", r.timings, [&] {
    return mds::phate_jsd_targets(Pt, cfg.mds.k, cfg.mds.max_iters, cfg.mds.tol);
  });
  r.trained = stage("train", r.timings, [&] {
    return nn::train(pc, r.targets, cfg.network.encoder, cfg.training, cfg.network.activation);
  });
  r.field = stage("fim_field", r.timings,
                  [&] { return fim::fim_field(r.trained.model, field_points, cfg.fim_mode); });
  return r;
}

PipelineResult cmd_pipeline(const config::RunConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  const fs::path out(out_dir);
  fs::remove(out / "FAILED");
  write_json((out / "effective_config.json").string(), config::to_json(cfg));
  try {
    json timings;
    const PointCloud pc = stage("load_csv", timings, [&] { return load_data(cfg.data); });
    PipelineResult r = run_pipeline(cfg, pc);
    timings.update(r.timings);
    stage("write", timings, [&] {
      csv::write_matrix((out / "targets.csv").string(), r.targets.Y);
      nn::save_checkpoint((out / "checkpoint.json").string(), r.trained.model);
      write_vector_csv((out / "loss_history.csv").string(), "loss", r.trained.loss_history);
      fim::write_field_csv((out / "fim_field.csv").string(), r.field);
    });
    json summary;
    summary["n_points"] = pc.size();
    summary["dim"] = pc.dim();
    summary["data_seed"] = cfg.data.seed;
    summary["training_seed"] = cfg.training.seed;
    summary["epochs"] = cfg.training.epochs;
    summary["final_loss"] = r.trained.loss_history.empty() ? json(nullptr) : json(r.trained.loss_history.back());
    summary["first_loss"] = r.trained.loss_history.empty() ? json(nullptr) : json(r.trained.loss_history.front());
    summary["mds_stress"] = r.targets.stress;
    summary["mds_iterations"] = r.targets.iterations;
    summary["fim_mode"] = fim::to_string(cfg.fim_mode);
    summary["mean_trace"] = r.field.trace.mean();
    summary["mean_volume"] = r.field.volume.mean();
    summary["timings_seconds"] = timings;
    write_json((out / "summary.json").string(), summary);
    return r;
  } catch (const StageError& e) {
    std::ofstream((out / "FAILED").string()) << e.stage() << '\n' << e.what() << '\n';
    throw;
  }
}

void write_geodesic_csv(const std::string& path, const geodesic::GeodesicResult& r) {
  const Eigen::Index rows = r.path.rows();
  Eigen::MatrixXd m(rows, 1 + r.path.cols());
  const double h = rows > 1 ? (r.b - r.a) / static_cast<double>(rows - 1) : 0.0;
  std::vector<std::string> header{"time"};
  for (Eigen::Index c = 0; c < r.path.cols(); ++c) header.push_back("y" + std::to_string(c));
  for (Eigen::Index i = 0; i < rows; ++i) {
    m(i, 0) = r.a + static_cast<double>(i) * h;
    m.block(i, 1, 1, r.path.cols()) = r.path.row(i);
  }
  csv::write_matrix(path, m, header);
}

void apply_geodesic_preset(config::RunConfig& cfg) {
  auto& g = cfg.geodesic;
  constexpr double pi = std::numbers::pi;
  if (g.preset.empty()) return;
  if (g.preset == "sphere") {
    g.metric = "sphere";
    g.start = {pi / 4.0, 0.0};
    g.target = {pi / 4.0, pi};
  } else if (g.preset == "euclidean") {
    g.metric = "euclidean";
    g.start = {0.0, 0.0};
    g.target = {1.0, 0.0};
  } else if (g.preset == "swiss-roll") {
    cfg.data.source = "swiss-roll";
    cfg.diffusion.t = g.swiss_roll_t;
    g.solver.epochs = g.swiss_roll_epochs;
    if (g.metric == "sphere") g.metric = "learned-fim";
  } else {
    throw std::invalid_argument("unknown geodesic preset '" + g.preset + "'");
  }
}

namespace {

json result_summary(const geodesic::GeodesicResult& r, const geodesic::GeodesicConfig& s) {
  return json{{"length", r.length},
              {"left_endpoint_length", r.left_endpoint_length},
              {"endpoint_error", r.endpoint_error},
              {"epochs", s.epochs},
              {"lambda", s.lambda},
              {"final_loss", r.loss_history.empty() ? json(nullptr) : json(r.loss_history.back())}};
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

GeodesicRun cmd_geodesic(const config::RunConfig& input_cfg, const std::string& out_dir) {
  config::RunConfig cfg = input_cfg;
  apply_geodesic_preset(cfg);
  ensure_dir(out_dir);
  const fs::path out(out_dir);
  write_json((out / "effective_config.json").string(), config::to_json(cfg));
  const auto& g = cfg.geodesic;
  GeodesicRun run;

  if (g.preset == "swiss-roll") {
    const PointCloud pc = load_data(cfg.data);
    std::unique_ptr<geodesic::MetricProvider> metric;
    if (g.metric == "learned-fim") {
      nn::Mlp model;
      if (!g.checkpoint.empty()) {
        model = nn::load_checkpoint(g.checkpoint);
      } else {
        json timings;
        const auto op = stage("diffuse", timings, [&] { return diffusion::diffuse(pc, cfg.diffusion.kernel); });
        const Eigen::MatrixXd Pt = diffusion::matrix_power(op, cfg.diffusion.t);
        const auto targets = stage("targets", timings, [&] {
          return mds::phate_jsd_targets(Pt, cfg.mds.k, cfg.mds.max_iters, cfg.mds.tol);
        });
        model = stage("train", timings, [&] {
          return nn::train(pc, targets, cfg.network.encoder, cfg.training, cfg.network.activation).model;
        });
        nn::save_checkpoint((out / "checkpoint.json").string(), model);
      }
      metric = std::make_unique<geodesic::LearnedFimMetric>(std::move(model), cfg.fim_mode);
    } else if (g.metric == "euclidean") {
      metric = std::make_unique<geodesic::EuclideanMetric>(static_cast<int>(pc.dim()));
    } else {
      throw std::invalid_argument("swiss-roll preset needs metric euclidean or learned-fim");
    }

    std::mt19937_64 rng(g.pair_seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, pc.size() - 1);
    const Eigen::Index anchor = pick(rng);
    std::vector<Eigen::Index> others;
    while (static_cast<int>(others.size()) < g.swiss_roll_pairs) {
      const Eigen::Index j = pick(rng);
      if (j != anchor && std::find(others.begin(), others.end(), j) == others.end()) others.push_back(j);
    }
    json pairs = json::array();
    Eigen::VectorXd learned(g.swiss_roll_pairs), oracle(g.swiss_roll_pairs);
    for (int k = 0; k < g.swiss_roll_pairs; ++k) {
      const Eigen::Index j = others[static_cast<std::size_t>(k)];
      auto r = stage("geodesic", run.summary, [&] {
        return geodesic::train_geodesic(*metric, pc.points.row(anchor).transpose(),
                                        pc.points.row(j).transpose(), g.solver);
      });
      learned(k) = r.length;
      oracle(k) = geodesic::swiss_roll_geodesic(pc, anchor, j);
      write_geodesic_csv((out / ("path_" + std::to_string(k) + ".csv")).string(), r);
      write_vector_csv((out / ("loss_history_" + std::to_string(k) + ".csv")).string(), "loss", r.loss_history);
      json item = result_summary(r, g.solver);
      item["from"] = anchor;
      item["to"] = j;
      item["oracle_length"] = oracle(k);
      pairs.push_back(item);
      run.oracle_lengths.push_back(oracle(k));
      run.results.push_back(std::move(r));
    }
    run.correlation = pearson(learned, oracle);
    run.summary = json{{"preset", "swiss-roll"},
                       {"metric", g.metric},
                       {"pairs", pairs},
                       {"correlation", run.correlation},
                       {"correlation_type", "pearson"}};
    write_json((out / "summary.json").string(), run.summary);
    return run;
  }

  std::unique_ptr<geodesic::MetricProvider> metric;
  if (g.metric == "sphere") {
    metric = std::make_unique<geodesic::SphereMetric>();
  } else if (g.metric == "euclidean") {
    metric = std::make_unique<geodesic::EuclideanMetric>(static_cast<int>(g.start.size()));
  } else if (g.metric == "learned-fim") {
    if (g.checkpoint.empty() || !fs::exists(g.checkpoint))
      throw std::invalid_argument("learned-fim metric needs an existing checkpoint (geodesic.checkpoint)");
    metric = std::make_unique<geodesic::LearnedFimMetric>(nn::load_checkpoint(g.checkpoint), cfg.fim_mode);
  } else {
    throw std::invalid_argument("unknown metric '" + g.metric + "'");
  }
  if (g.start.empty() || g.start.size() != g.target.size())
    throw std::invalid_argument("geodesic.start and geodesic.target must have equal, nonzero length");

  auto r = geodesic::train_geodesic(*metric, to_vector(g.start), to_vector(g.target), g.solver);
  write_geodesic_csv((out / "path.csv").string(), r);
  write_vector_csv((out / "loss_history.csv").string(), "loss", r.loss_history);
  run.summary = result_summary(r, g.solver);
  run.summary["metric"] = g.metric;
  if (g.metric == "sphere") {
    const double oracle = geodesic::sphere_great_circle(Eigen::Vector2d(g.start[0], g.start[1]),
                                                        Eigen::Vector2d(g.target[0], g.target[1]));
    run.oracle_lengths.push_back(oracle);
    run.summary["oracle_length"] = oracle;
    double min_colat = r.path.col(0).minCoeff();
    run.summary["min_colatitude"] = min_colat;
  }
  write_json((out / "summary.json").string(), run.summary);
  run.results.push_back(std::move(r));
  return run;
}

paramscan::ParamGrid cmd_param_scan(const config::RunConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  const fs::path out(out_dir);
  write_json((out / "effective_config.json").string(), config::to_json(cfg));
  PointCloud pc = load_data(cfg.data);
  if (cfg.scan.subsample > 0 && cfg.scan.subsample < pc.size())
    pc = select_rows(pc, data::subsample_indices(pc.size(), cfg.scan.subsample, cfg.scan.subsample_seed));
  pc.points *= cfg.scan.data_scale;
  const auto& s = cfg.scan;
  auto grid = paramscan::volume_grid(pc, {s.t_min, s.t_max}, {s.sigma_min, s.sigma_max}, s.t_steps,
                                     s.sigma_steps, {s.h_t, s.h_sigma_rel});
  paramscan::write_heatmap_csv((out / "volume_heatmap.csv").string(), grid);
  Eigen::Index bi = 0, bj = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < grid.volume.rows(); ++i)
    for (Eigen::Index j = 0; j < grid.volume.cols(); ++j)
      if (std::isfinite(grid.volume(i, j)) && grid.volume(i, j) > best) {
        best = grid.volume(i, j);
        bi = i;
        bj = j;
      }
  json side{{"t_range", {s.t_min, s.t_max}},
            {"sigma_range", {s.sigma_min, s.sigma_max}},
            {"t_steps", s.t_steps},
            {"sigma_steps", s.sigma_steps},
            {"subsample", pc.size()},
            {"subsample_seed", s.subsample_seed},
            {"data_scale", s.data_scale},
            {"h_t", s.h_t},
            {"h_sigma_rel", s.h_sigma_rel},
            {"failed_cells", grid.failures},
            {"max_volume", best},
            {"argmax_t", grid.t_values(bi)},
            {"argmax_sigma", grid.sigma_values(bj)}};
  write_json((out / "volume_heatmap.json").string(), side);
  return grid;
}

namespace {

Eigen::Matrix3d correlation_table(const std::vector<std::optional<Eigen::VectorXd>>& traces) {
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j) {
      const double r = traces[i] && traces[j] ? pearson(*traces[i], *traces[j])
                                              : std::numeric_limits<double>::quiet_NaN();
      t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r;
      t(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = r;
    }
  return t;
}

void write_table(const std::string& path, const std::string& factor, const std::vector<std::string>& names,
                 const Eigen::Matrix3d& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << factor;
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (int i = 0; i < 3; ++i) {
    out << names[static_cast<std::size_t>(i)];
    for (int j = 0; j < 3; ++j) out << ',' << csv::format_real(table(i, j));
    out << '\n';
  }
}

std::string encoder_name(const std::vector<int>& e) {
  std::string s;
  for (std::size_t i = 0; i < e.size(); ++i) s += (i ? "-" : "") + std::to_string(e[i]);
  return s;
}

}  // namespace

SensitivityTables cmd_sensitivity(const config::RunConfig& cfg, const std::string& out_dir) {
  const auto& sens = cfg.sensitivity;
  if (sens.knn_values.size() != 3 || sens.noise_levels.size() != 3 || sens.encoders.size() != 3)
    throw std::invalid_argument("sensitivity: every factor needs exactly three levels");
  ensure_dir(out_dir);
  const fs::path out(out_dir);
  write_json((out / "effective_config.json").string(), config::to_json(cfg));
  const PointCloud base = load_data(cfg.data);
  json runs = json::array();

  auto traces_for = [&](const config::RunConfig& variant, const PointCloud& train_pc,
                        const std::string& label) -> std::optional<Eigen::VectorXd> {
    try {
      auto r = run_pipeline(variant, train_pc, base);
      runs.push_back({{"run", label}, {"final_loss", r.trained.loss_history.empty() ? 0.0 : r.trained.loss_history.back()},
                      {"mean_trace", r.field.trace.mean()}});
      return r.field.trace;
    } catch (const std::exception& e) {
      runs.push_back({{"run", label}, {"error", e.what()}});
      return std::nullopt;
    }
  };

  std::vector<std::optional<Eigen::VectorXd>> knn_tr, noise_tr, enc_tr;
  std::vector<std::string> knn_names, noise_names, enc_names;
  for (int k : sens.knn_values) {
    config::RunConfig v = cfg;
    v.diffusion.kernel.knn = k;
    knn_names.push_back(std::to_string(k));
    knn_tr.push_back(traces_for(v, base, "knn=" + knn_names.back()));
  }
  for (double level : sens.noise_levels) {
    const PointCloud noisy = data::add_noise(base, level, cfg.data.extra_noise_seed);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", level);
    noise_names.emplace_back(buf);
    noise_tr.push_back(traces_for(cfg, noisy, "noise=" + noise_names.back()));
  }
  for (const auto& e : sens.encoders) {
    config::RunConfig v = cfg;
    v.network.encoder = e;
    enc_names.push_back(encoder_name(e));
    enc_tr.push_back(traces_for(v, base, "encoder=" + enc_names.back()));
  }

  SensitivityTables t{correlation_table(knn_tr), correlation_table(noise_tr), correlation_table(enc_tr)};
  write_table((out / "sensitivity_knn.csv").string(), "knn", knn_names, t.knn);
  write_table((out / "sensitivity_noise.csv").string(), "noise", noise_names, t.noise);
  write_table((out / "sensitivity_encoder.csv").string(), "encoder", enc_names, t.encoder);
  write_json((out / "sensitivity.json").string(),
             json{{"correlation_type", "pearson"}, {"statistic", "per-point FIM trace"}, {"runs", runs}});
  return t;
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("pearson: need equal lengths >= 2");
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  const double denom = std::sqrt((da * da).sum() * (db * db).sum());
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (da * db).sum() / denom;
}

TreeRegions tree_regions(const PointCloud& tree, double radius, double tip_fraction) {
  if (!tree.intrinsic || !tree.labels) throw std::invalid_argument("tree_regions: need labels and intrinsic");
  const Eigen::Index n = tree.size();
  const int branches = tree.labels->maxCoeff() + 1;
  std::vector<Eigen::Index> first(static_cast<std::size_t>(branches), -1), last(static_cast<std::size_t>(branches), -1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto b = static_cast<std::size_t>((*tree.labels)(i));
    const double s = (*tree.intrinsic)(i, 1);
    if (first[b] < 0 || s < (*tree.intrinsic)(first[b], 1)) first[b] = i;
    if (last[b] < 0 || s > (*tree.intrinsic)(last[b], 1)) last[b] = i;
  }
  TreeRegions r;
  std::vector<bool> in_junction(static_cast<std::size_t>(n), false);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int b = 1; b < branches; ++b) {
      if ((tree.points.row(i) - tree.points.row(first[static_cast<std::size_t>(b)])).norm() <= radius) {
        in_junction[static_cast<std::size_t>(i)] = true;
        break;
      }
    }
    if (in_junction[static_cast<std::size_t>(i)]) r.junction.push_back(i);
  }
  std::vector<std::pair<double, Eigen::Index>> tip_dist;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (in_junction[static_cast<std::size_t>(i)]) continue;
    double best = std::numeric_limits<double>::infinity();
    for (int b = 0; b < branches; ++b)
      best = std::min(best, (tree.points.row(i) - tree.points.row(last[static_cast<std::size_t>(b)])).norm());
    tip_dist.emplace_back(best, i);
  }
  std::sort(tip_dist.begin(), tip_dist.end());
  const auto count = static_cast<std::size_t>(std::ceil(tip_fraction * static_cast<double>(n)));
  for (std::size_t k = 0; k < std::min(count, tip_dist.size()); ++k) r.tips.push_back(tip_dist[k].second);
  std::sort(r.tips.begin(), r.tips.end());
  return r;
}

}  // namespace nfim::pipeline
