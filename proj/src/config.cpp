#include "neuralfim/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace nfim::config {

using nlohmann::json;

json to_json(const RunConfig& c) {
  json j;
  j["version"] = kSchemaVersion;
  j["output_dir"] = c.output_dir;
  j["data"] = {
      {"source", c.data.source},
      {"path", c.data.path},
      {"has_header", c.data.has_header},
      {"label_column", c.data.label_column ? json(*c.data.label_column) : json(nullptr)},
      {"tree_branches", c.data.tree_branches},
      {"tree_per_branch", c.data.tree_per_branch},
      {"tree_dim", c.data.tree_dim},
      {"tree_noise", c.data.tree_noise},
      {"swiss_roll_n", c.data.swiss_roll_n},
      {"swiss_roll_noise", c.data.swiss_roll_noise},
      {"seed", c.data.seed},
      {"extra_noise", c.data.extra_noise},
      {"extra_noise_seed", c.data.extra_noise_seed},
  };
  const auto& k = c.diffusion.kernel;
  j["kernel"] = {{"kind", diffusion::to_string(k.kind)},
                 {"sigma", k.sigma},
                 {"knn", k.knn},
                 {"beta", k.beta},
                 {"anisotropy", k.anisotropy}};
  j["diffusion"] = {{"t", c.diffusion.t}, {"floor_eps", c.diffusion.floor_eps}};
  j["mds"] = {{"k", c.mds.k}, {"max_iters", c.mds.max_iters}, {"tol", c.mds.tol}};
  j["network"] = {{"encoder", c.network.encoder}, {"activation", nn::to_string(c.network.activation)}};
  j["training"] = {{"learning_rate", c.training.learning_rate},
                   {"epochs", c.training.epochs},
                   {"batch_size", c.training.batch_size},
                   {"pairs_per_batch", c.training.pairs_per_batch},
                   {"weight_decay", c.training.weight_decay},
                   {"seed", c.training.seed}};
  j["fim"] = {{"mode", fim::to_string(c.fim_mode)}};
  const auto& g = c.geodesic;
  j["geodesic"] = {{"preset", g.preset},
                   {"metric", g.metric},
                   {"checkpoint", g.checkpoint},
                   {"start", g.start},
                   {"target", g.target},
                   {"lambda", g.solver.lambda},
                   {"n_steps", g.solver.n_steps},
                   {"epochs", g.solver.epochs},
                   {"learning_rate", g.solver.learning_rate},
                   {"weight_decay", g.solver.weight_decay},
                   {"seed", g.solver.seed},
                   {"a", g.solver.a},
                   {"b", g.solver.b},
                   {"width", g.solver.width},
                   {"hidden_layers", g.solver.hidden_layers},
                   {"length_term", g.solver.length_term},
                   {"swiss_roll_pairs", g.swiss_roll_pairs},
                   {"pair_seed", g.pair_seed},
                   {"swiss_roll_t", g.swiss_roll_t},
                   {"swiss_roll_epochs", g.swiss_roll_epochs}};
  const auto& s = c.scan;
  j["scan"] = {{"t_min", s.t_min},         {"t_max", s.t_max},
               {"sigma_min", s.sigma_min}, {"sigma_max", s.sigma_max},
               {"t_steps", s.t_steps},     {"sigma_steps", s.sigma_steps},
               {"subsample", s.subsample}, {"subsample_seed", s.subsample_seed},
               {"data_scale", s.data_scale},
               {"h_t", s.h_t},             {"h_sigma_rel", s.h_sigma_rel}};
  j["sensitivity"] = {{"knn_values", c.sensitivity.knn_values},
                      {"noise_levels", c.sensitivity.noise_levels},
                      {"encoders", c.sensitivity.encoders}};
  return j;
}

json default_document() { return to_json(RunConfig{}); }

json overlay(json base, const json& patch, const std::string& where) {
  if (!patch.is_object()) throw std::invalid_argument("config: expected an object at '" + where + "'");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    if (!base.contains(it.key())) throw std::invalid_argument("config: unknown key '" + key + "'");
    json& slot = base[it.key()];
    if (slot.is_object())
      slot = overlay(slot, it.value(), key);
    else
      slot = it.value();
  }
  return base;
}

RunConfig from_json(const json& doc) {
  const json j = overlay(default_document(), doc);
  if (j.at("version").get<int>() != kSchemaVersion)
    throw std::invalid_argument("config: unsupported schema version " + j.at("version").dump());
  RunConfig c;
  c.output_dir = j.at("output_dir").get<std::string>();

  const json& d = j.at("data");
  c.data.source = d.at("source").get<std::string>();
  if (c.data.source != "tree" && c.data.source != "swiss-roll" && c.data.source != "csv")
    throw std::invalid_argument("config: data.source must be tree, swiss-roll or csv");
  c.data.path = d.at("path").get<std::string>();
  c.data.has_header = d.at("has_header").get<bool>();
  if (!d.at("label_column").is_null()) c.data.label_column = d.at("label_column").get<std::string>();
  c.data.tree_branches = d.at("tree_branches").get<int>();
  c.data.tree_per_branch = d.at("tree_per_branch").get<int>();
  c.data.tree_dim = d.at("tree_dim").get<int>();
  c.data.tree_noise = d.at("tree_noise").get<double>();
  c.data.swiss_roll_n = d.at("swiss_roll_n").get<int>();
  c.data.swiss_roll_noise = d.at("swiss_roll_noise").get<double>();
  c.data.seed = d.at("seed").get<std::uint64_t>();
  c.data.extra_noise = d.at("extra_noise").get<double>();
  c.data.extra_noise_seed = d.at("extra_noise_seed").get<std::uint64_t>();

  const json& k = j.at("kernel");
  c.diffusion.kernel.kind = diffusion::parse_kernel_kind(k.at("kind").get<std::string>());
  c.diffusion.kernel.sigma = k.at("sigma").get<double>();
  c.diffusion.kernel.knn = k.at("knn").get<int>();
  c.diffusion.kernel.beta = k.at("beta").get<double>();
  c.diffusion.kernel.anisotropy = k.at("anisotropy").get<double>();
  c.diffusion.kernel.validate();
  c.diffusion.t = j.at("diffusion").at("t").get<double>();
  c.diffusion.floor_eps = j.at("diffusion").at("floor_eps").get<double>();

  c.mds.k = j.at("mds").at("k").get<int>();
  c.mds.max_iters = j.at("mds").at("max_iters").get<int>();
  c.mds.tol = j.at("mds").at("tol").get<double>();

  c.network.encoder = j.at("network").at("encoder").get<std::vector<int>>();
  c.network.activation = nn::parse_activation(j.at("network").at("activation").get<std::string>());

  const json& t = j.at("training");
  c.training.learning_rate = t.at("learning_rate").get<double>();
  c.training.epochs = t.at("epochs").get<int>();
  c.training.batch_size = t.at("batch_size").get<int>();
  c.training.pairs_per_batch = t.at("pairs_per_batch").get<int>();
  c.training.weight_decay = t.at("weight_decay").get<double>();
  c.training.seed = t.at("seed").get<std::uint64_t>();

  c.fim_mode = fim::parse_mode(j.at("fim").at("mode").get<std::string>());

  const json& g = j.at("geodesic");
  c.geodesic.preset = g.at("preset").get<std::string>();
  c.geodesic.metric = g.at("metric").get<std::string>();
  c.geodesic.checkpoint = g.at("checkpoint").get<std::string>();
  c.geodesic.start = g.at("start").get<std::vector<double>>();
  c.geodesic.target = g.at("target").get<std::vector<double>>();
  c.geodesic.solver.lambda = g.at("lambda").get<double>();
  c.geodesic.solver.n_steps = g.at("n_steps").get<int>();
  c.geodesic.solver.epochs = g.at("epochs").get<int>();
  c.geodesic.solver.learning_rate = g.at("learning_rate").get<double>();
  c.geodesic.solver.weight_decay = g.at("weight_decay").get<double>();
  c.geodesic.solver.seed = g.at("seed").get<std::uint64_t>();
  c.geodesic.solver.a = g.at("a").get<double>();
  c.geodesic.solver.b = g.at("b").get<double>();
  c.geodesic.solver.width = g.at("width").get<int>();
  c.geodesic.solver.hidden_layers = g.at("hidden_layers").get<int>();
  c.geodesic.solver.length_term = g.at("length_term").get<bool>();
  c.geodesic.swiss_roll_pairs = g.at("swiss_roll_pairs").get<int>();
  c.geodesic.pair_seed = g.at("pair_seed").get<std::uint64_t>();
  c.geodesic.swiss_roll_t = g.at("swiss_roll_t").get<double>();
  c.geodesic.swiss_roll_epochs = g.at("swiss_roll_epochs").get<int>();

  const json& s = j.at("scan");
  c.scan.t_min = s.at("t_min").get<double>();
  c.scan.t_max = s.at("t_max").get<double>();
  c.scan.sigma_min = s.at("sigma_min").get<double>();
  c.scan.sigma_max = s.at("sigma_max").get<double>();
  c.scan.t_steps = s.at("t_steps").get<int>();
  c.scan.sigma_steps = s.at("sigma_steps").get<int>();
  c.scan.subsample = s.at("subsample").get<int>();
  c.scan.subsample_seed = s.at("subsample_seed").get<std::uint64_t>();
  c.scan.data_scale = s.at("data_scale").get<double>();
  if (!(c.scan.data_scale > 0.0)) throw std::invalid_argument("config: scan.data_scale must be positive");
  c.scan.h_t = s.at("h_t").get<double>();
  c.scan.h_sigma_rel = s.at("h_sigma_rel").get<double>();

  const json& sens = j.at("sensitivity");
  c.sensitivity.knn_values = sens.at("knn_values").get<std::vector<int>>();
  c.sensitivity.noise_levels = sens.at("noise_levels").get<std::vector<double>>();
  c.sensitivity.encoders = sens.at("encoders").get<std::vector<std::vector<int>>>();
  return c;
}

static json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config: " + path + ": " + e.what());
  }
}

json load_document(const std::optional<std::string>& file) {
  json doc = default_document();
  if (const char* dir = std::getenv(kConfigDirEnv)) {
    const auto fallback = std::filesystem::path(dir) / "default.json";
    if (std::filesystem::exists(fallback)) doc = overlay(doc, read_json_file(fallback.string()));
  }
  if (file) doc = overlay(doc, read_json_file(*file));
  return doc;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw std::invalid_argument("config: override '" + assignment + "' is not key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json patch = value;
  std::string rest = path;
  std::vector<std::string> parts;
  for (std::size_t pos; (pos = rest.find('.')) != std::string::npos; rest = rest.substr(pos + 1))
    parts.push_back(rest.substr(0, pos));
  parts.push_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
  doc = overlay(doc, patch);
}

}  // namespace nfim::config
