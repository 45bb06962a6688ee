#include "semcont/runconfig.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace semcont {

using json = nlohmann::ordered_json;

namespace {

constexpr int kConfigVersion = 1;

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + where);
  }
}

json attack_json(const AttackSpec& a) {
  json j;
  j["epsilon"] = a.epsilon;
  j["step"] = a.step;
  j["iterations"] = a.iterations;
  j["random_start"] = a.random_start;
  j["seed"] = a.seed;
  return j;
}

AttackSpec attack_from(const json& j, const std::string& where) {
  reject_unknown(j, {"epsilon", "step", "iterations", "random_start", "seed"}, where);
  AttackSpec a;
  a.epsilon = j.at("epsilon").get<double>();
  a.step = j.at("step").get<double>();
  a.iterations = j.at("iterations").get<int>();
  a.random_start = j.at("random_start").get<bool>();
  a.seed = j.at("seed").get<uint64_t>();
  return a;
}

json recipe_json(const TrainingRecipe& r) {
  json j;
  j["regime"] = to_string(r.regime);
  j["alpha"] = r.alpha;
  j["augment_level"] = r.augment_level;
  j["attack"] = attack_json(r.attack);
  j["optimizer"] = {{"name", r.optimizer.name},
                    {"learning_rate", r.optimizer.learning_rate},
                    {"batch_size", r.optimizer.batch_size},
                    {"epochs", r.optimizer.epochs}};
  j["seed"] = r.seed;
  j["stop_gradient_clean"] = r.stop_gradient_clean;
  j["arch"] = r.arch;
  return j;
}

TrainingRecipe recipe_from(const json& j) {
  reject_unknown(j,
                 {"regime", "alpha", "augment_level", "attack", "optimizer", "seed",
                  "stop_gradient_clean", "arch"},
                 "recipe");
  TrainingRecipe r;
  r.regime = regime_from_string(j.at("regime").get<std::string>());
  r.alpha = j.at("alpha").get<double>();
  r.augment_level = j.at("augment_level").get<int>();
  r.attack = attack_from(j.at("attack"), "recipe.attack");
  const json& o = j.at("optimizer");
  reject_unknown(o, {"name", "learning_rate", "batch_size", "epochs"}, "recipe.optimizer");
  r.optimizer.name = o.at("name").get<std::string>();
  r.optimizer.learning_rate = o.at("learning_rate").get<double>();
  r.optimizer.batch_size = o.at("batch_size").get<int>();
  r.optimizer.epochs = o.at("epochs").get<int>();
  r.seed = j.at("seed").get<uint64_t>();
  r.stop_gradient_clean = j.at("stop_gradient_clean").get<bool>();
  r.arch = j.at("arch").get<std::string>();
  return r;
}

}  // namespace

std::string runconfig_to_json(const RunConfig& c) {
  json j;
  j["config_version"] = c.version;
  j["dataset"] = c.dataset;
  j["out_dir"] = c.out_dir;
  j["recipe"] = recipe_json(c.recipe);
  j["eval_attack"] = attack_json(c.eval_attack);
  j["probe"] = {{"kind", c.probe.kind},
                {"grid", c.probe.grid},
                {"severities", c.probe.severities},
                {"seed", c.probe.seed},
                {"sample_count", c.probe.sample_count}};
  j["explain"] = {{"method", c.explain.method},
                  {"steps", c.explain.steps},
                  {"layer", c.explain.layer},
                  {"target", c.explain.target}};
  return j.dump(2);
}

RunConfig runconfig_from_json(const std::string& text) {
  const json j = json::parse(text);
  reject_unknown(j, {"config_version", "dataset", "out_dir", "recipe", "eval_attack", "probe",
                     "explain"},
                 "config");
  RunConfig c;
  c.version = j.at("config_version").get<int>();
  if (c.version != kConfigVersion)
    throw std::invalid_argument("config: unsupported config_version " +
                                std::to_string(c.version));
  c.dataset = j.at("dataset").get<std::string>();
  c.out_dir = j.at("out_dir").get<std::string>();
  c.recipe = recipe_from(j.at("recipe"));
  c.eval_attack = attack_from(j.at("eval_attack"), "eval_attack");
  const json& p = j.at("probe");
  reject_unknown(p, {"kind", "grid", "severities", "seed", "sample_count"}, "probe");
  c.probe.kind = p.at("kind").get<std::string>();
  c.probe.grid = p.at("grid").get<int>();
  c.probe.severities = p.at("severities").get<std::vector<double>>();
  c.probe.seed = p.at("seed").get<uint64_t>();
  c.probe.sample_count = p.at("sample_count").get<int64_t>();
  const json& e = j.at("explain");
  reject_unknown(e, {"method", "steps", "layer", "target"}, "explain");
  c.explain.method = e.at("method").get<std::string>();
  c.explain.steps = e.at("steps").get<int>();
  c.explain.layer = e.at("layer").get<std::string>();
  c.explain.target = e.at("target").get<int>();
  return c;
}

RunConfig load_runconfig(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return runconfig_from_json(text);
}

void save_runconfig(const RunConfig& c, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  f << runconfig_to_json(c) << "\n";
  if (!f) throw std::runtime_error("config: cannot write " + path);
}

}  // namespace semcont
