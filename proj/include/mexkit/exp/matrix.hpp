#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "mexkit/attacks/config.hpp"
#include "mexkit/exp/data_gen.hpp"

namespace mexkit::exp {

inline constexpr const char* kMatrixSchema = "mexkit-matrix/1";

struct ModelSpecEntry {
  std::string name;
  models::ArchitectureSpec arch;
  models::TrainingRecipe recipe;
};

struct CorpusSetup {
  CorpusSpec spec;
  int target_train = 2000;
  int target_validation = 300;
  int test = 1000;
  int pool = 2600;       // per tier
  int validation = 400;  // per tier
  int surrogate_train = 600;
  int surrogate_validation = 200;
};

struct AttackParams {
  double seed_fraction = 0.2;
  int rounds = 4;
  int sub_pools = 0;  // 0 -> rounds
  bool tune = false;  // (s, r) grid scored on attacker validation accuracy
  int transferability_probes = 0;  // 0 disables the measurement
  selection::DeepfoolParams deepfool{};
};

// Declarative experiment plan. Every (target x tier x budget x strategy x
// substitute x seed) combination expands to exactly one attack cell, in
// declaration order.
struct ExperimentMatrix {
  std::string description;
  CorpusSetup corpus;
  std::vector<ModelSpecEntry> targets;
  std::vector<DataTier> tiers;
  std::vector<long long> budgets;
  std::vector<attacks::Strategy> strategies;
  std::vector<ModelSpecEntry> substitutes;
  std::vector<std::uint64_t> seeds;
  AttackParams attack;
  std::string output_dir = "runs";

  struct Cell {
    int target = 0, tier = 0, budget = 0, strategy = 0, substitute = 0,
        seed = 0;  // positions into the matrix lists
  };

  std::vector<Cell> expand() const {
    std::vector<Cell> cells;
    for (int t = 0; t < static_cast<int>(targets.size()); ++t)
      for (int d = 0; d < static_cast<int>(tiers.size()); ++d)
        for (int b = 0; b < static_cast<int>(budgets.size()); ++b)
          for (int s = 0; s < static_cast<int>(strategies.size()); ++s)
            for (int m = 0; m < static_cast<int>(substitutes.size()); ++m)
              for (int r = 0; r < static_cast<int>(seeds.size()); ++r)
                cells.push_back({t, d, b, s, m, r});
    return cells;
  }

  std::string corpus_digest() const {
    Fnv1a h;
    h.update_value(corpus.spec.seed);
    h.update_value(corpus.spec.class_count);
    h.update_value(corpus.spec.difficulty);
    h.update_value(corpus.spec.shape.height);
    h.update_value(corpus.spec.shape.width);
    h.update_value(corpus.spec.shape.channels);
    h.update_value(corpus.target_train);
    h.update_value(corpus.test);
    h.update_value(corpus.pool);
    h.update_value(corpus.validation);
    return h.hex();
  }

  // Resolves the cell into the attack configuration it denotes.
  attacks::AttackConfig cell_config(const Cell& c) const {
    const auto& sub = substitutes[static_cast<std::size_t>(c.substitute)];
    attacks::AttackConfig cfg;
    cfg.strategy = strategies[static_cast<std::size_t>(c.strategy)];
    cfg.budget = budgets[static_cast<std::size_t>(c.budget)];
    cfg.substitute_arch = sub.arch;
    cfg.substitute_recipe = sub.recipe;
    cfg.pool_dataset =
        std::string(to_string(tiers[static_cast<std::size_t>(c.tier)])) +
        "/pool";
    cfg.validation_dataset =
        std::string(to_string(tiers[static_cast<std::size_t>(c.tier)])) +
        "/validation";
    cfg.rng_seed = seeds[static_cast<std::size_t>(c.seed)];
    cfg.deepfool = attack.deepfool;
    if (attacks::uses_rounds(cfg.strategy)) {
      cfg.rounds = attack.rounds;
      cfg.sub_pool_count = attack.sub_pools;
      cfg.seed_size = attacks::adjust_seed_size(
          cfg.budget,
          static_cast<int>(cfg.budget * attack.seed_fraction + 0.5),
          cfg.rounds, attacks::uses_augmentation(cfg.strategy));
    }
    return cfg;
  }

  std::string cell_digest(const Cell& c) const {
    Fnv1a h;
    h.update(corpus_digest());
    h.update(targets[static_cast<std::size_t>(c.target)].name);
    h.update(targets[static_cast<std::size_t>(c.target)].recipe.digest());
    h.update(to_string(tiers[static_cast<std::size_t>(c.tier)]));
    h.update(cell_config(c).digest());
    return h.hex();
  }
};

namespace detail {

inline models::TrainingRecipe recipe_from_json(const nlohmann::json& j) {
  models::TrainingRecipe r;
  if (j.contains("init"))
    r.init = j.at("init").get<std::string>() == "transfer"
                 ? models::InitStrategy::kTransfer
                 : models::InitStrategy::kScratch;
  if (j.contains("surrogate"))
    r.surrogate_dataset = j.at("surrogate").get<std::string>();
  if (j.contains("epochs")) r.epochs = j.at("epochs").get<int>();
  if (j.contains("batch_size")) r.batch_size = j.at("batch_size").get<int>();
  if (j.contains("lr"))
    r.lr = models::LrSchedule::parse(j.at("lr").get<std::string>());
  if (j.contains("patience")) r.patience = j.at("patience").get<int>();
  if (j.contains("optimizer"))
    r.optimizer = j.at("optimizer").get<std::string>() == "sgd-momentum"
                      ? models::Optimizer::kSgdMomentum
                      : models::Optimizer::kAdam;
  if (j.contains("seed")) r.rng_seed = j.at("seed").get<std::uint64_t>();
  r.validate();
  return r;
}

inline nlohmann::json recipe_to_json(const models::TrainingRecipe& r) {
  nlohmann::json j;
  j["init"] = to_string(r.init);
  if (!r.surrogate_dataset.empty()) j["surrogate"] = r.surrogate_dataset;
  j["epochs"] = r.epochs;
  j["batch_size"] = r.batch_size;
  j["lr"] = r.lr.descriptor();
  j["patience"] = r.patience;
  j["optimizer"] = to_string(r.optimizer);
  j["seed"] = r.rng_seed;
  return j;
}

inline ModelSpecEntry model_entry_from_json(const nlohmann::json& j,
                                            const core::ImageShape& shape) {
  ModelSpecEntry e;
  e.name = j.at("name").get<std::string>();
  e.arch.name = e.name;
  e.arch.family =
      models::arch_family_from_string(j.at("arch").get<std::string>());
  e.arch.input_shape = shape;
  e.recipe = j.contains("recipe") ? recipe_from_json(j.at("recipe"))
                                  : models::TrainingRecipe{};
  return e;
}

}  // namespace detail

inline ExperimentMatrix parse_matrix(const nlohmann::json& j) {
  if (!j.contains("schema") || j.at("schema").get<std::string>() != kMatrixSchema)
    throw ConfigError("matrix: missing or unsupported schema tag (expected " +
                      std::string(kMatrixSchema) + ")");
  ExperimentMatrix m;
  if (j.contains("description"))
    m.description = j.at("description").get<std::string>();

  const auto& c = j.at("corpus");
  if (c.contains("image")) {
    m.corpus.spec.shape = {c.at("image").at(0).get<int>(),
                           c.at("image").at(1).get<int>(),
                           c.at("image").at(2).get<int>()};
  }
  if (c.contains("classes"))
    m.corpus.spec.class_count = c.at("classes").get<int>();
  if (c.contains("seed")) m.corpus.spec.seed = c.at("seed").get<std::uint64_t>();
  if (c.contains("difficulty"))
    m.corpus.spec.difficulty = c.at("difficulty").get<float>();
  auto geti = [&](const char* key, int& out) {
    if (c.contains(key)) out = c.at(key).get<int>();
  };
  geti("target_train", m.corpus.target_train);
  geti("target_validation", m.corpus.target_validation);
  geti("test", m.corpus.test);
  geti("pool", m.corpus.pool);
  geti("validation", m.corpus.validation);
  geti("surrogate_train", m.corpus.surrogate_train);
  geti("surrogate_validation", m.corpus.surrogate_validation);

  for (const auto& t : j.at("targets"))
    m.targets.push_back(detail::model_entry_from_json(t, m.corpus.spec.shape));
  for (const auto& d : j.at("data_tiers"))
    m.tiers.push_back(tier_from_string(d.get<std::string>()));
  for (const auto& b : j.at("budgets")) m.budgets.push_back(b.get<long long>());
  for (const auto& s : j.at("strategies"))
    m.strategies.push_back(attacks::strategy_from_string(s.get<std::string>()));
  for (const auto& s : j.at("substitutes"))
    m.substitutes.push_back(
        detail::model_entry_from_json(s, m.corpus.spec.shape));
  for (const auto& s : j.at("seeds")) m.seeds.push_back(s.get<std::uint64_t>());

  if (j.contains("attack")) {
    const auto& a = j.at("attack");
    if (a.contains("seed_fraction"))
      m.attack.seed_fraction = a.at("seed_fraction").get<double>();
    if (a.contains("rounds")) m.attack.rounds = a.at("rounds").get<int>();
    if (a.contains("sub_pools"))
      m.attack.sub_pools = a.at("sub_pools").get<int>();
    if (a.contains("tune")) m.attack.tune = a.at("tune").get<bool>();
    if (a.contains("transferability_probes"))
      m.attack.transferability_probes =
          a.at("transferability_probes").get<int>();
    if (a.contains("deepfool")) {
      const auto& df = a.at("deepfool");
      if (df.contains("max_iterations"))
        m.attack.deepfool.max_iterations = df.at("max_iterations").get<int>();
      if (df.contains("overshoot"))
        m.attack.deepfool.overshoot = df.at("overshoot").get<double>();
    }
  }
  if (j.contains("output_dir"))
    m.output_dir = j.at("output_dir").get<std::string>();

  require(!m.targets.empty() && !m.tiers.empty() && !m.budgets.empty() &&
              !m.strategies.empty() && !m.substitutes.empty() &&
              !m.seeds.empty(),
          "matrix: every axis needs at least one entry");
  return m;
}

inline nlohmann::json matrix_to_json(const ExperimentMatrix& m) {
  nlohmann::json j;
  j["schema"] = kMatrixSchema;
  j["description"] = m.description;
  j["corpus"] = {
      {"image",
       {m.corpus.spec.shape.height, m.corpus.spec.shape.width,
        m.corpus.spec.shape.channels}},
      {"classes", m.corpus.spec.class_count},
      {"seed", m.corpus.spec.seed},
      {"difficulty", m.corpus.spec.difficulty},
      {"target_train", m.corpus.target_train},
      {"target_validation", m.corpus.target_validation},
      {"test", m.corpus.test},
      {"pool", m.corpus.pool},
      {"validation", m.corpus.validation},
      {"surrogate_train", m.corpus.surrogate_train},
      {"surrogate_validation", m.corpus.surrogate_validation}};
  auto dump_models = [](const std::vector<ModelSpecEntry>& list) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : list)
      arr.push_back({{"name", e.name},
                     {"arch", to_string(e.arch.family)},
                     {"recipe", detail::recipe_to_json(e.recipe)}});
    return arr;
  };
  j["targets"] = dump_models(m.targets);
  nlohmann::json tiers = nlohmann::json::array();
  for (auto t : m.tiers) tiers.push_back(to_string(t));
  j["data_tiers"] = tiers;
  j["budgets"] = m.budgets;
  nlohmann::json strategies = nlohmann::json::array();
  for (auto s : m.strategies) strategies.push_back(to_string(s));
  j["strategies"] = strategies;
  j["substitutes"] = dump_models(m.substitutes);
  j["seeds"] = m.seeds;
  j["attack"] = {{"seed_fraction", m.attack.seed_fraction},
                 {"rounds", m.attack.rounds},
                 {"sub_pools", m.attack.sub_pools},
                 {"tune", m.attack.tune},
                 {"transferability_probes", m.attack.transferability_probes},
                 {"deepfool",
                  {{"max_iterations", m.attack.deepfool.max_iterations},
                   {"overshoot", m.attack.deepfool.overshoot}}}};
  j["output_dir"] = m.output_dir;
  return j;
}

}  // namespace mexkit::exp
