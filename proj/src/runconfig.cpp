// Copyright 2026 The stardro Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "stardro/runconfig.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace stardro {

using nlohmann::json;

std::string to_string(TrainMethod method) {
  switch (method) {
    case TrainMethod::kErm: return "erm";
    case TrainMethod::kStandardDro: return "dro";
    case TrainMethod::kStarDro: return "stardro";
  }
  return "erm";
}

TrainMethod method_from_string(const std::string& name) {
  if (name == "erm") return TrainMethod::kErm;
  if (name == "dro") return TrainMethod::kStandardDro;
  if (name == "stardro") return TrainMethod::kStarDro;
  throw std::invalid_argument("unknown method: " + name + " (expected erm|dro|stardro)");
}

void ModelConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("model: learning_rate must be > 0");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("model: weight_decay must be >= 0");
  if (epochs < 1) throw std::invalid_argument("model: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("model: batch_size must be >= 1");
}

void RunConfig::validate() const {
  model.validate();
  if (activation_epoch < 0) {
    throw std::invalid_argument("config: activation_epoch must be >= 0 (0 disables)");
  }
  // The reweighter's activation_step is derived at run time; validate the rest.
  ReweighterConfig check = reweighter;
  check.activation_step = 0;
  check.validate();
  if (!dataset.has_value()) task.validate();
}

namespace {

json task_to_json(const SyntheticTaskSpec& t) {
  json j;
  j["num_groups"] = t.num_groups;
  j["group_sizes"] = t.group_sizes;
  json hard = json::object();
  for (const auto& [g, p] : t.hard_groups) {
    hard[std::to_string(g)] = {{"label_noise", p.label_noise},
                               {"feature_sigma", p.feature_sigma}};
  }
  j["hard_groups"] = std::move(hard);
  j["easy_label_noise"] = t.easy_label_noise;
  j["feature_sigma"] = t.feature_sigma;
  j["feature_dim"] = t.feature_dim;
  j["classes"] = t.classes;
  j["prototype_scale"] = t.prototype_scale;
  j["offset_amplitude"] = t.offset_amplitude;
  j["multi_annotation_fraction"] = t.multi_annotation_fraction;
  j["val_per_group"] = t.val_per_group;
  j["completion_length"] = t.completion_length;
  j["seed"] = t.seed;
  return j;
}

SyntheticTaskSpec task_from_json(const json& j) {
  SyntheticTaskSpec t;
  t.num_groups = j.value("num_groups", t.num_groups);
  if (j.contains("group_sizes")) t.group_sizes = j.at("group_sizes").get<std::vector<int>>();
  if (j.contains("hard_groups")) {
    t.hard_groups.clear();
    for (const auto& [key, val] : j.at("hard_groups").items()) {
      HardGroupParams p;
      p.label_noise = val.value("label_noise", p.label_noise);
      p.feature_sigma = val.value("feature_sigma", p.feature_sigma);
      t.hard_groups[std::stoi(key)] = p;
    }
  }
  t.easy_label_noise = j.value("easy_label_noise", t.easy_label_noise);
  t.feature_sigma = j.value("feature_sigma", t.feature_sigma);
  t.feature_dim = j.value("feature_dim", t.feature_dim);
  t.classes = j.value("classes", t.classes);
  t.prototype_scale = j.value("prototype_scale", t.prototype_scale);
  t.offset_amplitude = j.value("offset_amplitude", t.offset_amplitude);
  t.multi_annotation_fraction = j.value("multi_annotation_fraction", t.multi_annotation_fraction);
  t.val_per_group = j.value("val_per_group", t.val_per_group);
  t.completion_length = j.value("completion_length", t.completion_length);
  t.seed = j.value("seed", t.seed);
  return t;
}

}  // namespace

std::string run_config_to_json(const RunConfig& c) {
  json j;
  j["method"] = to_string(c.method);
  j["scheme"] = to_string(c.scheme);
  j["mode"] = c.mode == LossMode::kSample ? "sample" : "annotation";
  j["reweighter"] = {{"alpha", c.reweighter.alpha},
                     {"eta", c.reweighter.eta},
                     {"rho", c.reweighter.rho},
                     {"ceiling", c.reweighter.ceiling},
                     {"curvature", c.reweighter.curvature}};
  j["activation_epoch"] = c.activation_epoch;
  j["model"] = {{"learning_rate", c.model.learning_rate},
                {"weight_decay", c.model.weight_decay},
                {"epochs", c.model.epochs},
                {"batch_size", c.model.batch_size}};
  if (c.dataset.has_value()) {
    j["dataset"] = {{"train", c.dataset->train.string()},
                    {"validation", c.dataset->validation.string()}};
  } else {
    j["task"] = task_to_json(c.task);
  }
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  return j.dump(2);
}

RunConfig run_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("malformed config JSON: ") + e.what());
  }
  try {
    RunConfig c;
    if (j.contains("method")) c.method = method_from_string(j.at("method").get<std::string>());
    if (j.contains("scheme")) c.scheme = scheme_from_string(j.at("scheme").get<std::string>());
    if (j.contains("mode")) {
      const std::string m = j.at("mode").get<std::string>();
      if (m == "sample") {
        c.mode = LossMode::kSample;
      } else if (m == "annotation") {
        c.mode = LossMode::kAnnotation;
      } else {
        throw SchemaError("config: mode must be sample|annotation");
      }
    }
    if (j.contains("reweighter")) {
      const json& r = j.at("reweighter");
      c.reweighter.alpha = r.value("alpha", c.reweighter.alpha);
      c.reweighter.eta = r.value("eta", c.reweighter.eta);
      c.reweighter.rho = r.value("rho", c.reweighter.rho);
      c.reweighter.ceiling = r.value("ceiling", c.reweighter.ceiling);
      c.reweighter.curvature = r.value("curvature", c.reweighter.curvature);
    }
    c.activation_epoch = j.value("activation_epoch", c.activation_epoch);
    if (j.contains("model")) {
      const json& m = j.at("model");
      c.model.learning_rate = m.value("learning_rate", c.model.learning_rate);
      c.model.weight_decay = m.value("weight_decay", c.model.weight_decay);
      c.model.epochs = m.value("epochs", c.model.epochs);
      c.model.batch_size = m.value("batch_size", c.model.batch_size);
    }
    if (j.contains("dataset")) {
      DatasetPaths p;
      p.train = j.at("dataset").at("train").get<std::string>();
      p.validation = j.at("dataset").at("validation").get<std::string>();
      c.dataset = std::move(p);
    } else if (j.contains("task")) {
      c.task = task_from_json(j.at("task"));
    }
    c.seed = j.value("seed", c.seed);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("bad config: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return run_config_from_json(buf.str());
}

std::string run_id(const RunConfig& config) {
  // nlohmann objects are key-sorted, so the dump is canonical.
  const std::uint64_t h = fnv1a64(run_config_to_json(config));
  char buf[32];
  std::snprintf(buf, sizeof(buf), "run_%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace stardro
