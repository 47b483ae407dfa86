#include "calnet/config.hpp"

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

namespace calnet {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& path) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) throw ConfigError("unknown config key '" + path + key + "'");
  }
}

CalibKind parse_calib(const std::string& s, const std::string& path) {
  if (s == "scale") return CalibKind::Scale;
  if (s == "log_scale") return CalibKind::LogScale;
  if (s == "linear") return CalibKind::Linear;
  throw ConfigError(path + ": calibration must be scale, log_scale, or linear, got '" + s + "'");
}

std::string calib_name(CalibKind kind) {
  switch (kind) {
    case CalibKind::Scale:
      return "scale";
    case CalibKind::LogScale:
      return "log_scale";
    case CalibKind::Linear:
      return "linear";
  }
  return "log_scale";
}

KernelSpec parse_kernel(const json& j, const std::string& path) {
  check_keys(j, {"kind", "eq_variance", "lengthscale", "bias_variance"}, path + ".");
  const std::string kind = j.at("kind").get<std::string>();
  KernelSpec spec;
  if (kind == "eq")
    spec.kind = KernelKind::EQ;
  else if (kind == "bias")
    spec.kind = KernelKind::Bias;
  else if (kind == "sum_eq_bias")
    spec.kind = KernelKind::SumEqBias;
  else
    throw ConfigError(path + ".kind: must be eq, bias, or sum_eq_bias, got '" + kind + "'");
  if (j.contains("eq_variance")) spec.eq_variance = j.at("eq_variance").get<double>();
  if (j.contains("lengthscale")) spec.lengthscale = j.at("lengthscale").get<double>();
  if (j.contains("bias_variance")) spec.bias_variance = j.at("bias_variance").get<double>();
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return spec;
}

json kernel_json(const KernelSpec& spec) {
  json j;
  switch (spec.kind) {
    case KernelKind::EQ:
      j["kind"] = "eq";
      j["eq_variance"] = spec.eq_variance;
      j["lengthscale"] = spec.lengthscale;
      break;
    case KernelKind::Bias:
      j["kind"] = "bias";
      j["bias_variance"] = spec.bias_variance;
      break;
    case KernelKind::SumEqBias:
      j["kind"] = "sum_eq_bias";
      j["eq_variance"] = spec.eq_variance;
      j["lengthscale"] = spec.lengthscale;
      j["bias_variance"] = spec.bias_variance;
      break;
  }
  return j;
}

KernelGroup parse_group(const std::string& s) {
  if (s == "static") return KernelGroup::Static;
  if (s == "mobile") return KernelGroup::Mobile;
  if (s == "reference") return KernelGroup::Reference;
  throw ConfigError("kernels: group must be static, mobile, or reference, got '" + s + "'");
}

std::string group_name(KernelGroup g) {
  switch (g) {
    case KernelGroup::Static:
      return "static";
    case KernelGroup::Mobile:
      return "mobile";
    case KernelGroup::Reference:
      return "reference";
  }
  return "static";
}

template <class T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

KernelAssignment RunConfig::make_assignment(const SensorTable& sensors, int param_count) const {
  KernelAssignment assign(sensors);
  for (const auto& [group, spec] : kernels) assign.assign_all(group, spec, param_count);
  for (const auto& s : sensors.all()) {
    const KernelGroup g = group_of(s);
    if (g != KernelGroup::Reference && !kernels.count(g))
      throw ConfigError("config.kernels: no kernel for group '" + group_name(g) + "' (sensor " +
                        std::to_string(s.id) + ")");
  }
  return assign;
}

double RunConfig::resolve_gamma2(const std::vector<ColocationRecord>& records) const {
  if (gamma2) {
    if (!(*gamma2 > 0.0)) throw ConfigError("config.gamma2: must be > 0");
    return *gamma2;
  }
  if (records.empty()) throw DataError("cannot infer gamma2 from empty data");
  double mean = 0.0;
  const double n = 2.0 * static_cast<double>(records.size());
  for (const auto& r : records) mean += (r.y1 + r.y2) / n;
  double var = 0.0;
  for (const auto& r : records)
    var += ((r.y1 - mean) * (r.y1 - mean) + (r.y2 - mean) * (r.y2 - mean)) / n;
  if (!(var > 0.0)) throw DataError("cannot infer gamma2: measurements have zero variance");
  return 100.0 * var;
}

RunConfig default_config() {
  RunConfig cfg;
  cfg.calib_kind = CalibKind::LogScale;
  // Lengthscales sized to the synthetic drift periods (hours); variances in
  // log-scaling units.
  cfg.kernels[KernelGroup::Static] = KernelSpec::sum_eq_bias(0.5, 2200.0, 0.25);
  cfg.kernels[KernelGroup::Mobile] = KernelSpec::sum_eq_bias(0.5, 580.0, 0.25);
  cfg.sigma2 = 100.0;
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }

  RunConfig cfg = default_config();
  check_keys(j,
             {"calibration", "kernels", "sigma2", "gamma2", "train", "inducing_per_gp",
              "multihop", "filters", "pollution", "categorical", "prediction_samples"},
             "");

  if (j.contains("calibration"))
    cfg.calib_kind = parse_calib(j.at("calibration").get<std::string>(), "calibration");
  if (j.contains("sigma2")) {
    cfg.sigma2 = j.at("sigma2").get<double>();
    if (!(cfg.sigma2 > 0.0)) throw ConfigError("config.sigma2: must be > 0");
  }
  if (j.contains("gamma2")) cfg.gamma2 = j.at("gamma2").get<double>();

  if (j.contains("kernels")) {
    cfg.kernels.clear();
    for (const auto& [key, value] : j.at("kernels").items())
      cfg.kernels[parse_group(key)] = parse_kernel(value, "kernels." + key);
  }

  if (j.contains("train")) {
    const json& t = j.at("train");
    check_keys(t,
               {"steps", "batch_size", "samples", "learning_rate", "seed", "oversample_factor",
                "adam_beta1", "adam_beta2", "adam_eps", "clip_norm"},
               "train.");
    maybe(t, "steps", cfg.train.steps);
    maybe(t, "batch_size", cfg.train.batch_size);
    maybe(t, "samples", cfg.train.samples);
    maybe(t, "learning_rate", cfg.train.learning_rate);
    maybe(t, "seed", cfg.train.seed);
    maybe(t, "oversample_factor", cfg.train.oversample_factor);
    maybe(t, "adam_beta1", cfg.train.adam_beta1);
    maybe(t, "adam_beta2", cfg.train.adam_beta2);
    maybe(t, "adam_eps", cfg.train.adam_eps);
    maybe(t, "clip_norm", cfg.train.clip_norm);
  }

  if (j.contains("inducing_per_gp")) {
    cfg.inducing_per_gp = j.at("inducing_per_gp").get<int>();
    if (cfg.inducing_per_gp < 2) throw ConfigError("config.inducing_per_gp: must be >= 2");
  }
  if (j.contains("prediction_samples")) {
    cfg.prediction_samples = j.at("prediction_samples").get<int>();
    if (cfg.prediction_samples < 1) throw ConfigError("config.prediction_samples: must be >= 1");
  }

  if (j.contains("multihop")) {
    const json& m = j.at("multihop");
    check_keys(m, {"delta", "d_colocation", "d_time", "min_observations"}, "multihop.");
    maybe(m, "delta", cfg.multihop.delta);
    maybe(m, "d_colocation", cfg.multihop.d_colocation);
    maybe(m, "d_time", cfg.multihop.d_time);
    maybe(m, "min_observations", cfg.multihop.min_observations);
    try {
      cfg.multihop.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("config.multihop: ") + e.what());
    }
  }

  if (j.contains("filters")) {
    const json& f = j.at("filters");
    check_keys(f, {"min_value", "max_value", "average_block"}, "filters.");
    if (f.contains("min_value")) cfg.filters.min_value = f.at("min_value").get<double>();
    if (f.contains("max_value")) cfg.filters.max_value = f.at("max_value").get<double>();
    maybe(f, "average_block", cfg.filters.average_block);
    if (cfg.filters.average_block < 0)
      throw ConfigError("config.filters.average_block: must be >= 0");
  }

  if (j.contains("pollution")) {
    const json& p = j.at("pollution");
    check_keys(p,
               {"n_static", "n_reference", "n_mobile", "horizon_hours", "noise_scale", "seed",
                "scaling_amplitude", "pollution_base", "pollution_amplitude", "pollution_period",
                "static_period_median", "mobile_period_median", "period_log_sd",
                "visit_interval_hours", "samples_per_visit", "sample_spacing_hours"},
               "pollution.");
    maybe(p, "n_static", cfg.pollution.n_static);
    maybe(p, "n_reference", cfg.pollution.n_reference);
    maybe(p, "n_mobile", cfg.pollution.n_mobile);
    maybe(p, "horizon_hours", cfg.pollution.horizon_hours);
    maybe(p, "noise_scale", cfg.pollution.noise_scale);
    maybe(p, "seed", cfg.pollution.seed);
    maybe(p, "scaling_amplitude", cfg.pollution.scaling_amplitude);
    maybe(p, "pollution_base", cfg.pollution.pollution_base);
    maybe(p, "pollution_amplitude", cfg.pollution.pollution_amplitude);
    maybe(p, "pollution_period", cfg.pollution.pollution_period);
    maybe(p, "static_period_median", cfg.pollution.static_period_median);
    maybe(p, "mobile_period_median", cfg.pollution.mobile_period_median);
    maybe(p, "period_log_sd", cfg.pollution.period_log_sd);
    maybe(p, "visit_interval_hours", cfg.pollution.visit_interval_hours);
    maybe(p, "samples_per_visit", cfg.pollution.samples_per_visit);
    maybe(p, "sample_spacing_hours", cfg.pollution.sample_spacing_hours);
    try {
      cfg.pollution.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("config.pollution: ") + e.what());
    }
  }

  if (j.contains("categorical")) {
    const json& c = j.at("categorical");
    check_keys(c, {"n_items", "n_classes", "n_train", "seed"}, "categorical.");
    maybe(c, "n_items", cfg.categorical.n_items);
    maybe(c, "n_classes", cfg.categorical.n_classes);
    maybe(c, "n_train", cfg.categorical.n_train);
    maybe(c, "seed", cfg.categorical.seed);
    try {
      cfg.categorical.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("config.categorical: ") + e.what());
    }
  }

  return cfg;
}

std::string dump_config(const RunConfig& cfg) {
  json j;
  j["calibration"] = calib_name(cfg.calib_kind);
  j["sigma2"] = cfg.sigma2;
  if (cfg.gamma2) j["gamma2"] = *cfg.gamma2;
  for (const auto& [group, spec] : cfg.kernels)
    j["kernels"][group_name(group)] = kernel_json(spec);
  j["train"] = {{"steps", cfg.train.steps},
                {"batch_size", cfg.train.batch_size},
                {"samples", cfg.train.samples},
                {"learning_rate", cfg.train.learning_rate},
                {"seed", cfg.train.seed},
                {"oversample_factor", cfg.train.oversample_factor},
                {"adam_beta1", cfg.train.adam_beta1},
                {"adam_beta2", cfg.train.adam_beta2},
                {"adam_eps", cfg.train.adam_eps},
                {"clip_norm", cfg.train.clip_norm}};
  j["inducing_per_gp"] = cfg.inducing_per_gp;
  j["prediction_samples"] = cfg.prediction_samples;
  j["multihop"] = {{"delta", cfg.multihop.delta},
                   {"d_colocation", cfg.multihop.d_colocation},
                   {"d_time", cfg.multihop.d_time},
                   {"min_observations", cfg.multihop.min_observations}};
  json f;
  if (cfg.filters.min_value) f["min_value"] = *cfg.filters.min_value;
  if (cfg.filters.max_value) f["max_value"] = *cfg.filters.max_value;
  f["average_block"] = cfg.filters.average_block;
  j["filters"] = f;
  j["pollution"] = {{"n_static", cfg.pollution.n_static},
                    {"n_reference", cfg.pollution.n_reference},
                    {"n_mobile", cfg.pollution.n_mobile},
                    {"horizon_hours", cfg.pollution.horizon_hours},
                    {"noise_scale", cfg.pollution.noise_scale},
                    {"seed", cfg.pollution.seed},
                    {"scaling_amplitude", cfg.pollution.scaling_amplitude},
                    {"pollution_base", cfg.pollution.pollution_base},
                    {"pollution_amplitude", cfg.pollution.pollution_amplitude},
                    {"pollution_period", cfg.pollution.pollution_period},
                    {"static_period_median", cfg.pollution.static_period_median},
                    {"mobile_period_median", cfg.pollution.mobile_period_median},
                    {"period_log_sd", cfg.pollution.period_log_sd},
                    {"visit_interval_hours", cfg.pollution.visit_interval_hours},
                    {"samples_per_visit", cfg.pollution.samples_per_visit},
                    {"sample_spacing_hours", cfg.pollution.sample_spacing_hours}};
  j["categorical"] = {{"n_items", cfg.categorical.n_items},
                      {"n_classes", cfg.categorical.n_classes},
                      {"n_train", cfg.categorical.n_train},
                      {"seed", cfg.categorical.seed}};
  return j.dump(2);
}

void write_manifest(const std::string& path, const RunConfig& cfg, std::uint64_t seed) {
  const std::string dump = dump_config(cfg);
  // FNV-1a over the canonical dump.
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : dump) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
  json manifest;
  manifest["config_hash"] = hex;
  manifest["seed"] = seed;
  manifest["version"] = "0.1.0";
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path);
  out << manifest.dump(2) << '\n';
}

}  // namespace calnet
