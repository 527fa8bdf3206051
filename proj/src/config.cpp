#include "liftbench/config.hpp"

#include <filesystem>

#include "liftbench/errors.hpp"
#include "liftbench/text.hpp"

namespace liftbench {

std::string_view cut_mode_name(CutMode m) { return m == CutMode::Equation ? "equation" : "prose"; }

CutMode parse_cut_mode(std::string_view s) {
  if (s == "equation") return CutMode::Equation;
  if (s == "prose") return CutMode::Prose;
  throw ConfigError("mode must be equation or prose, got '" + std::string(s) + "'");
}

std::string RunConfig::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

std::string RunConfig::output_path(const std::string& name) const {
  return (std::filesystem::path(resolve(output_dir)) / name).string();
}

std::map<std::string, ProviderConfig> default_providers() {
  std::map<std::string, ProviderConfig> p;
  p["mock"] = {"mock", "", "", 1, 0.0, ""};
  p["openai"] = {"openai_responses", "https://api.openai.com/v1", "OPENAI_API_KEY", 4, 1.0, ""};
  p["anthropic"] = {"anthropic_messages", "https://api.anthropic.com/v1", "ANTHROPIC_API_KEY", 4, 1.0, ""};
  p["fireworks"] = {"completions_echo", "https://api.fireworks.ai/inference/v1", "FIREWORKS_API_KEY", 4, 0.1, ""};
  return p;
}

namespace {

template <class T>
void read_if(const Json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

PredictorSetting predictor_from(const Json& j) {
  if (j.is_string()) return PredictorSetting::parse(j.get<std::string>());
  PredictorSetting s;
  if (j.contains("id")) s = PredictorSetting::parse(j.at("id").get<std::string>());
  read_if(j, "provider", s.provider_id);
  read_if(j, "model", s.model_id);
  if (j.contains("effort")) s.reasoning_effort = parse_effort(j.at("effort").get<std::string>());
  read_if(j, "temperature", s.temperature);
  read_if(j, "max_forecast_chars", s.max_forecast_chars);
  if (s.provider_id.empty() || s.model_id.empty()) throw ConfigError("predictor needs provider and model: " + j.dump());
  return s;
}

}  // namespace

RunConfig config_from_json(const Json& j, const std::string& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  c.base_dir = base_dir.empty() ? "." : base_dir;
  c.config_digest = sha256_hex(j.dump());
  try {
    c.run_id = j.value("run_id", "run-" + c.config_digest.substr(0, 12));
    read_if(j, "seed", c.seed);
    if (j.contains("mode")) c.mode = parse_cut_mode(j.at("mode").get<std::string>());
    read_if(j, "output_dir", c.output_dir);
    read_if(j, "cache_path", c.cache_path);
    read_if(j, "inputs", c.inputs);
    read_if(j, "urls", c.urls);

    if (j.contains("filters")) {
      const auto& f = j.at("filters");
      read_if(f, "min_pages", c.filters.min_pages);
      read_if(f, "chars_per_page", c.filters.chars_per_page);
      read_if(f, "keywords", c.filters.keywords);
      read_if(f, "categories", c.filters.categories);
    }
    if (j.contains("equation")) {
      const auto& e = j.at("equation");
      read_if(e, "environments", c.equation.environments);
      read_if(e, "bracket_display", c.equation.bracket_display);
      read_if(e, "operator_symbols", c.equation.operator_symbols);
      read_if(e, "operator_commands", c.equation.operator_commands);
      read_if(e, "context_chars", c.equation.context_chars);
      read_if(e, "min_suffix", c.equation.min_suffix);
      read_if(e, "max_suffix", c.equation.max_suffix);
      read_if(e, "budget_pad", c.equation.budget_pad);
      read_if(e, "max_cuts_per_paper", c.equation.max_cuts_per_paper);
    }
    if (j.contains("prose")) {
      const auto& p = j.at("prose");
      read_if(p, "context_chars", c.prose.context_chars);
      read_if(p, "target_chars", c.prose.target_chars);
      read_if(p, "equation_scan_chars", c.prose.equation_scan_chars);
      read_if(p, "pre_short", c.prose.pre_short);
      read_if(p, "pre_long", c.prose.pre_long);
      read_if(p, "max_cuts_per_paper", c.prose.max_cuts_per_paper);
      read_if(p, "math_environments", c.prose.math_environments);
      read_if(p, "forecast_budget", c.scaffold.prose_forecast_budget);
      read_if(p, "predictor_chars", c.scaffold.prose_predictor_chars);
    }

    if (j.contains("predictors")) {
      for (const auto& p : j.at("predictors")) c.predictors.push_back(predictor_from(p));
    }
    read_if(j, "repeats", c.repeats);
    if (c.repeats < 1) throw ConfigError("repeats must be >= 1");
    read_if(j, "scorers", c.scorers);
    for (const auto& s : c.scorers) split_model_id(s);
    read_if(j, "conditions", c.conditions);
    if (c.conditions.empty()) {
      c.conditions = c.mode == CutMode::Equation
                         ? std::vector<std::string>{"empty", "same_budget", "triple_budget", "forecast", "true_suffix"}
                         : std::vector<std::string>{"prose_context", "prose_forecast"};
    }
    for (const auto& name : c.conditions) {
      const auto kind = condition_kind_from_name(name);
      if (!kind) throw ConfigError("unknown condition '" + name + "'");
      if (is_equation_condition(*kind) != (c.mode == CutMode::Equation)) {
        throw ConfigError("condition '" + name + "' does not apply to " + std::string(cut_mode_name(c.mode)) +
                          " cuts");
      }
    }
    read_if(j, "contrasts", c.contrasts);
    for (const auto& ct : c.contrasts) {
      if (ct.find('|') == std::string::npos) throw ConfigError("contrast '" + ct + "' is not of the form lhs|rhs");
    }
    if (j.contains("metrics")) {
      for (const auto& m : j.at("metrics")) c.metrics.push_back(MetricKind::parse(m.get<std::string>()));
    } else {
      c.metrics = standard_metric_suite();
    }
    if (j.contains("windows")) {
      read_if(j, "windows", c.windows);
    } else if (c.mode == CutMode::Prose) {
      c.windows.assign(std::begin(kStandardWindows), std::end(kStandardWindows));
    }
    for (auto w : c.windows) {
      if (w == 0) throw ConfigError("window sizes must be >= 1");
    }
    read_if(j, "alpha", c.alpha);
    read_if(j, "exclude_straddled", c.exclude_straddled);
    if (j.contains("cut_manifest")) c.cut_manifest = j.at("cut_manifest").get<std::string>();
    if (j.contains("subset")) {
      const auto& s = j.at("subset");
      c.subset_baseline = s.at("baseline").get<std::string>();
      read_if(s, "quantile", c.subset_quantile);
      if (!(c.subset_quantile > 0.0 && c.subset_quantile < 1.0)) throw ConfigError("subset quantile must be in (0, 1)");
    }

    if (j.contains("max_spend") && !j.at("max_spend").is_null()) c.max_spend = j.at("max_spend").get<double>();
    read_if(j, "offline", c.offline);
    read_if(j, "workers", c.workers);
    if (c.workers < 1) throw ConfigError("workers must be >= 1");
    if (j.contains("retry")) {
      const auto& r = j.at("retry");
      read_if(r, "max_attempts", c.retry.max_attempts);
      if (r.contains("base_delay_ms")) c.retry.base_delay = std::chrono::milliseconds(r.at("base_delay_ms").get<long>());
      read_if(r, "multiplier", c.retry.multiplier);
      if (c.retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be >= 1");
    }

    c.providers = default_providers();
    if (j.contains("providers")) {
      for (const auto& [name, pj] : j.at("providers").items()) {
        ProviderConfig p = c.providers.count(name) ? c.providers[name] : ProviderConfig{};
        read_if(pj, "kind", p.kind);
        read_if(pj, "base_url", p.base_url);
        read_if(pj, "api_key_env", p.api_key_env);
        read_if(pj, "max_in_flight", p.max_in_flight);
        read_if(pj, "cost_per_call", p.cost_per_call);
        read_if(pj, "training_dir", p.training_dir);
        if (p.kind.empty()) throw ConfigError("provider '" + name + "' has no kind");
        c.providers[name] = p;
      }
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (c.cache_path.empty()) c.cache_path = (std::filesystem::path(c.output_dir) / "cache.jsonl").string();
  return c;
}

Json read_config_json(const std::string& path) {
  if (path.empty()) return Json::object();
  const std::string text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace liftbench
