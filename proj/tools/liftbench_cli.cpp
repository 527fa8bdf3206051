// liftbench command-line driver. Every subcommand runs one pipeline stage
// against the output directory named in the config; `run` chains them all.

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <iostream>

#include "liftbench/errors.hpp"
#include "liftbench/pipeline.hpp"

using namespace liftbench;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<std::string> metric;
  std::optional<std::size_t> window;
  std::optional<double> max_spend;
  bool offline = false;
  std::vector<std::string> scorers;
  std::vector<std::string> predictors;
  std::optional<std::string> output_dir;
  std::optional<bool> exclude_straddled;
  std::string log_level = "info";
};

RunConfig build_config(const Overrides& o, const std::vector<std::string>& inputs) {
  Json j = read_config_json(o.config_path);
  if (o.seed) j["seed"] = *o.seed;
  if (o.mode) j["mode"] = *o.mode;
  if (o.metric) j["metrics"] = Json::array({*o.metric});
  if (o.window) j["windows"] = Json::array({*o.window});
  if (o.max_spend) j["max_spend"] = *o.max_spend;
  if (o.offline) j["offline"] = true;
  if (!o.scorers.empty()) j["scorers"] = o.scorers;
  if (!o.predictors.empty()) j["predictors"] = o.predictors;
  if (o.output_dir) j["output_dir"] = std::filesystem::absolute(*o.output_dir).string();
  if (o.exclude_straddled) j["exclude_straddled"] = *o.exclude_straddled;
  if (!inputs.empty()) {
    Json abs = Json::array();
    for (const auto& in : inputs) abs.push_back(std::filesystem::absolute(in).string());
    j["inputs"] = abs;
  }
  const std::string base =
      o.config_path.empty() ? "." : std::filesystem::absolute(o.config_path).parent_path().string();
  return config_from_json(j, base);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Likelihood-lift benchmark pipeline"};
  app.fallthrough();
  app.require_subcommand(1);
  Overrides o;
  app.add_option("--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Seed for cut selection");
  app.add_option("--mode", o.mode, "equation or prose")->check(CLI::IsMember({"equation", "prose"}));
  app.add_option("--metric", o.metric, "Restrict analysis to one metric, e.g. clip_ll_2");
  app.add_option("--window", o.window, "Restrict window scoring to the first N target tokens")
      ->check(CLI::PositiveNumber);
  app.add_option("--max-spend", o.max_spend, "Spend cap in provider cost units")->check(CLI::NonNegativeNumber);
  app.add_flag("--offline", o.offline, "Refuse network providers; mocks only");
  app.add_option("--scorer", o.scorers, "Scorer id provider/model (repeatable)");
  app.add_option("--predictor", o.predictors, "Predictor provider/model:effort (repeatable)");
  app.add_option("--out", o.output_dir, "Output directory (overrides the config)");
  app.add_flag("--exclude-straddled{true}", o.exclude_straddled, "Drop cuts with a boundary-straddling token");
  app.add_option("--log-level", o.log_level, "trace, debug, info, warn, error")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error"}));

  std::vector<std::string> inputs;
  auto* ingest = app.add_subcommand("ingest", "Load source archives into corpus.jsonl");
  ingest->add_option("inputs", inputs, "Archives or directories (default: config inputs)");
  auto* cut = app.add_subcommand("cut", "Extract cuts into cuts.jsonl");
  auto* forecast = app.add_subcommand("forecast", "Collect predictor forecasts into forecasts.jsonl");
  auto* score = app.add_subcommand("score", "Score every condition into scores.jsonl");
  auto* analyze = app.add_subcommand("analyze", "Write aggregates.csv, ecdf.csv, medians.csv, reasoning.csv");
  auto* probe = app.add_subcommand("probe-toy", "Run the toy equivalent-continuation probe");
  auto* report = app.add_subcommand("report", "Write report.md");
  auto* run = app.add_subcommand("run", "ingest, cut, forecast, score, analyze and report in sequence");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(o.log_level));

  try {
    Pipeline p(build_config(o, inputs));
    const auto& cfg = p.config();
    if (ingest->parsed() || run->parsed()) fmt::print("ingest: {} papers\n", p.ingest());
    if (cut->parsed() || run->parsed()) fmt::print("cut: {} cuts\n", p.cut());
    if (forecast->parsed() || run->parsed()) fmt::print("forecast: {} forecasts\n", p.forecast());
    if (score->parsed() || run->parsed()) fmt::print("score: {} score records\n", p.score());
    if (analyze->parsed() || run->parsed()) {
      fmt::print("analyze: {} aggregate rows\n", p.analyze().aggregates.size());
    }
    if (report->parsed() || run->parsed()) {
      p.report();
      fmt::print("report: {}\n", cfg.output_path("report.md"));
    }
    if (probe->parsed()) {
      const std::string scorer = cfg.scorers.empty() ? "mock/ngram" : cfg.scorers.front();
      std::cout << p.probe_toy(scorer).markdown();
    }
  } catch (const ConfigError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
