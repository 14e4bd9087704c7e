// parksim: run, sweep, train, report and validate parking-search simulations.

#include "parksim/config.hpp"
#include "parksim/engine.hpp"
#include "parksim/errors.hpp"
#include "parksim/metrics.hpp"
#include "parksim/predictor.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace parksim;

namespace {

  constexpr int kOk = 0;
  constexpr int kPartial = 1;
  constexpr int kBadInput = 2;

  struct CommonFlags {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<std::string> strategy;
    std::optional<std::uint64_t> seed;
    std::optional<int> runs;
  };

  void add_common(CLI::App* cmd, CommonFlags& flags, bool requireConfig = true) {
    auto* opt = cmd->add_option("-c,--config", flags.config, "config file of `key = value` lines");
    if (requireConfig) {
      opt->required();
    }
    cmd->add_option("--set", flags.overrides, "override a config key, as key=value (repeatable)");
    cmd->add_option("--strategy", flags.strategy, "unc-agn, cord-agn, cord-oracle or cord-approx (key: strategy)");
    cmd->add_option("--seed", flags.seed, "master seed (key: seed)");
    cmd->add_option("--runs", flags.runs, "independent runs per invocation (key: runs)");
  }

  SimConfig resolve_config(CommonFlags const& flags) {
    SimConfig config = flags.config.empty() ? SimConfig{} : load_config_file(flags.config);
    for (auto const& item : flags.overrides) {
      auto const eq = item.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("--set expects key=value, got '" + item + "'");
      }
      apply_config_value(config, item.substr(0, eq), item.substr(eq + 1));
    }
    if (flags.strategy) {
      apply_config_value(config, "strategy", *flags.strategy);
    }
    if (flags.seed) {
      config.seed = *flags.seed;
    }
    if (flags.runs) {
      apply_config_value(config, "runs", std::to_string(*flags.runs));
    }
    config.validate();
    return config;
  }

  std::ofstream open_file(fs::path const& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
      throw IoError("cannot write '" + path.string() + "'");
    }
    return out;
  }

  void ensure_dir(fs::path const& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
      throw IoError("cannot create output directory '" + dir.string() + "'");
    }
  }

  Window window_of(SimConfig const& config) { return {config.peak_start, config.peak_end}; }

  /// Everything `run` writes for one set of runs.
  void write_outputs(fs::path const& dir, SimConfig const& config, GridWorld const& world,
                     std::vector<RunResult> const& runs, HistoryCorpus history) {
    ensure_dir(dir);
    {
      auto out = open_file(dir / "events.ndjson");
      write_events(out, runs, world.spec);
    }
    {
      auto out = open_file(dir / "ticks.csv");
      write_ticks(out, runs);
    }
    {
      auto out = open_file(dir / "grid.csv");
      write_grid(out, world);
    }
    for (auto const& run : runs) {
      history = merge_observations(std::move(history), run);
    }
    {
      auto out = open_file(dir / "history.csv");
      write_history(out, history);
    }
    export_report(build_report(runs, world.spec, window_of(config), config_entries(config)), dir);
  }

  HistoryCorpus input_history(SimConfig const& config) {
    return config.history_file.empty() ? HistoryCorpus{} : load_history_file(config.history_file);
  }

  int cmd_run(CommonFlags const& flags, std::string const& outDir) {
    auto const config = resolve_config(flags);
    auto const world = load_world(config);
    auto const runs = run_simulation(config);
    write_outputs(outDir, config, world, runs, input_history(config));
    auto const report = build_report(runs, world.spec, window_of(config));
    for (auto const& s : report.strategies) {
      for (auto const& r : s.runs) {
        auto show = [](std::optional<double> v) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.4f", v.value_or(std::nan("")));
          return v ? std::string(buf) : std::string("NA");
        };
        std::cout << to_string(s.strategy) << " run " << r.run << ": participant success "
                  << show(r.participant.success_ratio()) << ", competitor success "
                  << show(r.competitor.success_ratio()) << '\n';
      }
    }
    return kOk;
  }

  template <typename T>
  std::vector<T> parse_list(std::string const& text, char const* what) {
    std::vector<T> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
      if (item.empty()) {
        continue;
      }
      if constexpr (std::is_same_v<T, std::string>) {
        out.push_back(item);
      } else {
        std::istringstream parse(item);
        T value{};
        if (!(parse >> value) || !parse.eof()) {
          throw ConfigError(std::string("cannot parse '") + item + "' in " + what);
        }
        out.push_back(value);
      }
    }
    if (out.empty()) {
      throw ConfigError(std::string(what) + " must not be empty");
    }
    return out;
  }

  struct SweepCell {
    StrategyKind strategy;
    std::uint64_t seed;
    double scale;
    std::string name;
    std::optional<RunResult> result;
    std::string error;
  };

  int cmd_sweep(CommonFlags const& flags, std::string const& outDir, std::string const& strategies,
                std::string const& seeds, std::string const& scales, int jobs) {
    auto const base = resolve_config(flags);
    std::vector<SweepCell> cells;
    for (auto const& scale : parse_list<double>(scales, "--scales")) {
      for (auto const& name : parse_list<std::string>(strategies, "--strategies")) {
        auto const kind = parse_strategy(name);
        for (auto const seed : parse_list<std::uint64_t>(seeds, "--seeds")) {
          char label[96];
          std::snprintf(label, sizeof label, "%s-s%llu-x%g", to_string(kind).c_str(),
                        static_cast<unsigned long long>(seed), scale);
          cells.push_back({kind, seed, scale, label, std::nullopt, {}});
        }
      }
    }
    ensure_dir(outDir);
    std::atomic<std::size_t> next{0};
    std::mutex logMutex;
    auto worker = [&] {
      for (std::size_t i = next++; i < cells.size(); i = next++) {
        auto& cell = cells[i];
        try {
          SimConfig config = base;
          config.strategy = cell.strategy;
          config.seed = cell.seed;
          config.demand_scale = base.demand_scale * cell.scale;
          config.runs = 1;
          auto const world = load_world(config);
          auto runs = run_simulation(config);
          write_outputs(fs::path(outDir) / cell.name, config, world, runs, input_history(config));
          cell.result = std::move(runs.front());
          cell.result->events.clear();
        } catch (std::exception const& e) {
          cell.error = e.what();
          std::lock_guard lock(logMutex);
          std::cerr << "sweep cell " << cell.name << " failed: " << e.what() << '\n';
        }
      }
    };
    std::vector<std::thread> pool;
    for (int j = 1; j < std::max(jobs, 1); ++j) {
      pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
      t.join();
    }

    auto out = open_file(fs::path(outDir) / "comparison.csv");
    out << "strategy,seed,scale,participant_success_ratio,competitor_success_ratio,"
           "participant_avg_search_time,competitor_avg_search_time,status\n";
    auto const world = load_world(base);
    auto const window = window_of(base);
    std::size_t failed = 0;
    std::map<double, std::vector<RunResult>> byScale;
    for (auto const& cell : cells) {
      char prefix[128];
      std::snprintf(prefix, sizeof prefix, "%s,%llu,%g", to_string(cell.strategy).c_str(),
                    static_cast<unsigned long long>(cell.seed), cell.scale);
      out << prefix;
      if (!cell.result) {
        ++failed;
        out << ",NA,NA,NA,NA,failed\n";
        continue;
      }
      auto const p = tally_group(cell.result->outcomes, Group::participant, window);
      auto const c = tally_group(cell.result->outcomes, Group::competitor, window);
      auto fmt = [](std::optional<double> v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", v.value_or(0.0));
        return v ? std::string(buf) : std::string("NA");
      };
      out << ',' << fmt(p.success_ratio()) << ',' << fmt(c.success_ratio()) << ',' << fmt(p.avg_search_time())
          << ',' << fmt(c.avg_search_time()) << ",ok\n";
      auto run = *cell.result;
      run.run = static_cast<int>(byScale[cell.scale].size());
      byScale[cell.scale].push_back(std::move(run));
    }
    for (auto const& [scale, runs] : byScale) {
      char dir[64];
      std::snprintf(dir, sizeof dir, "summary-x%g", scale);
      export_report(build_report(runs, world.spec, window, config_entries(base)), fs::path(outDir) / dir);
    }
    std::cout << cells.size() - failed << " of " << cells.size() << " sweep cells completed\n";
    return failed == 0 ? kOk : kPartial;
  }

  int cmd_train(CommonFlags const& flags, std::string const& historyPath, std::string const& outPath,
                std::string const& lambdas, int folds) {
    auto const config = resolve_config(flags);
    auto const world = load_world(config);
    auto const corpus = load_history_file(historyPath);
    if (corpus.empty()) {
      throw ValidationError("history '" + historyPath + "' holds no records");
    }
    RetrainOptions options{FeatureSchema{world.spec.cell_count(), config.day0_weekday}};
    options.lambda_grid = parse_list<double>(lambdas, "--lambdas");
    options.folds = folds;
    options.window_days = config.window_days;
    auto const model = retrain(corpus, options);
    auto out = open_file(outPath);
    write_model(out, model);
    std::cout << "trained on " << corpus.size() << " records, lambda " << model.lambda << '\n';
    return kOk;
  }

  int cmd_report(std::string const& inDir, std::string outDir) {
    fs::path const in(inDir);
    for (auto const* name : {"events.ndjson", "ticks.csv", "grid.csv", "report.json"}) {
      if (!fs::is_regular_file(in / name)) {
        throw IoError("log directory '" + inDir + "' lacks " + name);
      }
    }
    if (outDir.empty()) {
      outDir = inDir;
    }
    auto const world = load_grid_file((in / "grid.csv").string());
    std::ifstream meta(in / "report.json");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(meta);
    } catch (nlohmann::json::exception const& e) {
      throw ParseError(std::string("report.json: ") + e.what(), 1);
    }
    Window const window{doc.at("window").at("start").get<long>(), doc.at("window").at("end").get<long>()};
    std::map<std::string, std::string> config;
    for (auto const& [k, v] : doc.at("config").items()) {
      config[k] = v.get<std::string>();
    }
    long const horizon = config.count("horizon") ? std::stol(config["horizon"]) : 1440;

    std::ifstream events(in / "events.ndjson");
    std::ifstream ticks(in / "ticks.csv");
    auto runs = read_log(events, ticks, world.spec, horizon);
    if (runs.empty()) {
      throw ValidationError("log directory '" + inDir + "' holds no runs");
    }
    std::map<int, nlohmann::json> meta_of;
    std::map<int, StrategyKind> strategy_of;
    for (auto const& s : doc.at("strategies")) {
      for (auto const& r : s.at("runs")) {
        meta_of[r.at("run").get<int>()] = r;
        strategy_of[r.at("run").get<int>()] = parse_strategy(s.at("strategy").get<std::string>());
      }
    }
    for (auto& run : runs) {
      if (!meta_of.count(run.run)) {
        throw SchemaError("run " + std::to_string(run.run) + " missing from report.json");
      }
      auto const& r = meta_of[run.run];
      run.strategy = strategy_of[run.run];
      run.seed = r.at("seed").get<std::uint64_t>();
      run.day = r.at("day").get<int>();
      auto const& checks = r.at("checks");
      run.checks = {checks.at("ticks").get<long>(), checks.at("occupancy").get<long>(),
                    checks.at("partition").get<long>(), checks.at("award").get<long>()};
    }
    export_report(build_report(runs, world.spec, window, config), outDir);
    std::cout << "rendered " << runs.size() << " runs into " << outDir << '\n';
    return kOk;
  }

  int cmd_validate(CommonFlags const& flags) {
    auto const config = resolve_config(flags);
    auto const world = load_world(config);
    auto const arrivals = load_arrivals(config, world);
    if (!config.history_file.empty()) {
      load_history_file(config.history_file);
    }
    if (config.strategy == StrategyKind::CordApprox && config.history_file.empty() && config.model_file.empty()) {
      throw ConfigError("cord-approx predictor requires history");
    }
    std::cout << "ok: " << world.spec.n() << "x" << world.spec.n() << " grid, " << world.total_capacity()
              << " spots, " << arrivals.total_participants() << " participants and "
              << arrivals.total_competitors() << " competitors\n";
    return kOk;
  }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parking-search simulator with coordinated dispatch strategies"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "parksim 1.0");

  CommonFlags runFlags, sweepFlags, trainFlags, validateFlags;
  std::string runOut = "out";
  auto* run = app.add_subcommand("run", "simulate config.runs days and write logs and reports");
  add_common(run, runFlags);
  run->add_option("-o,--out", runOut, "output directory")->capture_default_str();

  std::string sweepOut = "sweep", strategies = "unc-agn,cord-agn,cord-oracle,cord-approx", seeds = "1,2,3",
              scales = "1";
  int jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "strategies x seeds x demand scales, paired seeds across strategies");
  add_common(sweep, sweepFlags);
  sweep->add_option("-o,--out", sweepOut, "output directory")->capture_default_str();
  sweep->add_option("--strategies", strategies, "comma-separated strategies")->capture_default_str();
  sweep->add_option("--seeds", seeds, "comma-separated master seeds")->capture_default_str();
  sweep->add_option("--scales", scales, "comma-separated demand scales")->capture_default_str();
  sweep->add_option("-j,--jobs", jobs, "parallel sweep cells")->capture_default_str()->check(CLI::PositiveNumber);

  std::string historyPath, modelOut = "model.json", lambdas = "0.001,0.01,0.1,1,10,100";
  int folds = 5;
  auto* train = app.add_subcommand("train", "fit the availability predictor on a history corpus");
  add_common(train, trainFlags);
  train->add_option("--history", historyPath, "history corpus k,bucket_start,rho,attempts")->required();
  train->add_option("-o,--out", modelOut, "model file")->capture_default_str();
  train->add_option("--lambdas", lambdas, "ridge penalty grid")->capture_default_str();
  train->add_option("--folds", folds, "cross-validation folds")->capture_default_str();

  std::string reportIn, reportOut;
  auto* report = app.add_subcommand("report", "re-render reports from a run's log directory");
  report->add_option("--in", reportIn, "log directory written by run")->required();
  report->add_option("-o,--out", reportOut, "output directory (defaults to --in)");

  auto* validate = app.add_subcommand("validate", "check a config and its inputs without simulating");
  add_common(validate, validateFlags);

  try {
    app.parse(argc, argv);
  } catch (CLI::CallForHelp const& e) {
    return app.exit(e);
  } catch (CLI::CallForAllHelp const& e) {
    return app.exit(e);
  } catch (CLI::CallForVersion const& e) {
    return app.exit(e);
  } catch (CLI::ParseError const& e) {
    app.exit(e);
    return kBadInput;
  }

  try {
    if (*run) {
      return cmd_run(runFlags, runOut);
    }
    if (*sweep) {
      return cmd_sweep(sweepFlags, sweepOut, strategies, seeds, scales, jobs);
    }
    if (*train) {
      return cmd_train(trainFlags, historyPath, modelOut, lambdas, folds);
    }
    if (*report) {
      return cmd_report(reportIn, reportOut);
    }
    return cmd_validate(validateFlags);
  } catch (Error const& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (nlohmann::json::exception const& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  }
}
