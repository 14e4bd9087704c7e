// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: parksim_acceptance [criterion ...]   (default: all)

#include "support/oracles.hpp"

#include "parksim/config.hpp"
#include "parksim/engine.hpp"
#include "parksim/errors.hpp"
#include "parksim/metrics.hpp"
#include "parksim/predictor.hpp"
#include "parksim/strategies.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace parksim;
namespace fs = std::filesystem;

namespace {

  struct Verdict {
    bool pass{false};
    std::string detail;
  };

  using Clock = std::chrono::steady_clock;

  double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
  }

  std::string fmt(char const* pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
  }

  // ---- scenarios -----------------------------------------------------------------------------

  constexpr int kSeeds = 20;
  constexpr std::uint64_t kMaster = 20240601;

  SimConfig city(double magnitude, std::optional<double> participant_fraction = std::nullopt) {
    SimConfig c;
    c.synthetic_grid.n = 10;
    c.synth.pattern = DemandPattern::hotspot;
    c.synth.hotspot_center = CellCoord{1, 1};
    c.synth.hotspot_sigma = 3.0;
    c.synth.hotspot_diurnal = true;
    c.synth.magnitude = magnitude;
    c.synth_participant_fraction = participant_fraction;
    c.dwell = DwellSpec::lognormal(15.0, 0.5);
    c.radius = 1;
    c.t_max = 30;
    c.record_events = false;
    c.runs = 1;
    return c;
  }

  // Intermediate availability, equal participant and competitor arrivals.
  SimConfig ordering_city() { return city(1.0, 0.5); }
  // Clustered demand with long dwell: availability stays in the low regime at peak.
  SimConfig scarce_city() {
    auto c = city(1.5);
    c.dwell = DwellSpec::lognormal(45.0, 0.5);
    return c;
  }
  // Default shares, intermediate availability.
  SimConfig regime_city() { return city(1.2); }
  // Time-invariant arrivals for the predictor loop.
  SimConfig stationary_city() {
    auto c = city(1.0);
    c.synth.hotspot_diurnal = false;
    return c;
  }

  struct Scenario {
    SimConfig config;
    GridWorld world;
    ArrivalSeries arrivals;
    Window window;
  };

  Scenario prepare(SimConfig config) {
    auto world = load_world(config);
    auto arrivals = load_arrivals(config, world);
    Window const window{config.peak_start, config.peak_end};
    return {std::move(config), std::move(world), std::move(arrivals), window};
  }

  RunResult run_strategy(Scenario const& s, StrategyKind kind, int seed_index) {
    auto config = s.config;
    config.strategy = kind;
    auto const seed = run_seed(kMaster, seed_index);
    if (kind == StrategyKind::CordApprox) {
      return run_approx_rounds(s.world, s.arrivals, config, seed, 3).rounds.back();
    }
    return run_single(s.world, s.arrivals, config, seed, seed_index, 0);
  }

  double participant_success(Scenario const& s, RunResult const& run) {
    return tally_group(run.outcomes, Group::participant, s.window).success_ratio().value_or(std::nan(""));
  }

  struct PairedTest {
    double mean{0.0};
    double t{0.0};
    bool positive{false};
  };

  // One-sided paired t-test of mean(a - b) > 0 at the 95% level.
  PairedTest paired(std::vector<double> const& a, std::vector<double> const& b) {
    auto const n = static_cast<double>(a.size());
    std::vector<double> d(a.size());
    double mean = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      d[k] = a[k] - b[k];
      mean += d[k] / n;
    }
    double var = 0.0;
    for (double x : d) {
      var += (x - mean) * (x - mean) / (n - 1.0);
    }
    double const se = std::sqrt(var / n);
    double const t = se > 0.0 ? mean / se : (mean > 0.0 ? INFINITY : 0.0);
    boost::math::students_t const dist(n - 1.0);
    double const critical = boost::math::quantile(dist, 0.95);
    return {mean, t, t > critical};
  }

  // Runs of the ordering scenario are shared by criteria 4, 7 and 9.
  struct OrderingRuns {
    Scenario scenario;
    std::vector<std::vector<RunResult>> runs;  // [strategy][seed]
    std::vector<std::string> violations;
    double slowest_oracle_seconds{0.0};
    bool done{false};
  };

  OrderingRuns& ordering_runs() {
    static OrderingRuns cache{prepare(ordering_city()), {}, {}, 0.0, false};
    if (cache.done) {
      return cache;
    }
    cache.runs.assign(4, {});
    for (std::size_t k = 0; k < 4; ++k) {
      for (int seed = 0; seed < kSeeds; ++seed) {
        auto const start = Clock::now();
        try {
          cache.runs[k].push_back(run_strategy(cache.scenario, kAllStrategies[k], seed));
        } catch (Error const& e) {
          cache.violations.push_back(to_string(kAllStrategies[k]) + " seed " + std::to_string(seed) + ": " +
                                     e.what());
          cache.runs[k].emplace_back();
        }
        if (kAllStrategies[k] == StrategyKind::CordOracle) {
          cache.slowest_oracle_seconds = std::max(cache.slowest_oracle_seconds, seconds_since(start));
        }
      }
    }
    cache.done = true;
    return cache;
  }

  // ---- criteria ------------------------------------------------------------------------------

  Verdict hungarian_optimality() {
    RngStream rng(1);
    auto const start = Clock::now();
    int mismatches = 0;
    for (int trial = 0; trial < 500; ++trial) {
      int const rows = rng.uniform_int(1, 7);
      int const cols = rng.uniform_int(1, 7);
      CostMatrix m(rows, cols);
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
          bool const blocked = rng.uniform01() < 0.2;
          double const value = rng.uniform01() * 100.0;
          m.set(r, c, blocked ? kInfeasible : value);
        }
      }
      auto const best = oracle::brute_force_assignment(m);
      auto const got = hungarian_assign(m);
      mismatches += static_cast<int>(got.size()) != best.cardinality || got.total_cost != best.cost;
    }
    double const elapsed = seconds_since(start);
    return {mismatches == 0 && elapsed < 10.0,
            fmt("%d/500 mismatches against brute force, %.2f s", mismatches, elapsed)};
  }

  Verdict capture_probability_mc() {
    RngStream rng(2);
    auto const start = Clock::now();
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
      int const radius = rng.uniform_int(1, 2);
      int const tau = rng.uniform_int(radius + 1, radius + 5);
      CellCoord const s{0, 0};
      CellCoord c;
      do {
        c = {rng.uniform_int(-radius - 5, radius + 5), rng.uniform_int(-radius - 5, radius + 5)};
      } while (manhattan(c, s) <= radius);
      double const p = capture_probability(c, s, radius, tau);
      double const mc = oracle::monte_carlo_capture(c, s, radius, t_budget(tau, radius), 100000, rng);
      worst = std::max(worst, std::abs(p - mc));
    }
    double const elapsed = seconds_since(start);
    return {worst <= 0.02 && elapsed < 60.0, fmt("max |p - MC| = %.4f over 200 configs, %.2f s", worst, elapsed)};
  }

  Verdict ridge_correctness() {
    RngStream rng(3);
    auto random_matrix = [&](int rows, int cols) {
      Eigen::MatrixXd X(rows, cols);
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
          X(r, c) = rng.uniform01() * 2.0 - 1.0;
        }
      }
      return X;
    };
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      int const rows = rng.uniform_int(5, 40);
      int const cols = rng.uniform_int(1, 6);
      auto const X = random_matrix(rows, cols);
      Eigen::VectorXd const y = random_matrix(rows, 1).col(0);
      double const lambda = std::pow(10.0, rng.uniform01() * 5.0 - 3.0);
      auto const model = fit_ridge(X, y, lambda);
      auto const [beta, b0] = oracle::normal_equations(X, y, lambda);
      worst = std::max(worst, (model.beta - beta).norm() / std::max(1.0, beta.norm()));
      worst = std::max(worst, std::abs(model.intercept - b0) / std::max(1.0, std::abs(b0)));
    }

    auto const X = random_matrix(30, 4);
    Eigen::VectorXd const y = random_matrix(30, 1).col(0);
    Eigen::MatrixXd A(30, 5);
    A << Eigen::VectorXd::Ones(30), X;
    Eigen::VectorXd const ls = A.colPivHouseholderQr().solve(y);
    auto const plain = fit_ridge(X, y, 0.0);
    double const lsError = std::max((plain.beta - ls.tail(4)).norm(), std::abs(plain.intercept - ls[0]));

    Eigen::MatrixXd Xc = X;
    Xc.rowwise() -= Xc.colwise().mean();
    double const shrunk = fit_ridge(Xc, y, 1e9).beta.norm();

    return {worst < 1e-9 && lsError < 1e-9 && shrunk < 1e-3,
            fmt("max rel err %.2e, lambda=0 vs lstsq %.2e, |beta| at 1e9 = %.2e", worst, lsError, shrunk)};
  }

  Verdict strategy_ordering() {
    auto const start = Clock::now();
    auto& data = ordering_runs();
    std::vector<std::vector<double>> success(4);
    for (std::size_t k = 0; k < 4; ++k) {
      for (auto const& run : data.runs[k]) {
        success[k].push_back(participant_success(data.scenario, run));
      }
    }
    auto mean = [](std::vector<double> const& v) {
      double m = 0.0;
      for (double x : v) {
        m += x / static_cast<double>(v.size());
      }
      return m;
    };
    auto const orcApx = paired(success[2], success[3]);
    auto const apxAgn = paired(success[3], success[1]);
    auto const agnUnc = paired(success[1], success[0]);
    double const elapsed = seconds_since(start);
    return {orcApx.positive && apxAgn.positive && agnUnc.positive && data.violations.empty() && elapsed < 300.0,
            fmt("success unc %.3f agn %.3f oracle %.3f approx %.3f; t(oracle-approx)=%.2f t(approx-agn)=%.2f "
                "t(agn-unc)=%.2f; %.0f s",
                mean(success[0]), mean(success[1]), mean(success[2]), mean(success[3]), orcApx.t, apxAgn.t,
                agnUnc.t, elapsed)};
  }

  Verdict contention_pathology() {
    auto const s = prepare(scarce_city());
    int hits = 0;
    double availability = 0.0;
    for (int seed = 0; seed < kSeeds; ++seed) {
      auto const run = run_strategy(s, StrategyKind::UncAgn, seed);
      auto const p = tally_group(run.outcomes, Group::participant, s.window).success_ratio();
      auto const c = tally_group(run.outcomes, Group::competitor, s.window).success_ratio();
      hits += p && c && *p <= *c;
      double sum = 0.0;
      int count = 0;
      for (auto const& t : run.ticks) {
        if (s.window.contains(t.tick)) {
          sum += t.availability;
          ++count;
        }
      }
      availability += sum / count / kSeeds;
    }
    return {hits >= 15, fmt("participants <= competitors in %d/20 seeds, peak availability %.3f", hits,
                            availability)};
  }

  Verdict regime_shape() {
    auto const s = prepare(regime_city());
    bool pass = true;
    std::string detail;
    for (auto const kind : kAllStrategies) {
      std::vector<std::optional<double>> bins[3];
      for (int seed = 0; seed < kSeeds; ++seed) {
        auto const run = run_strategy(s, kind, seed);
        auto const gap = regime_gap(run.outcomes, run.ticks);
        for (std::size_t b = 0; b < 3; ++b) {
          bins[b].push_back(gap.at(kRegimeBins[b]).delta());
        }
      }
      std::optional<double> means[3];
      for (std::size_t b = 0; b < 3; ++b) {
        means[b] = mean_defined(bins[b]);
      }
      auto show = [](std::optional<double> v) { return v ? fmt("%.3f", *v) : std::string("NA"); };
      detail += to_string(kind) + " L/I/H " + show(means[0]) + "/" + show(means[1]) + "/" + show(means[2]) + "; ";
      if (kind == StrategyKind::UncAgn) {
        for (auto const& m : means) {
          pass = pass && (!m || *m <= 0.05);
        }
      } else {
        pass = pass && means[1] && means[2] && *means[1] > *means[2];
      }
    }
    return {pass, detail.substr(0, detail.size() - 2)};
  }

  Verdict conservation() {
    auto& data = ordering_runs();
    long violations = static_cast<long>(data.violations.size());
    long ticks = 0;
    for (auto const& perStrategy : data.runs) {
      for (auto const& run : perStrategy) {
        ticks += run.checks.ticks;
        violations += run.checks.ticks != data.scenario.config.horizon;
        violations += run.checks.occupancy_checks < run.checks.ticks;
        violations += run.checks.partition_checks < run.checks.ticks;
        // every spawned agent ends in exactly one terminal state
        std::set<AgentId> ids;
        for (auto const& o : run.outcomes) {
          violations += !ids.insert(o.id).second;
        }
        for (auto const group : {Group::participant, Group::competitor}) {
          auto const t = tally_group(run.outcomes, group, Window::all());
          violations += t.parked + t.failed + t.censored != t.spawned;
          double weighted = 0.0;
          long parked = 0;
          for (auto const& row : zone_report(run.outcomes, zones_of(data.scenario.world.spec), Window::all())) {
            auto const& z = group == Group::participant ? row.participant : row.competitor;
            if (auto const m = z.avg_search_time()) {
              weighted += *m * static_cast<double>(z.parked);
              parked += z.parked;
            }
          }
          if (auto const global = t.avg_search_time()) {
            violations += parked != t.parked || std::abs(weighted / static_cast<double>(parked) - *global) > 1e-9;
          }
        }
      }
    }
    return {violations == 0, fmt("%ld violations over %zu runs and %ld ticks", violations,
                                 data.runs.size() * kSeeds, ticks)};
  }

  std::string slurp(fs::path const& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
  }

  Verdict determinism() {
    auto const root = fs::temp_directory_path() / "parksim-acceptance-determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    std::string const base = std::string(PARKSIM_CLI) + " run -c " + PARKSIM_DATA_DIR +
                             "/example.conf --strategy cord-oracle --runs 2 --seed 7 --set horizon=600 -o ";
    int status = 0;
    for (auto const* name : {"a", "b"}) {
      status |= std::system((base + (root / name).string() + " > /dev/null").c_str());
    }
    bool same = status == 0;
    std::string detail = status == 0 ? "" : "cli exited non-zero; ";
    for (auto const* file : {"events.ndjson", "report.json"}) {
      auto const a = slurp(root / "a" / file);
      auto const b = slurp(root / "b" / file);
      bool const equal = !a.empty() && a == b;
      same = same && equal;
      detail += fmt("%s %s (%zu bytes); ", file, equal ? "identical" : "differs", a.size());
    }
    fs::remove_all(root);
    return {same, detail.substr(0, detail.size() - 2)};
  }

  Verdict performance() {
    auto& data = ordering_runs();
    long agents = 0;
    if (!data.runs[2].empty()) {
      agents = static_cast<long>(data.runs[2].front().outcomes.size());
    }

    auto big = city(0.4);
    big.synthetic_grid.n = 22;
    big.synth.hotspot_sigma = 6.0;
    big.synth.hotspot_center.reset();
    big.strategy = StrategyKind::CordOracle;
    auto const s = prepare(big);
    auto const start = Clock::now();
    auto const run = run_single(s.world, s.arrivals, big, run_seed(kMaster, 0));
    double const bigSeconds = seconds_since(start);
    bool const pass = data.slowest_oracle_seconds < 60.0 && bigSeconds < 1800.0;
    return {pass, fmt("10x10 oracle day (%ld agents) %.1f s worst of 20; 22x22 oracle day (%zu agents) %.1f s", agents,
                      data.slowest_oracle_seconds, run.outcomes.size(), bigSeconds)};
  }

  Verdict predictor_loop() {
    auto const s = prepare(stationary_city());
    std::vector<double> oracle;
    std::vector<double> approx;
    for (int seed = 0; seed < kSeeds; ++seed) {
      oracle.push_back(participant_success(s, run_strategy(s, StrategyKind::CordOracle, seed)));
      approx.push_back(participant_success(s, run_strategy(s, StrategyKind::CordApprox, seed)));
    }
    double gap = 0.0;
    double mo = 0.0;
    double ma = 0.0;
    for (int k = 0; k < kSeeds; ++k) {
      mo += oracle[static_cast<std::size_t>(k)] / kSeeds;
      ma += approx[static_cast<std::size_t>(k)] / kSeeds;
    }
    gap = mo - ma;
    return {gap <= 0.10, fmt("oracle %.3f, approx after 3 rounds %.3f, gap %.1f pp", mo, ma, 100.0 * gap)};
  }

  struct Criterion {
    int id;
    char const* name;
    std::function<Verdict()> check;
  };

}  // namespace

int main(int argc, char** argv) {
  std::vector<Criterion> const criteria{
      {1, "hungarian optimality", hungarian_optimality},
      {2, "capture probability", capture_probability_mc},
      {3, "ridge correctness", ridge_correctness},
      {4, "strategy ordering", strategy_ordering},
      {5, "contention pathology", contention_pathology},
      {6, "regime shape", regime_shape},
      {7, "conservation", conservation},
      {8, "determinism", determinism},
      {9, "performance", performance},
      {10, "predictor loop", predictor_loop},
  };
  std::set<int> wanted;
  for (int a = 1; a < argc; ++a) {
    wanted.insert(std::atoi(argv[a]));
  }
  int failures = 0;
  for (auto const& c : criteria) {
    if (!wanted.empty() && !wanted.count(c.id)) {
      continue;
    }
    Verdict v;
    try {
      v = c.check();
    } catch (std::exception const& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("[%s] %2d %s: %s\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
