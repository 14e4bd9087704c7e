#include "doctest.h"

#include "parksim/engine.hpp"
#include "parksim/errors.hpp"
#include "parksim/metrics.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace parksim;

namespace {
  OutcomeRecord rec(Group g, long spawn, Terminal t, long end, std::optional<int> cell = std::nullopt) {
    OutcomeRecord r;
    r.group = g;
    r.spawn_tick = spawn;
    r.terminal = t;
    r.terminal_tick = end;
    r.park_cell = cell;
    return r;
  }

  std::string slurp(std::filesystem::path const& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  std::filesystem::path scratch(std::string const& name) {
    auto const dir = std::filesystem::temp_directory_path() / ("parksim-metrics-" + name);
    std::filesystem::remove_all(dir);
    return dir;
  }

  SimConfig small_run(StrategyKind kind) {
    SimConfig c;
    c.strategy = kind;
    c.horizon = 180;
    c.runs = 3;
    c.synthetic_grid.n = 6;
    c.synth.pattern = DemandPattern::hotspot;
    c.synth.magnitude = 1.0;
    c.dwell = DwellSpec::lognormal(30.0, 0.5);
    c.initial_occupancy = 0.6;
    return c;
  }
}  // namespace

TEST_CASE("success ratio") {
  std::vector<OutcomeRecord> out;
  for (int k = 0; k < 10; ++k) {
    out.push_back(rec(Group::participant, k, k < 7 ? Terminal::parked : Terminal::failed, k + 2));
  }
  CHECK(*success_ratio(out, Group::participant, Window::all()) == doctest::Approx(0.7));
  CHECK_FALSE(success_ratio(out, Group::competitor, Window::all()).has_value());
  CHECK(*success_ratio(out, Group::participant, {0, 5}) == 1.0);

  // Censored agents count as spawned but sit outside both ratios.
  out.push_back(rec(Group::participant, 3, Terminal::censored, 20));
  auto const t = tally_group(out, Group::participant, Window::all());
  CHECK(t.spawned == 11);
  CHECK(*t.success_ratio() == doctest::Approx(0.7));
  CHECK(*t.failure_ratio() == doctest::Approx(0.3));
}

TEST_CASE("average search time") {
  std::vector<OutcomeRecord> const out{rec(Group::competitor, 0, Terminal::parked, 3),
                                       rec(Group::competitor, 10, Terminal::parked, 17),
                                       rec(Group::competitor, 5, Terminal::failed, 36)};
  CHECK(*avg_search_time(out, Group::competitor, Window::all()) == 5.0);
  std::vector<OutcomeRecord> const failures{rec(Group::participant, 0, Terminal::failed, 31)};
  CHECK_FALSE(avg_search_time(failures, Group::participant, Window::all()).has_value());
}

TEST_CASE("regime bins") {
  CHECK(regime_of(0.0) == RegimeBin::low);
  CHECK(regime_of(0.05) == RegimeBin::low);
  CHECK_FALSE(regime_of(0.1).has_value());
  CHECK(regime_of(0.2) == RegimeBin::intermediate);
  CHECK(regime_of(0.25) == RegimeBin::intermediate);
  CHECK(regime_of(0.45) == RegimeBin::high);
  CHECK_FALSE(regime_of(0.9).has_value());

  std::vector<TickSample> ticks(3);
  ticks[0] = {0, 0.22};
  ticks[1] = {1, 0.42};
  ticks[2] = {2, 0.7};
  std::vector<OutcomeRecord> const same{rec(Group::participant, 0, Terminal::parked, 1),
                                        rec(Group::competitor, 0, Terminal::parked, 1),
                                        rec(Group::participant, 1, Terminal::parked, 2),
                                        rec(Group::competitor, 1, Terminal::failed, 40),
                                        rec(Group::participant, 2, Terminal::failed, 40)};
  auto const gap = regime_gap(same, ticks);
  CHECK(*gap.at(RegimeBin::intermediate).delta() == 0.0);
  CHECK(*gap.at(RegimeBin::high).delta() == 1.0);
  CHECK_FALSE(gap.at(RegimeBin::low).delta().has_value());
}

TEST_CASE("zone partition identities") {
  GridSpec const one(2, {"a000000", "b000000", "c000000", "d000000"});
  std::vector<OutcomeRecord> const out{rec(Group::participant, 0, Terminal::parked, 3, 0),
                                       rec(Group::participant, 0, Terminal::parked, 8, 3),
                                       rec(Group::participant, 4, Terminal::parked, 5, 2),
                                       rec(Group::competitor, 1, Terminal::parked, 2, 1),
                                       rec(Group::participant, 1, Terminal::failed, 40)};
  auto const whole = zone_report(out, zones_of(one), Window::all());
  REQUIRE(whole.size() == 1);
  CHECK(whole[0].zone == "all");
  CHECK(whole[0].participant.avg_search_time() == avg_search_time(out, Group::participant, Window::all()));

  GridSpec const split(2, {"a000000", "b000000", "c000000", "d000000"},
                       std::vector<std::string>{"west", "east", "west", "east"});
  auto const zones = zone_report(out, zones_of(split), Window::all());
  REQUIRE(zones.size() == 2);
  double weighted = 0.0;
  long parked = 0;
  for (auto const& z : zones) {
    if (auto const m = z.participant.avg_search_time()) {
      weighted += *m * z.participant.parked;
      parked += z.participant.parked;
    }
  }
  CHECK(weighted / parked == doctest::Approx(*avg_search_time(out, Group::participant, Window::all())));
  CHECK_FALSE(zones[1].competitor.avg_search_time() == std::nullopt);
}

TEST_CASE("zone means recombine on simulated runs") {
  auto config = small_run(StrategyKind::CordAgn);
  auto const runs = run_simulation(config);
  auto const world = load_world(config);
  for (auto const& run : runs) {
    auto const rows = zone_report(run.outcomes, zones_of(world.spec), Window::all());
    for (auto const group : {Group::participant, Group::competitor}) {
      double weighted = 0.0;
      long parked = 0;
      for (auto const& z : rows) {
        auto const& t = group == Group::participant ? z.participant : z.competitor;
        if (auto const m = t.avg_search_time()) {
          weighted += *m * t.parked;
          parked += t.parked;
        }
      }
      auto const global = avg_search_time(run.outcomes, group, Window::all());
      REQUIRE(global.has_value());
      CHECK(weighted / parked == doctest::Approx(*global));
    }
  }
}

TEST_CASE("log round trip recounts the regimes") {
  auto config = small_run(StrategyKind::CordOracle);
  auto const runs = run_simulation(config);
  auto const world = load_world(config);
  std::stringstream events;
  std::stringstream ticks;
  write_events(events, runs, world.spec);
  write_ticks(ticks, runs);
  auto const back = read_log(events, ticks, world.spec, config.horizon);
  REQUIRE(back.size() == runs.size());
  for (std::size_t r = 0; r < runs.size(); ++r) {
    auto const a = regime_gap(runs[r].outcomes, runs[r].ticks);
    auto const b = regime_gap(back[r].outcomes, back[r].ticks);
    for (auto const bin : kRegimeBins) {
      CHECK(a.at(bin).delta() == b.at(bin).delta());
      CHECK(a.at(bin).participant.spawned == b.at(bin).participant.spawned);
    }
    CHECK(tally_group(runs[r].outcomes, Group::competitor, Window::all()).parked ==
          tally_group(back[r].outcomes, Group::competitor, Window::all()).parked);
  }
}

TEST_CASE("report export") {
  SUBCASE("empty report has header-only tables") {
    auto const dir = scratch("empty");
    export_report(SimReport{}, dir);
    CHECK(slurp(dir / "series.csv") == "hour,strategy,group,success_ratio,avg_search_time,n\n");
    CHECK(slurp(dir / "regimes.csv") == "strategy,bin,delta\n");
    CHECK(slurp(dir / "zones.csv") == "zone,group,avg_search_time\n");
    std::filesystem::remove_all(dir);
  }
  SUBCASE("three runs give per-run and mean columns, byte-stable") {
    auto config = small_run(StrategyKind::CordAgn);
    auto const runs = run_simulation(config);
    auto const world = load_world(config);
    auto const report = build_report(runs, world.spec, {0, config.horizon}, config_entries(config));
    auto const a = scratch("a");
    auto const b = scratch("b");
    export_report(report, a);
    export_report(report, b);
    for (auto const* f : {"series.csv", "regimes.csv", "zones.csv", "report.json", "heatmap_cord-agn.svg"}) {
      CHECK(slurp(a / f) == slurp(b / f));
    }
    auto const series = slurp(a / "series.csv");
    auto const header = series.substr(0, series.find('\n'));
    CHECK(header ==
          "hour,strategy,group,success_ratio,avg_search_time,n,"
          "success_ratio_r0,avg_search_time_r0,n_r0,"
          "success_ratio_r1,avg_search_time_r1,n_r1,"
          "success_ratio_r2,avg_search_time_r2,n_r2");
    CHECK(slurp(a / "report.json").find("\"runs\"") != std::string::npos);
    std::filesystem::remove_all(a);
    std::filesystem::remove_all(b);
  }
  SUBCASE("unwritable directory") {
    auto const file = scratch("file");
    std::ofstream(file.string()) << "x";
    CHECK_THROWS_AS(export_report(SimReport{}, file / "sub"), IoError);
    std::filesystem::remove_all(file);
  }
}
