#pragma once

#include "parksim/engine.hpp"
#include "parksim/grid.hpp"
#include "parksim/records.hpp"

#include <array>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace parksim {

  /// Spawn-tick window [start, end) in minutes.
  struct Window {
    long start{0};
    long end{0};

    bool contains(long tick) const noexcept { return tick >= start && tick < end; }
    static Window all() noexcept { return {0, std::numeric_limits<long>::max()}; }
  };

  /// Outcome counts of one group in one window. Censored agents count in neither ratio.
  struct GroupTally {
    long spawned{0};
    long parked{0};
    long failed{0};
    long censored{0};
    long search_minutes{0};

    void add(OutcomeRecord const& rec);
    /// parked / (parked + failed); empty when nobody finished
    std::optional<double> success_ratio() const;
    std::optional<double> failure_ratio() const;
    /// mean search time of parked agents; empty when nobody parked
    std::optional<double> avg_search_time() const;
  };

  GroupTally tally_group(std::span<OutcomeRecord const> outcomes, Group group, Window window);

  std::optional<double> success_ratio(std::span<OutcomeRecord const> outcomes, Group group, Window window);
  std::optional<double> avg_search_time(std::span<OutcomeRecord const> outcomes, Group group, Window window);

  enum class RegimeBin { low, intermediate, high };
  inline constexpr std::array<RegimeBin, 3> kRegimeBins{RegimeBin::low, RegimeBin::intermediate, RegimeBin::high};

  std::string to_string(RegimeBin bin);
  /// Closed availability range of a bin: [0, 0.05], [0.20, 0.25], [0.40, 0.45].
  std::pair<double, double> regime_range(RegimeBin bin);
  /// The bin holding `availability`, if any.
  std::optional<RegimeBin> regime_of(double availability);

  /// Participant and competitor tallies of the agents spawned in ticks of one bin.
  struct RegimeCell {
    GroupTally participant;
    GroupTally competitor;

    /// participant ratio minus competitor ratio; empty if either side is undefined
    std::optional<double> delta() const;
  };

  /// @brief Bins each agent by the availability sampled at its spawn tick.
  /// @details Ticks outside every bin, or missing from the series, drop their agents.
  std::map<RegimeBin, RegimeCell> regime_gap(std::span<OutcomeRecord const> outcomes,
                                             std::span<TickSample const> ticks);

  struct ZoneSpec {
    std::string id;
    std::vector<int> cells;
  };

  /// Zones of the grid in first-appearance order; an unzoned grid yields one zone "all".
  std::vector<ZoneSpec> zones_of(GridSpec const& spec);

  struct ZoneRow {
    std::string zone;
    GroupTally participant;
    GroupTally competitor;
  };

  /// @brief Search times of agents that parked inside each zone.
  /// @details Only parked outcomes with a park cell in the zone contribute.
  std::vector<ZoneRow> zone_report(std::span<OutcomeRecord const> outcomes, std::vector<ZoneSpec> const& zones,
                                   Window window);

  /// Mean search time per cell over every parked agent, empty for cells nobody parked in.
  std::vector<std::optional<double>> cell_search_times(std::span<OutcomeRecord const> outcomes, int cells,
                                                       Window window);

  /// @brief Metrics of one run.
  struct RunSummary {
    int run{0};
    std::uint64_t seed{0};
    int day{0};
    GroupTally participant;
    GroupTally competitor;
    /// per spawn hour, index = hour
    std::vector<std::pair<GroupTally, GroupTally>> hourly;
    std::map<RegimeBin, RegimeCell> regimes;
    std::vector<ZoneRow> zones;
    std::vector<std::optional<double>> cell_times;
    double mean_availability{0.0};
    RunChecks checks;
  };

  /// All runs of one strategy.
  struct StrategyReport {
    StrategyKind strategy{StrategyKind::CordAgn};
    std::vector<RunSummary> runs;
  };

  struct SimReport {
    Window window;
    int n{0};
    std::vector<std::string> zone_ids;
    std::map<std::string, std::string> config;
    std::vector<StrategyReport> strategies;
  };

  RunSummary summarize_run(RunResult const& run, GridSpec const& spec, Window window, int hours);

  /// Builds a report over runs grouped by strategy, in the order strategies first appear.
  SimReport build_report(std::span<RunResult const> runs, GridSpec const& spec, Window window,
                         std::map<std::string, std::string> config = {});

  /// Mean of the defined values, empty if none.
  std::optional<double> mean_defined(std::span<std::optional<double> const> values);

  /// @brief Writes series.csv, regimes.csv, zones.csv, heatmap_<strategy>.svg and report.json.
  /// @throw IoError if the directory cannot be created or written
  void export_report(SimReport const& report, std::filesystem::path const& dir);

  /// @brief Event log as one JSON object per line: run, tick, agent, group, kind, cell, geohash.
  void write_events(std::ostream& out, std::span<RunResult const> runs, GridSpec const& spec);
  /// Tick samples as `run,tick,availability,free,searching_participants,searching_competitors,captured_units`.
  void write_ticks(std::ostream& out, std::span<RunResult const> runs);

  /// @brief Rebuilds runs (outcomes, tick samples, events) from a log written by write_events/write_ticks.
  /// @details Agents without a terminal event come back censored at `horizon`.
  /// @throw ParseError on malformed lines
  std::vector<RunResult> read_log(std::istream& events, std::istream& ticks, GridSpec const& spec, long horizon);

}  // namespace parksim
