#pragma once

#include "parksim/agents.hpp"
#include "parksim/demand.hpp"
#include "parksim/grid.hpp"
#include "parksim/strategies.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

namespace parksim {

  /// @brief Every knob of a simulation run.
  /// @details Read from `key = value` text; keys match the field names (synthetic inputs use
  ///          `grid.*` and `synth.*` prefixes). Relative paths resolve against the config file.
  struct SimConfig {
    /// grid definition file; a synthetic city is generated when empty
    std::string grid_file;
    SyntheticGridOptions synthetic_grid{};

    /// arrival source: an arrival-series file, a raw intensity file, or the synthetic spec
    std::string arrivals_file;
    std::string intensity_file;
    SynthSpec synth{};
    /// participant share of synthetic arrivals; derived from the two shares when unset
    std::optional<double> synth_participant_fraction;

    StrategyKind strategy{StrategyKind::CordAgn};
    int radius{1};
    int t_max{30};
    double participant_share{0.015};
    double competitor_share{0.08};
    DwellSpec dwell{DwellSpec::lognormal(45.0, 0.5)};
    int horizon{1440};
    std::uint64_t seed{1};
    int runs{3};
    /// clip competitor reachable sets to the grid instead of the unbounded lattice
    bool clip_reachable{false};

    /// share of every cell's spots held by background vehicles at tick 0
    double initial_occupancy{0.0};
    /// multiplies the arrival series
    double demand_scale{1.0};

    /// history corpus for cord-approx
    std::string history_file;
    /// trained predictor; when set it replaces the initial fit on the history
    std::string model_file;
    /// minutes between in-run retrains of the predictor (0 disables)
    int retrain_every{60};
    int window_days{3};
    /// absolute day index of the first run; run r simulates day day_index + r
    int day_index{0};
    int day0_weekday{0};

    /// reporting window [peak_start, peak_end) in minutes of the day
    int peak_start{540};
    int peak_end{1020};
    bool record_events{true};

    /// @throw ConfigError naming the offending field
    void validate() const;
  };

  /// @brief Parses `key = value` lines (`#` starts a comment).
  /// @param base_dir directory that relative paths are resolved against
  /// @throw ConfigError for unknown keys or malformed values
  SimConfig parse_config(std::istream& in, std::string const& base_dir = ".");
  SimConfig load_config_file(std::string const& path);

  /// Applies one `key = value` override on top of an existing config.
  void apply_config_value(SimConfig& config, std::string const& key, std::string const& value,
                          std::string const& base_dir = ".");

  /// Canonical key/value listing, used in run summaries.
  std::map<std::string, std::string> config_entries(SimConfig const& config);

}  // namespace parksim
