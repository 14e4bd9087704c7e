#pragma once

#include "parksim/agents.hpp"
#include "parksim/config.hpp"
#include "parksim/demand.hpp"
#include "parksim/grid.hpp"
#include "parksim/predictor.hpp"
#include "parksim/records.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace parksim {

  /// Counts of invariant checks executed during a run. A failed check throws instead.
  struct RunChecks {
    long ticks{0};
    long occupancy_checks{0};
    long partition_checks{0};
    long award_checks{0};
  };

  struct RunResult {
    int run{0};
    std::uint64_t seed{0};
    int day{0};
    StrategyKind strategy{StrategyKind::CordAgn};
    long total_capacity{0};
    std::vector<OutcomeRecord> outcomes;
    std::vector<TickSample> ticks;
    std::vector<Event> events;
    /// per (cell, hour bucket) parking attempts of both groups
    std::vector<BucketObservation> observations;
    RunChecks checks;
  };

  /// @brief Spot units per cell that a competitor will take before any participant can.
  /// @details A free cell counts one unit per searching competitor within R that is strictly
  ///          closer than every searching participant, capped at its free count. Equal
  ///          distances are left to the arrival tie-break.
  std::map<int, int> competitor_captures(OccupancyState const& state,
                                         std::span<CellCoord const> competitors,
                                         std::span<CellCoord const> participants, int radius);

  /// @brief One simulated day: the rolling-horizon tick loop.
  /// @details Each tick runs, in order: spawn, departures, capture computation, dispatch,
  ///          movement, parking resolution, expiry, and (hourly) history merge. Agents do not move
  ///          in the tick they spawn. All randomness comes from streams derived from `seed`.
  class Simulation {
    GridWorld const* m_world;
    ArrivalSeries const* m_arrivals;
    SimConfig m_config;
    std::uint64_t m_seed;
    int m_day;
    OccupancyState m_occupancy;
    long m_tick{0};

    std::vector<Agent> m_agents;
    std::vector<RngStream> m_moveRng;
    std::vector<RngStream> m_dwellRng;
    std::vector<std::optional<CellCoord>> m_attempt;
    std::vector<char> m_spawnedNow;

    struct Background {
      CellCoord cell;
      int remaining;
    };
    std::vector<Background> m_background;

    std::vector<Event> m_events;
    std::vector<TickSample> m_ticks;
    std::map<int, std::pair<int, int>> m_bucketTally;
    std::vector<BucketObservation> m_observations;
    RunChecks m_checks;

    HistoryCorpus m_corpus;
    std::shared_ptr<AvailabilityPredictor const> m_predictor;
    long m_pHatBucket{-1};
    std::vector<double> m_pHat;

  public:
    /// @throw ConfigError when cord-approx has no history and no model
    Simulation(GridWorld const& world, ArrivalSeries const& arrivals, SimConfig config, std::uint64_t seed,
               int day = 0, HistoryCorpus history = {}, std::optional<RidgeModel> model = std::nullopt);

    void run_tick();
    bool finished() const noexcept { return m_tick >= m_config.horizon; }
    /// Runs the remaining ticks and collects the result; searching agents are censored.
    RunResult finish(int run_index = 0);

    long tick() const noexcept { return m_tick; }
    OccupancyState const& occupancy() const noexcept { return m_occupancy; }
    std::vector<Agent> const& agents() const noexcept { return m_agents; }
    std::vector<Event> const& events() const noexcept { return m_events; }
    HistoryCorpus const& corpus() const noexcept { return m_corpus; }
    std::shared_ptr<AvailabilityPredictor const> predictor() const noexcept { return m_predictor; }
    RunChecks const& checks() const noexcept { return m_checks; }

    /// Adds an agent at the current tick, as if it arrived in step 1.
    AgentId spawn(Group group, CellCoord pos);
    /// Sets a participant's standing target (used to replay stale-target situations).
    void set_target(AgentId id, std::optional<CellCoord> target);

  private:
    long bucket_start(long tick) const;
    void log(long tick, Agent const& agent, EventKind kind, CellCoord cell);
    void tally(CellCoord cell, bool success);
    void close_attempt(AgentId id, bool lost);
    void open_attempt(AgentId id, CellCoord cell);
    void fill_background();
    void depart_finished();
    void dispatch_participants(std::vector<std::size_t> const& participants,
                               std::vector<CellCoord> const& competitorPositions,
                               std::map<int, int> const& captured);
    void move_agents(std::vector<std::size_t> const& searching);
    void resolve_claims(std::vector<std::size_t> const& searching);
    void expire(std::vector<std::size_t> const& searching);
    void verify();
    void flush_bucket(long start);
    void refresh_predictor();
  };

  /// Grid from the config (file or synthetic).
  GridWorld load_world(SimConfig const& config);
  /// Arrival series from the config, scaled by demand_scale and sized to the horizon.
  ArrivalSeries load_arrivals(SimConfig const& config, GridWorld const& world);

  /// Runs one day with the given seed.
  RunResult run_single(GridWorld const& world, ArrivalSeries const& arrivals, SimConfig const& config,
                       std::uint64_t seed, int run_index = 0, int day = 0, HistoryCorpus history = {},
                       std::optional<RidgeModel> model = std::nullopt);

  /// Seed of run `r` under master seed `master`.
  std::uint64_t run_seed(std::uint64_t master, int run);

  /// @brief `config.runs` independent runs; run r uses run_seed(seed, r) and day day_index + r.
  /// @throw Error for unreadable inputs, before any tick executes
  std::vector<RunResult> run_simulation(SimConfig const& config);

  struct RoundsResult {
    HistoryCorpus history;
    /// one result per cord-approx round, the last one trained on the most data
    std::vector<RunResult> rounds;
  };

  /// @brief Warm-up then repeated cord-approx days.
  /// @details `config.window_days` cord-agn days fill an empty history, then `rounds` cord-approx
  ///          days follow; each round starts from a model retrained on the trailing window and
  ///          merges its observations before the next. Every day reuses `seed`.
  RoundsResult run_approx_rounds(GridWorld const& world, ArrivalSeries const& arrivals, SimConfig config,
                                 std::uint64_t seed, int rounds, HistoryCorpus history = {});

  /// Merges a run's bucket observations into a corpus.
  HistoryCorpus merge_observations(HistoryCorpus corpus, RunResult const& run);

}  // namespace parksim
