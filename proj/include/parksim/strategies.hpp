#pragma once

#include "parksim/grid.hpp"
#include "parksim/hungarian.hpp"
#include "parksim/rng.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace parksim {

  enum class StrategyKind { UncAgn, CordAgn, CordOracle, CordApprox };

  inline constexpr StrategyKind kAllStrategies[] = {StrategyKind::UncAgn, StrategyKind::CordAgn,
                                                    StrategyKind::CordOracle, StrategyKind::CordApprox};

  /// Accepts `unc-agn`, `cord-agn`, `cord-oracle`, `cord-approx` (case-insensitive).
  /// @throw ConfigError for anything else
  StrategyKind parse_strategy(std::string const& name);
  std::string to_string(StrategyKind kind);

  /// What the dispatcher knows about a searching participant.
  struct ParticipantView {
    CellCoord pos;
    /// target kept from the previous tick, if any
    std::optional<CellCoord> incumbent;
  };

  /// One column per free spot unit; a cell contributes at most `per_cell_cap` identical columns.
  std::vector<CellCoord> expand_spot_units(std::span<FreeCell const> free, int per_cell_cap);

  /// @brief Nearest free cell per participant, chosen independently.
  /// @details Ties are drawn uniformly, except that an incumbent target among the nearest
  ///          cells is kept. Several participants may pick the same cell.
  std::vector<std::optional<CellCoord>> unc_agn_targets(std::span<ParticipantView const> participants,
                                                       std::span<FreeCell const> free, RngStream& rng);

  /// Travel-time matrix: participants x spot units.
  CostMatrix cord_agn_matrix(std::span<ParticipantView const> participants,
                             std::span<CellCoord const> units);

  /// @brief Competitor move budget min(tau(d,s) - R - 1, R).
  /// @throw ContractViolation unless tau_ds > R
  int t_budget(int tau_ds, int radius);

  /// @brief Cells within Manhattan distance t_c of `center`.
  /// @param clip_n when set, cells outside the n x n grid are dropped
  std::vector<CellCoord> reachable_set(CellCoord center, int t_c, std::optional<int> clip_n = std::nullopt);

  /// @brief Share of the reachable set of `competitor` lying exactly R steps from `spot`.
  /// @throw ContractViolation unless tau(competitor, spot) > R and t_c >= 0
  double capture_probability_with_budget(CellCoord competitor, CellCoord spot, int radius, int t_c,
                                         std::optional<int> clip_n = std::nullopt);

  /// Capture probability with the move budget taken from the participant's distance `tau_ds`.
  double capture_probability(CellCoord competitor, CellCoord spot, int radius, int tau_ds,
                             std::optional<int> clip_n = std::nullopt);

  /// Competitor knowledge available to the oracle dispatcher.
  struct OracleContext {
    std::vector<CellCoord> competitors;
    int radius{1};
    /// grid size when reachable sets are clipped to the grid; empty for the unbounded lattice
    std::optional<int> clip_n;
  };

  /// @brief Competitor-aware cost of sending participant at `d` to spot cell `s`.
  /// @details tau(d,s) if d is strictly closer than every competitor; kInfeasible if some
  ///          competitor inside R is strictly closer than d; otherwise tau(d,s) plus
  ///          tau(d,s) * p(c,s) for each competitor strictly closer than d but outside R.
  double oracle_cost(CellCoord d, CellCoord s, OracleContext const& ctx);

  /// @brief Same values as oracle_cost, precomputed per spot cell for one tick.
  class OracleCostTable {
    struct SpotInfo {
      int nearest{0};
      bool any{false};
      /// competitors within 2R; farther ones never contribute capture probability
      std::vector<CellCoord> near;
    };
    OracleContext const* m_ctx;
    std::vector<CellCoord> m_cells;
    std::vector<SpotInfo> m_info;

  public:
    OracleCostTable(OracleContext const& ctx, std::span<CellCoord const> spot_cells);
    /// `spot` indexes the cells given at construction.
    double cost(CellCoord d, std::size_t spot) const;
  };

  /// @brief Effective distance tau / p_hat.
  /// @throw ContractViolation unless p_hat lies in (0, 1]
  double approx_cost(int tau, double p_hat);

  /// Predicted availability per cell index for the current tick.
  struct ApproxContext {
    std::span<double const> p_hat;
    int n{0};
  };

  struct DispatchInput {
    std::span<ParticipantView const> participants;
    /// cells with dispatchable spot units (already net of competitor captures when applicable)
    std::span<FreeCell const> free;
    OracleContext const* oracle{nullptr};
    ApproxContext const* approx{nullptr};
    /// equal-cost optima keep a participant's incumbent target
    bool prefer_incumbent{true};
  };

  /// @brief Targets for every participant under `kind` (empty when left unassigned).
  /// @details Coordinated strategies assign each spot unit to at most one participant and each
  ///          participant to at most one unit.
  /// @throw ConfigError when the strategy's context is missing
  std::vector<std::optional<CellCoord>> dispatch(StrategyKind kind, DispatchInput const& input,
                                                 RngStream& rng);

}  // namespace parksim
