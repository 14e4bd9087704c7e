#pragma once

#include "parksim/grid.hpp"
#include "parksim/rng.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace parksim {

  enum class Group { participant, competitor };

  enum class AgentStatus { searching, parked, departed, failed };

  std::string to_string(Group group);
  std::string to_string(AgentStatus status);

  using AgentId = long;

  /// @brief A searching vehicle, either app-enabled (participant) or blind (competitor).
  /// @details `status_tick` is the park tick for parked/departed agents and the failure
  ///          tick for failed ones. Competitors never carry a dispatch target; `heading`
  ///          is the visible spot they are walking to, if any.
  struct Agent {
    AgentId id{0};
    Group group{Group::participant};
    CellCoord pos;
    long spawn_tick{0};
    std::optional<CellCoord> target;
    std::optional<CellCoord> heading;
    AgentStatus status{AgentStatus::searching};
    long status_tick{0};
    std::optional<int> dwell_remaining;
    std::optional<CellCoord> park_cell;

    long age(long tick) const noexcept { return tick - spawn_tick; }
    bool searching() const noexcept { return status == AgentStatus::searching; }
  };

  /// Cells with a free spot within Manhattan distance R of `pos`, row-major.
  std::vector<CellCoord> visible_spots(CellCoord pos, OccupancyState const& state, int radius);

  /// In-bounds von Neumann neighbours of `pos` (N, S, W, E order).
  std::vector<CellCoord> neighbors(CellCoord pos, int n);

  struct CompetitorStep {
    CellCoord position;
    /// the visible cell being approached, empty on a random-walk step
    std::optional<CellCoord> heading;
  };

  /// @brief One competitor move.
  /// @details With spots in view, one step along a shortest path to the nearest of them
  ///          (ties among cells and among axis moves drawn uniformly). Otherwise a uniform
  ///          step to an in-bounds neighbour.
  CompetitorStep step_competitor(CellCoord pos, std::span<CellCoord const> visible, int n,
                                 RngStream& rng);

  /// One step reducing the distance to `target` by exactly one; axis chosen uniformly when both reduce it.
  CellCoord step_participant(CellCoord pos, CellCoord target, RngStream& rng);

  /// @brief Draws min(free_count, |claimants|) winners uniformly without replacement.
  /// @return winners in draw order
  std::vector<AgentId> resolve_parking(std::span<AgentId const> claimants, int free_count,
                                       RngStream& rng);

  /// Parked-duration distribution in minutes.
  struct DwellSpec {
    enum class Kind { fixed, lognormal };
    Kind kind{Kind::lognormal};
    /// fixed duration, or the median for lognormal
    double minutes{45.0};
    double sigma{0.5};
    int floor{1};

    static DwellSpec fixed(int minutes) { return {Kind::fixed, static_cast<double>(minutes), 0.0, 1}; }
    static DwellSpec lognormal(double median, double sigma) { return {Kind::lognormal, median, sigma, 1}; }

    /// `fixed:45` or `lognormal:45:0.5` (median, sigma)
    /// @throw ConfigError on malformed text or invalid parameters
    static DwellSpec parse(std::string const& text);
    std::string to_string() const;
    void validate() const;
  };

  /// @throw ConfigError on invalid parameters
  int sample_dwell(DwellSpec const& spec, RngStream& rng);

}  // namespace parksim
