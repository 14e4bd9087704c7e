#pragma once

#include "parksim/agents.hpp"

#include <optional>
#include <string>

namespace parksim {

  enum class EventKind { spawn, move, assign, park, depart, fail };

  std::string to_string(EventKind kind);

  /// One line of the event log.
  struct Event {
    long tick{0};
    AgentId agent{0};
    Group group{Group::participant};
    EventKind kind{EventKind::spawn};
    /// row-major cell index
    int cell{0};

    friend bool operator==(Event const&, Event const&) = default;
  };

  enum class Terminal { parked, failed, censored };

  std::string to_string(Terminal terminal);

  /// @brief Final outcome of one agent.
  /// @details Parked agents carry the park tick and cell; failed agents the failure tick;
  ///          censored agents were still searching when the horizon ended.
  struct OutcomeRecord {
    AgentId id{0};
    Group group{Group::participant};
    long spawn_tick{0};
    Terminal terminal{Terminal::censored};
    long terminal_tick{0};
    std::optional<int> park_cell;

    long search_time() const noexcept { return terminal_tick - spawn_tick; }
  };

  /// City-wide state sampled at dispatch time of each tick.
  struct TickSample {
    long tick{0};
    /// free spots / total capacity
    double availability{0.0};
    long free{0};
    int searching_participants{0};
    int searching_competitors{0};
    /// spot units preempted by competitors (capture set)
    int captured_units{0};
  };

}  // namespace parksim
