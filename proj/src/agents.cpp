#include "parksim/agents.hpp"

#include "parksim/errors.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace parksim {

  std::string to_string(Group group) {
    return group == Group::participant ? "participant" : "competitor";
  }

  std::string to_string(AgentStatus status) {
    switch (status) {
      case AgentStatus::searching:
        return "searching";
      case AgentStatus::parked:
        return "parked";
      case AgentStatus::departed:
        return "departed";
      case AgentStatus::failed:
        return "failed";
    }
    return "?";
  }

  std::vector<CellCoord> visible_spots(CellCoord pos, OccupancyState const& state, int radius) {
    std::vector<CellCoord> out;
    int const n = state.n();
    for (int i = std::max(0, pos.i - radius); i <= std::min(n - 1, pos.i + radius); ++i) {
      int const rest = radius - std::abs(i - pos.i);
      for (int j = std::max(0, pos.j - rest); j <= std::min(n - 1, pos.j + rest); ++j) {
        CellCoord const z{i, j};
        if (state.free_count(z) > 0) {
          out.push_back(z);
        }
      }
    }
    return out;
  }

  std::vector<CellCoord> neighbors(CellCoord pos, int n) {
    std::vector<CellCoord> out;
    out.reserve(4);
    for (CellCoord const z : {CellCoord{pos.i - 1, pos.j}, CellCoord{pos.i + 1, pos.j},
                              CellCoord{pos.i, pos.j - 1}, CellCoord{pos.i, pos.j + 1}}) {
      if (z.i >= 0 && z.j >= 0 && z.i < n && z.j < n) {
        out.push_back(z);
      }
    }
    return out;
  }

  CompetitorStep step_competitor(CellCoord pos, std::span<CellCoord const> visible, int n,
                                 RngStream& rng) {
    if (!visible.empty()) {
      int best = manhattan(pos, visible.front());
      std::vector<CellCoord> nearest;
      for (auto const z : visible) {
        int const d = manhattan(pos, z);
        if (d < best) {
          best = d;
          nearest.clear();
        }
        if (d == best) {
          nearest.push_back(z);
        }
      }
      CellCoord const goal = nearest.size() == 1 ? nearest.front() : nearest[rng.pick(nearest.size())];
      return {step_participant(pos, goal, rng), goal};
    }
    auto const options = neighbors(pos, n);
    if (options.empty()) {
      return {pos, std::nullopt};
    }
    return {options[rng.pick(options.size())], std::nullopt};
  }

  CellCoord step_participant(CellCoord pos, CellCoord target, RngStream& rng) {
    bool const moveI = pos.i != target.i;
    bool const moveJ = pos.j != target.j;
    if (!moveI && !moveJ) {
      return pos;
    }
    bool const alongI = moveI && (!moveJ || rng.pick(2) == 0);
    if (alongI) {
      pos.i += target.i > pos.i ? 1 : -1;
    } else {
      pos.j += target.j > pos.j ? 1 : -1;
    }
    return pos;
  }

  std::vector<AgentId> resolve_parking(std::span<AgentId const> claimants, int free_count,
                                       RngStream& rng) {
    std::vector<AgentId> pool(claimants.begin(), claimants.end());
    auto const winners = std::min<std::size_t>(std::max(free_count, 0), pool.size());
    if (winners == pool.size()) {
      return pool;
    }
    for (std::size_t w = 0; w < winners; ++w) {
      auto const pick = w + rng.pick(pool.size() - w);
      std::swap(pool[w], pool[pick]);
    }
    pool.resize(winners);
    return pool;
  }

  void DwellSpec::validate() const {
    if (floor < 1) {
      throw ConfigError("dwell floor must be at least 1 minute");
    }
    if (!(minutes > 0.0) || !std::isfinite(minutes)) {
      throw ConfigError("dwell minutes must be positive");
    }
    if (kind == Kind::lognormal && (!(sigma >= 0.0) || !std::isfinite(sigma))) {
      throw ConfigError("dwell sigma must be non-negative");
    }
  }

  DwellSpec DwellSpec::parse(std::string const& raw) {
    auto const parts = text::split(raw, ':');
    DwellSpec spec;
    try {
      if (parts[0] == "fixed" && parts.size() == 2) {
        spec = fixed(text::parse_number<int>(parts[1], "dwell", 0));
      } else if (parts[0] == "lognormal" && parts.size() == 3) {
        spec = lognormal(text::parse_number<double>(parts[1], "dwell", 0),
                         text::parse_number<double>(parts[2], "dwell", 0));
      } else {
        throw ConfigError("dwell spec '" + raw + "' must be fixed:<min> or lognormal:<median>:<sigma>");
      }
    } catch (ParseError const& e) {
      throw ConfigError(std::string("dwell spec: ") + e.what());
    }
    spec.validate();
    return spec;
  }

  std::string DwellSpec::to_string() const {
    std::ostringstream out;
    if (kind == Kind::fixed) {
      out << "fixed:" << static_cast<int>(minutes);
    } else {
      out << "lognormal:" << minutes << ':' << sigma;
    }
    return out.str();
  }

  int sample_dwell(DwellSpec const& spec, RngStream& rng) {
    spec.validate();
    double value = spec.minutes;
    if (spec.kind == DwellSpec::Kind::lognormal) {
      std::normal_distribution<double> normal(std::log(spec.minutes), spec.sigma);
      value = std::exp(normal(rng));
    }
    auto const rounded = static_cast<long>(std::lround(std::min(value, 1e7)));
    return static_cast<int>(std::max<long>(rounded, spec.floor));
  }

}  // namespace parksim
