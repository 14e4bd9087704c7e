#include "parksim/strategies.hpp"

#include "parksim/errors.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

namespace parksim {

  StrategyKind parse_strategy(std::string const& raw) {
    std::string name;
    for (char c : raw) {
      name.push_back(c == '_' ? '-' : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (name == "unc-agn" || name == "uncagn") {
      return StrategyKind::UncAgn;
    }
    if (name == "cord-agn" || name == "cordagn") {
      return StrategyKind::CordAgn;
    }
    if (name == "cord-oracle" || name == "cordoracle") {
      return StrategyKind::CordOracle;
    }
    if (name == "cord-approx" || name == "cordapprox") {
      return StrategyKind::CordApprox;
    }
    throw ConfigError("unknown strategy '" + raw + "' (unc-agn | cord-agn | cord-oracle | cord-approx)");
  }

  std::string to_string(StrategyKind kind) {
    switch (kind) {
      case StrategyKind::UncAgn:
        return "unc-agn";
      case StrategyKind::CordAgn:
        return "cord-agn";
      case StrategyKind::CordOracle:
        return "cord-oracle";
      case StrategyKind::CordApprox:
        return "cord-approx";
    }
    return "?";
  }

  std::vector<CellCoord> expand_spot_units(std::span<FreeCell const> free, int per_cell_cap) {
    std::vector<CellCoord> units;
    for (auto const& fc : free) {
      int const copies = std::min(fc.free_count, std::max(per_cell_cap, 0));
      units.insert(units.end(), static_cast<std::size_t>(std::max(copies, 0)), fc.cell);
    }
    return units;
  }

  std::vector<std::optional<CellCoord>> unc_agn_targets(std::span<ParticipantView const> participants,
                                                       std::span<FreeCell const> free, RngStream& rng) {
    std::vector<std::optional<CellCoord>> out(participants.size());
    if (free.empty()) {
      return out;
    }
    std::vector<CellCoord> nearest;
    for (std::size_t p = 0; p < participants.size(); ++p) {
      auto const& view = participants[p];
      int best = std::numeric_limits<int>::max();
      nearest.clear();
      for (auto const& fc : free) {
        int const d = manhattan(view.pos, fc.cell);
        if (d < best) {
          best = d;
          nearest.clear();
        }
        if (d == best) {
          nearest.push_back(fc.cell);
        }
      }
      if (view.incumbent && std::find(nearest.begin(), nearest.end(), *view.incumbent) != nearest.end()) {
        out[p] = *view.incumbent;
      } else {
        out[p] = nearest.size() == 1 ? nearest.front() : nearest[rng.pick(nearest.size())];
      }
    }
    return out;
  }

  CostMatrix cord_agn_matrix(std::span<ParticipantView const> participants,
                             std::span<CellCoord const> units) {
    CostMatrix m(static_cast<int>(participants.size()), static_cast<int>(units.size()));
    for (std::size_t r = 0; r < participants.size(); ++r) {
      for (std::size_t c = 0; c < units.size(); ++c) {
        m.set(static_cast<int>(r), static_cast<int>(c), manhattan(participants[r].pos, units[c]));
      }
    }
    return m;
  }

  int t_budget(int tau_ds, int radius) {
    if (radius < 0 || tau_ds <= radius) {
      throw ContractViolation("t_budget requires tau(d,s) > R >= 0");
    }
    return std::min(tau_ds - radius - 1, radius);
  }

  std::vector<CellCoord> reachable_set(CellCoord center, int t_c, std::optional<int> clip_n) {
    if (t_c < 0) {
      throw ContractViolation("reachable_set requires t_c >= 0");
    }
    std::vector<CellCoord> out;
    for (int di = -t_c; di <= t_c; ++di) {
      int const rest = t_c - std::abs(di);
      for (int dj = -rest; dj <= rest; ++dj) {
        CellCoord const z{center.i + di, center.j + dj};
        if (clip_n && (z.i < 0 || z.j < 0 || z.i >= *clip_n || z.j >= *clip_n)) {
          continue;
        }
        out.push_back(z);
      }
    }
    return out;
  }

  double capture_probability_with_budget(CellCoord competitor, CellCoord spot, int radius, int t_c,
                                         std::optional<int> clip_n) {
    if (radius < 0 || manhattan(competitor, spot) <= radius) {
      throw ContractViolation("capture probability requires tau(c,s) > R");
    }
    auto const ball = reachable_set(competitor, t_c, clip_n);
    if (ball.empty()) {
      return 0.0;
    }
    auto const favorable =
        std::count_if(ball.begin(), ball.end(), [&](CellCoord z) { return manhattan(z, spot) == radius; });
    return static_cast<double>(favorable) / static_cast<double>(ball.size());
  }

  double capture_probability(CellCoord competitor, CellCoord spot, int radius, int tau_ds,
                             std::optional<int> clip_n) {
    return capture_probability_with_budget(competitor, spot, radius, t_budget(tau_ds, radius), clip_n);
  }

  double oracle_cost(CellCoord d, CellCoord s, OracleContext const& ctx) {
    int const tau = manhattan(d, s);
    int nearest = std::numeric_limits<int>::max();
    for (auto const c : ctx.competitors) {
      nearest = std::min(nearest, manhattan(c, s));
    }
    if (tau < nearest) {
      return tau;
    }
    if (nearest < tau && nearest <= ctx.radius) {
      return kInfeasible;
    }
    double cost = tau;
    for (auto const c : ctx.competitors) {
      int const tc = manhattan(c, s);
      if (tc < tau && tc > ctx.radius) {
        cost += tau * capture_probability(c, s, ctx.radius, tau, ctx.clip_n);
      }
    }
    return cost;
  }

  OracleCostTable::OracleCostTable(OracleContext const& ctx, std::span<CellCoord const> spot_cells)
      : m_ctx(&ctx), m_cells(spot_cells.begin(), spot_cells.end()), m_info(spot_cells.size()) {
    int const reach = 2 * ctx.radius;
    for (std::size_t s = 0; s < m_cells.size(); ++s) {
      auto& info = m_info[s];
      info.nearest = std::numeric_limits<int>::max();
      for (auto const c : ctx.competitors) {
        int const d = manhattan(c, m_cells[s]);
        info.any = true;
        info.nearest = std::min(info.nearest, d);
        if (d <= reach) {
          info.near.push_back(c);
        }
      }
    }
  }

  double OracleCostTable::cost(CellCoord d, std::size_t spot) const {
    auto const& info = m_info[spot];
    CellCoord const s = m_cells[spot];
    int const tau = manhattan(d, s);
    if (!info.any || tau < info.nearest) {
      return tau;
    }
    int const radius = m_ctx->radius;
    if (info.nearest < tau && info.nearest <= radius) {
      return kInfeasible;
    }
    double cost = tau;
    for (auto const c : info.near) {
      int const tc = manhattan(c, s);
      if (tc < tau && tc > radius) {
        cost += tau * capture_probability(c, s, radius, tau, m_ctx->clip_n);
      }
    }
    return cost;
  }

  double approx_cost(int tau, double p_hat) {
    if (!(p_hat > 0.0 && p_hat <= 1.0)) {
      throw ContractViolation("approx_cost requires p_hat in (0, 1]");
    }
    return tau / p_hat;
  }

  namespace {
    // Added to every feasible non-incumbent entry; far below any real cost gap.
    constexpr double kIncumbentBias = 1e-9;

    // Rows are solved in a shuffled order so that equal-cost optima fall to a random participant.
    std::vector<std::optional<CellCoord>> solve(CostMatrix const& costs,
                                                std::span<CellCoord const> units,
                                                std::size_t participants, RngStream& rng) {
      std::vector<int> order(participants);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      CostMatrix shuffled(costs.rows(), costs.cols());
      for (int r = 0; r < costs.rows(); ++r) {
        for (int c = 0; c < costs.cols(); ++c) {
          shuffled.set(r, c, costs(order[r], c));
        }
      }
      std::vector<std::optional<CellCoord>> out(participants);
      for (auto const& [r, c] : hungarian_assign(shuffled).pairs) {
        out[order[r]] = units[c];
      }
      return out;
    }
  }  // namespace

  std::vector<std::optional<CellCoord>> dispatch(StrategyKind kind, DispatchInput const& input,
                                                 RngStream& rng) {
    if (kind == StrategyKind::CordOracle && input.oracle == nullptr) {
      throw ConfigError("cord-oracle dispatch requires competitor context");
    }
    if (kind == StrategyKind::CordApprox && input.approx == nullptr) {
      throw ConfigError("cord-approx dispatch requires an availability predictor");
    }
    auto const& participants = input.participants;
    if (kind == StrategyKind::UncAgn) {
      return unc_agn_targets(participants, input.free, rng);
    }
    std::vector<std::optional<CellCoord>> none(participants.size());
    if (participants.empty() || input.free.empty()) {
      return none;
    }
    auto const units = expand_spot_units(input.free, static_cast<int>(participants.size()));
    auto const rows = static_cast<int>(participants.size());
    auto const cols = static_cast<int>(units.size());
    CostMatrix costs(rows, cols);

    std::vector<CellCoord> cells;
    std::vector<std::size_t> cellOfUnit(units.size());
    for (std::size_t u = 0; u < units.size(); ++u) {
      if (cells.empty() || cells.back() != units[u]) {
        cells.push_back(units[u]);
      }
      cellOfUnit[u] = cells.size() - 1;
    }

    std::optional<OracleCostTable> table;
    if (kind == StrategyKind::CordOracle) {
      table.emplace(*input.oracle, cells);
    }
    std::vector<double> cellCost(cells.size());
    for (int r = 0; r < rows; ++r) {
      auto const& view = participants[r];
      for (std::size_t s = 0; s < cells.size(); ++s) {
        int const tau = manhattan(view.pos, cells[s]);
        switch (kind) {
          case StrategyKind::CordAgn:
            cellCost[s] = tau;
            break;
          case StrategyKind::CordOracle:
            cellCost[s] = table->cost(view.pos, s);
            break;
          case StrategyKind::CordApprox: {
            auto const k = static_cast<std::size_t>(cells[s].i * input.approx->n + cells[s].j);
            cellCost[s] = approx_cost(tau, input.approx->p_hat[k]);
            break;
          }
          case StrategyKind::UncAgn:
            break;
        }
        if (input.prefer_incumbent && CostMatrix::feasible(cellCost[s]) &&
            !(view.incumbent && *view.incumbent == cells[s])) {
          cellCost[s] += kIncumbentBias;
        }
      }
      for (int c = 0; c < cols; ++c) {
        costs.set(r, c, cellCost[cellOfUnit[c]]);
      }
    }
    return solve(costs, units, participants.size(), rng);
  }

}  // namespace parksim
