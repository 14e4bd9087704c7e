#include "parksim/hungarian.hpp"

#include "parksim/errors.hpp"

#include <algorithm>
#include <cmath>

namespace parksim {

  CostMatrix::CostMatrix(int rows, int cols, double fill)
      : m_rows(rows), m_cols(cols), m_data(static_cast<std::size_t>(std::max(rows, 0)) * std::max(cols, 0), fill) {
    if (rows < 0 || cols < 0) {
      throw ContractViolation("cost matrix dimensions must be non-negative");
    }
    if (std::isnan(fill) || fill < 0.0) {
      throw ContractViolation("cost entries must be non-negative");
    }
  }

  CostMatrix::CostMatrix(std::initializer_list<std::initializer_list<double>> rows)
      : CostMatrix(static_cast<int>(rows.size()), rows.size() ? static_cast<int>(rows.begin()->size()) : 0) {
    int r = 0;
    for (auto const& row : rows) {
      if (static_cast<int>(row.size()) != m_cols) {
        throw ContractViolation("ragged cost matrix");
      }
      int c = 0;
      for (double v : row) {
        set(r, c++, v);
      }
      ++r;
    }
  }

  void CostMatrix::set(int r, int c, double value) {
    if (std::isnan(value) || value < 0.0) {
      throw ContractViolation("cost entries must be non-negative or kInfeasible");
    }
    m_data.at(index(r, c)) = value;
  }

  CostMatrix CostMatrix::transposed() const {
    CostMatrix out(m_cols, m_rows);
    for (int r = 0; r < m_rows; ++r) {
      for (int c = 0; c < m_cols; ++c) {
        out.m_data[out.index(c, r)] = m_data[index(r, c)];
      }
    }
    return out;
  }

  std::optional<int> Assignment::col_of(int row) const {
    auto const it = std::lower_bound(pairs.begin(), pairs.end(), std::pair{row, -1});
    if (it != pairs.end() && it->first == row) {
      return it->second;
    }
    return std::nullopt;
  }

  namespace {
    /// Rectangular Kuhn-Munkres for rows <= cols. Returns the column matched to each row.
    std::vector<int> solve_rows_le_cols(CostMatrix const& costs, double sentinel) {
      int const n = costs.rows();
      int const m = costs.cols();
      auto const entry = [&](int r, int c) {
        double const v = costs(r, c);
        return CostMatrix::feasible(v) ? v : sentinel;
      };
      double const inf = std::numeric_limits<double>::infinity();
      // 1-based potentials; column 0 is the virtual root of each augmenting search.
      std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
      std::vector<int> match(m + 1, 0), way(m + 1, 0);
      std::vector<double> minv(m + 1);
      std::vector<char> used(m + 1);
      for (int row = 1; row <= n; ++row) {
        match[0] = row;
        int col0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
          used[col0] = 1;
          int const r0 = match[col0];
          double delta = inf;
          int col1 = 0;
          for (int c = 1; c <= m; ++c) {
            if (used[c]) {
              continue;
            }
            double const cur = entry(r0 - 1, c - 1) - u[r0] - v[c];
            if (cur < minv[c]) {
              minv[c] = cur;
              way[c] = col0;
            }
            if (minv[c] < delta) {
              delta = minv[c];
              col1 = c;
            }
          }
          for (int c = 0; c <= m; ++c) {
            if (used[c]) {
              u[match[c]] += delta;
              v[c] -= delta;
            } else {
              minv[c] -= delta;
            }
          }
          col0 = col1;
        } while (match[col0] != 0);
        do {
          int const col1 = way[col0];
          match[col0] = match[col1];
          col0 = col1;
        } while (col0 != 0);
      }
      std::vector<int> rowToCol(n, -1);
      for (int c = 1; c <= m; ++c) {
        if (match[c] != 0) {
          rowToCol[match[c] - 1] = c - 1;
        }
      }
      return rowToCol;
    }

    double sentinel_for(CostMatrix const& costs) {
      double sum = 0.0;
      for (int r = 0; r < costs.rows(); ++r) {
        for (int c = 0; c < costs.cols(); ++c) {
          if (double const x = costs(r, c); CostMatrix::feasible(x)) {
            sum += x;
          }
        }
      }
      return sum + 1.0;
    }

    Assignment collect(CostMatrix const& costs, std::vector<std::pair<int, int>> raw) {
      Assignment out;
      std::sort(raw.begin(), raw.end());
      for (auto const& [r, c] : raw) {
        double const x = costs(r, c);
        if (CostMatrix::feasible(x)) {
          out.pairs.emplace_back(r, c);
          out.total_cost += x;
        }
      }
      return out;
    }
  }  // namespace

  Assignment hungarian_assign(CostMatrix const& costs) {
    if (costs.empty()) {
      return {};
    }
    double const sentinel = sentinel_for(costs);
    std::vector<std::pair<int, int>> raw;
    if (costs.rows() <= costs.cols()) {
      auto const rowToCol = solve_rows_le_cols(costs, sentinel);
      for (int r = 0; r < costs.rows(); ++r) {
        raw.emplace_back(r, rowToCol[r]);
      }
    } else {
      auto const colToRow = solve_rows_le_cols(costs.transposed(), sentinel);
      for (int c = 0; c < costs.cols(); ++c) {
        raw.emplace_back(colToRow[c], c);
      }
    }
    return collect(costs, std::move(raw));
  }

  PaddedMatrix pad_rectangular(CostMatrix const& costs) {
    int const side = std::max(costs.rows(), costs.cols());
    PaddedMatrix out{CostMatrix(side, side, 0.0), costs.rows(), costs.cols()};
    for (int r = 0; r < costs.rows(); ++r) {
      for (int c = 0; c < costs.cols(); ++c) {
        out.square.set(r, c, costs(r, c));
      }
    }
    return out;
  }

  Assignment PaddedMatrix::unpad(Assignment const& square_solution, CostMatrix const& original) const {
    std::vector<std::pair<int, int>> raw;
    for (auto const& [r, c] : square_solution.pairs) {
      if (r < rows && c < cols) {
        raw.emplace_back(r, c);
      }
    }
    return collect(original, std::move(raw));
  }

  Assignment hungarian_assign_padded(CostMatrix const& costs) {
    auto const padded = pad_rectangular(costs);
    return padded.unpad(hungarian_assign(padded.square), costs);
  }

}  // namespace parksim
