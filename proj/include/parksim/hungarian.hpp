#pragma once

#include <initializer_list>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace parksim {

  /// Marks a (row, column) pair that may never be matched.
  inline constexpr double kInfeasible = std::numeric_limits<double>::infinity();

  /// @brief Dense rows x cols cost matrix with non-negative finite entries or kInfeasible.
  class CostMatrix {
    int m_rows{0};
    int m_cols{0};
    std::vector<double> m_data;

  public:
    CostMatrix() = default;
    CostMatrix(int rows, int cols, double fill = 0.0);
    /// @throw ContractViolation on ragged rows or invalid entries
    CostMatrix(std::initializer_list<std::initializer_list<double>> rows);

    int rows() const noexcept { return m_rows; }
    int cols() const noexcept { return m_cols; }
    bool empty() const noexcept { return m_rows == 0 || m_cols == 0; }
    double operator()(int r, int c) const { return m_data[index(r, c)]; }
    /// @throw ContractViolation for negative or NaN values
    void set(int r, int c, double value);
    static bool feasible(double value) noexcept { return value != kInfeasible; }

    CostMatrix transposed() const;

  private:
    std::size_t index(int r, int c) const {
      return static_cast<std::size_t>(r) * static_cast<std::size_t>(m_cols) + static_cast<std::size_t>(c);
    }
  };

  struct Assignment {
    /// (row, col) pairs sorted by row
    std::vector<std::pair<int, int>> pairs;
    double total_cost{0.0};

    std::optional<int> col_of(int row) const;
    std::size_t size() const noexcept { return pairs.size(); }
  };

  /// @brief Minimum-cost assignment (Kuhn-Munkres with potentials, O(r^2 c) for r <= c).
  /// @details Among all maximum-cardinality matchings that avoid kInfeasible entries, returns
  ///          one of minimum total cost. Infeasible entries are replaced by a value larger than
  ///          the sum of all finite entries before solving, and any pair landing on one is
  ///          stripped. Equal-cost optima resolve by the solver's fixed scan order.
  Assignment hungarian_assign(CostMatrix const& costs);

  /// A rectangular problem embedded in a square one with zero-cost dummy rows or columns.
  struct PaddedMatrix {
    CostMatrix square;
    int rows{0};
    int cols{0};

    /// Drops pairs touching dummy rows/columns or infeasible entries.
    Assignment unpad(Assignment const& square_solution, CostMatrix const& original) const;
  };

  PaddedMatrix pad_rectangular(CostMatrix const& costs);

  /// Solves the padded square form and maps the result back; same optimum as hungarian_assign.
  Assignment hungarian_assign_padded(CostMatrix const& costs);

}  // namespace parksim
