#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace parksim {

  /// A lattice cell z = (i, j). Row-major index k = i * n + j.
  struct CellCoord {
    int i{0};
    int j{0};

    friend constexpr auto operator<=>(CellCoord const&, CellCoord const&) = default;
  };

  /// Steps between two cells; one step is one minute of travel.
  constexpr int manhattan(CellCoord a, CellCoord b) noexcept {
    int const di = a.i > b.i ? a.i - b.i : b.i - a.i;
    int const dj = a.j > b.j ? a.j - b.j : b.j - a.j;
    return di + dj;
  }

  /// @brief Labels and optional zoning of an n x n lattice.
  /// @details Geohash labels are opaque identifiers; only adjacency on the lattice is used.
  class GridSpec {
    int m_n;
    std::vector<std::string> m_labels;
    std::optional<std::vector<std::string>> m_zones;

  public:
    /// @throw ValidationError if label count is not n^2, labels repeat, or zones do not cover every cell
    GridSpec(int n,
             std::vector<std::string> labels,
             std::optional<std::vector<std::string>> zones = std::nullopt);

    int n() const noexcept { return m_n; }
    int cell_count() const noexcept { return m_n * m_n; }
    bool contains(CellCoord z) const noexcept {
      return z.i >= 0 && z.j >= 0 && z.i < m_n && z.j < m_n;
    }
    int index(CellCoord z) const noexcept { return z.i * m_n + z.j; }
    CellCoord coord(int k) const noexcept { return {k / m_n, k % m_n}; }

    std::string const& label(int k) const { return m_labels.at(k); }
    std::vector<std::string> const& labels() const noexcept { return m_labels; }
    bool has_zones() const noexcept { return m_zones.has_value(); }
    /// Empty string marks a cell outside every zone.
    std::string const& zone(int k) const { return m_zones.value().at(k); }
    std::optional<std::vector<std::string>> const& zones() const noexcept { return m_zones; }
    /// @return the cell index carrying `label`, if any
    std::optional<int> find_label(std::string const& label) const;
  };

  /// One cell with at least one free spot.
  struct FreeCell {
    CellCoord cell;
    int free_count;

    friend bool operator==(FreeCell const&, FreeCell const&) = default;
  };

  /// @brief Per-cell spot capacity b_ij and live occupancy.
  /// @details Spots are fungible inside a cell. Every mutation keeps 0 <= occupied <= capacity.
  class OccupancyState {
    int m_n;
    std::vector<int> m_capacity;
    std::vector<int> m_occupied;
    long m_totalCapacity{0};
    long m_totalOccupied{0};

  public:
    long tick{0};

    /// @throw ValidationError on negative capacities or a size other than n^2
    OccupancyState(int n, std::vector<int> capacity);

    int n() const noexcept { return m_n; }
    int capacity(CellCoord z) const { return m_capacity.at(index(z)); }
    int occupied(CellCoord z) const { return m_occupied.at(index(z)); }
    int free_count(CellCoord z) const { return capacity(z) - occupied(z); }
    long total_capacity() const noexcept { return m_totalCapacity; }
    long total_occupied() const noexcept { return m_totalOccupied; }
    long total_free() const noexcept { return m_totalCapacity - m_totalOccupied; }
    /// free / B, or 0 for a city without spots
    double availability() const noexcept;
    std::vector<int> const& capacities() const noexcept { return m_capacity; }
    std::vector<int> const& occupancies() const noexcept { return m_occupied; }

    /// Cells with free spots in row-major order.
    std::vector<FreeCell> free_spots() const;

    /// @throw CapacityViolation when the cell is full
    void occupy(CellCoord z);
    /// @throw CapacityViolation when the cell is empty
    void release(CellCoord z);

    /// Re-checks the occupancy bounds; throws CapacityViolation on breach.
    void check_invariants() const;

  private:
    int index(CellCoord z) const;
  };

  /// A grid together with its spot capacities, as read from a grid definition file.
  struct GridWorld {
    GridSpec spec;
    std::vector<int> capacity;

    OccupancyState empty_state() const { return OccupancyState(spec.n(), capacity); }
    long total_capacity() const;
  };

  /// @brief Reads the grid table `k,geohash7,i,j,capacity[,zone_id]` (header required).
  /// @throw ParseError on malformed rows, ValidationError on inconsistent cells
  GridWorld read_grid(std::istream& in);
  GridWorld load_grid_file(std::string const& path);
  void write_grid(std::ostream& out, GridWorld const& world);

  /// Options for a synthetic city.
  struct SyntheticGridOptions {
    int n{22};
    int min_capacity{2};
    int max_capacity{8};
    /// extra spots added in the central zone (commercial core)
    int core_bonus{0};
    double origin_lat{40.4168};
    double origin_lon{-3.7038};
    std::uint64_t seed{1};
    /// partition the lattice into a 3 x 3 block of zones
    bool zoned{true};
  };

  /// Builds a lattice whose labels are real 7-character geohashes of adjacent cells.
  GridWorld make_synthetic_grid(SyntheticGridOptions const& options);

}  // namespace parksim
