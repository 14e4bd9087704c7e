#pragma once

#include "parksim/grid.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace parksim {

  /// Calendar timestamp at minute resolution (seconds must be zero).
  struct Timestamp {
    int year{1970};
    int month{1};
    int day{1};
    int hour{0};
    int minute{0};

    /// @throw ParseError unless the text is `YYYY-MM-DDTHH:MM[:SS][Z]`
    static Timestamp parse(std::string const& text);
    /// Days since 1970-01-01.
    long days_since_epoch() const;
    long minutes_since_epoch() const { return days_since_epoch() * 1440 + hour * 60 + minute; }
    /// 0 = Monday
    int weekday() const;
  };

  /// One 15-minute traffic count apportioned to one cell.
  struct IntensityRecord {
    std::string segment_id;
    Timestamp interval_start;
    long count{0};
    int cell{0};
    double overlap_fraction{1.0};
  };

  /// @brief Reads `segment_id,interval_start,count,geohash7,overlap_fraction`.
  /// @throw ParseError on a missing column or malformed row (with line number),
  ///        ValidationError on negative counts, unknown cells, or overlaps not summing to 1
  std::vector<IntensityRecord> parse_intensity(std::istream& in, GridSpec const& grid);

  /// Vehicle counts per (cell, minute), dense.
  class MinuteCounts {
    int m_cells;
    int m_horizon;
    std::vector<long> m_counts;

  public:
    MinuteCounts(int cells, int horizon)
        : m_cells(cells), m_horizon(horizon), m_counts(static_cast<std::size_t>(cells) * horizon, 0) {}

    int cells() const noexcept { return m_cells; }
    int horizon() const noexcept { return m_horizon; }
    long& at(int cell, int minute) { return m_counts.at(static_cast<std::size_t>(minute) * m_cells + cell); }
    long at(int cell, int minute) const {
      return m_counts.at(static_cast<std::size_t>(minute) * m_cells + cell);
    }
    long total() const;
  };

  /// @brief Largest-remainder apportionment of `total` units over `weights`.
  /// @details Floors of the exact quotas first, then one extra unit to each of the largest
  ///          fractional remainders; equal remainders go to the lower index.
  std::vector<long> apportion(long total, std::vector<double> const& weights);

  /// @brief Spreads every record over its 15 one-minute bins.
  /// @details Minute 0 is midnight of the earliest record's date; the horizon covers whole days.
  ///          Each record contributes round(count * overlap) vehicles, split evenly by
  ///          largest-remainder apportionment.
  MinuteCounts disaggregate(std::vector<IntensityRecord> const& records, int cells);

  /// Participant and competitor arrivals per (cell, minute).
  class ArrivalSeries {
    int m_cells;
    int m_horizon;
    std::vector<int> m_participants;
    std::vector<int> m_competitors;

  public:
    ArrivalSeries(int cells, int horizon);

    int cells() const noexcept { return m_cells; }
    int horizon() const noexcept { return m_horizon; }
    int& participants(int cell, int minute) { return m_participants.at(slot(cell, minute)); }
    int participants(int cell, int minute) const { return m_participants.at(slot(cell, minute)); }
    int& competitors(int cell, int minute) { return m_competitors.at(slot(cell, minute)); }
    int competitors(int cell, int minute) const { return m_competitors.at(slot(cell, minute)); }
    long total_participants() const;
    long total_competitors() const;
    bool empty() const { return total_participants() == 0 && total_competitors() == 0; }
    /// Multiplies every count by `factor`, carrying rounding error per cell.
    ArrivalSeries scaled(double factor) const;

    friend bool operator==(ArrivalSeries const&, ArrivalSeries const&) = default;

  private:
    std::size_t slot(int cell, int minute) const {
      return static_cast<std::size_t>(minute) * m_cells + cell;
    }
  };

  /// @brief Splits vehicle counts into searching participants and competitors.
  /// @details Per cell, the fractional part of share * count is carried to the next minute,
  ///          so realised totals stay within one vehicle of the exact share. Remaining
  ///          through-traffic is dropped.
  /// @throw ConfigError unless shares are non-negative and sum to at most 1
  ArrivalSeries split_demand(MinuteCounts const& counts, double participant_share,
                             double competitor_share);

  enum class DemandPattern { uniform, diurnal, hotspot };

  /// @throw ConfigError for an unknown name
  DemandPattern parse_demand_pattern(std::string const& name);
  std::string to_string(DemandPattern pattern);

  /// @brief Parameters of a synthetic arrival series.
  /// @details Searching arrivals per cell and minute follow
  ///   uniform:  magnitude
  ///   diurnal:  magnitude * (floor + (1 - floor) * (1 + cos(2 pi (m - peak_minute) / 1440)) / 2)
  ///   hotspot:  magnitude * exp(-d^2 / (2 sigma^2)) * envelope(m)
  /// where d is the Euclidean lattice distance to the hotspot centre and envelope is the diurnal
  /// profile when `hotspot_diurnal` is set, else 1. Fractional arrivals are carried per cell
  /// from a seeded initial phase; participants take `participant_fraction` of them.
  struct SynthSpec {
    DemandPattern pattern{DemandPattern::uniform};
    int n{10};
    int horizon{1440};
    double magnitude{0.1};
    int peak_minute{780};
    double diurnal_floor{0.0};
    double hotspot_sigma{2.0};
    bool hotspot_diurnal{false};
    /// defaults to a seeded cell in the central half of the grid
    std::optional<CellCoord> hotspot_center;
    /// 1.5 / (1.5 + 8)
    double participant_fraction{0.015 / 0.095};
    std::uint64_t seed{1};
  };

  /// Closed-form searching-arrival intensity of `spec` at (cell, minute).
  double synth_intensity(SynthSpec const& spec, CellCoord cell, int minute);
  CellCoord synth_hotspot_center(SynthSpec const& spec);

  /// @throw ConfigError on invalid parameters
  ArrivalSeries synth_demand(SynthSpec const& spec);

  /// Writes non-zero entries as `cell,minute,group,count`.
  void write_arrivals(std::ostream& out, ArrivalSeries const& series);
  /// @throw ParseError / ValidationError on malformed input
  ArrivalSeries read_arrivals(std::istream& in, int cells, int horizon);

}  // namespace parksim
