#include "parksim/grid.hpp"

#include "parksim/errors.hpp"
#include "parksim/geohash.hpp"
#include "text_util.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <unordered_set>

namespace parksim {

  GridSpec::GridSpec(int n,
                     std::vector<std::string> labels,
                     std::optional<std::vector<std::string>> zones)
      : m_n(n), m_labels(std::move(labels)), m_zones(std::move(zones)) {
    if (n <= 0) {
      throw ValidationError("grid dimension must be positive");
    }
    auto const cells = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    if (m_labels.size() != cells) {
      throw ValidationError("expected " + std::to_string(cells) + " cell labels, got " +
                            std::to_string(m_labels.size()));
    }
    std::unordered_set<std::string> seen;
    for (auto const& label : m_labels) {
      if (!seen.insert(label).second) {
        throw ValidationError("duplicate cell label '" + label + "'");
      }
    }
    if (m_zones && m_zones->size() != cells) {
      throw ValidationError("zone map must cover every cell");
    }
  }

  std::optional<int> GridSpec::find_label(std::string const& label) const {
    for (int k = 0; k < cell_count(); ++k) {
      if (m_labels[k] == label) {
        return k;
      }
    }
    return std::nullopt;
  }

  OccupancyState::OccupancyState(int n, std::vector<int> capacity)
      : m_n(n), m_capacity(std::move(capacity)), m_occupied(m_capacity.size(), 0) {
    if (n <= 0 || m_capacity.size() != static_cast<std::size_t>(n) * n) {
      throw ValidationError("capacity vector must hold n^2 entries");
    }
    for (int b : m_capacity) {
      if (b < 0) {
        throw ValidationError("negative spot capacity");
      }
      m_totalCapacity += b;
    }
  }

  int OccupancyState::index(CellCoord z) const {
    if (z.i < 0 || z.j < 0 || z.i >= m_n || z.j >= m_n) {
      throw ContractViolation("cell (" + std::to_string(z.i) + "," + std::to_string(z.j) +
                              ") outside the grid");
    }
    return z.i * m_n + z.j;
  }

  double OccupancyState::availability() const noexcept {
    if (m_totalCapacity == 0) {
      return 0.0;
    }
    return static_cast<double>(total_free()) / static_cast<double>(m_totalCapacity);
  }

  std::vector<FreeCell> OccupancyState::free_spots() const {
    std::vector<FreeCell> out;
    for (int k = 0; k < static_cast<int>(m_capacity.size()); ++k) {
      if (int const f = m_capacity[k] - m_occupied[k]; f > 0) {
        out.push_back({{k / m_n, k % m_n}, f});
      }
    }
    return out;
  }

  void OccupancyState::occupy(CellCoord z) {
    int const k = index(z);
    if (m_occupied[k] >= m_capacity[k]) {
      throw CapacityViolation("occupy on full cell (" + std::to_string(z.i) + "," +
                              std::to_string(z.j) + ") at tick " + std::to_string(tick));
    }
    ++m_occupied[k];
    ++m_totalOccupied;
  }

  void OccupancyState::release(CellCoord z) {
    int const k = index(z);
    if (m_occupied[k] <= 0) {
      throw CapacityViolation("release on empty cell (" + std::to_string(z.i) + "," +
                              std::to_string(z.j) + ") at tick " + std::to_string(tick));
    }
    --m_occupied[k];
    --m_totalOccupied;
  }

  void OccupancyState::check_invariants() const {
    long total = 0;
    for (std::size_t k = 0; k < m_capacity.size(); ++k) {
      if (m_occupied[k] < 0 || m_occupied[k] > m_capacity[k]) {
        throw CapacityViolation("occupancy out of bounds in cell " + std::to_string(k) +
                                " at tick " + std::to_string(tick));
      }
      total += m_occupied[k];
    }
    if (total != m_totalOccupied) {
      throw CapacityViolation("occupancy total drifted at tick " + std::to_string(tick));
    }
  }

  long GridWorld::total_capacity() const {
    return std::accumulate(capacity.begin(), capacity.end(), 0L);
  }

  GridWorld read_grid(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
      throw ParseError("grid file is empty; header row required", 1);
    }
    text::Header const header(text::split(line));
    auto const colK = header.require("k");
    auto const colHash = header.require("geohash7");
    auto const colI = header.require("i");
    auto const colJ = header.require("j");
    auto const colCap = header.require("capacity");
    auto const colZone = header.find("zone_id");

    struct Row {
      int k, i, j, capacity;
      std::string hash, zone;
    };
    std::vector<Row> rows;
    std::size_t lineNo = 1;
    while (std::getline(in, line)) {
      ++lineNo;
      if (text::trim(line).empty()) {
        continue;
      }
      auto const fields = text::split(line);
      if (fields.size() < header.size()) {
        throw ParseError("expected " + std::to_string(header.size()) + " fields", lineNo);
      }
      Row row{text::parse_number<int>(fields[colK], "k", lineNo),
              text::parse_number<int>(fields[colI], "i", lineNo),
              text::parse_number<int>(fields[colJ], "j", lineNo),
              text::parse_number<int>(fields[colCap], "capacity", lineNo),
              fields[colHash],
              colZone ? fields[*colZone] : std::string{}};
      if (row.hash.size() != 7) {
        throw ParseError("geohash7 must have 7 characters", lineNo);
      }
      if (row.capacity < 0) {
        throw ValidationError("line " + std::to_string(lineNo) + ": negative capacity");
      }
      rows.push_back(std::move(row));
    }
    auto const n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(rows.size()))));
    if (n <= 0 || static_cast<std::size_t>(n) * n != rows.size()) {
      throw ValidationError("grid file must hold n^2 rows, got " + std::to_string(rows.size()));
    }
    std::vector<std::string> labels(rows.size());
    std::vector<std::string> zones(rows.size());
    std::vector<int> capacity(rows.size(), 0);
    std::vector<bool> seen(rows.size(), false);
    for (auto const& row : rows) {
      if (row.i < 0 || row.j < 0 || row.i >= n || row.j >= n || row.k != row.i * n + row.j) {
        throw ValidationError("cell k=" + std::to_string(row.k) + " inconsistent with (i,j)");
      }
      if (seen[row.k]) {
        throw ValidationError("cell k=" + std::to_string(row.k) + " listed twice");
      }
      seen[row.k] = true;
      labels[row.k] = row.hash;
      zones[row.k] = row.zone;
      capacity[row.k] = row.capacity;
    }
    std::optional<std::vector<std::string>> zoneMap;
    if (colZone) {
      zoneMap = std::move(zones);
    }
    return GridWorld{GridSpec(n, std::move(labels), std::move(zoneMap)), std::move(capacity)};
  }

  GridWorld load_grid_file(std::string const& path) {
    std::ifstream in(path);
    if (!in) {
      throw IoError("cannot open grid file '" + path + "'");
    }
    return read_grid(in);
  }

  void write_grid(std::ostream& out, GridWorld const& world) {
    auto const& spec = world.spec;
    out << "k,geohash7,i,j,capacity";
    if (spec.has_zones()) {
      out << ",zone_id";
    }
    out << '\n';
    for (int k = 0; k < spec.cell_count(); ++k) {
      auto const z = spec.coord(k);
      out << k << ',' << spec.label(k) << ',' << z.i << ',' << z.j << ',' << world.capacity[k];
      if (spec.has_zones()) {
        out << ',' << spec.zone(k);
      }
      out << '\n';
    }
  }

  GridWorld make_synthetic_grid(SyntheticGridOptions const& opt) {
    if (opt.n <= 0 || opt.min_capacity < 0 || opt.max_capacity < opt.min_capacity) {
      throw ConfigError("invalid synthetic grid options");
    }
    int const n = opt.n;
    double const dLat = geohash::lat_span(7);
    double const dLon = geohash::lon_span(7);
    // Snap the origin to a cell corner so neighbouring centres fall in neighbouring cells.
    double const lat0 = std::floor(opt.origin_lat / dLat) * dLat;
    double const lon0 = std::floor(opt.origin_lon / dLon) * dLon;

    std::mt19937_64 rng(opt.seed);
    std::uniform_int_distribution<int> capDist(opt.min_capacity, opt.max_capacity);

    std::vector<std::string> labels;
    std::vector<std::string> zones;
    std::vector<int> capacity;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        // row 0 is the northern edge
        double const lat = lat0 + (n - 1 - i + 0.5) * dLat;
        double const lon = lon0 + (j + 0.5) * dLon;
        labels.push_back(geohash::encode(lat, lon, 7));
        int const zi = std::min(2, 3 * i / n);
        int const zj = std::min(2, 3 * j / n);
        zones.push_back("Z" + std::to_string(zi * 3 + zj + 1));
        int b = capDist(rng);
        if (zi == 1 && zj == 1) {
          b += opt.core_bonus;
        }
        capacity.push_back(b);
      }
    }
    std::optional<std::vector<std::string>> zoneMap;
    if (opt.zoned) {
      zoneMap = std::move(zones);
    }
    return GridWorld{GridSpec(n, std::move(labels), std::move(zoneMap)), std::move(capacity)};
  }

}  // namespace parksim
