#include "parksim/demand.hpp"

#include "parksim/errors.hpp"
#include "parksim/rng.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>

namespace parksim {

  namespace {
    // Howard Hinnant's days_from_civil.
    long days_from_civil(long y, unsigned m, unsigned d) {
      y -= m <= 2;
      long const era = (y >= 0 ? y : y - 399) / 400;
      auto const yoe = static_cast<unsigned>(y - era * 400);
      unsigned const doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
      unsigned const doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
      return era * 146097 + static_cast<long>(doe) - 719468;
    }

    bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

    int days_in_month(int y, int m) {
      static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
      return m == 2 && leap(y) ? 29 : kDays[m - 1];
    }

    int digits(std::string const& s, std::size_t pos, std::size_t len) {
      if (pos + len > s.size()) {
        throw ParseError("truncated timestamp '" + s + "'");
      }
      int v = 0;
      for (std::size_t c = pos; c < pos + len; ++c) {
        if (s[c] < '0' || s[c] > '9') {
          throw ParseError("bad timestamp '" + s + "'");
        }
        v = v * 10 + (s[c] - '0');
      }
      return v;
    }

    /// Carries the fractional part of an exact share forward, in units of 1e-9.
    class ShareDiffuser {
      static constexpr long long kScale = 1'000'000'000LL;
      long long m_share;
      std::vector<long long> m_carry;

    public:
      ShareDiffuser(double share, int cells)
          : m_share(std::llround(share * kScale)), m_carry(cells, 0) {}

      int take(int cell, long count) {
        auto& carry = m_carry[cell];
        carry += static_cast<long long>(count) * m_share;
        auto const whole = carry / kScale;
        carry -= whole * kScale;
        return static_cast<int>(whole);
      }
    };
  }  // namespace

  Timestamp Timestamp::parse(std::string const& raw) {
    auto const text = std::string(text::trim(raw));
    // YYYY-MM-DDTHH:MM
    if (text.size() < 16 || text[4] != '-' || text[7] != '-' ||
        (text[10] != 'T' && text[10] != ' ') || text[13] != ':') {
      throw ParseError("timestamp '" + text + "' is not ISO-8601");
    }
    Timestamp ts{digits(text, 0, 4), digits(text, 5, 2), digits(text, 8, 2), digits(text, 11, 2),
                 digits(text, 14, 2)};
    std::size_t pos = 16;
    if (pos < text.size() && text[pos] == ':') {
      if (digits(text, pos + 1, 2) != 0) {
        throw ParseError("timestamp '" + text + "' has non-zero seconds");
      }
      pos += 3;
    }
    if (pos < text.size() && text.substr(pos) != "Z") {
      throw ParseError("timestamp '" + text + "' has an unsupported suffix");
    }
    if (ts.month < 1 || ts.month > 12 || ts.day < 1 || ts.day > days_in_month(ts.year, ts.month) ||
        ts.hour > 23 || ts.minute > 59) {
      throw ParseError("timestamp '" + text + "' out of range");
    }
    return ts;
  }

  long Timestamp::days_since_epoch() const {
    return days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
  }

  int Timestamp::weekday() const {
    // 1970-01-01 was a Thursday
    long const d = days_since_epoch();
    return static_cast<int>(((d % 7) + 7 + 3) % 7);
  }

  std::vector<IntensityRecord> parse_intensity(std::istream& in, GridSpec const& grid) {
    std::string line;
    if (!std::getline(in, line)) {
      throw ParseError("intensity file is empty; header row required", 1);
    }
    text::Header const header(text::split(line));
    auto const colSeg = header.require("segment_id");
    auto const colTime = header.require("interval_start");
    auto const colCount = header.require("count");
    auto const colHash = header.require("geohash7");
    auto const colOverlap = header.require("overlap_fraction");

    std::vector<IntensityRecord> records;
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
      IntensityRecord rec;
      rec.segment_id = fields[colSeg];
      try {
        rec.interval_start = Timestamp::parse(fields[colTime]);
      } catch (ParseError const& e) {
        throw ParseError(e.what(), lineNo);
      }
      if (rec.interval_start.minute % 15 != 0) {
        throw ParseError("interval_start is not 15-minute aligned", lineNo);
      }
      rec.count = text::parse_number<long>(fields[colCount], "count", lineNo);
      if (rec.count < 0) {
        throw ValidationError("line " + std::to_string(lineNo) + ": negative count");
      }
      auto const cell = grid.find_label(fields[colHash]);
      if (!cell) {
        throw ValidationError("line " + std::to_string(lineNo) + ": unknown geohash '" +
                              fields[colHash] + "'");
      }
      rec.cell = *cell;
      rec.overlap_fraction = text::parse_number<double>(fields[colOverlap], "overlap_fraction", lineNo);
      if (!(rec.overlap_fraction > 0.0 && rec.overlap_fraction <= 1.0)) {
        throw ValidationError("line " + std::to_string(lineNo) + ": overlap_fraction outside (0,1]");
      }
      records.push_back(std::move(rec));
    }

    std::map<std::pair<std::string, long>, double> overlap;
    for (auto const& rec : records) {
      overlap[{rec.segment_id, rec.interval_start.minutes_since_epoch()}] += rec.overlap_fraction;
    }
    for (auto const& [key, sum] : overlap) {
      if (std::abs(sum - 1.0) > 1e-6) {
        throw ValidationError("overlap fractions of segment '" + key.first + "' sum to " +
                              std::to_string(sum) + ", not 1");
      }
    }
    return records;
  }

  long MinuteCounts::total() const { return std::accumulate(m_counts.begin(), m_counts.end(), 0L); }

  std::vector<long> apportion(long total, std::vector<double> const& weights) {
    std::vector<long> out(weights.size(), 0);
    double const sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (weights.empty() || total <= 0 || sum <= 0.0) {
      return out;
    }
    std::vector<double> remainder(weights.size());
    long assigned = 0;
    for (std::size_t b = 0; b < weights.size(); ++b) {
      double const quota = static_cast<double>(total) * weights[b] / sum;
      out[b] = static_cast<long>(std::floor(quota));
      remainder[b] = quota - static_cast<double>(out[b]);
      assigned += out[b];
    }
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t r = 0; assigned < total; ++r) {
      ++out[order[r % order.size()]];
      ++assigned;
    }
    return out;
  }

  MinuteCounts disaggregate(std::vector<IntensityRecord> const& records, int cells) {
    if (records.empty()) {
      return MinuteCounts(cells, 0);
    }
    long firstDay = records.front().interval_start.days_since_epoch();
    long lastMinute = 0;
    for (auto const& rec : records) {
      firstDay = std::min(firstDay, rec.interval_start.days_since_epoch());
    }
    for (auto const& rec : records) {
      lastMinute = std::max(lastMinute, rec.interval_start.minutes_since_epoch() - firstDay * 1440 + 15);
    }
    auto const days = (lastMinute + 1439) / 1440;
    MinuteCounts out(cells, static_cast<int>(days * 1440));
    std::vector<double> const uniform(15, 1.0);
    for (auto const& rec : records) {
      if (rec.cell < 0 || rec.cell >= cells) {
        throw ValidationError("record cell outside the grid");
      }
      long const vehicles = std::lround(static_cast<double>(rec.count) * rec.overlap_fraction);
      auto const bins = apportion(vehicles, uniform);
      auto const start = static_cast<int>(rec.interval_start.minutes_since_epoch() - firstDay * 1440);
      for (int b = 0; b < 15; ++b) {
        out.at(rec.cell, start + b) += bins[b];
      }
    }
    return out;
  }

  ArrivalSeries::ArrivalSeries(int cells, int horizon)
      : m_cells(cells),
        m_horizon(horizon),
        m_participants(static_cast<std::size_t>(cells) * std::max(horizon, 0), 0),
        m_competitors(static_cast<std::size_t>(cells) * std::max(horizon, 0), 0) {
    if (cells < 0 || horizon < 0) {
      throw ConfigError("arrival series dimensions must be non-negative");
    }
  }

  long ArrivalSeries::total_participants() const {
    return std::accumulate(m_participants.begin(), m_participants.end(), 0L);
  }

  long ArrivalSeries::total_competitors() const {
    return std::accumulate(m_competitors.begin(), m_competitors.end(), 0L);
  }

  ArrivalSeries ArrivalSeries::scaled(double factor) const {
    if (factor < 0.0) {
      throw ConfigError("demand scale must be non-negative");
    }
    ArrivalSeries out(m_cells, m_horizon);
    ShareDiffuser part(factor, m_cells);
    ShareDiffuser comp(factor, m_cells);
    for (int m = 0; m < m_horizon; ++m) {
      for (int k = 0; k < m_cells; ++k) {
        out.participants(k, m) = part.take(k, participants(k, m));
        out.competitors(k, m) = comp.take(k, competitors(k, m));
      }
    }
    return out;
  }

  ArrivalSeries split_demand(MinuteCounts const& counts, double participant_share,
                             double competitor_share) {
    if (!(participant_share >= 0.0) || !(competitor_share >= 0.0) ||
        participant_share + competitor_share > 1.0 + 1e-12) {
      throw ConfigError("shares must be non-negative and sum to at most 1");
    }
    ArrivalSeries out(counts.cells(), counts.horizon());
    ShareDiffuser part(participant_share, counts.cells());
    ShareDiffuser comp(competitor_share, counts.cells());
    for (int m = 0; m < counts.horizon(); ++m) {
      for (int k = 0; k < counts.cells(); ++k) {
        long const c = counts.at(k, m);
        out.participants(k, m) = part.take(k, c);
        out.competitors(k, m) = comp.take(k, c);
      }
    }
    return out;
  }

  DemandPattern parse_demand_pattern(std::string const& name) {
    if (name == "uniform") {
      return DemandPattern::uniform;
    }
    if (name == "diurnal") {
      return DemandPattern::diurnal;
    }
    if (name == "hotspot") {
      return DemandPattern::hotspot;
    }
    throw ConfigError("unknown demand pattern '" + name + "' (uniform | diurnal | hotspot)");
  }

  std::string to_string(DemandPattern pattern) {
    switch (pattern) {
      case DemandPattern::uniform:
        return "uniform";
      case DemandPattern::diurnal:
        return "diurnal";
      case DemandPattern::hotspot:
        return "hotspot";
    }
    return "?";
  }

  CellCoord synth_hotspot_center(SynthSpec const& spec) {
    if (spec.hotspot_center) {
      return *spec.hotspot_center;
    }
    RngStream rng(spec.seed, "demand.hotspot");
    int const lo = spec.n / 4;
    int const hi = std::max(lo, spec.n - 1 - spec.n / 4);
    return {rng.uniform_int(lo, hi), rng.uniform_int(lo, hi)};
  }

  namespace {
    double diurnal_profile(SynthSpec const& spec, int minute) {
      double const phase = 2.0 * std::numbers::pi * (minute - spec.peak_minute) / 1440.0;
      return spec.diurnal_floor + (1.0 - spec.diurnal_floor) * 0.5 * (1.0 + std::cos(phase));
    }

    double hotspot_weight(SynthSpec const& spec, CellCoord center, CellCoord cell) {
      double const di = cell.i - center.i;
      double const dj = cell.j - center.j;
      return std::exp(-(di * di + dj * dj) / (2.0 * spec.hotspot_sigma * spec.hotspot_sigma));
    }

    double intensity(SynthSpec const& spec, CellCoord center, CellCoord cell, int minute) {
      switch (spec.pattern) {
        case DemandPattern::uniform:
          return spec.magnitude;
        case DemandPattern::diurnal:
          return spec.magnitude * diurnal_profile(spec, minute);
        case DemandPattern::hotspot:
          return spec.magnitude * hotspot_weight(spec, center, cell) *
                 (spec.hotspot_diurnal ? diurnal_profile(spec, minute) : 1.0);
      }
      return 0.0;
    }

    void validate(SynthSpec const& spec) {
      if (spec.n <= 0 || spec.horizon < 0) {
        throw ConfigError("synthetic demand needs n > 0 and horizon >= 0");
      }
      if (!(spec.magnitude >= 0.0) || !std::isfinite(spec.magnitude)) {
        throw ConfigError("synthetic demand magnitude must be finite and non-negative");
      }
      if (!(spec.participant_fraction >= 0.0 && spec.participant_fraction <= 1.0)) {
        throw ConfigError("participant_fraction must lie in [0, 1]");
      }
      if (!(spec.diurnal_floor >= 0.0 && spec.diurnal_floor <= 1.0)) {
        throw ConfigError("diurnal_floor must lie in [0, 1]");
      }
      if (spec.pattern == DemandPattern::hotspot && !(spec.hotspot_sigma > 0.0)) {
        throw ConfigError("hotspot_sigma must be positive");
      }
    }
  }  // namespace

  double synth_intensity(SynthSpec const& spec, CellCoord cell, int minute) {
    return intensity(spec, synth_hotspot_center(spec), cell, minute);
  }

  ArrivalSeries synth_demand(SynthSpec const& spec) {
    validate(spec);
    int const cells = spec.n * spec.n;
    ArrivalSeries out(cells, spec.horizon);
    CellCoord const center = synth_hotspot_center(spec);
    RngStream phaseRng(spec.seed, "demand.phase");
    std::vector<double> carry(cells);
    for (auto& c : carry) {
      c = phaseRng.uniform01();
    }
    ShareDiffuser part(spec.participant_fraction, cells);
    for (int m = 0; m < spec.horizon; ++m) {
      for (int k = 0; k < cells; ++k) {
        CellCoord const z{k / spec.n, k % spec.n};
        carry[k] += intensity(spec, center, z, m);
        auto const arrivals = static_cast<long>(std::floor(carry[k]));
        carry[k] -= static_cast<double>(arrivals);
        int const p = part.take(k, arrivals);
        out.participants(k, m) = p;
        out.competitors(k, m) = static_cast<int>(arrivals) - p;
      }
    }
    return out;
  }

  void write_arrivals(std::ostream& out, ArrivalSeries const& series) {
    out << "cell,minute,group,count\n";
    for (int m = 0; m < series.horizon(); ++m) {
      for (int k = 0; k < series.cells(); ++k) {
        if (int const p = series.participants(k, m); p > 0) {
          out << k << ',' << m << ",participant," << p << '\n';
        }
        if (int const c = series.competitors(k, m); c > 0) {
          out << k << ',' << m << ",competitor," << c << '\n';
        }
      }
    }
  }

  ArrivalSeries read_arrivals(std::istream& in, int cells, int horizon) {
    std::string line;
    if (!std::getline(in, line)) {
      throw ParseError("arrival file is empty; header row required", 1);
    }
    text::Header const header(text::split(line));
    auto const colCell = header.require("cell");
    auto const colMinute = header.require("minute");
    auto const colGroup = header.require("group");
    auto const colCount = header.require("count");
    ArrivalSeries out(cells, horizon);
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
      int const k = text::parse_number<int>(fields[colCell], "cell", lineNo);
      int const m = text::parse_number<int>(fields[colMinute], "minute", lineNo);
      int const c = text::parse_number<int>(fields[colCount], "count", lineNo);
      if (k < 0 || k >= cells || m < 0 || c < 0) {
        throw ValidationError("line " + std::to_string(lineNo) + ": cell, minute or count out of range");
      }
      if (m >= horizon) {
        continue;
      }
      if (fields[colGroup] == "participant") {
        out.participants(k, m) += c;
      } else if (fields[colGroup] == "competitor") {
        out.competitors(k, m) += c;
      } else {
        throw ParseError("unknown group '" + fields[colGroup] + "'", lineNo);
      }
    }
    return out;
  }

}  // namespace parksim
