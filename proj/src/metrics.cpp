#include "parksim/metrics.hpp"

#include "parksim/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

namespace parksim {

  using ordered_json = nlohmann::ordered_json;

  void GroupTally::add(OutcomeRecord const& rec) {
    ++spawned;
    switch (rec.terminal) {
      case Terminal::parked:
        ++parked;
        search_minutes += rec.search_time();
        break;
      case Terminal::failed:
        ++failed;
        break;
      case Terminal::censored:
        ++censored;
        break;
    }
  }

  std::optional<double> GroupTally::success_ratio() const {
    if (parked + failed == 0) {
      return std::nullopt;
    }
    return static_cast<double>(parked) / static_cast<double>(parked + failed);
  }

  std::optional<double> GroupTally::failure_ratio() const {
    if (parked + failed == 0) {
      return std::nullopt;
    }
    return static_cast<double>(failed) / static_cast<double>(parked + failed);
  }

  std::optional<double> GroupTally::avg_search_time() const {
    if (parked == 0) {
      return std::nullopt;
    }
    return static_cast<double>(search_minutes) / static_cast<double>(parked);
  }

  GroupTally tally_group(std::span<OutcomeRecord const> outcomes, Group group, Window window) {
    GroupTally tally;
    for (auto const& rec : outcomes) {
      if (rec.group == group && window.contains(rec.spawn_tick)) {
        tally.add(rec);
      }
    }
    return tally;
  }

  std::optional<double> success_ratio(std::span<OutcomeRecord const> outcomes, Group group, Window window) {
    return tally_group(outcomes, group, window).success_ratio();
  }

  std::optional<double> avg_search_time(std::span<OutcomeRecord const> outcomes, Group group, Window window) {
    return tally_group(outcomes, group, window).avg_search_time();
  }

  std::string to_string(RegimeBin bin) {
    switch (bin) {
      case RegimeBin::low:
        return "low";
      case RegimeBin::intermediate:
        return "intermediate";
      case RegimeBin::high:
        return "high";
    }
    return "?";
  }

  std::pair<double, double> regime_range(RegimeBin bin) {
    switch (bin) {
      case RegimeBin::low:
        return {0.0, 0.05};
      case RegimeBin::intermediate:
        return {0.20, 0.25};
      case RegimeBin::high:
        return {0.40, 0.45};
    }
    return {0.0, 0.0};
  }

  std::optional<RegimeBin> regime_of(double availability) {
    constexpr double eps = 1e-12;
    for (auto const bin : kRegimeBins) {
      auto const [lo, hi] = regime_range(bin);
      if (availability >= lo - eps && availability <= hi + eps) {
        return bin;
      }
    }
    return std::nullopt;
  }

  std::optional<double> RegimeCell::delta() const {
    auto const p = participant.success_ratio();
    auto const c = competitor.success_ratio();
    if (!p || !c) {
      return std::nullopt;
    }
    return *p - *c;
  }

  std::map<RegimeBin, RegimeCell> regime_gap(std::span<OutcomeRecord const> outcomes,
                                             std::span<TickSample const> ticks) {
    std::map<long, RegimeBin> binOf;
    for (auto const& sample : ticks) {
      if (auto const bin = regime_of(sample.availability)) {
        binOf[sample.tick] = *bin;
      }
    }
    std::map<RegimeBin, RegimeCell> cells;
    for (auto const bin : kRegimeBins) {
      cells[bin];
    }
    for (auto const& rec : outcomes) {
      auto const it = binOf.find(rec.spawn_tick);
      if (it == binOf.end()) {
        continue;
      }
      auto& cell = cells[it->second];
      (rec.group == Group::participant ? cell.participant : cell.competitor).add(rec);
    }
    return cells;
  }

  std::vector<ZoneSpec> zones_of(GridSpec const& spec) {
    if (!spec.has_zones()) {
      ZoneSpec all{"all", std::vector<int>(static_cast<std::size_t>(spec.cell_count()))};
      std::iota(all.cells.begin(), all.cells.end(), 0);
      return {all};
    }
    std::vector<ZoneSpec> zones;
    std::map<std::string, std::size_t> slot;
    for (int k = 0; k < spec.cell_count(); ++k) {
      auto const& id = spec.zone(k);
      if (id.empty()) {
        continue;
      }
      auto const [it, fresh] = slot.emplace(id, zones.size());
      if (fresh) {
        zones.push_back({id, {}});
      }
      zones[it->second].cells.push_back(k);
    }
    return zones;
  }

  std::vector<ZoneRow> zone_report(std::span<OutcomeRecord const> outcomes, std::vector<ZoneSpec> const& zones,
                                   Window window) {
    std::map<int, std::size_t> zoneOf;
    std::vector<ZoneRow> rows;
    for (std::size_t z = 0; z < zones.size(); ++z) {
      rows.push_back({zones[z].id, {}, {}});
      for (auto const k : zones[z].cells) {
        zoneOf[k] = z;
      }
    }
    for (auto const& rec : outcomes) {
      if (rec.terminal != Terminal::parked || !rec.park_cell || !window.contains(rec.spawn_tick)) {
        continue;
      }
      auto const it = zoneOf.find(*rec.park_cell);
      if (it == zoneOf.end()) {
        continue;
      }
      auto& row = rows[it->second];
      (rec.group == Group::participant ? row.participant : row.competitor).add(rec);
    }
    return rows;
  }

  std::vector<std::optional<double>> cell_search_times(std::span<OutcomeRecord const> outcomes, int cells,
                                                       Window window) {
    std::vector<GroupTally> tallies(static_cast<std::size_t>(cells));
    for (auto const& rec : outcomes) {
      if (rec.terminal == Terminal::parked && rec.park_cell && window.contains(rec.spawn_tick)) {
        tallies.at(static_cast<std::size_t>(*rec.park_cell)).add(rec);
      }
    }
    std::vector<std::optional<double>> out;
    out.reserve(tallies.size());
    for (auto const& t : tallies) {
      out.push_back(t.avg_search_time());
    }
    return out;
  }

  RunSummary summarize_run(RunResult const& run, GridSpec const& spec, Window window, int hours) {
    RunSummary s;
    s.run = run.run;
    s.seed = run.seed;
    s.day = run.day;
    s.participant = tally_group(run.outcomes, Group::participant, window);
    s.competitor = tally_group(run.outcomes, Group::competitor, window);
    s.hourly.resize(static_cast<std::size_t>(std::max(hours, 0)));
    for (auto const& rec : run.outcomes) {
      auto const hour = rec.spawn_tick / 60;
      if (hour < 0 || hour >= hours) {
        continue;
      }
      auto& slot = s.hourly[static_cast<std::size_t>(hour)];
      (rec.group == Group::participant ? slot.first : slot.second).add(rec);
    }
    s.regimes = regime_gap(run.outcomes, run.ticks);
    s.zones = zone_report(run.outcomes, zones_of(spec), window);
    s.cell_times = cell_search_times(run.outcomes, spec.cell_count(), window);
    if (!run.ticks.empty()) {
      double total = 0.0;
      for (auto const& t : run.ticks) {
        total += t.availability;
      }
      s.mean_availability = total / static_cast<double>(run.ticks.size());
    }
    s.checks = run.checks;
    return s;
  }

  SimReport build_report(std::span<RunResult const> runs, GridSpec const& spec, Window window,
                         std::map<std::string, std::string> config) {
    SimReport report;
    report.window = window;
    report.n = spec.n();
    for (auto const& z : zones_of(spec)) {
      report.zone_ids.push_back(z.id);
    }
    report.config = std::move(config);
    long horizon = 0;
    for (auto const& run : runs) {
      horizon = std::max(horizon, static_cast<long>(run.ticks.size()));
    }
    int const hours = static_cast<int>((horizon + 59) / 60);
    for (auto const& run : runs) {
      auto it = std::find_if(report.strategies.begin(), report.strategies.end(),
                             [&](StrategyReport const& s) { return s.strategy == run.strategy; });
      if (it == report.strategies.end()) {
        report.strategies.push_back({run.strategy, {}});
        it = std::prev(report.strategies.end());
      }
      it->runs.push_back(summarize_run(run, spec, window, hours));
    }
    return report;
  }

  std::optional<double> mean_defined(std::span<std::optional<double> const> values) {
    double sum = 0.0;
    int count = 0;
    for (auto const& v : values) {
      if (v) {
        sum += *v;
        ++count;
      }
    }
    if (count == 0) {
      return std::nullopt;
    }
    return sum / count;
  }

  namespace {
    constexpr char const* kUndefined = "NA";

    std::string num(std::optional<double> v) {
      if (!v) {
        return kUndefined;
      }
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.6f", *v);
      return buf;
    }

    ordered_json jnum(std::optional<double> v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

    ordered_json tally_json(GroupTally const& t) {
      return ordered_json{{"spawned", t.spawned},
                          {"parked", t.parked},
                          {"failed", t.failed},
                          {"censored", t.censored},
                          {"success_ratio", jnum(t.success_ratio())},
                          {"avg_search_time", jnum(t.avg_search_time())}};
    }

    std::size_t max_runs(SimReport const& report) {
      std::size_t most = 0;
      for (auto const& s : report.strategies) {
        most = std::max(most, s.runs.size());
      }
      return most;
    }

    template <typename F>
    std::vector<std::optional<double>> per_run(StrategyReport const& s, F&& f) {
      std::vector<std::optional<double>> out;
      for (auto const& r : s.runs) {
        out.push_back(f(r));
      }
      return out;
    }

    /// Mean columns, then one set per run (NA past the strategy's own run count).
    void write_stat_row(std::ostream& out, std::string const& prefix,
                        std::vector<std::vector<std::optional<double>>> const& stats,
                        std::vector<long> const& counts, std::size_t runs) {
      out << prefix;
      for (auto const& stat : stats) {
        out << ',' << num(mean_defined(stat));
      }
      if (!counts.empty()) {
        out << ',' << std::accumulate(counts.begin(), counts.end(), 0L);
      }
      for (std::size_t r = 0; r < runs; ++r) {
        for (auto const& stat : stats) {
          out << ',' << (r < stat.size() ? num(stat[r]) : kUndefined);
        }
        if (!counts.empty()) {
          out << ',' << (r < counts.size() ? std::to_string(counts[r]) : kUndefined);
        }
      }
      out << '\n';
    }

    void write_header(std::ostream& out, std::string const& keys, std::vector<std::string> const& stats,
                      std::size_t runs) {
      out << keys;
      for (auto const& s : stats) {
        out << ',' << s;
      }
      for (std::size_t r = 0; r < runs; ++r) {
        for (auto const& s : stats) {
          out << ',' << s << "_r" << r;
        }
      }
      out << '\n';
    }

    std::ofstream open_out(std::filesystem::path const& path) {
      std::ofstream out(path, std::ios::binary);
      if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
      }
      return out;
    }

    char const* group_name(bool participant) { return participant ? "participant" : "competitor"; }

    void write_series(std::ostream& out, SimReport const& report) {
      auto const runs = max_runs(report);
      write_header(out, "hour,strategy,group", {"success_ratio", "avg_search_time", "n"}, runs);
      std::size_t hours = 0;
      for (auto const& s : report.strategies) {
        for (auto const& r : s.runs) {
          hours = std::max(hours, r.hourly.size());
        }
      }
      for (std::size_t h = 0; h < hours; ++h) {
        for (auto const& s : report.strategies) {
          for (bool const participant : {true, false}) {
            auto pick = [&](RunSummary const& r) -> GroupTally {
              if (h >= r.hourly.size()) {
                return {};
              }
              return participant ? r.hourly[h].first : r.hourly[h].second;
            };
            std::vector<long> counts;
            for (auto const& r : s.runs) {
              counts.push_back(pick(r).spawned);
            }
            write_stat_row(out,
                           std::to_string(h) + ',' + to_string(s.strategy) + ',' + group_name(participant),
                           {per_run(s, [&](RunSummary const& r) { return pick(r).success_ratio(); }),
                            per_run(s, [&](RunSummary const& r) { return pick(r).avg_search_time(); })},
                           counts, runs);
          }
        }
      }
    }

    void write_regimes(std::ostream& out, SimReport const& report) {
      auto const runs = max_runs(report);
      write_header(out, "strategy,bin", {"delta"}, runs);
      for (auto const& s : report.strategies) {
        for (auto const bin : kRegimeBins) {
          write_stat_row(out, to_string(s.strategy) + ',' + to_string(bin),
                         {per_run(s, [&](RunSummary const& r) { return r.regimes.at(bin).delta(); })}, {}, runs);
        }
      }
    }

    void write_zones(std::ostream& out, SimReport const& report) {
      auto const runs = max_runs(report);
      bool const several = report.strategies.size() > 1;
      write_header(out, several ? "zone,group,strategy" : "zone,group", {"avg_search_time"}, runs);
      for (auto const& s : report.strategies) {
        for (std::size_t z = 0; z < report.zone_ids.size(); ++z) {
          for (bool const participant : {true, false}) {
            std::string prefix = report.zone_ids[z] + ',' + group_name(participant);
            if (several) {
              prefix += ',' + to_string(s.strategy);
            }
            write_stat_row(out, prefix, {per_run(s, [&](RunSummary const& r) {
                             auto const& row = r.zones.at(z);
                             return (participant ? row.participant : row.competitor).avg_search_time();
                           })},
                           {}, runs);
          }
        }
      }
    }

    void write_heatmap(std::ostream& out, SimReport const& report, StrategyReport const& s) {
      int const n = report.n;
      int const size = 36;
      int const top = 28;
      std::vector<std::optional<double>> values(static_cast<std::size_t>(n) * n);
      double hi = 0.0;
      for (std::size_t k = 0; k < values.size(); ++k) {
        values[k] = mean_defined(per_run(s, [&](RunSummary const& r) { return r.cell_times.at(k); }));
        if (values[k]) {
          hi = std::max(hi, *values[k]);
        }
      }
      out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << n * size << "\" height=\"" << n * size + top
          << "\" font-family=\"sans-serif\">\n";
      out << "<text x=\"4\" y=\"18\" font-size=\"14\">mean search time (min), " << to_string(s.strategy)
          << "</text>\n";
      char buf[160];
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          auto const& v = values[static_cast<std::size_t>(i * n + j)];
          int shade = 235;
          if (v && hi > 0.0) {
            shade = 235 - static_cast<int>(std::lround(200.0 * *v / hi));
          }
          std::snprintf(buf, sizeof buf,
                        "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"rgb(255,%d,%d)\" "
                        "stroke=\"#999\"/>\n",
                        j * size, top + i * size, size, size, shade, shade);
          out << buf;
          char label[32] = "-";
          if (v) {
            std::snprintf(label, sizeof label, "%.1f", *v);
          }
          std::snprintf(buf, sizeof buf,
                        "<text x=\"%d\" y=\"%d\" font-size=\"10\" text-anchor=\"middle\">%s</text>\n",
                        j * size + size / 2, top + i * size + size / 2 + 4, label);
          out << buf;
        }
      }
      out << "</svg>\n";
    }

    ordered_json report_json(SimReport const& report) {
      ordered_json doc;
      doc["window"] = {{"start", report.window.start}, {"end", report.window.end}};
      ordered_json cfg = ordered_json::object();
      for (auto const& [k, v] : report.config) {
        cfg[k] = v;
      }
      doc["config"] = cfg;
      doc["strategies"] = ordered_json::array();
      for (auto const& s : report.strategies) {
        ordered_json entry;
        entry["strategy"] = to_string(s.strategy);
        entry["runs"] = ordered_json::array();
        for (auto const& r : s.runs) {
          ordered_json run;
          run["run"] = r.run;
          run["seed"] = r.seed;
          run["day"] = r.day;
          run["participant"] = tally_json(r.participant);
          run["competitor"] = tally_json(r.competitor);
          ordered_json regimes;
          for (auto const& [bin, cell] : r.regimes) {
            regimes[to_string(bin)] = {{"delta", jnum(cell.delta())},
                                       {"participant", tally_json(cell.participant)},
                                       {"competitor", tally_json(cell.competitor)}};
          }
          run["regimes"] = regimes;
          run["zones"] = ordered_json::array();
          for (auto const& z : r.zones) {
            run["zones"].push_back({{"zone", z.zone},
                                    {"participant_avg_search_time", jnum(z.participant.avg_search_time())},
                                    {"competitor_avg_search_time", jnum(z.competitor.avg_search_time())},
                                    {"participant_parked", z.participant.parked},
                                    {"competitor_parked", z.competitor.parked}});
          }
          run["mean_availability"] = r.mean_availability;
          run["checks"] = {{"ticks", r.checks.ticks},
                           {"occupancy", r.checks.occupancy_checks},
                           {"partition", r.checks.partition_checks},
                           {"award", r.checks.award_checks}};
          entry["runs"].push_back(run);
        }
        ordered_json mean;
        mean["participant_success_ratio"] =
            jnum(mean_defined(per_run(s, [](RunSummary const& r) { return r.participant.success_ratio(); })));
        mean["competitor_success_ratio"] =
            jnum(mean_defined(per_run(s, [](RunSummary const& r) { return r.competitor.success_ratio(); })));
        mean["participant_avg_search_time"] =
            jnum(mean_defined(per_run(s, [](RunSummary const& r) { return r.participant.avg_search_time(); })));
        mean["competitor_avg_search_time"] =
            jnum(mean_defined(per_run(s, [](RunSummary const& r) { return r.competitor.avg_search_time(); })));
        for (auto const bin : kRegimeBins) {
          mean["delta_" + to_string(bin)] =
              jnum(mean_defined(per_run(s, [&](RunSummary const& r) { return r.regimes.at(bin).delta(); })));
        }
        entry["mean"] = mean;
        doc["strategies"].push_back(entry);
      }
      return doc;
    }
  }  // namespace

  void export_report(SimReport const& report, std::filesystem::path const& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
      throw IoError("cannot create output directory '" + dir.string() + "'");
    }
    {
      auto out = open_out(dir / "series.csv");
      write_series(out, report);
    }
    {
      auto out = open_out(dir / "regimes.csv");
      write_regimes(out, report);
    }
    {
      auto out = open_out(dir / "zones.csv");
      write_zones(out, report);
    }
    for (auto const& s : report.strategies) {
      auto out = open_out(dir / ("heatmap_" + to_string(s.strategy) + ".svg"));
      write_heatmap(out, report, s);
    }
    auto out = open_out(dir / "report.json");
    out << report_json(report).dump(2) << '\n';
    if (!out) {
      throw IoError("failed writing '" + (dir / "report.json").string() + "'");
    }
  }

  void write_events(std::ostream& out, std::span<RunResult const> runs, GridSpec const& spec) {
    std::string line;
    for (auto const& run : runs) {
      for (auto const& e : run.events) {
        line.clear();
        line += "{\"run\":";
        line += std::to_string(run.run);
        line += ",\"tick\":";
        line += std::to_string(e.tick);
        line += ",\"agent\":";
        line += std::to_string(e.agent);
        line += ",\"group\":\"";
        line += to_string(e.group);
        line += "\",\"kind\":\"";
        line += to_string(e.kind);
        line += "\",\"cell\":";
        line += std::to_string(e.cell);
        line += ",\"geohash\":\"";
        line += spec.label(e.cell);
        line += "\"}\n";
        out << line;
      }
    }
  }

  void write_ticks(std::ostream& out, std::span<RunResult const> runs) {
    out << "run,tick,availability,free,searching_participants,searching_competitors,captured_units\n";
    char buf[64];
    for (auto const& run : runs) {
      for (auto const& t : run.ticks) {
        std::snprintf(buf, sizeof buf, "%.17g", t.availability);
        out << run.run << ',' << t.tick << ',' << buf << ',' << t.free << ',' << t.searching_participants << ','
            << t.searching_competitors << ',' << t.captured_units << '\n';
      }
    }
  }

  namespace {
    Group parse_group(std::string const& s, std::size_t line) {
      if (s == "participant") {
        return Group::participant;
      }
      if (s == "competitor") {
        return Group::competitor;
      }
      throw ParseError("unknown group '" + s + "'", line);
    }

    EventKind parse_kind(std::string const& s, std::size_t line) {
      for (auto const k : {EventKind::spawn, EventKind::move, EventKind::assign, EventKind::park, EventKind::depart,
                           EventKind::fail}) {
        if (to_string(k) == s) {
          return k;
        }
      }
      throw ParseError("unknown event kind '" + s + "'", line);
    }

    RunResult& run_slot(std::map<int, RunResult>& runs, int r) {
      auto& run = runs[r];
      run.run = r;
      return run;
    }
  }  // namespace

  std::vector<RunResult> read_log(std::istream& events, std::istream& ticks, GridSpec const& spec, long horizon) {
    std::map<int, RunResult> runs;
    std::map<int, std::map<AgentId, OutcomeRecord>> agents;
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(events, line)) {
      ++lineNo;
      if (line.empty()) {
        continue;
      }
      ordered_json j;
      try {
        j = ordered_json::parse(line);
      } catch (nlohmann::json::exception const& e) {
        throw ParseError(std::string("malformed event: ") + e.what(), lineNo);
      }
      try {
        int const r = j.at("run").get<int>();
        Event e;
        e.tick = j.at("tick").get<long>();
        e.agent = j.at("agent").get<AgentId>();
        e.group = parse_group(j.at("group").get<std::string>(), lineNo);
        e.kind = parse_kind(j.at("kind").get<std::string>(), lineNo);
        e.cell = j.at("cell").get<int>();
        if (e.cell < 0 || e.cell >= spec.cell_count()) {
          throw ParseError("cell " + std::to_string(e.cell) + " outside the grid", lineNo);
        }
        run_slot(runs, r).events.push_back(e);
        auto& rec = agents[r][e.agent];
        switch (e.kind) {
          case EventKind::spawn:
            rec.id = e.agent;
            rec.group = e.group;
            rec.spawn_tick = e.tick;
            rec.terminal = Terminal::censored;
            rec.terminal_tick = horizon;
            break;
          case EventKind::park:
            rec.terminal = Terminal::parked;
            rec.terminal_tick = e.tick;
            rec.park_cell = e.cell;
            break;
          case EventKind::fail:
            rec.terminal = Terminal::failed;
            rec.terminal_tick = e.tick;
            break;
          default:
            break;
        }
      } catch (nlohmann::json::exception const& e) {
        throw ParseError(std::string("malformed event: ") + e.what(), lineNo);
      }
    }
    if (!std::getline(ticks, line)) {
      throw ParseError("tick series is empty; header row required", 1);
    }
    lineNo = 1;
    while (std::getline(ticks, line)) {
      ++lineNo;
      if (line.empty()) {
        continue;
      }
      TickSample t;
      int r = 0;
      if (std::sscanf(line.c_str(), "%d,%ld,%lf,%ld,%d,%d,%d", &r, &t.tick, &t.availability, &t.free,
                      &t.searching_participants, &t.searching_competitors, &t.captured_units) != 7) {
        throw ParseError("malformed tick sample", lineNo);
      }
      run_slot(runs, r).ticks.push_back(t);
    }
    std::vector<RunResult> out;
    for (auto& [r, run] : runs) {
      for (auto const& [id, rec] : agents[r]) {
        run.outcomes.push_back(rec);
      }
      out.push_back(std::move(run));
    }
    return out;
  }

}  // namespace parksim
