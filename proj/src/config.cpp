#include "parksim/config.hpp"

#include "parksim/errors.hpp"
#include "text_util.hpp"

#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>

namespace parksim {

  namespace {
    ConfigError field_error(std::string const& key, std::string const& message) {
      return ConfigError("field '" + key + "': " + message);
    }

    template <typename T>
    T number(std::string const& key, std::string const& value) {
      try {
        return text::parse_number<T>(value, key, 0);
      } catch (ParseError const&) {
        throw field_error(key, "cannot parse '" + value + "' as a number");
      }
    }

    bool boolean(std::string const& key, std::string const& value) {
      if (value == "true" || value == "1" || value == "yes" || value == "on") {
        return true;
      }
      if (value == "false" || value == "0" || value == "no" || value == "off") {
        return false;
      }
      throw field_error(key, "expected true or false, got '" + value + "'");
    }

    std::string resolve(std::string const& base, std::string const& value) {
      if (value.empty()) {
        return value;
      }
      std::filesystem::path const p(value);
      if (p.is_absolute() || base.empty() || base == ".") {
        return value;
      }
      return (std::filesystem::path(base) / p).string();
    }

    std::string fmt(double v) {
      std::ostringstream out;
      out.precision(12);
      out << v;
      return out.str();
    }
  }  // namespace

  void apply_config_value(SimConfig& c, std::string const& key, std::string const& raw,
                          std::string const& base_dir) {
    std::string const value(text::trim(raw));
    try {
      if (key == "grid") {
        c.grid_file = resolve(base_dir, value);
      } else if (key == "grid.n") {
        c.synthetic_grid.n = number<int>(key, value);
      } else if (key == "grid.min_capacity") {
        c.synthetic_grid.min_capacity = number<int>(key, value);
      } else if (key == "grid.max_capacity") {
        c.synthetic_grid.max_capacity = number<int>(key, value);
      } else if (key == "grid.core_bonus") {
        c.synthetic_grid.core_bonus = number<int>(key, value);
      } else if (key == "grid.seed") {
        c.synthetic_grid.seed = number<std::uint64_t>(key, value);
      } else if (key == "arrivals") {
        c.arrivals_file = resolve(base_dir, value);
      } else if (key == "intensity") {
        c.intensity_file = resolve(base_dir, value);
      } else if (key == "synth.pattern") {
        c.synth.pattern = parse_demand_pattern(value);
      } else if (key == "synth.magnitude") {
        c.synth.magnitude = number<double>(key, value);
      } else if (key == "synth.peak_minute") {
        c.synth.peak_minute = number<int>(key, value);
      } else if (key == "synth.diurnal_floor") {
        c.synth.diurnal_floor = number<double>(key, value);
      } else if (key == "synth.sigma") {
        c.synth.hotspot_sigma = number<double>(key, value);
      } else if (key == "synth.hotspot_diurnal") {
        c.synth.hotspot_diurnal = boolean(key, value);
      } else if (key == "synth.center") {
        auto const parts = text::split(value, ',');
        if (parts.size() != 2) {
          throw field_error(key, "expected 'i,j'");
        }
        c.synth.hotspot_center = CellCoord{number<int>(key, parts[0]), number<int>(key, parts[1])};
      } else if (key == "synth.participant_fraction") {
        c.synth_participant_fraction = number<double>(key, value);
      } else if (key == "synth.seed") {
        c.synth.seed = number<std::uint64_t>(key, value);
      } else if (key == "strategy") {
        c.strategy = parse_strategy(value);
      } else if (key == "radius") {
        c.radius = number<int>(key, value);
      } else if (key == "t_max") {
        c.t_max = number<int>(key, value);
      } else if (key == "participant_share") {
        c.participant_share = number<double>(key, value);
      } else if (key == "competitor_share") {
        c.competitor_share = number<double>(key, value);
      } else if (key == "dwell") {
        c.dwell = DwellSpec::parse(value);
      } else if (key == "horizon") {
        c.horizon = number<int>(key, value);
      } else if (key == "seed") {
        c.seed = number<std::uint64_t>(key, value);
      } else if (key == "runs") {
        c.runs = number<int>(key, value);
      } else if (key == "clip_reachable") {
        c.clip_reachable = boolean(key, value);
      } else if (key == "initial_occupancy") {
        c.initial_occupancy = number<double>(key, value);
      } else if (key == "demand_scale") {
        c.demand_scale = number<double>(key, value);
      } else if (key == "history") {
        c.history_file = resolve(base_dir, value);
      } else if (key == "model") {
        c.model_file = resolve(base_dir, value);
      } else if (key == "retrain_every") {
        c.retrain_every = number<int>(key, value);
      } else if (key == "window_days") {
        c.window_days = number<int>(key, value);
      } else if (key == "day_index") {
        c.day_index = number<int>(key, value);
      } else if (key == "day0_weekday") {
        c.day0_weekday = number<int>(key, value);
      } else if (key == "peak_start") {
        c.peak_start = number<int>(key, value);
      } else if (key == "peak_end") {
        c.peak_end = number<int>(key, value);
      } else if (key == "events") {
        c.record_events = boolean(key, value);
      } else {
        throw field_error(key, "unknown key");
      }
    } catch (ConfigError const& e) {
      std::string const what = e.what();
      if (what.rfind("field '", 0) == 0) {
        throw;
      }
      throw field_error(key, what);
    }
  }

  void SimConfig::validate() const {
    auto require = [](bool ok, char const* key, char const* message) {
      if (!ok) {
        throw field_error(key, message);
      }
    };
    require(radius >= 0, "radius", "must be >= 0");
    require(t_max >= 0, "t_max", "must be >= 0");
    require(horizon >= 0, "horizon", "must be >= 0");
    require(runs >= 1, "runs", "must be >= 1");
    require(participant_share >= 0.0 && competitor_share >= 0.0 &&
                participant_share + competitor_share <= 1.0 + 1e-12,
            "participant_share", "shares must be non-negative and sum to at most 1");
    require(initial_occupancy >= 0.0 && initial_occupancy <= 1.0, "initial_occupancy", "must lie in [0, 1]");
    require(demand_scale >= 0.0, "demand_scale", "must be >= 0");
    require(retrain_every >= 0, "retrain_every", "must be >= 0");
    require(window_days >= 1, "window_days", "must be >= 1");
    require(day_index >= 0, "day_index", "must be >= 0");
    require(day0_weekday >= 0 && day0_weekday < 7, "day0_weekday", "must lie in [0, 7)");
    require(peak_start >= 0 && peak_start <= peak_end, "peak_start", "must satisfy 0 <= peak_start <= peak_end");
    if (synth_participant_fraction) {
      require(*synth_participant_fraction >= 0.0 && *synth_participant_fraction <= 1.0,
              "synth.participant_fraction", "must lie in [0, 1]");
    }
    try {
      dwell.validate();
    } catch (ConfigError const& e) {
      throw field_error("dwell", e.what());
    }
  }

  SimConfig parse_config(std::istream& in, std::string const& base_dir) {
    SimConfig config;
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
      ++lineNo;
      if (auto const hash = line.find('#'); hash != std::string::npos) {
        line.erase(hash);
      }
      auto const body = text::trim(line);
      if (body.empty()) {
        continue;
      }
      auto const eq = body.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError("line " + std::to_string(lineNo) + ": expected 'key = value'");
      }
      apply_config_value(config, std::string(text::trim(body.substr(0, eq))),
                         std::string(text::trim(body.substr(eq + 1))), base_dir);
    }
    config.validate();
    return config;
  }

  SimConfig load_config_file(std::string const& path) {
    std::ifstream in(path);
    if (!in) {
      throw IoError("cannot open config file '" + path + "'");
    }
    auto const dir = std::filesystem::path(path).parent_path().string();
    return parse_config(in, dir.empty() ? "." : dir);
  }

  std::map<std::string, std::string> config_entries(SimConfig const& c) {
    std::map<std::string, std::string> out;
    out["grid"] = c.grid_file;
    if (c.grid_file.empty()) {
      out["grid.n"] = std::to_string(c.synthetic_grid.n);
      out["grid.min_capacity"] = std::to_string(c.synthetic_grid.min_capacity);
      out["grid.max_capacity"] = std::to_string(c.synthetic_grid.max_capacity);
      out["grid.core_bonus"] = std::to_string(c.synthetic_grid.core_bonus);
      out["grid.seed"] = std::to_string(c.synthetic_grid.seed);
    }
    out["arrivals"] = c.arrivals_file;
    out["intensity"] = c.intensity_file;
    if (c.arrivals_file.empty() && c.intensity_file.empty()) {
      out["synth.pattern"] = to_string(c.synth.pattern);
      out["synth.magnitude"] = fmt(c.synth.magnitude);
      out["synth.peak_minute"] = std::to_string(c.synth.peak_minute);
      out["synth.diurnal_floor"] = fmt(c.synth.diurnal_floor);
      out["synth.sigma"] = fmt(c.synth.hotspot_sigma);
      out["synth.hotspot_diurnal"] = c.synth.hotspot_diurnal ? "true" : "false";
      out["synth.seed"] = std::to_string(c.synth.seed);
      if (c.synth.hotspot_center) {
        out["synth.center"] =
            std::to_string(c.synth.hotspot_center->i) + "," + std::to_string(c.synth.hotspot_center->j);
      }
      if (c.synth_participant_fraction) {
        out["synth.participant_fraction"] = fmt(*c.synth_participant_fraction);
      }
    }
    out["strategy"] = to_string(c.strategy);
    out["radius"] = std::to_string(c.radius);
    out["t_max"] = std::to_string(c.t_max);
    out["participant_share"] = fmt(c.participant_share);
    out["competitor_share"] = fmt(c.competitor_share);
    out["dwell"] = c.dwell.to_string();
    out["horizon"] = std::to_string(c.horizon);
    out["seed"] = std::to_string(c.seed);
    out["runs"] = std::to_string(c.runs);
    out["clip_reachable"] = c.clip_reachable ? "true" : "false";
    out["initial_occupancy"] = fmt(c.initial_occupancy);
    out["demand_scale"] = fmt(c.demand_scale);
    out["history"] = c.history_file;
    out["model"] = c.model_file;
    out["retrain_every"] = std::to_string(c.retrain_every);
    out["window_days"] = std::to_string(c.window_days);
    out["day_index"] = std::to_string(c.day_index);
    out["day0_weekday"] = std::to_string(c.day0_weekday);
    out["peak_start"] = std::to_string(c.peak_start);
    out["peak_end"] = std::to_string(c.peak_end);
    out["events"] = c.record_events ? "true" : "false";
    return out;
  }

}  // namespace parksim
