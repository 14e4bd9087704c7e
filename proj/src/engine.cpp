#include "parksim/engine.hpp"

#include "parksim/errors.hpp"
#include "parksim/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace parksim {

  std::string to_string(EventKind kind) {
    switch (kind) {
      case EventKind::spawn:
        return "spawn";
      case EventKind::move:
        return "move";
      case EventKind::assign:
        return "assign";
      case EventKind::park:
        return "park";
      case EventKind::depart:
        return "depart";
      case EventKind::fail:
        return "fail";
    }
    return "?";
  }

  std::string to_string(Terminal terminal) {
    switch (terminal) {
      case Terminal::parked:
        return "parked";
      case Terminal::failed:
        return "failed";
      case Terminal::censored:
        return "censored";
    }
    return "?";
  }

  std::map<int, int> competitor_captures(OccupancyState const& state, std::span<CellCoord const> competitors,
                                         std::span<CellCoord const> participants, int radius) {
    std::map<int, int> capturers;
    int const n = state.n();
    for (auto const c : competitors) {
      for (auto const s : visible_spots(c, state, radius)) {
        int const tc = manhattan(c, s);
        bool const strictlyFirst = std::all_of(participants.begin(), participants.end(),
                                               [&](CellCoord d) { return tc < manhattan(d, s); });
        if (strictlyFirst) {
          ++capturers[s.i * n + s.j];
        }
      }
    }
    for (auto& [k, units] : capturers) {
      units = std::min(units, state.free_count({k / n, k % n}));
    }
    return capturers;
  }

  Simulation::Simulation(GridWorld const& world, ArrivalSeries const& arrivals, SimConfig config,
                         std::uint64_t seed, int day, HistoryCorpus history, std::optional<RidgeModel> model)
      : m_world(&world),
        m_arrivals(&arrivals),
        m_config(std::move(config)),
        m_seed(seed),
        m_day(day),
        m_occupancy(world.empty_state()),
        m_corpus(std::move(history)) {
    m_config.validate();
    if (arrivals.cells() != world.spec.cell_count()) {
      throw ConfigError("arrival series covers " + std::to_string(arrivals.cells()) + " cells, grid has " +
                        std::to_string(world.spec.cell_count()));
    }
    if (m_config.strategy == StrategyKind::CordApprox) {
      FeatureSchema const schema{world.spec.cell_count(), m_config.day0_weekday};
      if (!model) {
        if (m_corpus.empty()) {
          throw ConfigError("cord-approx predictor requires history");
        }
        model = retrain(m_corpus, RetrainOptions{schema, {1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0}, 5,
                                                 m_config.window_days});
      }
      if (model->schema.cells != schema.cells) {
        throw SchemaError("model schema covers " + std::to_string(model->schema.cells) + " cells, grid has " +
                          std::to_string(schema.cells));
      }
      m_predictor = std::make_shared<AvailabilityPredictor const>(
          std::make_shared<RidgeModel const>(std::move(*model)), std::make_shared<TrendIndex const>(m_corpus));
    }
    fill_background();
  }

  long Simulation::bucket_start(long tick) const {
    return static_cast<long>(m_day) * 1440 + (tick / kBucketMinutes) * kBucketMinutes;
  }

  void Simulation::log(long tick, Agent const& agent, EventKind kind, CellCoord cell) {
    if (m_config.record_events) {
      m_events.push_back({tick, agent.id, agent.group, kind, m_world->spec.index(cell)});
    }
  }

  void Simulation::tally(CellCoord cell, bool success) {
    auto& [attempts, successes] = m_bucketTally[m_world->spec.index(cell)];
    ++attempts;
    successes += success ? 1 : 0;
  }

  void Simulation::open_attempt(AgentId id, CellCoord cell) { m_attempt[id] = cell; }

  void Simulation::close_attempt(AgentId id, bool lost) {
    auto& attempt = m_attempt[id];
    if (attempt && lost) {
      tally(*attempt, false);
    }
    attempt.reset();
  }

  void Simulation::fill_background() {
    if (m_config.initial_occupancy <= 0.0) {
      return;
    }
    RngStream rng(m_seed, "init.background");
    double carry = 0.0;
    int const n = m_world->spec.n();
    for (int k = 0; k < m_world->spec.cell_count(); ++k) {
      CellCoord const z{k / n, k % n};
      carry += m_config.initial_occupancy * m_world->capacity[k];
      auto const cars = std::min(static_cast<int>(std::floor(carry)), m_world->capacity[k]);
      carry -= cars;
      for (int c = 0; c < cars; ++c) {
        int const full = sample_dwell(m_config.dwell, rng);
        m_background.push_back({z, rng.uniform_int(1, full)});
        m_occupancy.occupy(z);
      }
    }
  }

  AgentId Simulation::spawn(Group group, CellCoord pos) {
    if (!m_world->spec.contains(pos)) {
      throw ContractViolation("spawn outside the grid");
    }
    auto const id = static_cast<AgentId>(m_agents.size());
    Agent agent;
    agent.id = id;
    agent.group = group;
    agent.pos = pos;
    agent.spawn_tick = m_tick;
    m_agents.push_back(agent);
    auto const base = static_cast<std::uint64_t>(id);
    m_moveRng.emplace_back(derive_seed(derive_seed(m_seed, "move"), base));
    m_dwellRng.emplace_back(derive_seed(derive_seed(m_seed, "dwell"), base));
    m_attempt.emplace_back();
    m_spawnedNow.push_back(1);
    log(m_tick, m_agents.back(), EventKind::spawn, pos);
    return id;
  }

  void Simulation::set_target(AgentId id, std::optional<CellCoord> target) {
    auto& agent = m_agents.at(static_cast<std::size_t>(id));
    if (agent.group != Group::participant) {
      throw ContractViolation("only participants carry dispatch targets");
    }
    agent.target = target;
    if (target) {
      open_attempt(id, *target);
    }
  }

  void Simulation::depart_finished() {
    for (auto& agent : m_agents) {
      if (agent.status != AgentStatus::parked) {
        continue;
      }
      if (--*agent.dwell_remaining <= 0) {
        m_occupancy.release(*agent.park_cell);
        agent.status = AgentStatus::departed;
        agent.dwell_remaining = 0;
        log(m_tick, agent, EventKind::depart, *agent.park_cell);
      }
    }
    std::erase_if(m_background, [&](Background& car) {
      if (--car.remaining > 0) {
        return false;
      }
      m_occupancy.release(car.cell);
      return true;
    });
  }

  void Simulation::dispatch_participants(std::vector<std::size_t> const& participants,
                                         std::vector<CellCoord> const& competitorPositions,
                                         std::map<int, int> const& captured) {
    if (participants.empty()) {
      return;
    }
    int const n = m_world->spec.n();
    std::vector<ParticipantView> views;
    views.reserve(participants.size());
    for (auto const idx : participants) {
      views.push_back({m_agents[idx].pos, m_agents[idx].target});
    }
    auto free = m_occupancy.free_spots();
    OracleContext oracle;
    ApproxContext approx;
    DispatchInput input;
    input.participants = views;
    if (m_config.strategy == StrategyKind::CordOracle) {
      // Preempted units are withheld from the dispatcher.
      for (auto& fc : free) {
        if (auto const it = captured.find(fc.cell.i * n + fc.cell.j); it != captured.end()) {
          fc.free_count -= it->second;
        }
      }
      std::erase_if(free, [](FreeCell const& fc) { return fc.free_count <= 0; });
      oracle.competitors = competitorPositions;
      oracle.radius = m_config.radius;
      if (m_config.clip_reachable) {
        oracle.clip_n = n;
      }
      input.oracle = &oracle;
    }
    if (m_config.strategy == StrategyKind::CordApprox) {
      refresh_predictor();
      approx.p_hat = m_pHat;
      approx.n = n;
      input.approx = &approx;
    }
    input.free = free;
    RngStream rng(derive_seed(derive_seed(m_seed, "dispatch"), static_cast<std::uint64_t>(m_tick)));
    auto const targets = dispatch(m_config.strategy, input, rng);
    for (std::size_t p = 0; p < participants.size(); ++p) {
      auto& agent = m_agents[participants[p]];
      auto const& next = targets[p];
      if (!next) {
        // An unmatched participant gives up a full target and cruises until matched again.
        if (agent.target && m_occupancy.free_count(*agent.target) == 0) {
          close_attempt(agent.id, true);
          agent.target.reset();
        }
        continue;
      }
      if (agent.target && *agent.target == *next) {
        continue;
      }
      if (auto const& open = m_attempt[participants[p]]) {
        close_attempt(agent.id, m_occupancy.free_count(*open) == 0);
      }
      agent.target = *next;
      agent.heading.reset();
      open_attempt(agent.id, *next);
      log(m_tick, agent, EventKind::assign, *next);
    }
  }

  void Simulation::move_agents(std::vector<std::size_t> const& searching) {
    int const n = m_world->spec.n();
    for (auto const idx : searching) {
      auto& agent = m_agents[idx];
      if (m_spawnedNow[idx]) {
        continue;
      }
      auto& rng = m_moveRng[idx];
      CellCoord next = agent.pos;
      if (agent.target) {
        next = step_participant(agent.pos, *agent.target, rng);
      } else {
        auto const visible = visible_spots(agent.pos, m_occupancy, m_config.radius);
        auto const step = step_competitor(agent.pos, visible, n, rng);
        next = step.position;
        auto const& attempt = m_attempt[idx];
        if (step.heading != attempt) {
          if (attempt) {
            close_attempt(agent.id, m_occupancy.free_count(*attempt) == 0);
          }
          if (step.heading) {
            open_attempt(agent.id, *step.heading);
          }
        }
        agent.heading = step.heading;
      }
      if (next != agent.pos) {
        agent.pos = next;
        log(m_tick, agent, EventKind::move, next);
      }
    }
  }

  void Simulation::resolve_claims(std::vector<std::size_t> const& searching) {
    int const n = m_world->spec.n();
    std::map<int, std::vector<AgentId>> claims;
    for (auto const idx : searching) {
      auto const& agent = m_agents[idx];
      if (agent.target) {
        if (*agent.target != agent.pos) {
          continue;
        }
        if (m_occupancy.free_count(agent.pos) == 0) {
          // arrived to a full cell; the next dispatch sends it elsewhere
          close_attempt(agent.id, true);
          continue;
        }
      } else if (m_occupancy.free_count(agent.pos) == 0) {
        continue;
      }
      claims[agent.pos.i * n + agent.pos.j].push_back(agent.id);
    }
    auto const tiesSeed = derive_seed(m_seed, "ties");
    for (auto const& [k, claimants] : claims) {
      CellCoord const cell{k / n, k % n};
      int const freeBefore = m_occupancy.free_count(cell);
      RngStream rng(derive_seed(tiesSeed, static_cast<std::uint64_t>(m_tick) * static_cast<std::uint64_t>(n * n) +
                                              static_cast<std::uint64_t>(k)));
      auto const winners = resolve_parking(claimants, freeBefore, rng);
      if (static_cast<int>(winners.size()) > freeBefore) {
        throw CapacityViolation("cell " + std::to_string(k) + " awarded " + std::to_string(winners.size()) +
                                " spots with " + std::to_string(freeBefore) + " free");
      }
      ++m_checks.award_checks;
      for (auto const id : claimants) {
        auto& agent = m_agents[static_cast<std::size_t>(id)];
        bool const won = std::find(winners.begin(), winners.end(), id) != winners.end();
        m_attempt[static_cast<std::size_t>(id)].reset();
        tally(cell, won);
        if (!won) {
          continue;
        }
        m_occupancy.occupy(cell);
        agent.status = AgentStatus::parked;
        agent.status_tick = m_tick;
        agent.park_cell = cell;
        agent.dwell_remaining = sample_dwell(m_config.dwell, m_dwellRng[static_cast<std::size_t>(id)]);
        agent.target.reset();
        agent.heading.reset();
        log(m_tick, agent, EventKind::park, cell);
      }
    }
  }

  void Simulation::expire(std::vector<std::size_t> const& searching) {
    for (auto const idx : searching) {
      auto& agent = m_agents[idx];
      if (agent.status == AgentStatus::searching && agent.age(m_tick) > m_config.t_max) {
        agent.status = AgentStatus::failed;
        agent.status_tick = m_tick;
        m_attempt[idx].reset();
        log(m_tick, agent, EventKind::fail, agent.pos);
      }
    }
  }

  void Simulation::verify() {
    m_occupancy.check_invariants();
    ++m_checks.occupancy_checks;
    long parked = static_cast<long>(m_background.size());
    for (auto const& agent : m_agents) {
      switch (agent.status) {
        case AgentStatus::parked:
          if (!agent.dwell_remaining || !agent.park_cell) {
            throw CapacityViolation("parked agent " + std::to_string(agent.id) + " in an inconsistent state");
          }
          ++parked;
          break;
        case AgentStatus::failed:
          if (agent.status_tick - agent.spawn_tick <= m_config.t_max) {
            throw CapacityViolation("agent " + std::to_string(agent.id) + " failed inside its search budget");
          }
          break;
        case AgentStatus::searching:
          if (!m_world->spec.contains(agent.pos)) {
            throw CapacityViolation("agent " + std::to_string(agent.id) + " left the grid");
          }
          break;
        case AgentStatus::departed:
          break;
      }
    }
    if (parked != m_occupancy.total_occupied()) {
      throw CapacityViolation("occupancy " + std::to_string(m_occupancy.total_occupied()) +
                              " disagrees with " + std::to_string(parked) + " parked vehicles at tick " +
                              std::to_string(m_tick));
    }
    ++m_checks.partition_checks;
  }

  void Simulation::flush_bucket(long start) {
    std::vector<BucketObservation> batch;
    for (auto const& [k, tally] : m_bucketTally) {
      batch.push_back({k, start, tally.first, tally.second});
    }
    m_bucketTally.clear();
    m_observations.insert(m_observations.end(), batch.begin(), batch.end());
    if (m_predictor) {
      m_corpus = update_history(std::move(m_corpus), batch);
      bool const retrainNow = m_config.retrain_every > 0 && (m_tick + 1) % m_config.retrain_every == 0;
      auto model = m_predictor->model_ptr();
      if (retrainNow) {
        FeatureSchema const schema = model->schema;
        model = std::make_shared<RidgeModel const>(retrain(
            m_corpus, RetrainOptions{schema, {1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0}, 5, m_config.window_days}));
      }
      m_predictor = std::make_shared<AvailabilityPredictor const>(std::move(model),
                                                                  std::make_shared<TrendIndex const>(m_corpus));
      m_pHatBucket = -1;
    }
  }

  void Simulation::refresh_predictor() {
    long const bucket = bucket_start(m_tick);
    if (bucket != m_pHatBucket) {
      m_pHat = m_predictor->predict_all(bucket);
      m_pHatBucket = bucket;
    }
  }

  void Simulation::run_tick() {
    if (finished()) {
      throw ContractViolation("run_tick past the horizon");
    }
    m_occupancy.tick = m_tick;
    int const n = m_world->spec.n();

    // (1) arrivals for this minute
    if (m_tick < m_arrivals->horizon()) {
      for (int k = 0; k < m_arrivals->cells(); ++k) {
        CellCoord const z{k / n, k % n};
        for (int a = 0; a < m_arrivals->participants(k, static_cast<int>(m_tick)); ++a) {
          spawn(Group::participant, z);
        }
        for (int a = 0; a < m_arrivals->competitors(k, static_cast<int>(m_tick)); ++a) {
          spawn(Group::competitor, z);
        }
      }
    }

    // (2) departures free their spots before dispatch
    depart_finished();

    std::vector<std::size_t> searching, participants;
    std::vector<CellCoord> participantPos, competitorPos;
    for (std::size_t idx = 0; idx < m_agents.size(); ++idx) {
      auto const& agent = m_agents[idx];
      if (!agent.searching()) {
        continue;
      }
      searching.push_back(idx);
      if (agent.group == Group::participant) {
        participants.push_back(idx);
        participantPos.push_back(agent.pos);
      } else {
        competitorPos.push_back(agent.pos);
      }
    }

    // (3) competitor captures
    auto const captured = competitor_captures(m_occupancy, competitorPos, participantPos, m_config.radius);
    TickSample sample;
    sample.tick = m_tick;
    sample.availability = m_occupancy.availability();
    sample.free = m_occupancy.total_free();
    sample.searching_participants = static_cast<int>(participantPos.size());
    sample.searching_competitors = static_cast<int>(competitorPos.size());
    for (auto const& [k, units] : captured) {
      sample.captured_units += units;
    }
    m_ticks.push_back(sample);

    // (4) dispatch, (5) movement, (6) parking, (7) expiry
    dispatch_participants(participants, competitorPos, captured);
    move_agents(searching);
    resolve_claims(searching);
    expire(searching);

    verify();
    ++m_checks.ticks;
    std::fill(m_spawnedNow.begin(), m_spawnedNow.end(), 0);

    // (9) hourly history merge
    if ((m_tick + 1) % kBucketMinutes == 0) {
      flush_bucket(bucket_start(m_tick));
    }
    ++m_tick;
  }

  RunResult Simulation::finish(int run_index) {
    while (!finished()) {
      run_tick();
    }
    if (!m_bucketTally.empty()) {
      flush_bucket(bucket_start(std::max(0L, m_tick - 1)));
    }
    RunResult result;
    result.run = run_index;
    result.seed = m_seed;
    result.day = m_day;
    result.strategy = m_config.strategy;
    result.total_capacity = m_occupancy.total_capacity();
    result.ticks = m_ticks;
    result.events = m_events;
    result.observations = m_observations;
    result.checks = m_checks;
    result.outcomes.reserve(m_agents.size());
    int const n = m_world->spec.n();
    for (auto const& agent : m_agents) {
      OutcomeRecord rec;
      rec.id = agent.id;
      rec.group = agent.group;
      rec.spawn_tick = agent.spawn_tick;
      switch (agent.status) {
        case AgentStatus::parked:
        case AgentStatus::departed:
          rec.terminal = Terminal::parked;
          rec.terminal_tick = agent.status_tick;
          rec.park_cell = agent.park_cell->i * n + agent.park_cell->j;
          break;
        case AgentStatus::failed:
          rec.terminal = Terminal::failed;
          rec.terminal_tick = agent.status_tick;
          break;
        case AgentStatus::searching:
          rec.terminal = Terminal::censored;
          rec.terminal_tick = m_tick;
          break;
      }
      result.outcomes.push_back(rec);
    }
    return result;
  }

  GridWorld load_world(SimConfig const& config) {
    if (!config.grid_file.empty()) {
      return load_grid_file(config.grid_file);
    }
    return make_synthetic_grid(config.synthetic_grid);
  }

  ArrivalSeries load_arrivals(SimConfig const& config, GridWorld const& world) {
    int const cells = world.spec.cell_count();
    ArrivalSeries series(cells, 0);
    if (!config.arrivals_file.empty()) {
      std::ifstream in(config.arrivals_file);
      if (!in) {
        throw IoError("cannot open arrival file '" + config.arrivals_file + "'");
      }
      series = read_arrivals(in, cells, config.horizon);
    } else if (!config.intensity_file.empty()) {
      std::ifstream in(config.intensity_file);
      if (!in) {
        throw IoError("cannot open intensity file '" + config.intensity_file + "'");
      }
      auto const records = parse_intensity(in, world.spec);
      series = split_demand(disaggregate(records, cells), config.participant_share, config.competitor_share);
    } else {
      SynthSpec spec = config.synth;
      spec.n = world.spec.n();
      spec.horizon = config.horizon;
      double const searching = config.participant_share + config.competitor_share;
      spec.participant_fraction = config.synth_participant_fraction.value_or(
          searching > 0.0 ? config.participant_share / searching : 0.0);
      series = synth_demand(spec);
    }
    if (config.demand_scale != 1.0) {
      series = series.scaled(config.demand_scale);
    }
    return series;
  }

  std::uint64_t run_seed(std::uint64_t master, int run) {
    return derive_seed(master, static_cast<std::uint64_t>(run));
  }

  RunResult run_single(GridWorld const& world, ArrivalSeries const& arrivals, SimConfig const& config,
                       std::uint64_t seed, int run_index, int day, HistoryCorpus history,
                       std::optional<RidgeModel> model) {
    Simulation sim(world, arrivals, config, seed, day, std::move(history), std::move(model));
    return sim.finish(run_index);
  }

  std::vector<RunResult> run_simulation(SimConfig const& config) {
    config.validate();
    auto const world = load_world(config);
    auto const arrivals = load_arrivals(config, world);
    HistoryCorpus history;
    if (!config.history_file.empty()) {
      history = load_history_file(config.history_file);
    }
    std::optional<RidgeModel> model;
    if (!config.model_file.empty()) {
      std::ifstream in(config.model_file);
      if (!in) {
        throw IoError("cannot open model file '" + config.model_file + "'");
      }
      model = read_model(in);
    }
    std::vector<RunResult> runs;
    for (int r = 0; r < config.runs; ++r) {
      runs.push_back(
          run_single(world, arrivals, config, run_seed(config.seed, r), r, config.day_index + r, history, model));
    }
    return runs;
  }

  RoundsResult run_approx_rounds(GridWorld const& world, ArrivalSeries const& arrivals, SimConfig config,
                                 std::uint64_t seed, int rounds, HistoryCorpus history) {
    RoundsResult out;
    int day = config.day_index;
    if (history.empty()) {
      SimConfig warm = config;
      warm.strategy = StrategyKind::CordAgn;
      warm.record_events = false;
      for (int d = 0; d < config.window_days; ++d, ++day) {
        auto const run = run_single(world, arrivals, warm, seed, 0, day);
        history = merge_observations(std::move(history), run);
      }
    }
    config.strategy = StrategyKind::CordApprox;
    for (int r = 0; r < rounds; ++r, ++day) {
      auto run = run_single(world, arrivals, config, seed, r, day, history);
      history = merge_observations(std::move(history), run);
      out.rounds.push_back(std::move(run));
    }
    out.history = std::move(history);
    return out;
  }

  HistoryCorpus merge_observations(HistoryCorpus corpus, RunResult const& run) {
    return update_history(std::move(corpus), run.observations);
  }

}  // namespace parksim
