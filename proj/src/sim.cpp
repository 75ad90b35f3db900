#include "gfla/sim.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <map>
#include <mutex>
#include <numbers>
#include <thread>

#include "gfla/errors.hpp"

namespace gfla {

ContentionConfig RealizationConfig::contention() const {
  ContentionConfig c;
  c.a = cw_a;
  c.max_modulation = max_modulation;
  c.slot_quantum = slot_quantum;
  return c;
}

PacketTiming RealizationConfig::timing() const {
  return PacketTiming{packet_bits(), 1.0 / symbol_rate, tti_s};
}

ActionSpace RealizationConfig::action_space() const {
  return ActionSpace(max_modulation, static_cast<int>(power_set_mw.size()), num_subcarriers);
}

NetworkDims RealizationConfig::network_dims() const {
  NetworkDims d;
  d.input_dim = feature_dim(num_base_stations, num_subcarriers);
  d.hidden = hidden;
  d.num_actions = action_space().size();
  d.fc_activation = fc_activation;
  return d;
}

CostParams RealizationConfig::cost_params() const {
  CostParams c;
  c.p_on_w = p_on_mw * 1e-3 * power_cost_scale;
  c.p_off_w = p_off_mw * 1e-3 * power_cost_scale;
  c.gamma = gamma;
  c.kappa_omega = kappa_omega;
  return c;
}

LearnerSettings RealizationConfig::learner_settings() const {
  LearnerSettings s;
  s.dims = network_dims();
  s.ppo.clip = ppo_clip;
  s.ppo.value_coef = value_coef;
  s.ppo.entropy_coef = entropy_coef;
  s.ppo.epochs = epochs;
  s.ppo.minibatches = minibatches;
  s.ppo.gamma = gamma;
  s.ppo.learning_rate = learning_rate;
  s.ppo.max_grad_norm = max_grad_norm;
  s.scaling.noise_w = noise_w;
  s.scaling.buffer_capacity = buffer_capacity;
  s.cost = cost_params();
  s.update_period = update_period;
  s.broadcast_period = broadcast_period;
  s.learning_enabled = learning_enabled;
  return s;
}

void RealizationConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(symbol_rate > 0.0, "symbol_rate must be positive");
  require(radius_m > 0.0, "radius must be positive");
  require(num_devices >= 1, "users must be >= 1");
  require(num_base_stations >= 1, "base_stations must be >= 1");
  require(num_subcarriers >= 1, "subcarriers must be >= 1");
  require(num_preambles >= 1, "preambles must be >= 1");
  require(path_loss_exponent > 0.0, "path_loss_exponent must be positive");
  require(buffer_capacity >= 1, "buffer_capacity must be >= 1");
  require(update_period >= 1, "update_period must be >= 1");
  require(packet_bytes >= 1, "packet_bytes must be >= 1");
  require(tti_s > 0.0, "tti must be positive");
  require(!delay_set.empty(), "delay_set must not be empty");
  for (int d : delay_set) require(d >= 0, "delay constraints must be >= 0");
  require(!arrival_rate_set.empty(), "arrival_rates must not be empty");
  for (double l : arrival_rate_set) require(l >= 0.0, "arrival rates must be >= 0");
  require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
  require(p_on_mw >= 0.0 && p_off_mw >= 0.0, "radio powers must be >= 0");
  require(max_doppler_hz >= 0.0, "max_doppler must be >= 0");
  require(!architectures.empty(), "no architecture selected");
  require(ttis >= 1, "ttis must be >= 1");
  require(realizations >= 1, "realizations must be >= 1");
  require(max_modulation >= 1, "max_modulation must be >= 1");
  require(!power_set_mw.empty(), "power_set must not be empty");
  for (double p : power_set_mw) require(p >= 0.0, "transmit powers must be >= 0");
  require(noise_w > 0.0, "noise must be positive");
  require(kappa_omega >= 0.0, "kappa_omega must be >= 0");
  require(power_cost_scale > 0.0, "power_cost_scale must be positive");
  require(baseline_q_bar >= 0.0 && baseline_q_bar <= 1.0, "q_bar must lie in [0, 1]");
  require(min_distance_m > 0.0, "min_distance must be positive");
  require(hidden >= 1, "hidden must be >= 1");
  require(ppo_clip > 0.0, "clip must be positive");
  require(epochs >= 1 && minibatches >= 1, "epochs and minibatches must be >= 1");
  require(learning_rate >= 0.0, "learning_rate must be >= 0");
  require(max_grad_norm > 0.0, "max_grad_norm must be positive");
  require(broadcast_period >= 1, "broadcast_period must be >= 1");
  try {
    contention().validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

namespace {

Point uniform_on_disk(double radius, Rng& rng) {
  const double r = radius * std::sqrt(uniform01(rng));
  const double theta = 2.0 * std::numbers::pi * uniform01(rng);
  return {r * std::cos(theta), r * std::sin(theta)};
}

std::unique_ptr<Controller> make_controller(const RealizationConfig& cfg, ArchitectureKind kind,
                                            const Deployment& dep, Rng& init_rng) {
  const auto space = cfg.action_space();
  const auto settings = cfg.learner_settings();
  switch (kind) {
    case ArchitectureKind::kIndependent:
      return std::make_unique<IndependentLearners>(cfg.num_devices, space, settings, init_rng);
    case ArchitectureKind::kCentralCritic:
      return std::make_unique<CentralCritic>(cfg.num_devices, space, settings, init_rng);
    case ArchitectureKind::kCentralizedLearning:
      return std::make_unique<CentralizedLearner>(cfg.num_devices, space, settings, init_rng);
    case ArchitectureKind::kBaseline: {
      std::vector<int> delays;
      for (const auto& p : dep.profiles) delays.push_back(p.delay_constraint);
      BaselineLimits lim{static_cast<int>(cfg.power_set_mw.size()), cfg.max_modulation,
                         cfg.num_subcarriers};
      return std::make_unique<BaselineController>(std::move(delays), lim, cfg.baseline_q_bar);
    }
  }
  throw DomainError("unknown architecture");
}

}  // namespace

Deployment generate_topology(const RealizationConfig& cfg, Rng& rng) {
  if (cfg.num_devices < 1 || cfg.num_base_stations < 1)
    throw DomainError("generate_topology: need at least one device and one base station");
  std::vector<Point> bss(cfg.num_base_stations), devices(cfg.num_devices);
  for (auto& p : bss) p = uniform_on_disk(cfg.radius_m, rng);
  for (auto& p : devices) p = uniform_on_disk(cfg.radius_m, rng);
  Deployment d;
  d.topology = Topology(std::move(devices), std::move(bss), cfg.radius_m, cfg.path_loss_exponent,
                        cfg.num_subcarriers, cfg.num_preambles, cfg.min_distance_m);
  std::uniform_int_distribution<int> delay_pick(0, static_cast<int>(cfg.delay_set.size()) - 1);
  std::uniform_int_distribution<int> rate_pick(0,
                                               static_cast<int>(cfg.arrival_rate_set.size()) - 1);
  d.profiles.resize(cfg.num_devices);
  for (auto& p : d.profiles) {
    p.delay_class = delay_pick(rng);
    p.delay_constraint = cfg.delay_set[p.delay_class];
    p.arrival_rate = cfg.arrival_rate_set[rate_pick(rng)];
  }
  return d;
}

int recount_collisions(const std::vector<ContentionRecord>& records) {
  std::map<std::pair<int, int>, std::vector<const ContentionRecord*>> domains;
  for (const auto& r : records) domains[{r.bs, r.subcarrier}].push_back(&r);
  int events = 0;
  for (const auto& [key, recs] : domains) {
    int lowest = recs.front()->backoff;
    for (const auto* r : recs) lowest = std::min(lowest, r->backoff);
    std::map<int, int> per_preamble;
    for (const auto* r : recs)
      if (r->backoff == lowest) ++per_preamble[r->preamble];
    for (const auto& [pre, n] : per_preamble)
      if (n >= 2) ++events;
  }
  return events;
}

Realization::Realization(const RealizationConfig& cfg, ArchitectureKind kind, std::uint64_t seed)
    : cfg_(cfg),
      kind_(kind),
      contention_cfg_(cfg.contention()),
      timing_(cfg.timing()),
      space_(cfg.action_space()),
      cost_(cfg.cost_params()),
      mu_(mu(cfg.gamma)),
      fading_rng_(make_stream(seed, Stream::kFading)),
      traffic_rng_(make_stream(seed, Stream::kTraffic)),
      contention_rng_(make_stream(seed, Stream::kContention)),
      phy_rng_(make_stream(seed, Stream::kPhy)),
      policy_rng_(make_stream(seed, Stream::kPolicy)),
      training_rng_(make_stream(seed, Stream::kTraining)) {
  cfg_.validate();
  Rng topo_rng = make_stream(seed, Stream::kTopology);
  deployment_ = generate_topology(cfg_, topo_rng);
  const double kappa = correlation_coefficient(cfg_.max_doppler_hz, cfg_.tti_s);
  fading_ = FadingState::stationary(cfg_.num_devices, cfg_.num_base_stations,
                                    cfg_.num_subcarriers, kappa, fading_rng_);
  buffers_.resize(cfg_.num_devices);
  for (int i = 0; i < cfg_.num_devices; ++i) {
    auto& b = buffers_[i];
    b.capacity = cfg_.buffer_capacity;
    b.arrival_rate = deployment_.profiles[i].arrival_rate;
    b.delay_constraint = deployment_.profiles[i].delay_constraint;
  }
  radio_state_.assign(cfg_.num_devices, 0);
  penalized_.assign(cfg_.num_devices, false);
  Rng init_rng = make_stream(seed, Stream::kInit);
  controller_ = make_controller(cfg_, kind_, deployment_, init_rng);

  const int classes = static_cast<int>(cfg_.delay_set.size());
  sums_.assign(3, 0.0);
  class_sums_.assign(classes, 0.0);
  class_sizes_.assign(classes, 0);
  for (const auto& p : deployment_.profiles) ++class_sizes_[p.delay_class];
  series_.holding_by_delay_class.resize(classes);
  build_observations();
}

Realization::~Realization() = default;

void Realization::build_observations() {
  const int nb = cfg_.num_base_stations, ns = cfg_.num_subcarriers;
  observations_.resize(cfg_.num_devices);
  for (int i = 0; i < cfg_.num_devices; ++i) {
    auto& o = observations_[i];
    o.channel_gains.resize(static_cast<std::size_t>(nb) * ns);
    for (int j = 0; j < nb; ++j) {
      const double pg = deployment_.topology.path_gain(i, j);
      for (int k = 0; k < ns; ++k) o.channel_gains[j * ns + k] = fading_.power_gain(i, j, k) * pg;
    }
    const auto& b = buffers_[i];
    o.radio_state = radio_state_[i];
    o.queued = b.queued;
    o.arrivals = b.arrivals;
    o.goodput = b.goodput;
    o.overflow = b.overflow;
  }
}

const TtiReport& Realization::step() {
  const int n = cfg_.num_devices;
  const auto& topo = deployment_.topology;
  TtiReport& r = report_;
  r = TtiReport{};
  r.tti = ++tti_;

  // (2) actions
  r.actions.assign(n, Action{});
  controller_->act(observations_, r.actions, policy_rng_);

  // (3) contention per (serving BS, subcarrier)
  std::map<std::pair<int, int>, std::vector<Contender>> domains;
  std::uniform_int_distribution<int> preamble_pick(0, cfg_.num_preambles - 1);
  for (int i = 0; i < n; ++i) {
    const Action& a = r.actions[i];
    if (a.radio == 0 || buffers_[i].queued == 0) continue;
    Contender c;
    c.device = i;
    c.preamble = preamble_pick(contention_rng_);
    c.backoff = draw_backoff(a.modulation, penalized_[i], contention_cfg_, contention_rng_);
    domains[{topo.serving_bs(i), a.subcarrier}].push_back(c);
  }
  std::vector<bool> won(n, false), collided(n, false);
  std::vector<int> backoff(n, 0);
  for (const auto& [key, contenders] : domains) {
    const ContentionOutcome out = resolve_contention(contenders);
    for (int d : out.winners) won[d] = true;
    for (int d : out.collided) collided[d] = true;
    r.collision_events += out.collision_events();
    for (const auto& c : contenders) {
      backoff[c.device] = c.backoff;
      r.contention.push_back(
          {c.device, key.first, key.second, c.preamble, c.backoff, won[c.device],
           collided[c.device]});
    }
  }

  // (4) PHY for every winner, interference from all co-channel winners
  std::vector<Transmission> tx;
  for (int i = 0; i < n; ++i)
    if (won[i])
      tx.push_back({i, cfg_.power_set_mw[r.actions[i].power_index] * 1e-3,
                    r.actions[i].subcarrier});
  std::vector<int> capacity(n, 0);
  std::vector<double> loss(n, 1.0);
  const double slot = contention_cfg_.slot_fraction();
  for (const auto& t : tx) {
    const int i = t.device;
    const Action& a = r.actions[i];
    const double tau_tx = cfg_.tti_s - timing_.contention_time(backoff[i], slot);
    capacity[i] = packets_per_tti(a.modulation, tau_tx, timing_);
    if (collided[i]) continue;
    const int bs = topo.serving_bs(i);
    const double gain = fading_.power_gain(i, bs, t.subcarrier) * topo.path_gain(i, bs);
    const double interference = interference_power(tx, topo, fading_, i, bs, t.subcarrier);
    const double pe = bit_error_prob(t.power_w, gain, interference, cfg_.noise_w, a.modulation,
                                     cfg_.max_modulation, cfg_.ber);
    loss[i] = packet_loss_prob(pe, cfg_.packet_bits());
  }

  // (5) goodput and HARQ, (6) arrivals and buffers
  std::vector<DeviceFeedback> feedback(n);
  r.queued_before.resize(n);
  r.arrivals.resize(n);
  r.goodput.resize(n);
  r.overflow.resize(n);
  r.queued_after.resize(n);
  for (int i = 0; i < n; ++i) {
    auto& b = buffers_[i];
    const int b_pre = b.queued;
    int g = 0;
    if (won[i]) {
      g = realize_goodput(b_pre, capacity[i], loss[i], collided[i], phy_rng_);
      const int attempted = std::min(capacity[i], b_pre);
      const HarqFeedback h = harq_feedback(attempted, g, collided[i]);
      feedback[i] = {true, collided[i], h.acks, h.nacks};
    }
    const int l = sample_arrivals(b.arrival_rate, cfg_.tti_s, traffic_rng_);
    const BufferUpdate u = update_buffer(b_pre, l, g, b.capacity);
    if (u.queued != b_pre + l - g - u.overflow || u.queued < 0 || u.queued > b.capacity)
      ++r.conservation_violations;
    b.queued = u.queued;
    b.arrivals = l;
    b.goodput = g;
    b.overflow = u.overflow;
    r.queued_before[i] = b_pre;
    r.arrivals[i] = l;
    r.goodput[i] = g;
    r.overflow[i] = u.overflow;
    r.queued_after[i] = u.queued;
    radio_state_[i] = r.actions[i].radio;
    penalized_[i] = collided[i];
  }

  // (7) costs with the multiplier from the post-update queue
  r.cost_terms.resize(n);
  double holding = 0.0, overflow = 0.0, power_mw = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& b = buffers_[i];
    const Action& a = r.actions[i];
    const double p_mw = cfg_.power_set_mw[a.power_index];
    CostTerms& t = r.cost_terms[i];
    t.radio = a.radio;
    t.tx_power_w = p_mw * 1e-3 * cfg_.power_cost_scale;
    t.omega = omega_update(b.queued, b.overflow, b.delay_constraint, mu_, cfg_.kappa_omega);
    t.queued = b.queued;
    t.overflow = b.overflow;
    holding += b.queued;
    overflow += b.overflow;
    power_mw += a.radio ? cfg_.p_on_mw + p_mw : cfg_.p_off_mw;
  }
  r.holding_mean = holding / n;
  r.overflow_mean = overflow / n;
  r.power_mw_mean = power_mw / n;

  // (10) fading steps before the next observation is formed; nothing in
  // phases 8 and 9 reads the channel.
  step_fading(fading_, fading_rng_);
  build_observations();

  // (8) experience, (9) training
  StepOutcome outcome{observations_, r.cost_terms, feedback};
  controller_->observe(outcome, training_rng_);

  accumulate(r);
  return r;
}

void Realization::accumulate(const TtiReport& r) {
  const double t = static_cast<double>(r.tti);
  sums_[0] += r.holding_mean;
  sums_[1] += r.overflow_mean;
  sums_[2] += r.power_mw_mean;
  series_.holding.push_back(sums_[0] / t);
  series_.overflow.push_back(sums_[1] / t);
  series_.power_mw.push_back(sums_[2] / t);
  const double prev = series_.collisions_cum.empty() ? 0.0 : series_.collisions_cum.back();
  series_.collisions_cum.push_back(prev + r.collision_events);

  std::vector<double> per_class(class_sums_.size(), 0.0);
  for (int i = 0; i < cfg_.num_devices; ++i)
    per_class[deployment_.profiles[i].delay_class] += r.queued_after[i];
  for (std::size_t c = 0; c < class_sums_.size(); ++c) {
    if (class_sizes_[c] > 0) class_sums_[c] += per_class[c] / class_sizes_[c];
    series_.holding_by_delay_class[c].push_back(class_sums_[c] / t);
  }
  series_.conservation_violations += r.conservation_violations;
  if (recount_collisions(r.contention) != r.collision_events) ++series_.collision_recount_mismatches;
}

MetricSeries Realization::run() {
  const int remaining = cfg_.ttis - tti_;
  for (auto* v : {&series_.holding, &series_.overflow, &series_.power_mw, &series_.collisions_cum})
    v->reserve(cfg_.ttis);
  for (int t = 0; t < remaining; ++t) step();
  series_.traffic = controller_->traffic();
  series_.learner_updates = controller_->updates();
  return series_;
}

std::vector<std::uint64_t> realization_seeds(std::uint64_t master, int count) {
  std::vector<std::uint64_t> seeds(count);
  std::uint64_t x = master;
  for (auto& s : seeds) {
    // splitmix64
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    s = z ^ (z >> 31);
  }
  return seeds;
}

int default_workers() {
  if (const char* env = std::getenv("GFLA_WORKERS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

void mean_std(const std::vector<const std::vector<double>*>& runs, std::vector<double>& mean,
              std::vector<double>& sd) {
  const std::size_t len = runs.empty() ? 0 : runs.front()->size();
  mean.assign(len, 0.0);
  sd.assign(len, 0.0);
  if (runs.empty()) return;
  const double k = static_cast<double>(runs.size());
  for (const auto* r : runs)
    for (std::size_t t = 0; t < len; ++t) mean[t] += (*r)[t];
  for (auto& m : mean) m /= k;
  for (const auto* r : runs)
    for (std::size_t t = 0; t < len; ++t) sd[t] += ((*r)[t] - mean[t]) * ((*r)[t] - mean[t]);
  for (auto& s : sd) s = std::sqrt(s / k);
}

}  // namespace

CampaignResult run_campaign(const RealizationConfig& cfg, const CampaignOptions& options) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  CampaignResult result;
  result.seeds = realization_seeds(cfg.seed, cfg.realizations);
  const std::size_t nk = cfg.architectures.size(), ns = result.seeds.size();
  const std::size_t jobs = nk * ns;

  std::vector<MetricSeries> runs(jobs);
  std::vector<std::string> errors(jobs);
  std::vector<bool> ok(jobs, false);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      const auto kind = cfg.architectures[j / ns];
      const auto seed = result.seeds[j % ns];
      const auto t0 = std::chrono::steady_clock::now();
      try {
        Realization real(cfg, kind, seed);
        runs[j] = real.run();
        ok[j] = true;
      } catch (const std::exception& e) {
        errors[j] = e.what();
      }
      if (options.progress) {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::lock_guard<std::mutex> lock(log_mutex);
        std::clog << "[gfla] arch=" << to_string(kind) << " realization=" << (j % ns + 1) << "/"
                  << ns << " seed=" << seed << (ok[j] ? " done" : " FAILED: " + errors[j])
                  << " in " << secs << " s\n";
      }
    }
  };
  const int workers =
      static_cast<int>(std::min<std::size_t>(options.workers > 0 ? options.workers
                                                                 : default_workers(),
                                             jobs));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t k = 0; k < nk; ++k) {
    AggregateSeries agg;
    agg.kind = cfg.architectures[k];
    std::vector<const std::vector<double>*> h, o, p, c;
    std::vector<const MetricSeries*> good;
    for (std::size_t s = 0; s < ns; ++s) {
      const std::size_t j = k * ns + s;
      if (!ok[j]) {
        result.failures.push_back({agg.kind, result.seeds[s], errors[j]});
        continue;
      }
      const auto& m = runs[j];
      good.push_back(&m);
      h.push_back(&m.holding);
      o.push_back(&m.overflow);
      p.push_back(&m.power_mw);
      c.push_back(&m.collisions_cum);
      agg.conservation_violations += m.conservation_violations;
      agg.collision_recount_mismatches += m.collision_recount_mismatches;
      agg.uplink_bits_per_device += m.traffic.uplink_bits / cfg.num_devices;
      agg.downlink_bits_per_device += m.traffic.downlink_bits / cfg.num_devices;
    }
    agg.realizations = static_cast<int>(good.size());
    if (!good.empty()) {
      agg.uplink_bits_per_device /= good.size();
      agg.downlink_bits_per_device /= good.size();
    }
    mean_std(h, agg.holding_mean, agg.holding_std);
    mean_std(o, agg.overflow_mean, agg.overflow_std);
    mean_std(p, agg.power_mw_mean, agg.power_mw_std);
    mean_std(c, agg.collisions_cum_mean, agg.collisions_cum_std);
    const std::size_t classes = cfg.delay_set.size();
    agg.holding_by_delay_class_mean.resize(classes);
    for (std::size_t cl = 0; cl < classes; ++cl) {
      std::vector<const std::vector<double>*> v;
      for (const auto* m : good) v.push_back(&m->holding_by_delay_class[cl]);
      std::vector<double> unused;
      mean_std(v, agg.holding_by_delay_class_mean[cl], unused);
    }
    result.series.push_back(std::move(agg));
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace gfla
