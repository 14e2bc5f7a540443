#include "skyrescue/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <tuple>

#include "skyrescue/channel.hpp"
#include "skyrescue/error.hpp"

namespace skyrescue::env {

using costmodel::Target;
using costmodel::TargetKind;

namespace {

constexpr std::uint64_t kTaskKey = 0x7a5c;
constexpr std::uint64_t kChannelKey = 0xc4a7;

std::uint64_t node_key(const Target& t) {
  return t.kind == TargetKind::airship ? 0 : static_cast<std::uint64_t>(t.ger) + 1;
}

bool contains(const std::vector<std::string>& flags, const std::string& id) {
  return std::find(flags.begin(), flags.end(), id) != flags.end();
}

}  // namespace

World::World(std::shared_ptr<const Scenario> scn, EnvConfig cfg, std::uint64_t seed)
    : scn_(std::move(scn)), cfg_(cfg), seed_(seed) {
  gers_by_sub_ = scenario::gers_by_subarea(*scn_);
  int widest = 0;
  for (const auto& g : gers_by_sub_) widest = std::max(widest, static_cast<int>(g.size()));
  max_gers_ = cfg_.max_gers > 0 ? cfg_.max_gers : std::max(widest, 1);
  if (widest > max_gers_)
    throw Error(ErrorKind::invalid_count, "a subarea holds more GERs than max_gers allows");
  flops_norm_ = 1.0;
  for (const auto& g : scn_->gers) flops_norm_ = std::max(flops_norm_, g.compute_flops);
  for (const auto& u : scn_->uavs) flops_norm_ = std::max(flops_norm_, u.compute_flops);
  uavs_.resize(scn_->uavs.size());
  for (std::size_t u = 0; u < uavs_.size(); ++u)
    uavs_[u].queue = lyapunov::make_queue(scn_->energy_budget_j, cfg_.V);
  reset(0);
}

void World::reset(int episode) {
  episode_ = episode;
  slot_ = 0;
  std::vector<assignment::UavStatus> status;
  for (std::size_t u = 0; u < uavs_.size(); ++u) {
    const auto& spec = scn_->uavs[u];
    UavState& s = uavs_[u];
    s.kin = {spec.start, spec.altitude_m, 0.0, 0.0};
    s.energy_remaining_j = spec.energy_max_j;
    s.flown_m = 0.0;
    if (!cfg_.keep_queues) s.queue = lyapunov::make_queue(scn_->energy_budget_j, cfg_.V);
    s.queue.penalty_weight = cfg_.V;
    status.push_back({spec.start, spec.energy_max_j});
  }
  plan_ = assignment::assign_rounds(*scn_, status, {cfg_.assignment_mode, cfg_.normalized_assignment});
}

int World::subarea_of(int u) const {
  const int r = round();
  if (u < 0 || u >= uav_count() || r >= static_cast<int>(plan_.size()))
    throw Error(ErrorKind::unassigned_agent, "UAV " + std::to_string(u) + " has no subarea this round");
  const int b = plan_[static_cast<std::size_t>(r)].subarea_of_uav[static_cast<std::size_t>(u)];
  if (b < 0) throw Error(ErrorKind::unassigned_agent, "UAV " + std::to_string(u) + " has no subarea this round");
  return b;
}

const std::vector<int>& World::gers_of_subarea(int b) const { return gers_by_sub_.at(static_cast<std::size_t>(b)); }

costmodel::Task World::task(int u) const {
  const auto& sub = scn_->subareas[static_cast<std::size_t>(subarea_of(u))];
  Rng rng = substream(seed_, {static_cast<std::uint64_t>(episode_), static_cast<std::uint64_t>(slot_),
                              static_cast<std::uint64_t>(u), kTaskKey});
  std::uniform_real_distribution<double> jitter(1.0 - cfg_.task_jitter, 1.0 + cfg_.task_jitter);
  const double share = sub.data_bits / scn_->time.slots_per_episode();
  return {share * (cfg_.task_jitter > 0.0 ? jitter(rng) : 1.0), sub.intensity_cycles_per_bit,
          scn_->task_deadline_s};
}

Observation World::observe(int u) const {
  const int b = subarea_of(u);
  const auto& spec = scn_->uavs[static_cast<std::size_t>(u)];
  const UavState& s = uavs_[static_cast<std::size_t>(u)];
  const double W = scn_->region.width_m;
  const double H = scn_->region.height_m;
  Observation o;
  o.features = VectorXd::Zero(obs_dim());
  o.mask = VectorXd::Zero(max_gers_);
  o.features(0) = s.kin.position.x / W;
  o.features(1) = s.kin.position.y / H;
  o.features(2) = spec.altitude_m / scn_->airship.altitude_m;
  o.features(3) = spec.compute_flops / flops_norm_;
  const auto& gers = gers_of_subarea(b);
  for (std::size_t k = 0; k < gers.size(); ++k) {
    const auto& g = scn_->gers[static_cast<std::size_t>(gers[k])];
    const auto base = static_cast<Eigen::Index>(4 + 3 * k);
    o.features(base) = g.position.x / W;
    o.features(base + 1) = g.position.y / H;
    o.features(base + 2) = g.compute_flops / flops_norm_;
    o.mask(static_cast<Eigen::Index>(k)) = 1.0;
  }
  return o;
}

double World::demand_flops(int u) const {
  const costmodel::Task t = task(u);
  return t.cycles() / t.deadline_s;
}

ActionMask World::action_mask(int u) const {
  ActionMask m;
  m.allowed.assign(static_cast<std::size_t>(max_gers_ + 2), 0);
  m.allowed[0] = 1;
  const auto& gers = gers_of_subarea(subarea_of(u));
  const double demand = demand_flops(u);
  bool all_short = true;
  for (std::size_t k = 0; k < gers.size(); ++k) {
    const double f = scn_->gers[static_cast<std::size_t>(gers[k])].compute_flops;
    if (f > 0.0) {
      m.allowed[k + 1] = 1;
      if (f >= demand) all_short = false;
    }
  }
  m.allowed[static_cast<std::size_t>(max_gers_ + 1)] = all_short && scn_->airship.compute_flops > 0.0 ? 1 : 0;
  return m;
}

AgentAction World::decode_and_mask(const VectorXd& raw, int u) const {
  if (raw.size() != act_dim())
    throw Error(ErrorKind::length_mismatch,
                "raw action has " + std::to_string(raw.size()) + " entries, expected " + std::to_string(act_dim()));
  const ActionMask mask = action_mask(u);
  AgentAction a;
  // Local is always legal, so it is the fallback when every logit is NaN.
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < max_gers_ + 2; ++i) {
    if (!mask.allowed[static_cast<std::size_t>(i)] || std::isnan(raw(i))) continue;
    if (raw(i) > best) {
      best = raw(i);
      a.target_index = i;
    }
  }
  const double r = raw(act_dim() - 1);
  a.ratio = std::isnan(r) ? 0.0 : std::clamp(r, 0.0, 1.0);
  if (a.target_index == 0) {
    a.target = {TargetKind::local, -1};
    a.local_fraction = 1.0;
  } else if (a.target_index == max_gers_ + 1) {
    a.target = {TargetKind::airship, -1};
    a.local_fraction = 1.0 - a.ratio;
  } else {
    a.target = {TargetKind::ger, gers_of_subarea(subarea_of(u))[static_cast<std::size_t>(a.target_index - 1)]};
    a.local_fraction = 1.0 - a.ratio;
  }
  return a;
}

VectorXd World::encode(int u, const Target& target, double local_fraction) const {
  VectorXd raw = VectorXd::Zero(act_dim());
  int index = 0;
  if (target.kind == TargetKind::airship) {
    index = max_gers_ + 1;
  } else if (target.kind == TargetKind::ger) {
    const auto& gers = gers_of_subarea(subarea_of(u));
    const auto it = std::find(gers.begin(), gers.end(), target.ger);
    if (it == gers.end()) throw Error(ErrorKind::invariant_violation, "GER outside the assigned subarea");
    index = static_cast<int>(it - gers.begin()) + 1;
  }
  raw(index) = 1.0;
  raw(act_dim() - 1) = target.kind == TargetKind::local ? 0.0 : 1.0 - local_fraction;
  return raw;
}

Vec2 World::target_position(int u, const Target& target) const {
  if (target.kind == TargetKind::ger) return scn_->gers[static_cast<std::size_t>(target.ger)].position;
  return scn_->subareas[static_cast<std::size_t>(subarea_of(u))].center();
}

World::Outcome World::simulate(int u, const Target& target, double local_fraction, double alloc_flops) const {
  const auto& spec = scn_->uavs[static_cast<std::size_t>(u)];
  const auto& k = scn_->consts;
  const UavState& s = uavs_[static_cast<std::size_t>(u)];
  Outcome out;
  out.decision.target = target;
  out.decision.local_fraction = target.kind == TargetKind::local ? 1.0 : local_fraction;
  out.decision.alloc_flops = target.kind == TargetKind::local ? 0.0 : alloc_flops;

  kinematics::RouteParams rp{spec.speed_max_mps, scn_->time.slot_s, k.risk_margin_m, k.sensing_range_m,
                             k.detect_segments};
  kinematics::RouteStep route;
  try {
    route = kinematics::route_toward(s.kin, target_position(u, target), scn_->risk_sources, rp);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::trapped) throw;
    route.heading_rad = s.kin.heading_rad;
    route.speed_mps = 0.0;
    route.detect_distances = kinematics::detection_distances(s.kin.position, s.kin.position, scn_->risk_sources,
                                                             k.detect_segments, k.sensing_range_m);
    out.flags.emplace_back("trapped");
  }
  out.kin = kinematics::advance(s.kin, route.heading_rad, route.speed_mps, scn_->time.slot_s, spec.speed_max_mps);
  out.decision.heading_rad = out.kin.heading_rad;
  out.decision.speed_mps = out.kin.speed_mps;

  const costmodel::Task t = task(u);
  costmodel::OffloadLatency off;
  if (target.kind != TargetKind::local) {
    const Vec3 me{out.kin.position.x, out.kin.position.y, spec.altitude_m};
    Vec3 node;
    if (target.kind == TargetKind::ger) {
      const auto& g = scn_->gers[static_cast<std::size_t>(target.ger)];
      node = {g.position.x, g.position.y, 0.0};
    } else {
      node = {scn_->airship.position.x, scn_->airship.position.y, scn_->airship.altitude_m};
    }
    // Keep the link at or beyond the reference distance.
    if (distance(me, node) < k.ref_distance_m) node.z -= k.ref_distance_m;
    Rng rng = substream(seed_, {static_cast<std::uint64_t>(episode_), static_cast<std::uint64_t>(slot_),
                                static_cast<std::uint64_t>(u), node_key(target), kChannelKey});
    const channel::LinkSample link = channel::link_sample(me, node, k, rng, target.kind == TargetKind::airship);
    out.rate_bps = link.rate_bps;
    if (out.decision.local_fraction < 1.0) {
      if (!(out.rate_bps > 0.0) || !(out.decision.alloc_flops > 0.0)) {
        // A dead link or empty allocation cannot carry the share; keep it on board.
        out.flags.emplace_back(out.rate_bps > 0.0 ? "zero-alloc" : "zero-rate");
        out.decision.local_fraction = 1.0;
      } else {
        off = costmodel::offload_latency(t, out.decision.local_fraction, out.rate_bps, out.decision.alloc_flops,
                                         k.cycles_per_flop);
      }
    }
  }
  const double t_local =
      costmodel::local_latency(t, out.decision.local_fraction, spec.compute_flops, k.cycles_per_flop);
  const costmodel::EnergyTerms e =
      costmodel::slot_energy(t, out.decision.local_fraction, off.t_tran_s, spec.compute_flops, out.kin.speed_mps,
                             route.detect_distances, k, cfg_.literal_compute_energy);
  out.cost = costmodel::combine(t_local, off, e);
  for (const auto& f : costmodel::deadline_flags(out.cost, t)) out.flags.push_back(f);

  // Per-UAV mobility checks; pairwise separation is checked in step().
  const double step_len = distance(s.kin.position, out.kin.position);
  const double lo = spec.dist_min_m / scn_->time.slots_per_episode();
  const double hi = scn_->time.slot_s * spec.speed_max_mps;
  if (step_len > hi * (1.0 + 1e-9) || step_len < lo * (1.0 - 1e-9)) out.flags.emplace_back("step_length");
  if (s.flown_m + step_len > spec.length_max_m) out.flags.emplace_back("path_length");
  return out;
}

CandidateEval World::evaluate_candidate(int u, const Target& target, double local_fraction) const {
  double alloc = 0.0;
  if (target.kind == TargetKind::ger) alloc = scn_->gers[static_cast<std::size_t>(target.ger)].compute_flops;
  if (target.kind == TargetKind::airship) alloc = scn_->airship.compute_flops;
  const Outcome o = simulate(u, target, local_fraction, alloc);
  return {o.decision, o.cost, o.flags, o.rate_bps};
}

StepResult World::step(const std::vector<VectorXd>& raw_actions) {
  const int n = uav_count();
  if (static_cast<int>(raw_actions.size()) != n)
    throw Error(ErrorKind::action_count_mismatch,
                std::to_string(raw_actions.size()) + " actions for " + std::to_string(n) + " UAVs");
  if (done()) throw Error(ErrorKind::invariant_violation, "episode already finished");

  StepResult res;
  std::vector<AgentAction> actions;
  std::vector<Observation> obs;
  std::vector<ActionMask> masks;
  for (int u = 0; u < n; ++u) {
    actions.push_back(decode_and_mask(raw_actions[static_cast<std::size_t>(u)], u));
    obs.push_back(observe(u));
    masks.push_back(action_mask(u));
  }

  // Compute allocation: GERs and the airship split among the UAVs using them.
  std::map<int, std::vector<int>> users;  // node id (-1 airship) -> UAVs
  for (int u = 0; u < n; ++u) {
    const Target& t = actions[static_cast<std::size_t>(u)].target;
    if (t.kind == TargetKind::ger) users[t.ger].push_back(u);
    if (t.kind == TargetKind::airship) users[-1].push_back(u);
  }
  std::vector<double> alloc(static_cast<std::size_t>(n), 0.0);
  for (const auto& [node, list] : users) {
    const double cap =
        node < 0 ? scn_->airship.compute_flops : scn_->gers[static_cast<std::size_t>(node)].compute_flops;
    double demand_sum = 0.0;
    for (int u : list) demand_sum += (1.0 - actions[static_cast<std::size_t>(u)].local_fraction) * task(u).cycles();
    for (int u : list) {
      const double d = (1.0 - actions[static_cast<std::size_t>(u)].local_fraction) * task(u).cycles();
      alloc[static_cast<std::size_t>(u)] = cfg_.allocation == AllocationMode::proportional && demand_sum > 0.0
                                               ? cap * d / demand_sum
                                               : cap / static_cast<double>(list.size());
    }
  }

  std::vector<Outcome> outcomes;
  for (int u = 0; u < n; ++u) {
    const AgentAction& a = actions[static_cast<std::size_t>(u)];
    outcomes.push_back(simulate(u, a.target, a.local_fraction, alloc[static_cast<std::size_t>(u)]));
  }
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (distance(outcomes[static_cast<std::size_t>(a)].kin.position,
                   outcomes[static_cast<std::size_t>(b)].kin.position) < scn_->safety_distance_m) {
        outcomes[static_cast<std::size_t>(a)].flags.emplace_back("separation");
        outcomes[static_cast<std::size_t>(b)].flags.emplace_back("separation");
      }
    }
  }

  const int per_round = scn_->time.slots_per_round;
  const bool round_end = (slot_ + 1) % per_round == 0;
  for (int u = 0; u < n; ++u) {
    const auto su = static_cast<std::size_t>(u);
    UavState& s = uavs_[su];
    Outcome& o = outcomes[su];
    SlotRecord rec;
    rec.episode = episode_;
    rec.slot = slot_;
    rec.round = round();
    rec.uav = u;
    rec.subarea = subarea_of(u);
    rec.action = actions[su];
    rec.decision = o.decision;
    rec.cost = o.cost;
    rec.task = task(u);
    rec.rate_bps = o.rate_bps;
    rec.flags = o.flags;
    rec.infeasible = !o.flags.empty();
    rec.penalty = rec.infeasible ? cfg_.penalty : 0.0;
    rec.position_before = s.kin.position;
    rec.position_after = o.kin.position;
    rec.heading_rad = o.kin.heading_rad;
    rec.speed_mps = o.kin.speed_mps;
    rec.airship_allowed = masks[su].allowed.back() != 0;
    rec.q_before = s.queue.q_value;
    rec.y = o.cost.e_total_j - s.queue.budget_j;
    rec.reward = -(cfg_.V * o.cost.t_total_s + rec.q_before * rec.y) / cfg_.reward_scale - rec.penalty;

    s.flown_m += distance(s.kin.position, o.kin.position);
    s.kin = o.kin;
    s.energy_remaining_j -= o.cost.e_total_j;
    lyapunov::queue_update_in_place(s.queue, o.cost.e_total_j);
    rec.q_after = s.queue.q_value;
    res.records.push_back(std::move(rec));
  }

  // Next observations are taken before any round switch so that they stay in
  // the subarea the transition belongs to.
  for (int u = 0; u < n; ++u) {
    const auto su = static_cast<std::size_t>(u);
    Transition tr;
    tr.obs = obs[su].features;
    tr.action = raw_actions[su];
    tr.mask = VectorXd::Zero(max_gers_ + 2);
    for (int i = 0; i < max_gers_ + 2; ++i) tr.mask(i) = masks[su].allowed[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    tr.reward = res.records[su].reward;
    tr.next_obs = observe(u).features;
    tr.agent = u;
    tr.done = round_end;
    res.transitions.push_back(std::move(tr));
  }

  for (std::size_t j = 0; j < scn_->gers.size(); ++j) {
    double used = 0.0;
    if (auto it = users.find(static_cast<int>(j)); it != users.end())
      for (int u : it->second) used += alloc[static_cast<std::size_t>(u)];
    const double cap = scn_->gers[j].compute_flops;
    res.resource_map.push_back({static_cast<int>(j), cap, std::max(0.0, cap - used)});
  }

  ++slot_;
  // The next-mask must be evaluated against the task of the next slot.
  for (int u = 0; u < n; ++u) {
    auto& tr = res.transitions[static_cast<std::size_t>(u)];
    tr.next_mask = tr.mask;
    if (!done() && !round_end) {
      const ActionMask nm = action_mask(u);
      for (int i = 0; i < max_gers_ + 2; ++i) tr.next_mask(i) = nm.allowed[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    }
  }
  res.episode_done = done();
  return res;
}

VectorXd RandomPolicy::act(const World& world, int, const Observation&, Rng& rng) const {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  VectorXd raw(world.act_dim());
  for (int i = 0; i + 1 < world.act_dim(); ++i) raw(i) = n(rng);
  raw(world.act_dim() - 1) = unit(rng);
  return raw;
}

VectorXd GreedyLocalPolicy::act(const World& world, int, const Observation&, Rng&) const {
  VectorXd raw = VectorXd::Zero(world.act_dim());
  raw(0) = 1.0;
  return raw;
}

std::vector<double> fraction_grid(int points) {
  if (points < 1) throw Error(ErrorKind::invalid_range, "fraction grid needs at least one point");
  std::vector<double> g;
  for (int i = 0; i < points; ++i) g.push_back(points == 1 ? 1.0 : static_cast<double>(i) / (points - 1));
  return g;
}

std::vector<lyapunov::Candidate<costmodel::SlotDecision>> enumerate_candidates(const World& world, int u,
                                                                             const std::vector<double>& grid) {
  std::vector<lyapunov::Candidate<costmodel::SlotDecision>> out;
  const ActionMask mask = world.action_mask(u);
  const auto& gers = world.gers_of_subarea(world.subarea_of(u));
  std::vector<Target> targets{{TargetKind::local, -1}};
  for (std::size_t k = 0; k < gers.size(); ++k)
    if (mask.allowed[k + 1]) targets.push_back({TargetKind::ger, gers[k]});
  if (mask.allowed.back()) targets.push_back({TargetKind::airship, -1});
  for (const Target& t : targets) {
    for (double lf : grid) {
      const CandidateEval ev = world.evaluate_candidate(u, t, t.kind == TargetKind::local ? 1.0 : lf);
      out.push_back({ev.decision, ev.cost.t_total_s, ev.cost.e_total_j});
    }
  }
  return out;
}

VectorXd LyapunovPolicy::act(const World& world, int u, const Observation&, Rng&) const {
  const auto cands = enumerate_candidates(world, u, grid_);
  const auto& d = lyapunov::per_slot_argmin(cands, world.uav(u).queue);
  return world.encode(u, d.target, d.local_fraction);
}

VectorXd MinEnergyPolicy::act(const World& world, int u, const Observation&, Rng&) const {
  const auto cands = enumerate_candidates(world, u, grid_);
  std::size_t best = 0;
  for (std::size_t i = 1; i < cands.size(); ++i) {
    if (cands[i].e_total_j < cands[best].e_total_j ||
        (cands[i].e_total_j == cands[best].e_total_j && cands[i].t_total_s < cands[best].t_total_s))
      best = i;
  }
  return world.encode(u, cands[best].decision.target, cands[best].decision.local_fraction);
}

EpisodeMetrics summarize(int episode, const std::vector<SlotRecord>& records, const World& world) {
  EpisodeMetrics m;
  m.episode = episode;
  if (!records.empty()) {
    for (const auto& r : records) {
      m.mean_reward += r.reward;
      m.mean_latency_s += r.cost.t_total_s;
      m.mean_energy_j += r.cost.e_total_j;
      m.mean_q += r.q_after;
      m.violations += static_cast<int>(r.flags.size());
      m.infeasible_slots += r.infeasible ? 1 : 0;
    }
    const double n = static_cast<double>(records.size());
    m.mean_reward /= n;
    m.mean_latency_s /= n;
    m.mean_energy_j /= n;
    m.mean_q /= n;
  }
  for (int u = 0; u < world.uav_count(); ++u) m.final_q.push_back(world.uav(u).queue.q_value);
  return m;
}

EpisodeResult run_episode(World& world, int episode, const std::vector<const Policy*>& policies, Rng& rng) {
  if (policies.empty() || (policies.size() != 1 && static_cast<int>(policies.size()) != world.uav_count()))
    throw Error(ErrorKind::action_count_mismatch, "need one policy per UAV or a single shared policy");
  world.reset(episode);
  EpisodeResult out;
  while (!world.done()) {
    std::vector<VectorXd> raw;
    for (int u = 0; u < world.uav_count(); ++u) {
      const Policy* p = policies.size() == 1 ? policies[0] : policies[static_cast<std::size_t>(u)];
      raw.push_back(p->act(world, u, world.observe(u), rng));
    }
    StepResult s = world.step(raw);
    for (auto& t : s.transitions) out.transitions.push_back(std::move(t));
    for (auto& r : s.records) out.records.push_back(std::move(r));
    out.resource_maps.push_back(std::move(s.resource_map));
  }
  out.metrics = summarize(episode, out.records, world);
  return out;
}

AuditReport audit_records(const Scenario& scn, const std::vector<SlotRecord>& records) {
  AuditReport rep;
  rep.records = static_cast<int>(records.size());
  auto problem = [&](int& counter, const SlotRecord& r, const std::string& what) {
    ++counter;
    if (rep.problems.size() < 50)
      rep.problems.push_back("episode " + std::to_string(r.episode) + " slot " + std::to_string(r.slot) + " uav " +
                             std::to_string(r.uav) + ": " + what);
  };
  const auto by_sub = scenario::gers_by_subarea(scn);

  std::set<std::tuple<int, int, int>> seen;
  std::map<std::pair<int, int>, std::map<int, std::pair<int, double>>> node_use;  // (ep, slot) -> node -> (count, alloc)
  for (const auto& r : records) {
    if (!seen.insert({r.episode, r.slot, r.uav}).second) problem(rep.unflagged_static, r, "two decisions in one slot");
    const auto& d = r.decision;
    if (!(d.local_fraction >= 0.0 && d.local_fraction <= 1.0)) problem(rep.unflagged_static, r, "fraction outside [0,1]");
    if (d.target.kind == TargetKind::local && d.local_fraction != 1.0)
      problem(rep.unflagged_static, r, "local target with an offloaded share");
    if (d.target.kind == TargetKind::ger) {
      const auto& list = by_sub.at(static_cast<std::size_t>(r.subarea));
      if (std::find(list.begin(), list.end(), d.target.ger) == list.end())
        problem(rep.unflagged_static, r, "GER outside the assigned subarea");
      const double cap = scn.gers.at(static_cast<std::size_t>(d.target.ger)).compute_flops;
      if (!(cap > 0.0)) problem(rep.unflagged_static, r, "GER without compute selected");
      if (d.alloc_flops < 0.0 || d.alloc_flops > cap * (1.0 + 1e-12))
        problem(rep.unflagged_static, r, "allocation outside [0, f_max]");
      auto& use = node_use[{r.episode, r.slot}][d.target.ger];
      use.first += 1;
      use.second += d.alloc_flops;
    }
    if (d.target.kind == TargetKind::airship) {
      if (!r.airship_allowed) problem(rep.unflagged_static, r, "airship used while a GER had capacity");
      auto& use = node_use[{r.episode, r.slot}][-1];
      use.second += d.alloc_flops;
    }
    if (r.cost.t_local_s > r.task.deadline_s && !contains(r.flags, "local_deadline"))
      problem(rep.unflagged_static, r, "local deadline overrun without local_deadline");
    if (r.cost.t_ger_s > r.task.deadline_s && !contains(r.flags, "offload_deadline"))
      problem(rep.unflagged_static, r, "offload deadline overrun without offload_deadline");
    if (!r.flags.empty() && !(r.infeasible && r.penalty > 0.0))
      problem(rep.unflagged_static, r, "flagged slot without penalty");
  }
  for (const auto& [key, nodes] : node_use) {
    for (const auto& [node, use] : nodes) {
      const double cap = node < 0 ? scn.airship.compute_flops : scn.gers[static_cast<std::size_t>(node)].compute_flops;
      SlotRecord stub;
      stub.episode = key.first;
      stub.slot = key.second;
      stub.uav = -1;
      if (node >= 0 && use.first > 1) problem(rep.unflagged_static, stub, "GER shared by several UAVs");
      if (use.second > cap * (1.0 + 1e-12)) problem(rep.unflagged_static, stub, "allocations exceed capacity");
    }
  }

  // Mobility: rebuild each episode's trajectories and re-run the checks.
  std::map<int, std::map<int, std::vector<const SlotRecord*>>> per_episode;
  for (const auto& r : records) per_episode[r.episode][r.uav].push_back(&r);
  for (auto& [ep, uavs] : per_episode) {
    std::vector<kinematics::Trajectory> trajs;
    std::map<std::pair<int, int>, const SlotRecord*> lookup;
    for (auto& [u, list] : uavs) {
      std::sort(list.begin(), list.end(), [](const SlotRecord* a, const SlotRecord* b) { return a->slot < b->slot; });
      kinematics::Trajectory tr;
      tr.uav_id = u;
      tr.positions.push_back(list.front()->position_before);
      for (const SlotRecord* r : list) {
        tr.positions.push_back(r->position_after);
        lookup[{u, r->slot}] = r;
      }
      trajs.push_back(std::move(tr));
    }
    for (const auto& v : kinematics::check_mobility(trajs, scn)) {
      ++rep.mobility_violations;
      auto logged = [&](int u, int slot_index) {
        auto it = lookup.find({u, slot_index});
        return it != lookup.end() && contains(it->second->flags, v.constraint) && it->second->penalty > 0.0;
      };
      bool ok = true;
      if (v.constraint == "path_length") {
        ok = false;
        for (const SlotRecord* r : uavs[v.entities[0]])
          ok = ok || (contains(r->flags, "path_length") && r->penalty > 0.0);
      } else if (v.slot <= 0) {
        ok = false;
      } else {
        for (int u : v.entities) ok = ok && logged(u, v.slot - 1);
      }
      if (!ok) {
        SlotRecord stub;
        stub.episode = ep;
        stub.slot = v.slot - 1;
        stub.uav = v.entities.front();
        problem(rep.unlogged_mobility, stub, "unlogged " + v.constraint);
      }
    }
  }
  return rep;
}

void merge(AuditReport& into, const AuditReport& from) {
  into.records += from.records;
  into.unflagged_static += from.unflagged_static;
  into.unlogged_mobility += from.unlogged_mobility;
  into.mobility_violations += from.mobility_violations;
  for (const auto& p : from.problems)
    if (into.problems.size() < 50) into.problems.push_back(p);
}

}  // namespace skyrescue::env
