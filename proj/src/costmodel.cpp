#include "skyrescue/costmodel.hpp"

#include "skyrescue/error.hpp"

namespace skyrescue::costmodel {

double local_latency(const Task& task, double local_fraction, double uav_flops, double cycles_per_flop) {
  if (local_fraction <= 0.0) return 0.0;
  return local_fraction * task.cycles() / (uav_flops * cycles_per_flop);
}

OffloadLatency offload_latency(const Task& task, double local_fraction, double rate_bps, double alloc_flops,
                               double cycles_per_flop) {
  OffloadLatency out;
  const double share = 1.0 - local_fraction;
  if (share <= 0.0) return out;
  if (!(rate_bps > 0.0)) throw Error(ErrorKind::zero_rate_offload, "offloading over a zero-rate link");
  if (!(alloc_flops > 0.0)) throw Error(ErrorKind::zero_alloc_offload, "offloading to a node with no allocation");
  out.t_tran_s = share * task.data_bits / rate_bps;
  out.t_comp_s = share * task.cycles() / (alloc_flops * cycles_per_flop);
  out.t_ger_s = out.t_tran_s + out.t_comp_s;
  return out;
}

EnergyTerms slot_energy(const Task& task, double local_fraction, double t_tran_s, double uav_flops, double speed_mps,
                        const std::vector<std::vector<double>>& detect_distances, const PhysConstants& k,
                        bool literal_compute_energy) {
  EnergyTerms e;
  e.e_tran_j = k.tx_power_w * t_tran_s;
  const double share = literal_compute_energy ? 1.0 : local_fraction;
  e.e_comp_j = k.capacitance_coeff * uav_flops * uav_flops * share * task.cycles();
  e.e_prop_j = k.propulsion_coeff * speed_mps * speed_mps;
  double path = 0.0;
  for (const auto& risk : detect_distances)
    for (double d : risk) path += d;
  e.e_dete_j = k.detect_unit_energy * path;
  e.e_total_j = e.e_tran_j + e.e_comp_j + e.e_prop_j + e.e_dete_j;
  return e;
}

SlotCost combine(double t_local_s, const OffloadLatency& off, const EnergyTerms& e) {
  SlotCost c;
  c.t_local_s = t_local_s;
  c.t_tran_s = off.t_tran_s;
  c.t_comp_s = off.t_comp_s;
  c.t_ger_s = off.t_ger_s;
  c.t_total_s = t_local_s + off.t_ger_s;
  c.e_tran_j = e.e_tran_j;
  c.e_comp_j = e.e_comp_j;
  c.e_prop_j = e.e_prop_j;
  c.e_dete_j = e.e_dete_j;
  c.e_total_j = e.e_total_j;
  return c;
}

double total_latency(const std::vector<SlotCost>& per_uav) {
  double s = 0.0;
  for (const auto& c : per_uav) s += c.t_local_s + c.t_ger_s;
  return s;
}

std::vector<std::string> deadline_flags(const SlotCost& cost, const Task& task) {
  std::vector<std::string> flags;
  if (cost.t_local_s > task.deadline_s) flags.emplace_back("local_deadline");
  if (cost.t_ger_s > task.deadline_s) flags.emplace_back("offload_deadline");
  return flags;
}

}  // namespace skyrescue::costmodel
