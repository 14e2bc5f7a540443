#include "skyrescue/channel.hpp"

#include <cmath>
#include <random>
#include <string>

#include "skyrescue/error.hpp"

namespace skyrescue::channel {

double elevation_deg(const Vec3& uav, const Vec3& ground) {
  const double horizontal = distance(uav.horizontal(), ground.horizontal());
  return std::atan2(uav.z - ground.z, horizontal) * 180.0 / kPi;
}

double los_probability_deg(double elevation, double a, double b) {
  return 1.0 / (1.0 + a * std::exp(-b * (elevation - a)));
}

double los_probability(const Vec3& uav, const Vec3& ground, const PhysConstants& k) {
  return los_probability_deg(elevation_deg(uav, ground), k.los_a, k.los_b);
}

double sample_fading(double shape_w, double mean_power, Rng& rng) {
  if (!(shape_w >= 0.5)) throw Error(ErrorKind::invalid_shape, "Nakagami shape must be >= 0.5");
  if (!(mean_power > 0.0)) throw Error(ErrorKind::invalid_shape, "Nakagami mean power must be positive");
  std::gamma_distribution<double> g(shape_w, mean_power / shape_w);
  return std::sqrt(g(rng));
}

double path_loss(double distance_m, LinkKind kind, const PhysConstants& k) {
  if (distance_m < k.ref_distance_m)
    throw Error(ErrorKind::distance_below_reference,
                "distance " + std::to_string(distance_m) + " m below reference distance");
  const double beta = kind == LinkKind::los ? k.pathloss_exp_los : k.pathloss_exp_nlos;
  const double ref = 4.0 * kPi * k.ref_distance_m * k.carrier_freq_hz / k.light_speed_mps;
  return ref * ref * std::pow(distance_m / k.ref_distance_m, beta);
}

double sample_shadowing_db(double sigma_db, Rng& rng) {
  if (sigma_db <= 0.0) return 0.0;
  std::normal_distribution<double> n(0.0, sigma_db);
  return n(rng);
}

double transmission_rate(double gain, const PhysConstants& k) {
  return k.bandwidth_hz * std::log2(1.0 + k.tx_power_w * gain / k.noise_power_w);
}

LinkSample link_sample(const Vec3& uav, const Vec3& node, const PhysConstants& k, Rng& rng, bool force_los) {
  const double d = distance(uav, node);
  LinkSample s;
  s.p_los = force_los ? 1.0 : los_probability(uav, node, k);

  const double h_los = sample_fading(k.nakagami_shape_los, k.mean_rx_power, rng);
  const double f_los = sample_shadowing_db(k.shadow_std_los_db, rng);
  const double h_nlos = sample_fading(k.nakagami_shape_nlos, k.mean_rx_power, rng);
  const double f_nlos = sample_shadowing_db(k.shadow_std_nlos_db, rng);

  s.gain_los = h_los * h_los / path_loss(d, LinkKind::los, k) * shadowing_factor(f_los);
  s.gain_nlos = h_nlos * h_nlos / path_loss(d, LinkKind::nlos, k) * shadowing_factor(f_nlos);
  if (s.p_los >= 1.0)
    s.gain = s.gain_los;
  else if (s.p_los <= 0.0)
    s.gain = s.gain_nlos;
  else
    s.gain = s.p_los * s.gain_los + (1.0 - s.p_los) * s.gain_nlos;
  s.rate_bps = transmission_rate(s.gain, k);
  return s;
}

}  // namespace skyrescue::channel
