#pragma once

#include "skyrescue/geometry.hpp"
#include "skyrescue/rng.hpp"
#include "skyrescue/scenario.hpp"

namespace skyrescue::channel {

using scenario::PhysConstants;

enum class LinkKind { los, nlos };

struct LinkSample {
  double p_los = 0.0;
  double gain_los = 0.0;
  double gain_nlos = 0.0;
  double gain = 0.0;
  double rate_bps = 0.0;
};

// Elevation angle of `uav` seen from `ground`, in degrees.
double elevation_deg(const Vec3& uav, const Vec3& ground);

double los_probability_deg(double elevation_deg, double a, double b);
double los_probability(const Vec3& uav, const Vec3& ground, const PhysConstants& k);

// Nakagami amplitude: sqrt of a Gamma(w, pbar / w) draw. Throws invalid-shape
// for w < 0.5 or pbar <= 0.
double sample_fading(double shape_w, double mean_power, Rng& rng);

// Linear loss (4 pi d0 fc / c)^2 (d / d0)^beta; throws distance-below-reference.
double path_loss(double distance_m, LinkKind kind, const PhysConstants& k);

double sample_shadowing_db(double sigma_db, Rng& rng);
inline double shadowing_factor(double loss_db) { return std::pow(10.0, -loss_db / 10.0); }

double transmission_rate(double gain, const PhysConstants& k);

// Draw order is fixed (LoS fading, LoS shadowing, NLoS fading, NLoS
// shadowing) so a given generator state always yields the same sample.
// `force_los` pins p_los to 1, as used for the airship link.
LinkSample link_sample(const Vec3& uav, const Vec3& node, const PhysConstants& k, Rng& rng, bool force_los = false);

}  // namespace skyrescue::channel
