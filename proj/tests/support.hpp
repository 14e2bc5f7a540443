#pragma once

#include <memory>
#include <random>

#include "skyrescue/error.hpp"
#include "skyrescue/rng.hpp"
#include "skyrescue/scenario.hpp"

namespace skyrescue::testing {

// The desk world: 3 UAVs, 5 rounds, 15 subareas, 75 GERs.
inline scenario::Scenario desk_scenario(std::uint64_t seed = 7) {
  return scenario::generate_scenario({}, seed);
}

inline std::shared_ptr<const scenario::Scenario> shared_desk(std::uint64_t seed = 7) {
  return std::make_shared<const scenario::Scenario>(desk_scenario(seed));
}

template <class F>
bool throws_kind(F&& f, ErrorKind kind) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind() == kind;
  }
  return false;
}

}  // namespace skyrescue::testing
