#pragma once

#include <vector>

#include "calnet/kernels.hpp"
#include "calnet/pair_model.hpp"
#include "calnet/rng.hpp"
#include "calnet/types.hpp"

namespace calnet::testing {

/// 3-sensor toy network: sensor 0 is a reference, 1 static, 2 mobile.
inline SensorTable toy_sensors() {
  SensorTable t;
  t.add({0, SensorKind::Static, true});
  t.add({1, SensorKind::Static, false});
  t.add({2, SensorKind::Mobile, false});
  return t;
}

inline KernelAssignment toy_assignment(const SensorTable& sensors, int param_count) {
  KernelAssignment assign(sensors);
  assign.assign_all(KernelGroup::Static, KernelSpec::sum_eq_bias(0.6, 5.0, 0.3), param_count);
  assign.assign_all(KernelGroup::Mobile, KernelSpec::sum_eq_bias(0.4, 3.0, 0.2), param_count);
  assign.assign_all(KernelGroup::Reference, KernelSpec::bias(1.0), param_count);
  return assign;
}

/// 10 colocation records over t in [0, 10], touching all three sensors.
inline std::vector<ColocationRecord> toy_records(std::uint64_t seed = 7) {
  Rng rng(seed);
  std::vector<ColocationRecord> recs;
  for (int i = 0; i < 10; ++i) {
    ColocationRecord r;
    r.t1 = r.t2 = i + rng.uniform();
    if (i % 3 == 0) {
      r.s1 = 0;
      r.s2 = 1;
    } else if (i % 3 == 1) {
      r.s1 = 1;
      r.s2 = 2;
    } else {
      r.s1 = 0;
      r.s2 = 2;
    }
    const double p = 40.0 + 10.0 * rng.normal();
    r.y1 = (r.s1 == 0 ? p : 1.2 * p + rng.normal());
    r.y2 = (r.s2 == 0 ? p : 0.8 * p + rng.normal());
    recs.push_back(r);
  }
  return recs;
}

}  // namespace calnet::testing
