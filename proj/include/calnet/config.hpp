#pragma once

#include <map>
#include <optional>
#include <string>

#include "calnet/csv.hpp"
#include "calnet/kernels.hpp"
#include "calnet/multihop.hpp"
#include "calnet/pair_model.hpp"
#include "calnet/synthdata.hpp"
#include "calnet/trainer.hpp"

namespace calnet {

/// Declarative run configuration (JSON file). Unknown keys are errors;
/// missing keys take the defaults below. Validation reports the offending
/// field path.
struct RunConfig {
  CalibKind calib_kind = CalibKind::LogScale;
  std::map<KernelGroup, KernelSpec> kernels;  // applied to every param index
  double sigma2 = 1.0;
  std::optional<double> gamma2;  // absent => 100 * variance of raw measurements
  TrainOptions train;
  int inducing_per_gp = 20;
  MultihopParams multihop;
  IngestFilters filters;
  PollutionScenario pollution;
  CategoricalScenario categorical;
  int prediction_samples = 20;  // P for prediction outputs

  /// Kernel assignment for the given sensors; every group present in the
  /// table must have a configured kernel.
  KernelAssignment make_assignment(const SensorTable& sensors, int param_count) const;

  double resolve_gamma2(const std::vector<ColocationRecord>& records) const;
};

RunConfig default_config();

RunConfig load_config(const std::string& path);

/// Canonical JSON dump of the configuration (used for the manifest hash).
std::string dump_config(const RunConfig& cfg);

/// Run manifest: config hash, seed, version. Enables exact replay.
void write_manifest(const std::string& path, const RunConfig& cfg, std::uint64_t seed);

}  // namespace calnet
