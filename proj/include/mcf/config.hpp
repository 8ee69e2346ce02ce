#pragma once

// Experiment configuration read from TOML-style files with dotted keys.

#include "mcf/ambient.hpp"
#include "mcf/flow.hpp"
#include "mcf/immersion.hpp"
#include "mcf/pinching.hpp"
#include "mcf/shapes.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mcf {

struct ExperimentConfig {
  std::string ambient_kind = "euclidean";
  double ambient_c = 1.0;
  double perturb_amplitude = 0.05;
  double perturb_wavenumber = 1.0;

  ShapeSpec shape{"round-sphere", {1.0}, 2, 1};
  DerivativeSource source = DerivativeSource::finite_difference;

  std::optional<Topology> topology;  // unset: default for the shape
  std::vector<int> sizes{64};

  /// Unset bounds come from the space form, or are measured for perturbed ambients.
  std::optional<double> K1, K2, L;

  PinchingParams pinching;
  bool pinching_a_set = false;

  FlowConfig flow;

  double audit_tol = 1e-8;
  int audit_random_planes = 100;
  unsigned seed = 11;

  std::string output_directory = "out";
  long output_stride = 1;
  bool snapshots = false;
  long snapshot_every = 10;

  std::vector<int> convergence_levels{32, 64, 128};
  double convergence_pole_margin = 0.39269908169872414;  // pi/8
  double convergence_t = 0.02;
  double convergence_dt_factor = 0.05;  // dt = factor * h^2

  void validate() const;
};

/// Parses a configuration; unknown keys and malformed values throw ConfigError.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

AmbientModel make_ambient(const ExperimentConfig& cfg);
Topology effective_topology(const ExperimentConfig& cfg);
DiscreteImmersion make_immersion(const ExperimentConfig& cfg, const AmbientModel& ambient);
DiscreteImmersion make_immersion(const ExperimentConfig& cfg, const AmbientModel& ambient,
                                 const std::vector<int>& sizes);

/// Configured bounds, falling back to exact space-form values or to values
/// measured at the given sample points.
CurvatureBounds resolve_bounds(const ExperimentConfig& cfg, const AmbientModel& ambient,
                               const std::vector<Vec>& samples);

}  // namespace mcf
