#include "mcf/config.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>

namespace mcf {

namespace {

using Inputs = std::vector<std::string>;
using Setter = std::function<void(const Inputs&)>;

const std::string& single(const std::string& key, const Inputs& in) {
  if (in.size() != 1) throw ConfigError(key + ": expected a single value");
  return in[0];
}

double to_double(const std::string& key, const std::string& s) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": not a number: " + s);
  }
}

long to_long(const std::string& key, const std::string& s) {
  const double v = to_double(key, s);
  if (v != std::floor(v) || std::abs(v) > 9e15) throw ConfigError(key + ": not an integer: " + s);
  return static_cast<long>(v);
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError(key + ": not a boolean: " + s);
}

Setter num(double& x) {
  return [&x](const Inputs& in) { x = to_double("", single("", in)); };
}

std::map<std::string, Setter> setters(ExperimentConfig& c) {
  std::map<std::string, Setter> m;
  auto dbl = [](double& x) { return [&x](const Inputs& in) { x = to_double("", single("", in)); }; };
  auto lng = [](long& x) { return [&x](const Inputs& in) { x = to_long("", single("", in)); }; };
  auto opt = [](std::optional<double>& x) { return [&x](const Inputs& in) { x = to_double("", single("", in)); }; };
  auto ints = [](std::vector<int>& v) {
    return [&v](const Inputs& in) {
      v.clear();
      for (const auto& s : in) v.push_back(static_cast<int>(to_long("", s)));
    };
  };

  m["ambient.kind"] = [&c](const Inputs& in) { c.ambient_kind = single("", in); };
  m["ambient.c"] = dbl(c.ambient_c);
  m["ambient.perturb_amplitude"] = dbl(c.perturb_amplitude);
  m["ambient.perturb_wavenumber"] = dbl(c.perturb_wavenumber);

  m["immersion.shape"] = [&c](const Inputs& in) { c.shape.kind = single("", in); };
  m["immersion.params"] = [&c](const Inputs& in) {
    c.shape.params.clear();
    for (const auto& s : in)
      if (!s.empty()) c.shape.params.push_back(to_double("", s));
  };
  m["immersion.n"] = [&c](const Inputs& in) { c.shape.n = static_cast<int>(to_long("", single("", in))); };
  m["immersion.codim"] = [&c](const Inputs& in) { c.shape.codim = static_cast<int>(to_long("", single("", in))); };
  m["immersion.source"] = [&c](const Inputs& in) {
    try {
      c.source = derivative_source_from_string(single("", in));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  };

  m["grid.topology"] = [&c](const Inputs& in) {
    try {
      c.topology = topology_from_string(single("", in));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  };
  m["grid.sizes"] = ints(c.sizes);

  m["bounds.K1"] = opt(c.K1);
  m["bounds.K2"] = opt(c.K2);
  m["bounds.L"] = opt(c.L);

  PinchingParams& p = c.pinching;
  m["pinching.a"] = [&c](const Inputs& in) {
    c.pinching.a = to_double("", single("", in));
    c.pinching_a_set = true;
  };
  m["pinching.b"] = dbl(p.b);
  m["pinching.sigma"] = dbl(p.sigma);
  m["pinching.p"] = [&p](const Inputs& in) { p.p = static_cast<int>(to_long("", single("", in))); };
  m["pinching.eta"] = opt(p.eta);
  for (auto [k, v] : std::initializer_list<std::pair<const char*, double*>>{
           {"mu", &p.mu}, {"rho", &p.rho}, {"varrho", &p.varrho}, {"theta", &p.theta},
           {"vartheta", &p.vartheta}, {"N1", &p.N1}, {"N2", &p.N2}, {"eta5", &p.eta5},
           {"C0", &p.C0}, {"delta", &p.delta}})
    m[std::string("pinching.") + k] = num(*v);

  FlowConfig& f = c.flow;
  m["flow.cfl"] = dbl(f.cfl);
  m["flow.t_max"] = dbl(f.t_max);
  m["flow.blowup_threshold"] = dbl(f.blowup_threshold);
  m["flow.max_steps"] = lng(f.max_steps);
  m["flow.diag_stride"] = lng(f.diag_stride);
  m["flow.hmin_sq_guard"] = dbl(f.hmin_sq_guard);
  m["flow.evolution_residuals"] = [&f](const Inputs& in) { f.evolution_residuals = to_bool("", single("", in)); };
  m["flow.fixed_dt"] = opt(f.fixed_dt);
  m["flow.parallel"] = [&f](const Inputs& in) {
    f.exec = to_bool("", single("", in)) ? Exec::parallel : Exec::serial;
  };

  m["audit.tol"] = dbl(c.audit_tol);
  m["audit.random_planes"] = [&c](const Inputs& in) {
    c.audit_random_planes = static_cast<int>(to_long("", single("", in)));
  };
  m["audit.seed"] = [&c](const Inputs& in) { c.seed = static_cast<unsigned>(to_long("", single("", in))); };

  m["output.directory"] = [&c](const Inputs& in) { c.output_directory = single("", in); };
  m["output.stride"] = lng(c.output_stride);
  m["output.snapshots"] = [&c](const Inputs& in) { c.snapshots = to_bool("", single("", in)); };
  m["output.snapshot_every"] = lng(c.snapshot_every);

  m["convergence.levels"] = ints(c.convergence_levels);
  m["convergence.pole_margin"] = dbl(c.convergence_pole_margin);
  m["convergence.t"] = dbl(c.convergence_t);
  m["convergence.dt_factor"] = dbl(c.convergence_dt_factor);
  return m;
}

}  // namespace

void ExperimentConfig::validate() const {
  ambient_kind_from_string(ambient_kind);
  if (!(ambient_c > 0)) throw ConfigError("ambient.c must be positive");
  if (shape.n < 2 || shape.n > 4) throw ConfigError("immersion.n must be 2, 3 or 4");
  if (shape.codim < 1) throw ConfigError("immersion.codim must be positive");
  if (sizes.empty()) throw ConfigError("grid.sizes is empty");
  for (int s : sizes)
    if (s < 4) throw ConfigError("grid.sizes entries must be at least 4");
  for (const auto& b : {K1, K2, L})
    if (b && !(*b >= 0)) throw ConfigError("bounds must be nonnegative");
  pinching.validate();
  flow.validate();
  if (!(audit_tol >= 0)) throw ConfigError("audit.tol must be nonnegative");
  if (audit_random_planes < 0) throw ConfigError("audit.random_planes must be nonnegative");
  if (output_stride < 1 || snapshot_every < 1) throw ConfigError("output strides must be positive");
  if (convergence_levels.size() < 2) throw ConfigError("convergence.levels needs at least two levels");
  for (int s : convergence_levels)
    if (s < 4) throw ConfigError("convergence.levels entries must be at least 4");
  if (!(convergence_pole_margin >= 0)) throw ConfigError("convergence.pole_margin must be nonnegative");
  if (!(convergence_t > 0) || !(convergence_dt_factor > 0))
    throw ConfigError("convergence.t and convergence.dt_factor must be positive");
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  auto table = setters(c);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const CLI::Error& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  for (const auto& it : items) {
    if (it.name == "++" || it.name == "--") continue;
    const std::string key = it.fullname();
    auto s = table.find(key);
    if (s == table.end()) throw ConfigError("unknown key: " + key);
    try {
      s->second(it.inputs);
    } catch (const ConfigError& e) {
      throw ConfigError(key + e.what());
    }
  }
  if (!c.pinching_a_set && c.shape.n >= 2) c.pinching.a = pinching_coefficient(c.shape.n);
  try {
    c.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open configuration " + path);
  return parse_config(f);
}

AmbientModel make_ambient(const ExperimentConfig& c) {
  const int dim = c.shape.n + c.shape.codim;
  switch (ambient_kind_from_string(c.ambient_kind)) {
    case AmbientKind::euclidean: return AmbientModel::euclidean(dim);
    case AmbientKind::sphere: return AmbientModel::sphere(dim, c.ambient_c);
    case AmbientKind::hyperbolic: return AmbientModel::hyperbolic(dim, c.ambient_c);
    case AmbientKind::perturbed: return AmbientModel::perturbed(dim, c.perturb_amplitude, c.perturb_wavenumber);
  }
  throw ConfigError("unknown ambient kind");
}

Topology effective_topology(const ExperimentConfig& c) {
  return c.topology ? *c.topology : default_topology(c.shape.kind);
}

DiscreteImmersion make_immersion(const ExperimentConfig& c, const AmbientModel& amb) {
  return make_immersion(c, amb, c.sizes);
}

DiscreteImmersion make_immersion(const ExperimentConfig& c, const AmbientModel& amb, const std::vector<int>& sizes) {
  return build_immersion(c.shape, amb, effective_topology(c), sizes, c.source);
}

CurvatureBounds resolve_bounds(const ExperimentConfig& c, const AmbientModel& amb, const std::vector<Vec>& samples) {
  CurvatureBounds b;
  if (amb.is_space_form()) {
    const double K = amb.space_form_curvature();
    b.K1 = std::max(0.0, -K);
    b.K2 = std::max(0.0, K);
    b.L = 0.0;
  } else if (!(c.K1 && c.K2 && c.L)) {
    CurvatureBounds zero;
    BoundReport r = verify_geometry_bounds(amb, samples, zero, c.seed);
    b.K1 = std::max(0.0, -r.sectional_low);
    b.K2 = std::max(0.0, r.sectional_high);
    b.L = r.nabla_max;
  }
  if (c.K1) b.K1 = *c.K1;
  if (c.K2) b.K2 = *c.K2;
  if (c.L) b.L = *c.L;
  b.validate();
  return b;
}

}  // namespace mcf
