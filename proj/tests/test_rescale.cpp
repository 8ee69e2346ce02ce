#include "doctest.h"

#include "mcf/rescale.hpp"
#include "mcf/shapes.hpp"

#include <cmath>

using namespace mcf;

namespace {

DiscreteImmersion axisym(const std::string& kind, std::vector<double> p, int N) {
  return build_immersion({kind, p, 2, 1}, AmbientModel::euclidean(3), Topology::axisym, {N},
                         DerivativeSource::finite_difference);
}

}  // namespace

TEST_CASE("rescaling integrator") {
  RescaleState rs;
  for (int k = 0; k < 100; ++k) rs = advance_rescaling(rs, 0.0, 0.01, 2);
  CHECK(rs.psi == 1.0);
  CHECK(rs.t_tilde == doctest::Approx(1.0).epsilon(1e-12));

  // frozen hbar = n^2 / r^2 with n = 2, r = 1
  rs = RescaleState{};
  const double dt = 1e-3;
  for (int k = 0; k < 500; ++k) rs = advance_rescaling(rs, 4.0, dt, 2);
  CHECK(rs.psi == doctest::Approx(std::exp(2 * 0.5)).epsilon(1e-12));
  const double tt = (std::exp(4 * 0.5) - 1) / 4;
  CHECK(std::abs(rs.t_tilde - tt) / tt < 1e-6);
}

TEST_CASE("psi of the exact shrinking sphere") {
  std::vector<StepRecord> steps;
  const double dt = 1e-5;
  for (int k = 0; k <= 20000; ++k) {
    const double t = k * dt;
    steps.push_back({t, 4.0 / (1 - 4 * t)});
  }
  auto rs = integrate_rescaling(steps, 2);
  double worst = 0, worst_tt = 0;
  for (size_t k = 0; k < steps.size(); ++k) {
    const double exact = 1 / std::sqrt(1 - 4 * steps[k].t);
    worst = std::max(worst, std::abs(rs[k].psi - exact) / exact);
    // t~ = -ln(1 - 4t) / 4
    const double tt = -std::log(1 - 4 * steps[k].t) / 4;
    worst_tt = std::max(worst_tt, std::abs(rs[k].t_tilde - tt));
  }
  CHECK(worst <= 1e-4);
  CHECK(worst_tt <= 1e-6);
  // dt~/dt recovered by differencing is psi^2 at the midpoint
  double e = 0;
  for (size_t k = 1; k + 1 < rs.size(); k += 997) {
    const double rate = (rs[k + 1].t_tilde - rs[k - 1].t_tilde) / (2 * dt);
    e = std::max(e, std::abs(rate - rs[k].psi * rs[k].psi) / (rs[k].psi * rs[k].psi));
  }
  CHECK(e < 1e-7);
}

TEST_CASE("dilated view identities") {
  auto imm = axisym("ellipsoid", {1.2, 1, 1}, 32);
  PinchingParams p;
  auto raw = raw_diagnostics(imm, p);
  auto same = dilated_view(raw, 1.0, 2, p.sigma);
  CHECK(closure_error(raw, same) == 0.0);
  auto two = dilated_view(raw, 2.0, 2, p.sigma);
  CHECK(two.A2_max == raw.A2_max / 4);
  CHECK(two.H2_max == raw.H2_max / 4);
  CHECK(two.volume == raw.volume * 4);
  CHECK(two.H_ratio == raw.H_ratio);
  CHECK_THROWS_AS(dilated_view(raw, 0.0, 2, p.sigma), InputError);
}

TEST_CASE("scaling closure across shapes and ambients") {
  std::vector<DiscreteImmersion> zoo{
      axisym("ellipsoid", {1.2, 1, 1}, 32),
      build_immersion({"ellipsoid", {1.3, 1, 0.9}, 2, 1}, AmbientModel::euclidean(3), Topology::latlong, {16, 32},
                      DerivativeSource::finite_difference),
      build_immersion({"round-sphere", {0.7}, 2, 1}, AmbientModel::sphere(3, 1.0), Topology::axisym, {32},
                      DerivativeSource::analytic),
      build_immersion({"round-sphere", {0.7}, 3, 1}, AmbientModel::hyperbolic(4, 1.0), Topology::axisym, {24},
                      DerivativeSource::analytic),
      build_immersion({"product-torus", {1.0, 0.6}, 2, 2}, AmbientModel::perturbed(4, 0.05, 1.0), Topology::torus,
                      {16, 16}, DerivativeSource::finite_difference),
  };
  for (const auto& imm : zoo) {
    for (double sigma : {0.25, 0.5}) {
      PinchingParams p;
      p.sigma = sigma;
      auto raw = raw_diagnostics(imm, p);
      for (double psi : {0.5, 2.0, 7.3}) {
        auto f = dilated_view(raw, psi, imm.n(), sigma);
        auto r = dilated_recompute(imm, psi, p);
        CHECK(closure_error(f, r) <= 1e-10);
        CHECK(std::abs(r.f_sigma_max - std::pow(psi, -2 * sigma) * raw.f_sigma_max) <=
              1e-10 * std::max(1.0, raw.f_sigma_max));
      }
    }
  }
}

TEST_CASE("hbar refinement") {
  const double coarse = hbar(axisym("ellipsoid", {1.2, 1, 1}, 64));
  const double fine = hbar(axisym("ellipsoid", {1.2, 1, 1}, 128));
  CHECK(std::abs(coarse - fine) / fine < 1e-3);
  CHECK(hbar(build_immersion({"round-sphere", {0.5}, 3, 1}, AmbientModel::euclidean(4), Topology::axisym, {16},
                             DerivativeSource::analytic)) == doctest::Approx(36.0).epsilon(1e-9));
}

TEST_CASE("rescaled shrinking sphere") {
  FlowConfig cfg;
  cfg.blowup_threshold = 1e4;
  cfg.diag_stride = 400;
  auto tr = run_rescaled_flow(axisym("round-sphere", {1.0}, 64), cfg);
  REQUIRE(tr.flow.status == FlowStatus::blowup_detected);
  auto rep = roundness_report(tr);
  const double h2 = std::pow(M_PI / 64, 2);
  CHECK(rep.volume_drift <= 5 * h2);
  CHECK(rep.closure_max <= 1e-10);
  for (const auto& s : tr.samples) {
    CHECK(s.closure <= 1e-10);
    CHECK(s.dilated.H2_max == doctest::Approx(4.0).epsilon(0.01));
    CHECK(s.dilated.A2_max == doctest::Approx(2.0).epsilon(0.01));
    CHECK(s.dilated.volume == doctest::Approx(4 * M_PI).epsilon(0.01));
  }
  for (const auto& s : tr.samples)
    if (s.t < 0.2) CHECK(s.psi == doctest::Approx(1 / std::sqrt(1 - 4 * s.t)).epsilon(0.01));
  for (size_t i = 1; i < tr.samples.size(); ++i) CHECK(tr.samples[i].t_tilde > tr.samples[i - 1].t_tilde);
}

TEST_CASE("rescaled Clifford torus") {
  auto imm = build_immersion({"clifford-torus", {}, 2, 1}, AmbientModel::sphere(3, 1.0), Topology::torus, {16, 16},
                             DerivativeSource::analytic);
  FlowConfig cfg;
  cfg.t_max = 0.05;
  cfg.diag_stride = 1;
  auto tr = run_rescaled_flow(imm, cfg);
  auto rep = roundness_report(tr);
  for (const auto& s : tr.samples) {
    CHECK(s.psi == 1.0);
    CHECK(s.t_tilde == doctest::Approx(s.t).epsilon(1e-14));
    CHECK(s.ambient_curvature == 1.0);
  }
  CHECK(rep.volume_drift < 1e-14);
}

TEST_CASE("rescaled ellipsoid rounds out") {
  FlowConfig cfg;
  cfg.blowup_threshold = 1e4;
  cfg.diag_stride = 200;
  auto tr = run_rescaled_flow(axisym("ellipsoid", {1.1, 1, 1}, 48), cfg);
  auto rep = roundness_report(tr);
  CHECK(rep.final_A02_max < 0.1 * rep.initial_A02_max);
  CHECK(rep.volume_drift < 0.01);
  CHECK(rep.closure_max <= 1e-10);
  CHECK(rep.H_min > 0);
  CHECK(rep.final_H_ratio < 1.01);
}

TEST_CASE("roundness report needs samples") {
  RescaledTrace tr;
  tr.samples.resize(5);
  CHECK_THROWS_AS(roundness_report(tr), InputError);
}
