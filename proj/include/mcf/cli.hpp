#pragma once

// Command-line entry point.
//
//   constants      --n --d --k1 --k2 --L --a [--b-init] [--config] [--out]
//   analyze        --config [--out]
//   flow           --config [--out]
//   rescale-flow   --config [--out]
//   convergence    --config [--out] [--levels N1,N2,...]
//   audit          --config [--out]
//
// Exit codes: 0 success, 1 usage error, 2 invalid configuration or input,
// 3 runtime failure.

#include "mcf/flow.hpp"
#include "mcf/rescale.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace mcf {

inline constexpr int kSummarySchemaVersion = 1;

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_command(int argc, char** argv);

/// Shortest round-trip formatting ("%.17g"); nan and inf spelled out.
std::string format_double(double v);

/// Header of trace.csv; the rescaled variant appends psi, t_tilde, vol_tilde,
/// A0_tilde_max and Hratio_tilde.
std::string trace_header(bool rescaled);
std::string trace_csv(const FlowTrace& tr, long stride);
std::string trace_csv(const RescaledTrace& tr, long stride);

}  // namespace mcf
