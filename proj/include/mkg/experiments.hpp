#pragma once

#include <ostream>
#include <string>

#include "mkg/config.hpp"

namespace mkg {

// Exit codes of a run: success, a check that did not hold, an error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitCheckFailed = 2;

// Artifacts go to cfg.output_dir:
//   simulate         energy.csv, simulate.json, snapshots/state_NNNN/ (MKGF + manifest)
//   picard           picard.csv (m, diff_energy, diff_strichartz, diff_xsb, ratio), picard.json
//   parametrix-test  parametrix.json
//   nullform-check   nullform.json
//   norms            norms.csv, norms.json (reads snapshots from norms.input)
// Returns kExitOk or kExitCheckFailed; errors propagate as exceptions.
int run_simulate(const ExperimentConfig& cfg, std::ostream& log);
int run_picard(const ExperimentConfig& cfg, std::ostream& log);
int run_parametrix(const ExperimentConfig& cfg, std::ostream& log);
int run_nullform_check(const ExperimentConfig& cfg, std::ostream& log);
int run_norms(const ExperimentConfig& cfg, std::ostream& log);

// Dispatch by subcommand name; unknown names throw InvalidArgument.
int run(const std::string& subcommand, const ExperimentConfig& cfg, std::ostream& log);

}  // namespace mkg
