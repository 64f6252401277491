#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mkg/grid.hpp"
#include "mkg/random_data.hpp"
#include "mkg/wave.hpp"

namespace mkg {

// Experiment settings. Text form is a flat TOML subset:
//
//   # comment
//   [grid]              section header, prefixes the keys below it
//   n = 16              integer
//   data.eps = 0.05     dotted keys work anywhere
//   scheme = "leapfrog" strings are quoted
//   eps_sweep = [0.04, 0.02]
//   deterministic = true
//
// Ranges are listed next to each field; parse_config reports every violation
// with its line number.
struct ExperimentConfig {
    GridSpec grid;     // grid.n in [4, 128], period > 0, nt in [2, 4096], both powers of two, window > 0, taper "none"|"hann"
    DataSpec data;     // data.seed, data.kmin <= data.kmax in [-8, 8], data.eps >= 0
    int cutoff_c = 5;  // cutoff.c in [0, 16]

    double psi_delta = 0.25;  // psi.delta in (0, 1]
    int psi_k_cut = 0;        // psi.k_cut in [-8, 8]

    double nullform_eta = 0;  // nullform.eta >= 0; 0 picks the grid default
    int nullform_band = 2;    // nullform.band in [1, n/2): lattice band of the random traces

    Scheme scheme = Scheme::trigonometric;  // solver.scheme
    double solver_T = 1;                    // solver.T > 0
    double solver_dt = 0;                   // solver.dt >= 0; 0 means T / 512
    int store_every = 64;                   // solver.store_every >= 1

    double picard_eps = 0.02;  // picard.eps >= 0 (replaces data.eps for the picard run)
    int picard_max_iterates = 12;  // picard.max_iterates in [2, 64]
    int picard_min_iterates = 4;   // picard.min_iterates in [2, max_iterates]
    double picard_tol = 1e-8;      // picard.tol > 0
    int picard_substeps = 1;       // picard.substeps in [1, 64]

    std::vector<double> eps_sweep{0.04, 0.02, 0.01, 0.005};  // parametrix.eps_sweep, each >= 0, at least one
    int aperture = 0;               // parametrix.aperture, admissible in [-3, 0] (checked when run)
    std::string probe = "residual";  // parametrix.probe: "l2" | "ortho" | "residual" | "kernel"
    double symbol_cutoff = 0.5;     // parametrix.symbol_cutoff > 0
    int parametrix_c = 0;           // parametrix.c in [0, 16]
    int parametrix_n = 16;          // parametrix.n power of two in [8, 64]
    int parametrix_cells = 4;       // parametrix.cells in [1, 16]: period 2 pi cells
    int parametrix_nt = 32;         // parametrix.nt power of two in [4, 1024]
    double parametrix_T = 2;        // parametrix.T > 0
    std::uint64_t parametrix_seed = 7;  // parametrix.seed
    double probe_time = 0.5;        // parametrix.probe_time >= 0
    int kernel_cells = 35;          // kernel.cells in [4, 64]

    std::string norms_input;  // norms.input: snapshot directory (empty: output.dir/snapshots)
    double norms_q = 2;       // norms.q in [2, inf]
    double norms_r = 6;       // norms.r in [2, inf]
    double norms_s = 1;       // norms.s
    double norms_b = 0.5;     // norms.b
    double norms_p = 2;       // norms.p in [1, inf]

    std::string output_dir = "out";  // output.dir, non-empty
    bool deterministic = true;       // output.deterministic

    bool operator==(const ExperimentConfig&) const = default;
};

struct ConfigError : std::runtime_error {
    std::vector<std::string> violations;  // "line N: message"
    explicit ConfigError(std::vector<std::string> v);
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
// Canonical text; parse_config(to_text(c)) == c.
std::string to_text(const ExperimentConfig& c);
// Set one dotted key from its text value (as it would appear in a file) and
// re-validate; throws ConfigError.
void set_value(ExperimentConfig& c, const std::string& key, const std::string& value);
// Range checks without line numbers.
std::vector<std::string> validate(const ExperimentConfig& c);

// MKG_THREADS, capped to [1, hardware threads]; 1 when unset. Throws
// InvalidArgument on malformed values.
int thread_limit();

}  // namespace mkg
