#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mkg/config.hpp"
#include "mkg/errors.hpp"
#include "mkg/experiments.hpp"

namespace {

// "0.04,0.02" or "[0.04, 0.02]" -> config list text.
std::string as_list(std::string s) {
    if (!s.empty() && s.front() == '[') return s;
    return "[" + s + "]";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Maxwell-Klein-Gordon desk experiments"};
    app.require_subcommand(1, 1);
    std::string config_path, out;
    std::vector<std::string> sets;
    bool print_config = false;
    app.add_option("-c,--config", config_path, "config file (flat TOML subset)")->check(CLI::ExistingFile);
    app.add_option("-s,--set", sets, "override, e.g. --set grid.n=8 (repeatable)");
    app.add_option("-o,--out", out, "output directory (output.dir)");
    app.add_flag("--print-config", print_config, "print the effective config to stdout before running");

    app.add_subcommand("simulate", "coupled evolution; energy trace and snapshots");
    app.add_subcommand("picard", "Picard iteration; consecutive-difference CSV");
    auto* px = app.add_subcommand("parametrix-test", "renormalized parametrix probes");
    std::string eps_sweep, probe;
    int aperture = 0;
    px->add_option("--eps-sweep", eps_sweep, "comma-separated amplitudes");
    auto* ap = px->add_option("--aperture", aperture, "sector aperture exponent l");
    px->add_option("--probe", probe, "l2 | ortho | residual | kernel");
    app.add_subcommand("nullform-check", "connection identity on guarded random traces");
    auto* nm = app.add_subcommand("norms", "norm proxies of stored snapshots");
    std::string input;
    nm->add_option("--input", input, "snapshot directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return mkg::kExitError;
    }

    try {
        mkg::ExperimentConfig cfg;
        if (!config_path.empty()) cfg = mkg::load_config(config_path);
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw mkg::InvalidArgument("--set expects key=value, got '" + s + "'");
            mkg::set_value(cfg, s.substr(0, eq), s.substr(eq + 1));
        }
        if (!out.empty()) mkg::set_value(cfg, "output.dir", "\"" + out + "\"");
        if (!eps_sweep.empty()) mkg::set_value(cfg, "parametrix.eps_sweep", as_list(eps_sweep));
        if (!probe.empty()) mkg::set_value(cfg, "parametrix.probe", "\"" + probe + "\"");
        if (!input.empty()) mkg::set_value(cfg, "norms.input", "\"" + input + "\"");
        // The aperture range is a module check (exit 1 from the run), not a config error.
        if (*ap) cfg.aperture = aperture;
        if (print_config) std::cout << mkg::to_text(cfg);
        const auto* sub = app.get_subcommands().front();
        return mkg::run(sub->get_name(), cfg, std::cerr);
    } catch (const mkg::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
    }
    return mkg::kExitError;
}
