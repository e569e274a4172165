#pragma once

#include <filesystem>

#include "osc/serialize.hpp"

namespace osc {

struct ConfigError : std::runtime_error {
    ConfigError(const std::string& what, int line_) : std::runtime_error(what), line(line_) {}
    int line;
};

/// One reproducible run: a subcommand plus numeric overrides. Parsed from an
/// "oscrun 1" text file; command-line flags override file values.
struct RunConfig {
    std::string subcommand;
    std::string spec_ref = "builtin:cos1d";
    std::string out_dir = "out";
    unsigned seed = 42;
    int resolution = 0;  // cell resolution (0 = default per dimension)
    std::vector<double> epsilons;
    double tol = 1e-6;
    double alpha = 0.5;
    double mu = 0.5;
    double p = 4.0;
    double f_value = 1.0;
    int points_per_eps = 8;
    int depth = 4;
    std::string method = "vanishing-discount";  // or mean-correction
    std::vector<double> anchor;                 // cell anchor coordinates
    std::vector<double> mgrid;                  // tabulation grid: lo hi step
    std::string lemma = "all";                  // check subcommand selector
    double eps_single = 0.125;
    int cells = 0;  // Dirichlet grid cells (0 = points_per_eps / eps)
    int jobs = 1;
    bool force = false;
};

RunConfig parse_run_config(const std::filesystem::path& path);

inline const std::vector<std::string>& run_subcommands() {
    static const std::vector<std::string> names{"cell",   "effective", "check",     "solve",
                                                "blayer", "sweep",     "campanato", "certify"};
    return names;
}

/// Dispatches the subcommand, writes every artifact under out_dir together
/// with a hash manifest, and returns the process exit status: 0 on success,
/// 1 on a numerical failure, 2 on a configuration error.
int run(const RunConfig& config);

}  // namespace osc
