#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "hlock/core.hpp"

namespace hlock::cli
{

struct Options
{
    std::filesystem::path out_dir = ".";
    bool svg = false;
    std::optional<std::uint64_t> seed;  // overrides run.seed
    bool color = false;
};

// Cavity from [cavity] rates, or from [gains] plus cavity.kappa via fit_gains.
OPOParams cavity_from(const RunConfig &cfg);

struct Efficiency
{
    double eta = 1.0;
    bool inferred = false;
    std::string convention;  // set when inferred
    double detected_db = 0.0;
    double ideal_db = 0.0;
};

Efficiency efficiency_from(const RunConfig &cfg, const OPOParams &params);

// Each command writes <out>/<name>.csv (and .svg with --svg) and prints one
// summary line. Errors propagate as exceptions.
void cmd_sweep(const RunConfig &cfg, const Options &opt, std::ostream &out);
void cmd_spectrum(const RunConfig &cfg, const Options &opt, std::ostream &out);
void cmd_lock(const RunConfig &cfg, const Options &opt, std::ostream &out);
void cmd_squeezer(const RunConfig &cfg, const Options &opt, std::ostream &out);
// Returns the number of failed checks.
int cmd_selftest(std::ostream &out, bool color);

// Full command line (without argv[0]). Exit codes: 0 ok, 1 usage/config
// error, 2 physics-domain error, 3 self-test failure.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err,
        bool color = false);

}  // namespace hlock::cli
