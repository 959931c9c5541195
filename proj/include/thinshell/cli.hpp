#pragma once

#include <string>

#include "thinshell/config.hpp"
#include "thinshell/report.hpp"
#include "thinshell/surface_geometry.hpp"

namespace thinshell {

/// Threshold table: versioned defaults, overridable from a `key = value` file.
class Tolerances {
 public:
  Tolerances();  ///< defaults
  void load_overrides(const std::string& path);
  double get(const std::string& key) const;

 private:
  std::map<std::string, double> t_;
};

Surface surface_from_config(const Config& cfg);
std::function<double(const Vec3&)> weight_expr(const std::string& text);

int cmd_check_identities(const Config& cfg, const std::string& outdir, const Tolerances& tol,
                         unsigned seed);
int cmd_rate_study(const Config& cfg, const std::string& outdir, const Tolerances& tol,
                   unsigned seed);
int cmd_solve(const Config& cfg, const std::string& outdir, const Tolerances& tol, unsigned seed);
int cmd_decompose(const Config& cfg, const std::string& outdir, const Tolerances& tol,
                  unsigned seed);
int cmd_killing_scan(const Config& cfg, const std::string& outdir, const Tolerances& tol,
                     unsigned seed);
int cmd_korn(const Config& cfg, const std::string& outdir, const Tolerances& tol, unsigned seed);

/// Entry point: `thinshell <subcommand> --config <file> --out <dir>
/// [--tolerances <file>] [--seed <u64>]`. Exit codes: 0 pass, 1 check
/// failure, 2 config error.
int run_cli(int argc, char** argv);

}  // namespace thinshell
