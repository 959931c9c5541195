#pragma once

#include <string>
#include <vector>

#include "thinshell/fields.hpp"
#include "thinshell/surface_geometry.hpp"

namespace thinshell {

/// One verification check: measured value against a threshold.
struct CheckRow {
  std::string id;
  double measured = 0;
  double threshold = 0;
  std::string comparison = "<=";  // "<=", ">=", "band" (|measured-center|<=width)
  double band_center = 0;
  bool pass = false;
  std::string note;
};

class CheckReport {
 public:
  void check_le(const std::string& id, double measured, double threshold,
                const std::string& note = "");
  void check_ge(const std::string& id, double measured, double threshold,
                const std::string& note = "");
  void check_band(const std::string& id, double measured, double center, double halfwidth,
                  const std::string& note = "");
  void check_eq_int(const std::string& id, long measured, long expected,
                    const std::string& note = "");
  void skip(const std::string& id, const std::string& reason);

  bool all_pass() const;
  const std::vector<CheckRow>& rows() const { return rows_; }
  void set_env(const std::string& key, const std::string& value);

  void write_csv(const std::string& path) const;
  void print(std::ostream& os) const;

 private:
  std::vector<CheckRow> rows_;
  std::vector<std::pair<std::string, std::string>> env_;
};

// Deterministic CSV helpers (RFC-4180-style, '.' decimal, fixed %.12e).
void write_scalar_field_csv(const std::string& path, const SurfaceGrid& g, const ScalarField& f,
                            const std::string& name);
void write_vec_field_csv(const std::string& path, const SurfaceGrid& g, const VecField& f,
                         const std::string& name);
std::string format_sci(double x);

}  // namespace thinshell
