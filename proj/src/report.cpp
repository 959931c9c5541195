#include "thinshell/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

namespace thinshell {

std::string format_sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12e", x);
  return buf;
}

void CheckReport::check_le(const std::string& id, double measured, double threshold,
                           const std::string& note) {
  CheckRow r{id, measured, threshold, "<=", 0.0, measured <= threshold && std::isfinite(measured),
             note};
  rows_.push_back(std::move(r));
}

void CheckReport::check_ge(const std::string& id, double measured, double threshold,
                           const std::string& note) {
  CheckRow r{id, measured, threshold, ">=", 0.0, measured >= threshold && std::isfinite(measured),
             note};
  rows_.push_back(std::move(r));
}

void CheckReport::check_band(const std::string& id, double measured, double center,
                             double halfwidth, const std::string& note) {
  CheckRow r{id,     measured, halfwidth, "band",
             center, std::isfinite(measured) && std::abs(measured - center) <= halfwidth,
             note};
  rows_.push_back(std::move(r));
}

void CheckReport::check_eq_int(const std::string& id, long measured, long expected,
                               const std::string& note) {
  CheckRow r{id,     static_cast<double>(measured), 0.0, "band", static_cast<double>(expected),
             measured == expected, note};
  rows_.push_back(std::move(r));
}

void CheckReport::skip(const std::string& id, const std::string& reason) {
  CheckRow r;
  r.id = id;
  r.comparison = "skip";
  r.pass = true;
  r.note = reason;
  rows_.push_back(std::move(r));
}

bool CheckReport::all_pass() const {
  for (const auto& r : rows_)
    if (!r.pass) return false;
  return true;
}

void CheckReport::set_env(const std::string& key, const std::string& value) {
  env_.emplace_back(key, value);
}

void CheckReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write report: " + path);
  for (const auto& [k, v] : env_) out << "# " << k << " = " << v << "\n";
  out << "check_id,measured,comparison,threshold,band_center,pass,note\n";
  for (const auto& r : rows_) {
    out << r.id << ',' << format_sci(r.measured) << ',' << r.comparison << ','
        << format_sci(r.threshold) << ',' << format_sci(r.band_center) << ','
        << (r.pass ? "1" : "0") << ',' << r.note << "\n";
  }
}

void CheckReport::print(std::ostream& os) const {
  for (const auto& r : rows_) {
    if (r.comparison == "skip") {
      os << "[SKIP] " << r.id << " (" << r.note << ")\n";
      continue;
    }
    os << (r.pass ? "[PASS] " : "[FAIL] ") << r.id << ": measured " << format_sci(r.measured);
    if (r.comparison == "band")
      os << " expected " << format_sci(r.band_center) << " +- " << format_sci(r.threshold);
    else
      os << ' ' << r.comparison << ' ' << format_sci(r.threshold);
    if (!r.note.empty()) os << "  (" << r.note << ")";
    os << "\n";
  }
}

void write_scalar_field_csv(const std::string& path, const SurfaceGrid& g, const ScalarField& f,
                            const std::string& name) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write field CSV: " + path);
  out << "# " << name << " on " << "Ns=" << g.ns() << " Ntheta=" << g.ntheta() << "\n";
  out << "s,theta,value\n";
  for (int k = 0; k < g.ns(); ++k)
    for (int j = 0; j < g.ntheta(); ++j)
      out << format_sci(g.s_node(k)) << ',' << format_sci(g.theta_node(j)) << ','
          << format_sci(f(k, j)) << "\n";
}

void write_vec_field_csv(const std::string& path, const SurfaceGrid& g, const VecField& f,
                         const std::string& name) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write field CSV: " + path);
  out << "# " << name << " on " << "Ns=" << g.ns() << " Ntheta=" << g.ntheta() << "\n";
  out << "s,theta,vx,vy,vz\n";
  for (int k = 0; k < g.ns(); ++k)
    for (int j = 0; j < g.ntheta(); ++j)
      out << format_sci(g.s_node(k)) << ',' << format_sci(g.theta_node(j)) << ','
          << format_sci(f.x(k, j)) << ',' << format_sci(f.y(k, j)) << ','
          << format_sci(f.z(k, j)) << "\n";
}

}  // namespace thinshell
