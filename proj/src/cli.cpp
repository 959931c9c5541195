#include "thinshell/cli.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "thinshell/limit_solver.hpp"
#include "thinshell/svg.hpp"
#include "thinshell/thin_shell.hpp"

namespace fs = std::filesystem;

namespace thinshell {

// ---------------------------------------------------------------------------
// Tolerances
// ---------------------------------------------------------------------------

Tolerances::Tolerances() {
  t_ = {
      {"alg.pointwise", 1e-11},
      {"alg.sphere_wp", 1e-12},
      {"diff.slope_min", 3.0},
      {"helm.eigsolve_rel", 1e-8},
      {"helm.idempotency_factor", 2.0},
      {"helm.div_rel", 1e-8},
      {"helm.roundtrip", 1e-9},
      {"shell.identity", 1e-12},
      {"shell.impermeability", 1e-12},
      {"rate.comp_n.center", 2.0},
      {"rate.comp_n.halfwidth", 0.2},
      {"rate.extan_div.center", 1.0},
      {"rate.extan_div.halfwidth", 0.2},
      {"rate.lp_etd_sol.center", 1.5},
      {"rate.lp_etd_sol.halfwidth", 0.2},
      {"rate.ave_diff_dom.center", 1.0},
      {"rate.ave_diff_dom.halfwidth", 0.2},
      {"rate.adiv_tan.min_slope", 0.5},
      {"solve.killing_drift", 1e-3},
      {"solve.pressure_rel", 1e-3},
      {"decompose.roundtrip", 1e-10},
  };
}

void Tolerances::load_overrides(const std::string& path) {
  const Config cfg = Config::parse_file(path);
  for (const auto& [k, v] : cfg.items()) {
    try {
      t_[k] = std::stod(v);
    } catch (const std::exception&) {
      throw ConfigError("tolerance override " + k + " is not numeric: " + v);
    }
  }
}

double Tolerances::get(const std::string& key) const {
  auto it = t_.find(key);
  if (it == t_.end()) throw ConfigError("unknown tolerance key: " + key);
  return it->second;
}

// ---------------------------------------------------------------------------
// Config helpers
// ---------------------------------------------------------------------------

Surface surface_from_config(const Config& cfg) {
  const std::string kind = cfg.get_or("surface.kind", "sphere");
  if (kind == "sphere") return Surface::sphere(cfg.get_double_or("surface.R", 1.0));
  if (kind == "torus")
    return Surface::torus(cfg.get_double_or("surface.R", 3.0), cfg.get_double_or("surface.a", 1.0));
  if (kind == "revolution")
    return Surface::revolution(profile_from_csv(cfg.get("surface.profile_file")));
  throw ConfigError("unknown surface.kind: " + kind);
}

std::function<double(const Vec3&)> weight_expr(const std::string& text) {
  double a = 0, b = 0;
  char rest[32] = {0};
  // forms: "<c>" | "<a>+<b>*y3" | "<a>+<b>*costheta"
  if (std::sscanf(text.c_str(), "%lf+%lf*%31s", &a, &b, rest) == 3) {
    const std::string tail(rest);
    if (tail == "y3") return [a, b](const Vec3& y) { return a + b * y[2]; };
    if (tail == "costheta")
      return [a, b](const Vec3& y) { return a + b * y[0] / std::hypot(y[0], y[1]); };
    throw ConfigError("unsupported weight expression: " + text);
  }
  try {
    size_t pos = 0;
    const double c = std::stod(text, &pos);
    if (pos == text.size()) return [c](const Vec3&) { return c; };
  } catch (const std::exception&) {
  }
  throw ConfigError("unsupported weight expression: " + text);
}

namespace {

void ensure_outdir(const std::string& outdir) {
  std::error_code ec;
  fs::create_directories(outdir, ec);
  if (ec) throw ConfigError("cannot create output directory: " + outdir);
}

void echo_config(const Config& cfg, const std::string& outdir, unsigned seed) {
  std::ofstream out(fs::path(outdir) / "config_echo.txt");
  out << "seed = " << seed << "\n";
  for (const auto& [k, v] : cfg.items()) out << k << " = " << v << "\n";
}

struct NamedSurface {
  std::string name;
  Surface surf;
};

std::vector<NamedSurface> check_surfaces(const Config& cfg) {
  const std::string which = cfg.get_or("check.surfaces", "sphere,torus");
  std::vector<NamedSurface> out;
  std::istringstream in(which);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok == "sphere") out.push_back({"sphere", Surface::sphere(1.0)});
    else if (tok == "torus") out.push_back({"torus", Surface::torus(3.0, 1.0)});
    else if (tok == "wavy_torus") out.push_back({"wavy_torus", Surface::revolution(wavy_torus_profile(3.0, 1.0, 0.12, 3))});
    else if (tok == "wavy_sphere") out.push_back({"wavy_sphere", Surface::revolution(wavy_sphere_profile(1.0, 0.1, 2))});
    else throw ConfigError("unknown check surface: " + tok);
  }
  return out;
}

// Pointwise algebraic residuals over a grid (no differentiation involved).
void pointwise_identity_checks(CheckReport& rep, const std::string& tag, const SurfaceGrid& g,
                               double tol) {
  double rP = 0, rPQ = 0, rPplusQ = 0, rn = 0, rWn = 0, rPW = 0, rtr = 0, rK = 0, rJ = 0;
  double kmax = 0;
  for (int k = 0; k < g.ns(); ++k)
    for (int j = 0; j < g.ntheta(); ++j) {
      const SurfacePoint& p = g.point(k, j);
      kmax = std::max({kmax, std::abs(p.kappa_s), std::abs(p.kappa_th)});
    }
  const double r = 0.2 / std::max(kmax, 1e-3);
  for (int k = 0; k < g.ns(); ++k)
    for (int j = 0; j < g.ntheta(); ++j) {
      const SurfacePoint& p = g.point(k, j);
      rP = std::max(rP, (p.P * p.P - p.P).norm());
      rPQ = std::max(rPQ, (p.P * p.Q).norm());
      rPplusQ = std::max(rPplusQ, (p.P + p.Q - Mat3::Identity()).norm());
      rn = std::max(rn, std::abs(p.n.norm() - 1.0));
      rWn = std::max(rWn, (p.W * p.n).norm());
      rPW = std::max(rPW, std::max((p.P * p.W - p.W).norm(), (p.W * p.P - p.W).norm()));
      rtr = std::max(rtr, std::abs(p.W.trace() - p.H));
      rK = std::max(rK, std::abs(0.5 * (p.H * p.H - (p.W * p.W).trace()) - p.K));
      rJ = std::max(rJ, std::abs(shell_jacobian(p, r) - (1.0 - r * p.H + r * r * p.K)));
    }
  rep.check_le(tag + ".P_idempotent", rP, tol);
  rep.check_le(tag + ".PQ_zero", rPQ, tol);
  rep.check_le(tag + ".P_plus_Q", rPplusQ, tol);
  rep.check_le(tag + ".unit_normal", rn, tol);
  rep.check_le(tag + ".Wn_zero", rWn, tol);
  rep.check_le(tag + ".PW_sandwich", rPW, tol);
  rep.check_le(tag + ".trW_H", rtr, tol);
  rep.check_le(tag + ".K_from_W", rK, tol);
  rep.check_le(tag + ".jacobian_expansion", rJ, tol);
}

// L2 residuals of the differential identities at one resolution.
struct DiffResiduals {
  double divP = 0, gauss = 0, bochner = 0, limit_eq = 0, ibp = 0;
};

DiffResiduals diff_identity_residuals(const SurfaceGrid& g, unsigned seed) {
  DiffResiduals out;
  // div_G P = H n
  MatrixField P(g.ns(), g.ntheta());
  for (int k = 0; k < g.ns(); ++k)
    for (int j = 0; j < g.ntheta(); ++j) P.set(k, j, g.point(k, j).P);
  VecField divP = tangential_divergence(g, P);
  VecField Hn = g.normal();
  for (int c = 0; c < 3; ++c) Hn.comp(c) *= g.H_field().v;
  out.divP = l2_norm(g, divP - Hn);

  // Gauss formula on smooth tangential X, Y
  const VecField X = random_smooth_tangent_field(g, seed + 1);
  const VecField Y = random_smooth_tangent_field(g, seed + 2);
  const MatrixField gradX = tangential_gradient_matrix(g, X);
  VecField lhs(g.ns(), g.ntheta());
  for (int k = 0; k < g.ns(); ++k)
    for (int j = 0; j < g.ntheta(); ++j) {
      const auto& p = g.point(k, j);
      const Vec3 dYX = gradX.at(k, j).transpose() * Y.at(k, j);
      const Vec3 covYX = p.P * dYX;
      const double WXY = (p.W * X.at(k, j)).dot(Y.at(k, j));
      lhs.set(k, j, dYX - covYX - WXY * p.n);
    }
  out.gauss = l2_norm(g, lhs);

  // Bochner identity: weak-form agreement with the frame definition
  // is exercised in unit tests; here use the divergence-free identity
  // 2 P div_G[D_G(v)] = lap_B v + K v on a projected-divergence-free field.
  const VecField v0 = random_smooth_tangent_field(g, seed + 3);
  const VecField v =
      project_weighted_solenoidal(g, ScalarField::constant(g.shape(), 1.0), v0, 1e-12).solenoidal;
  MatrixField D = strain_rate(g, v);
  const VecField divD = project_tangent(g, tangential_divergence(g, D));
  const VecField boch = bochner_laplacian(g, v);
  VecField resid(g.ns(), g.ntheta());
  for (int c = 0; c < 3; ++c)
    resid.comp(c) = 2.0 * divD.comp(c) - boch.comp(c) - g.K_field().v * v.comp(c);
  out.limit_eq = l2_norm(g, resid);

  // Bochner route agreement: P lap_G v + W^2 v vs covariant frame weak form;
  // here compare the two algebraic routes for lap_B on the same field:
  // lap_B v - (P lap_G v + W^2 v) == 0 algebraically, so instead check the
  // self-adjointness defect of the Bochner operator, which decays with the
  // differentiation order.
  const VecField w = random_smooth_tangent_field(g, seed + 4);
  const VecField bw = bochner_laplacian(g, w);
  const VecField bv = bochner_laplacian(g, v);
  out.bochner = std::abs(l2_inner(g, bv, w) - l2_inner(g, v, bw)) /
                std::max(1.0, l2_norm(g, v) * l2_norm(g, w));

  // integration by parts: (grad eta, X) + (eta, div X + (X.n) H) -> 0
  const ScalarField eta = random_smooth_scalar_field(g, seed + 5);
  const double ip = l2_inner(g, tangential_gradient(g, eta), X) +
                    l2_inner(g, eta, tangential_divergence(g, X));
  out.ibp = std::abs(ip) / std::max(1.0, l2_norm(g, eta) * h1_norm(g, X));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_check_identities(const Config& cfg, const std::string& outdir, const Tolerances& tol,
                         unsigned seed) {
  ensure_outdir(outdir);
  echo_config(cfg, outdir, seed);
  const int N = static_cast<int>(cfg.get_int_or("check.N", 128));
  CheckReport rep;
  rep.set_env("N", std::to_string(N));
  rep.set_env("seed", std::to_string(seed));

  for (const auto& [name, surf] : check_surfaces(cfg)) {
    SurfaceGrid grid(surf, N, N);
    pointwise_identity_checks(rep, name, grid, tol.get("alg.pointwise"));
    if (surf.kind() == Surface::Kind::Sphere) {
      double wp = 0;
      for (int k = 0; k < grid.ns(); ++k)
        for (int j = 0; j < grid.ntheta(); ++j) {
          const auto& p = grid.point(k, j);
          wp = std::max(wp, (p.W + p.P).norm());
        }
      rep.check_le(name + ".W_plus_P", wp, tol.get("alg.sphere_wp"));
    }

    if (N >= 48) {
      SurfaceGrid coarse(surf, N / 2, N / 2);
      const DiffResiduals rc = diff_identity_residuals(coarse, seed);
      const DiffResiduals rf = diff_identity_residuals(grid, seed);
      const double lg2 = std::log(2.0);
      rep.check_ge(name + ".divP_slope", std::log(rc.divP / rf.divP) / lg2,
                   tol.get("diff.slope_min"));
      rep.check_ge(name + ".gauss_slope", std::log(rc.gauss / rf.gauss) / lg2,
                   tol.get("diff.slope_min"));
      rep.check_ge(name + ".limit_eq_slope", std::log(rc.limit_eq / rf.limit_eq) / lg2,
                   tol.get("diff.slope_min"));
    } else {
      rep.skip(name + ".slopes", "grid too coarse for refinement-order checks (N < 48)");
    }

    // thin-shell exact identities
    ThinDomainSpec spec = ThinDomainSpec::make(
        grid, [](const Vec3&) { return 0.0; }, [](const Vec3& y) { return 1.0 + 0.2 * y[2]; },
        0.05);
    ShellGrid sg(spec, 8);
    const ScalarField eta = random_smooth_scalar_field(grid, seed + 11);
    const ScalarField m_ext = average_M(sg, constant_extension(sg, eta));
    rep.check_le(name + ".M_extension_identity", (m_ext.v - eta.v).abs().maxCoeff(),
                 tol.get("shell.identity"));
    const VecField vtan = random_smooth_tangent_field(grid, seed + 12);
    const VecField mtau = average_Mtau(sg, impermeable_extension(sg, vtan));
    rep.check_le(name + ".Mtau_Eeps_identity", (mtau - vtan).max_norm(),
                 tol.get("shell.identity"));
    rep.check_le(name + ".Eeps_impermeability",
                 boundary_impermeability_residual(sg, impermeable_extension(sg, vtan)),
                 tol.get("shell.impermeability"));
  }

  rep.print(std::cout);
  rep.write_csv((fs::path(outdir) / "check_identities.csv").string());
  return rep.all_pass() ? 0 : 1;
}

namespace {

struct RateSpec {
  std::string name;
  RateEstimate which;
};

const std::vector<RateSpec> kRateSpecs = {
    {"comp_n", RateEstimate::CompN},
    {"extan_div", RateEstimate::ExTanDiv},
    {"lp_etd_sol", RateEstimate::LpETDSol},
    {"adiv_tan", RateEstimate::ADivTanLp},
    {"ave_diff_dom", RateEstimate::AveDiffDom},
};

void write_rate_csv(const std::string& path, const RateStudy& study) {
  std::ofstream out(path);
  out << "epsilon,quantity,reference_norm\n";
  for (const auto& p : study.points)
    out << format_sci(p.eps) << ',' << format_sci(p.quantity) << ',' << format_sci(p.reference)
        << "\n";
  out << "# slope = " << format_sci(study.slope)
      << " spatial_audit_ok = " << (study.spatial_audit_ok ? 1 : 0)
      << " audit_change = " << format_sci(study.spatial_audit_change) << "\n";
}

}  // namespace

int cmd_rate_study(const Config& cfg, const std::string& outdir, const Tolerances& tol,
                   unsigned seed) {
  ensure_outdir(outdir);
  echo_config(cfg, outdir, seed);
  const Surface surf = surface_from_config(cfg);
  const int N = static_cast<int>(cfg.get_int_or("rate.N", 96));
  SurfaceGrid grid(surf, N, N);
  const std::vector<double> eps =
      cfg.get_double_list_or("rate.eps_list", {0.1, 0.05, 0.025, 0.0125});
  if (eps.size() < 4) throw InvalidEpsilonList("rate.eps_list needs at least 4 values");

  RateOptions opt;
  opt.seed = seed;
  opt.g0 = weight_expr(cfg.get_or("rate.g0", "0"));
  opt.g1 = weight_expr(cfg.get_or("rate.g1", "1+0.2*y3"));
  opt.spatial_audit = cfg.get_bool_or("rate.spatial_audit", true);

  const std::string which = cfg.get_or("rate.estimate", "all");
  CheckReport rep;
  rep.set_env("N", std::to_string(N));
  for (const auto& rs : kRateSpecs) {
    if (which != "all" && which != rs.name) continue;
    const RateStudy study = epsilon_rate_study(grid, rs.which, eps, opt);
    write_rate_csv((fs::path(outdir) / ("rate_" + rs.name + ".csv")).string(), study);
    if (rs.name == "adiv_tan")
      rep.check_ge("rate." + rs.name + ".slope", study.slope, tol.get("rate.adiv_tan.min_slope"));
    else
      rep.check_band("rate." + rs.name + ".slope", study.slope,
                     tol.get("rate." + rs.name + ".center"),
                     tol.get("rate." + rs.name + ".halfwidth"));
    if (opt.spatial_audit)
      rep.check_le("rate." + rs.name + ".spatial_audit", study.spatial_audit_change, 0.01,
                   "relative LHS change on 1.5x refinement");
  }
  rep.print(std::cout);
  rep.write_csv((fs::path(outdir) / "rate_report.csv").string());
  return rep.all_pass() ? 0 : 1;
}

int cmd_solve(const Config& cfg, const std::string& outdir, const Tolerances& tol,
              unsigned seed) {
  (void)tol;
  ensure_outdir(outdir);
  echo_config(cfg, outdir, seed);
  const Surface surf = surface_from_config(cfg);
  const int N = static_cast<int>(cfg.get_int_or("solver.N", 48));
  auto grid = std::make_shared<SurfaceGrid>(surf, N, N);

  LimitConfig lc;
  lc.grid = grid.get();
  lc.g = grid->sample(weight_expr(cfg.get_or("solver.g", "1")));
  lc.nu = cfg.get_double_or("solver.nu", 0.1);
  lc.gamma0 = cfg.get_double_or("solver.gamma0", 0.0);
  lc.gamma1 = cfg.get_double_or("solver.gamma1", 0.0);
  lc.dt = cfg.get_double_or("solver.dt", 1e-3);
  lc.T = cfg.get_double_or("solver.T", 1.0);
  lc.output_every = static_cast<int>(cfg.get_int_or("solver.output_every", 50));
  const std::string scheme = cfg.get_or("solver.scheme", "imex-euler");
  if (scheme == "imex-euler") lc.scheme = Scheme::ImexEuler;
  else if (scheme == "imex-bdf2") lc.scheme = Scheme::ImexBdf2;
  else throw ConfigError("unknown solver.scheme: " + scheme);

  const std::string v0kind = cfg.get_or("solver.v0", "killing");
  if (v0kind == "killing") {
    lc.v0 = grid->sample_vec([](const Vec3& y) { return Vec3(-y[1], y[0], 0.0); });
  } else if (v0kind.rfind("random", 0) == 0) {
    lc.v0 = random_smooth_tangent_field(*grid, seed);
  } else if (v0kind == "file") {
    throw ConfigError("missing initial-data file support: set solver.v0 to killing or random");
  } else {
    throw ConfigError("unknown solver.v0: " + v0kind);
  }

  LimitSolver solver(std::move(lc));
  const auto states = solver.solve();

  // diagnostics CSV
  {
    std::ofstream out(fs::path(outdir) / "diagnostics.csv");
    out << "t,energy,dissipation,div_residual,energy_residual,advection_defect";
    for (size_t i = 0; i < states.front().killing_amps.size(); ++i) out << ",killing_amp_" << i;
    out << "\n";
    for (const auto& st : states) {
      out << format_sci(st.t) << ',' << format_sci(st.energy) << ',' << format_sci(st.dissipation)
          << ',' << format_sci(st.div_residual) << ',' << format_sci(st.energy_residual) << ','
          << format_sci(st.advection_defect);
      for (double a : st.killing_amps) out << ',' << format_sci(a);
      out << "\n";
    }
  }
  // plots
  std::vector<double> ts;
  std::vector<double> energy;
  for (const auto& st : states) {
    ts.push_back(st.t);
    energy.push_back(st.energy);
  }
  svg_line_plot((fs::path(outdir) / "energy.svg").string(), "kinetic energy", "t", "E(t)", ts,
                {{"energy", energy}});
  const VecField& vfinal = states.back().v;
  svg_heatmap((fs::path(outdir) / "speed_final.svg").string(), "|v| at final time",
              Grid2((vfinal.x * vfinal.x + vfinal.y * vfinal.y + vfinal.z * vfinal.z).sqrt()));
  write_vec_field_csv((fs::path(outdir) / "v_final.csv").string(), *grid, vfinal, "v_final");
  std::cout << "[solve] " << states.size() << " states, E(0) = " << format_sci(states.front().energy)
            << ", E(T) = " << format_sci(states.back().energy) << "\n";
  return 0;
}

int cmd_decompose(const Config& cfg, const std::string& outdir, const Tolerances& tol,
                  unsigned seed) {
  ensure_outdir(outdir);
  echo_config(cfg, outdir, seed);
  const Surface surf = surface_from_config(cfg);
  const int N = static_cast<int>(cfg.get_int_or("decompose.N", 96));
  SurfaceGrid grid(surf, N, N);
  const ScalarField g = grid.sample(weight_expr(cfg.get_or("decompose.g", "1+0.3*y3")));
  const VecField v = random_smooth_tangent_field(grid, seed);

  const Decomposition tangential = project_weighted_solenoidal(grid, g, v, 1e-10);
  const VecField vgen = grid.sample_vec([&](const Vec3& y) { return Vec3(y[1], y[2], y[0]); });
  const Decomposition general = decompose_general_weighted(grid, g, vgen, 1e-10);

  // round trips are exact by construction; report the reassembly residual
  VecField recon = tangential.solenoidal + scale(g, tangential_gradient(grid, tangential.q));
  const double rt = l2_norm(grid, recon - v) / std::max(l2_norm(grid, v), 1e-300);

  CheckReport rep;
  rep.check_le("decompose.roundtrip", rt, tol.get("decompose.roundtrip"));
  rep.check_le("decompose.weak_div", weak_divergence_norm(grid, g, tangential.solenoidal),
               1e-6 * std::max(1.0, h1_norm(grid, v)));
  rep.print(std::cout);

  write_vec_field_csv((fs::path(outdir) / "v_input.csv").string(), grid, v, "v_input");
  write_vec_field_csv((fs::path(outdir) / "v_solenoidal.csv").string(), grid,
                      tangential.solenoidal, "v_g");
  write_scalar_field_csv((fs::path(outdir) / "q_potential.csv").string(), grid, tangential.q,
                         "q");
  write_vec_field_csv((fs::path(outdir) / "v_general_solenoidal.csv").string(), grid,
                      general.solenoidal, "v_sigma");
  write_scalar_field_csv((fs::path(outdir) / "q_general.csv").string(), grid, general.q, "q_gen");

  nlohmann::json j;
  j["tangential"] = {{"iterations", tangential.iterations},
                     {"orth_residual", tangential.orth_residual},
                     {"roundtrip", rt}};
  j["general"] = {{"iterations", general.iterations},
                  {"orth_residual", general.orth_residual}};
  j["seed"] = seed;
  std::ofstream(fs::path(outdir) / "decompose_report.json") << j.dump(2) << "\n";
  return rep.all_pass() ? 0 : 1;
}

int cmd_killing_scan(const Config& cfg, const std::string& outdir, const Tolerances& tol,
                     unsigned seed) {
  (void)tol;
  ensure_outdir(outdir);
  echo_config(cfg, outdir, seed);
  const Surface surf = surface_from_config(cfg);
  const int N = static_cast<int>(cfg.get_int_or("scan.N", 96));
  SurfaceGrid grid(surf, N, N);
  ThinDomainSpec spec = ThinDomainSpec::make(grid, weight_expr(cfg.get_or("scan.g0", "0")),
                                             weight_expr(cfg.get_or("scan.g1", "1")),
                                             cfg.get_double_or("scan.eps", 0.05));
  const RigidScanResult scan = rigid_field_scan(grid, &spec);
  std::ofstream out(fs::path(outdir) / "killing_scan.csv");
  out << "space,dim,eig_min,eig_max,max_residual\n";
  out << "R," << scan.dim_R << ',' << format_sci(scan.eig_R.minCoeff()) << ','
      << format_sci(scan.eig_R.maxCoeff()) << ',' << format_sci(scan.max_residual_R) << "\n";
  out << "R0_and_R1," << scan.dim_R01 << ',' << format_sci(scan.eig_R01.minCoeff()) << ','
      << format_sci(scan.eig_R01.maxCoeff()) << ",\n";
  out << "R_g," << scan.dim_Rg << ',' << format_sci(scan.eig_Rg.minCoeff()) << ','
      << format_sci(scan.eig_Rg.maxCoeff()) << ",\n";
  std::cout << "[killing-scan] dim R = " << scan.dim_R << ", dim R0^R1 = " << scan.dim_R01
            << ", dim R_g = " << scan.dim_Rg << "\n";
  for (size_t i = 0; i < scan.basis_R.size(); ++i) {
    const KillingCheckResult kc = killing_eigen_check(grid, scan.basis_R[i]);
    std::cout << "  basis[" << i << "]: collinearity residual "
              << format_sci(kc.max_collinearity_residual) << ", axis residual "
              << format_sci(kc.max_axis_residual) << "\n";
  }
  return 0;
}

int cmd_korn(const Config& cfg, const std::string& outdir, const Tolerances& tol, unsigned seed) {
  (void)tol;
  ensure_outdir(outdir);
  echo_config(cfg, outdir, seed);
  const Surface surf = surface_from_config(cfg);
  const int N = static_cast<int>(cfg.get_int_or("korn.N", 64));
  SurfaceGrid grid(surf, N, N);
  const int ms = static_cast<int>(cfg.get_int_or("korn.ms", 6));
  const int mtheta = static_cast<int>(cfg.get_int_or("korn.mtheta", 6));
  const KornEstimate est = korn_constant_estimate(grid, ms, mtheta);
  std::ofstream out(fs::path(outdir) / "korn.csv");
  out << "c_est,lambda_min,trial_dim\n";
  out << format_sci(est.c_est) << ',' << format_sci(est.lambda_min) << ',' << est.trial_dim
      << "\n";
  std::cout << "[korn] empirical lower bound c_est = " << format_sci(est.c_est)
            << " over a trial space of dimension " << est.trial_dim << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

int run_cli(int argc, char** argv) {
  if (const char* threads = std::getenv("THINSHELL_THREADS")) {
    const int n = std::atoi(threads);
    if (n > 0) Eigen::setNbThreads(n);
  }

  CLI::App app{"thinshell: verification CLI for surface thin-film limit numerics"};
  app.require_subcommand(1);

  std::string config_path, outdir = "out", tol_path;
  unsigned long long seed = 7;

  struct Sub {
    std::string name;
    int (*fn)(const Config&, const std::string&, const Tolerances&, unsigned);
  };
  const std::vector<Sub> subs = {
      {"check-identities", cmd_check_identities}, {"rate-study", cmd_rate_study},
      {"solve", cmd_solve},                       {"decompose", cmd_decompose},
      {"killing-scan", cmd_killing_scan},         {"korn", cmd_korn},
  };
  std::map<std::string, CLI::App*> apps;
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name);
    sub->add_option("--config", config_path, "plain-text section.key = value config file");
    sub->add_option("--out", outdir, "output directory");
    sub->add_option("--tolerances", tol_path, "threshold overrides file");
    sub->add_option("--seed", seed, "RNG seed");
    apps[s.name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    Config cfg;
    if (!config_path.empty()) cfg = Config::parse_file(config_path);
    Tolerances tol;
    if (!tol_path.empty()) tol.load_overrides(tol_path);
    for (const auto& s : subs)
      if (apps[s.name]->parsed()) return s.fn(cfg, outdir, tol, static_cast<unsigned>(seed));
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace thinshell
