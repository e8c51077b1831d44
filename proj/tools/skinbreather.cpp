#include "skinbreather/csv.hpp"
#include "skinbreather/dynamics.hpp"
#include "skinbreather/manybody.hpp"
#include "skinbreather/stability.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>
#include <boost/version.hpp>
#include <mpfr.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace skinbreather;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr const char* kPrecisionEnv = "SKINBREATHER_PRECISION_DIGITS";

// Bad user input; reported as a usage error.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int env_precision(int fallback) {
  const char* raw = std::getenv(kPrecisionEnv);
  if (!raw || !*raw) return fallback;
  char* end = nullptr;
  const long v = std::strtol(raw, &end, 10);
  if (*end != '\0' || v < 15 || v > 10000)
    throw UsageError(std::string(kPrecisionEnv) + " must be an integer in [15, 10000], got '" + raw + "'");
  return static_cast<int>(v);
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

json manifest(const std::string& command, json parameters, const std::string& output) {
  json m;
  m["command"] = command;
  m["parameters"] = std::move(parameters);
  m["versions"] = {{"skinbreather", kVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"boost", BOOST_LIB_VERSION},
                   {"mpfr", MPFR_VERSION_STRING}};
  m["timestamp"] = utc_now();
  m["outputs"] = json::array({output});
  return m;
}

json lattice_json(const LatticeParams& p) {
  return {{"sites", p.sites}, {"hop_left", p.hop_left}, {"hop_right", p.hop_right},
          {"boundary", to_string(p.boundary)}, {"loss", p.loss}};
}

LatticeParams lattice_from_json(const json& j) {
  LatticeParams p;
  p.sites = j.at("sites").get<int>();
  p.hop_left = j.at("hop_left").get<double>();
  p.hop_right = j.at("hop_right").get<double>();
  p.boundary = boundary_from_string(j.at("boundary").get<std::string>());
  p.loss = j.value("loss", 0.0);
  return p;
}

json solver_json(const SolverConfig& c) {
  return {{"newton_tol", c.newton_tol}, {"max_iter", c.max_iter},         {"n_seeds", c.n_seeds},
          {"dedup_tol", c.dedup_tol},   {"precision_digits", c.precision_digits}, {"rng_seed", c.rng_seed}};
}

std::vector<double> linear_grid(double lo, double hi, int steps) {
  if (steps < 0) throw UsageError("--steps must be >= 0");
  if (steps > 0 && !(hi > lo)) throw UsageError("grid maximum must exceed the minimum");
  std::vector<double> g;
  for (int i = 0; i <= steps; ++i) g.push_back(steps == 0 ? lo : lo + (hi - lo) * i / steps);
  return g;
}

std::vector<std::string> spectrum_header(int sites) {
  std::vector<std::string> h{"gamma", "energy", "pattern", "m_label", "stable", "max_re_lambda", "branch"};
  for (int n = 1; n <= sites; ++n) h.push_back("psi_" + std::to_string(n));
  return h;
}

std::vector<std::string> spectrum_row(const AnnotatedSample& s, int label, std::size_t branch) {
  std::vector<std::string> row{format_scalar(s.state.gamma), format_scalar(s.state.energy),
                               pattern_to_string(s.state.pattern), std::to_string(label)};
  if (s.report) {
    row.push_back(s.report->stable ? "1" : "0");
    row.push_back(format_scalar(s.report->max_real));
  } else {
    row.push_back("");
    row.push_back("");
  }
  row.push_back(std::to_string(branch));
  for (Eigen::Index n = 0; n < s.state.psi.size(); ++n) row.push_back(format_scalar(s.state.psi(n)));
  return row;
}

// ---- spectrum -------------------------------------------------------------

struct SpectrumArgs {
  int sites = 4;
  double gamma_min = 0.0, gamma_max = 14.0;
  int steps = 280;
  std::string boundary = "obc";
  double jl = 1.0, jr_ratio = 0.0;
  int precision = 0;
  double tau = 1e-8;
  int seeds = 24;
  std::string out;
};

int cmd_spectrum(const SpectrumArgs& a) {
  LatticeParams p{a.sites, a.jl, a.jr_ratio * a.jl, boundary_from_string(a.boundary), 0.0};
  try {
    require_real_spectrum(p);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  SolverConfig cfg;
  cfg.n_seeds = a.seeds;
  StabilityOptions sopt;
  sopt.tau = a.tau;
  sopt.precision_digits = a.precision > 0 ? a.precision : env_precision(sopt.precision_digits);
  const auto grid = linear_grid(a.gamma_min, a.gamma_max, a.steps);

  const auto sweep = sweep_spectrum(p, grid, cfg);
  const auto annotated = stability_map(sweep.branches, p, sopt);

  struct Keyed {
    double gamma;
    std::size_t branch;
    std::vector<std::string> row;
  };
  std::vector<Keyed> rows;
  int unclassified = 0;
  for (std::size_t b = 0; b < annotated.size(); ++b)
    for (const auto& s : annotated[b].samples) {
      if (!s.report && s.state.gamma != 0.0) ++unclassified;
      rows.push_back({s.state.gamma, b, spectrum_row(s, annotated[b].label, b)});
    }
  std::stable_sort(rows.begin(), rows.end(), [](const Keyed& x, const Keyed& y) {
    return x.gamma != y.gamma ? x.gamma < y.gamma : x.branch < y.branch;
  });

  CsvTable t;
  t.manifest = manifest("spectrum",
                        {{"lattice", lattice_json(p)},
                         {"gamma_min", a.gamma_min},
                         {"gamma_max", a.gamma_max},
                         {"steps", a.steps},
                         {"solver", solver_json(cfg)},
                         {"stability", {{"tau", sopt.tau}, {"precision_digits", sopt.precision_digits}}}},
                        a.out);
  t.header = spectrum_header(p.sites);
  for (auto& r : rows) t.rows.push_back(std::move(r.row));
  write_csv_file(a.out, t);

  int failed = 0;
  for (const auto& pt : sweep.points) {
    failed += pt.failed_starts;
    for (const auto& note : pt.notes) std::cerr << "Gamma=" << format_scalar(pt.gamma) << ": " << note << "\n";
  }
  std::cerr << "spectrum: " << t.rows.size() << " rows, " << sweep.branches.size() << " branches, " << failed
            << " non-converged starts, " << unclassified << " unclassified samples -> " << a.out << "\n";
  return t.rows.empty() ? 1 : 0;
}

// ---- stability ------------------------------------------------------------

struct StabilityArgs {
  std::string in, out;
  double tau = 1e-8;
  int precision = 0;
};

int cmd_stability(const StabilityArgs& a) {
  CsvTable t = read_csv_file(a.in);
  LatticeParams p;
  try {
    p = lattice_from_json(t.manifest.at("parameters").at("lattice"));
    p.validate();
  } catch (const std::exception& e) {
    throw UsageError("'" + a.in + "' does not carry a spectrum manifest: " + e.what());
  }
  StabilityOptions sopt;
  sopt.tau = a.tau;
  sopt.precision_digits = a.precision > 0 ? a.precision : env_precision(sopt.precision_digits);

  const std::size_t c_gamma = t.column("gamma"), c_energy = t.column("energy"), c_stable = t.column("stable"),
                    c_re = t.column("max_re_lambda");
  std::vector<std::size_t> c_psi;
  for (int n = 1; n <= p.sites; ++n) c_psi.push_back(t.column("psi_" + std::to_string(n)));

  int failures = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    auto& row = t.rows[i];
    Eigen::VectorXd psi(p.sites);
    for (int n = 0; n < p.sites; ++n) psi(n) = std::stod(row[c_psi[n]]);
    const auto state = make_state<double>(psi, std::stod(row[c_energy]), std::stod(row[c_gamma]));
    if (state.gamma == 0.0) {
      row[c_stable] = row[c_re] = "";
      continue;
    }
    try {
      const auto r = classify(state, p, sopt);
      row[c_stable] = r.stable ? "1" : "0";
      row[c_re] = format_scalar(r.max_real);
    } catch (const std::exception& e) {
      row[c_stable] = row[c_re] = "";
      ++failures;
      std::cerr << "row " << i + 1 << ": " << e.what() << "\n";
    }
  }
  json params = t.manifest.at("parameters");
  params["input"] = a.in;
  params["stability"] = {{"tau", sopt.tau}, {"precision_digits", sopt.precision_digits}};
  t.manifest = manifest("stability", params, a.out);
  write_csv_file(a.out, t);
  std::cerr << "stability: " << t.rows.size() << " rows, " << failures << " failed -> " << a.out << "\n";
  return failures == 0 ? 0 : 1;
}

// ---- scaling --------------------------------------------------------------

struct ScalingArgs {
  int sites = 4;
  std::vector<int> branches;
  std::vector<double> window{1e-3, 1e-1};
  int points = 10;
  int precision = 0;
  double decay_gamma = 0.1;
  std::string out;
};

int cmd_scaling(const ScalingArgs& a) {
  if (a.sites < 1) throw UsageError("--sites must be >= 1");
  if (a.window.size() != 2 || !(a.window[0] > 0.0) || !(a.window[1] > a.window[0]))
    throw UsageError("--gamma-window needs two values 0 < lo < hi");
  if (a.points < 3) throw UsageError("--points must be >= 3");
  if (!(a.decay_gamma > 0.0 && a.decay_gamma < 1.0)) throw UsageError("--decay-gamma must lie in (0, 1)");
  std::vector<int> ms = a.branches;
  if (ms.empty())
    for (int m = 1; m <= a.sites; ++m) ms.push_back(m);
  for (int m : ms)
    if (m < 1 || m > a.sites) throw UsageError("--m must satisfy 1 <= m <= sites");
  SolverConfig cfg;
  cfg.precision_digits = a.precision > 0 ? a.precision : env_precision(60);
  if (cfg.precision_digits < 15) throw UsageError("--precision-digits must be >= 15");

  const json params = {{"sites", a.sites},        {"m", ms},
                       {"gamma_window", a.window}, {"points", a.points},
                       {"decay_gamma", a.decay_gamma}, {"solver", solver_json(cfg)}};
  CsvTable fits, energies, decay;
  fits.header = {"m", "exponent", "expected", "intercept", "r_squared", "gamma_lo", "gamma_hi"};
  energies.header = {"m", "gamma", "energy"};
  decay.header = {"m", "n", "y"};
  int failed = 0;
  for (int m : ms) {
    try {
      const auto s = scan_branch_scaling(a.sites, m, a.window[0], a.window[1], a.points, cfg);
      fits.rows.push_back({std::to_string(m), format_scalar(s.fit.exponent), std::to_string(alpha_exponent(m)),
                           format_scalar(s.fit.intercept), format_scalar(s.fit.r_squared),
                           format_scalar(s.fit.gamma_range.first), format_scalar(s.fit.gamma_range.second)});
      for (std::size_t i = 0; i < s.gammas.size(); ++i)
        energies.rows.push_back({std::to_string(m), format_scalar(s.gammas[i]), s.energy_text[i]});
      for (const auto& d : sdb_decay_coordinates(a.sites, m, a.decay_gamma, cfg))
        decay.rows.push_back({std::to_string(m), std::to_string(d.site), format_scalar(d.y)});
      std::cout << "m=" << m << " exponent " << format_scalar(s.fit.exponent) << " (expected " << alpha_exponent(m)
                << "), r^2 " << format_scalar(s.fit.r_squared) << "\n";
    } catch (const std::exception& e) {
      ++failed;
      std::cerr << "m=" << m << ": " << e.what() << "\n";
    }
  }
  const std::string f_fits = a.out + "_fits.csv", f_energies = a.out + "_energies.csv", f_decay = a.out + "_decay.csv";
  fits.manifest = manifest("scaling", params, f_fits);
  energies.manifest = manifest("scaling", params, f_energies);
  decay.manifest = manifest("scaling", params, f_decay);
  write_csv_file(f_fits, fits);
  write_csv_file(f_energies, energies);
  write_csv_file(f_decay, decay);
  return failed == 0 ? 0 : 1;
}

// ---- adiabatic ------------------------------------------------------------

struct AdiabaticArgs {
  int sites = 4, m = 2;
  double gamma0 = 12.0;
  std::vector<double> speeds;
  double t_end = std::numeric_limits<double>::quiet_NaN();
  int samples = 400;
  double reltol = 1e-9;
  std::string out;
};

int cmd_adiabatic(const AdiabaticArgs& a) {
  if (a.sites < 1 || a.m < 1 || a.m > a.sites) throw UsageError("--m must satisfy 1 <= m <= sites");
  if (!(a.gamma0 > 0.0)) throw UsageError("--gamma0 must be positive");
  if (a.samples < 2) throw UsageError("--samples must be >= 2");
  for (double v : a.speeds)
    if (v < 0.0 || (v == 0.0 && std::isnan(a.t_end))) throw UsageError("--speed must be > 0, or 0 with --t-end");
  const LatticeParams p = LatticeParams::unidirectional(a.sites);
  SolverConfig cfg;
  IntegratorOptions opts;
  opts.samples = a.samples;
  opts.reltol = a.reltol;
  int failed = 0;
  for (double v : a.speeds) {
    const std::string path = a.out + "_v" + format_scalar(v) + ".csv";
    try {
      const auto rec = adiabatic_experiment(a.m, a.gamma0, v, p, cfg, opts, a.t_end);
      CsvTable t;
      t.header = {"t", "gamma_bare", "intensity", "gamma_eff", "fidelity", "branch_jump"};
      double fmin = 1.0;
      for (std::size_t k = 0; k < rec.fidelity.size(); ++k) {
        t.rows.push_back({format_scalar(rec.times[k]), format_scalar(rec.gamma_bare[k]), format_scalar(rec.intensity[k]),
                          format_scalar(rec.gamma_eff[k]), format_scalar(rec.fidelity[k]),
                          rec.branch_jump[k] ? "1" : "0"});
        fmin = std::min(fmin, rec.fidelity[k]);
      }
      t.manifest = manifest("adiabatic",
                            {{"lattice", lattice_json(p)},
                             {"m", a.m},
                             {"gamma0", a.gamma0},
                             {"speed", v},
                             {"t_end", rec.times.empty() ? 0.0 : rec.times.back()},
                             {"samples", a.samples},
                             {"reltol", a.reltol},
                             {"truncated", rec.truncated},
                             {"truncation_reason", rec.truncation_reason}},
                            path);
      write_csv_file(path, t);
      std::cout << "v=" << format_scalar(v) << " min fidelity " << format_scalar(fmin) << " over " << t.rows.size()
                << " samples -> " << path << "\n";
      if (rec.truncated) std::cerr << "v=" << format_scalar(v) << ": truncated, " << rec.truncation_reason << "\n";
      if (t.rows.empty()) ++failed;
    } catch (const std::exception& e) {
      ++failed;
      std::cerr << "v=" << format_scalar(v) << ": " << e.what() << "\n";
    }
  }
  return failed == 0 ? 0 : 1;
}

// ---- manybody -------------------------------------------------------------

struct ManyBodyArgs {
  int sites = 4, bosons = 4;
  double u_min = 0.0, u_max = 5.0;
  int steps = 50;
  double jl = 1.0;
  std::string out;
};

int cmd_manybody(const ManyBodyArgs& a) {
  if (a.sites < 1 || a.bosons < 0) throw UsageError("--sites must be >= 1 and --bosons >= 0");
  const auto grid = linear_grid(a.u_min, a.u_max, a.steps);
  const FockBasis basis = build_basis(a.sites, a.bosons);
  const auto results = spectrum(basis, a.jl, grid);
  CsvTable t;
  t.header = {"U", "eigenvalue_index", "re_E", "im_E"};
  for (int i = 1; i <= a.sites; ++i) t.header.push_back("n" + std::to_string(i));
  t.header.push_back("defective");
  int failed = 0;
  for (const auto& r : results) {
    if (!r.error.empty()) {
      ++failed;
      std::cerr << r.error << "\n";
      continue;
    }
    for (std::size_t k = 0; k < r.eigenvalues.size(); ++k) {
      std::vector<std::string> row{format_scalar(r.interaction), std::to_string(k + 1),
                                   format_scalar(r.eigenvalues[k].real()), format_scalar(r.eigenvalues[k].imag())};
      for (int i = 0; i < a.sites; ++i)
        row.push_back(r.defective[k] ? "" : format_scalar(r.distributions(static_cast<Eigen::Index>(k), i)));
      row.push_back(r.defective[k] ? "1" : "0");
      t.rows.push_back(std::move(row));
    }
  }
  t.manifest = manifest("manybody",
                        {{"sites", a.sites},
                         {"bosons", a.bosons},
                         {"hop_left", a.jl},
                         {"u_min", a.u_min},
                         {"u_max", a.u_max},
                         {"steps", a.steps},
                         {"dimension", basis.size()}},
                        a.out);
  write_csv_file(a.out, t);
  std::cerr << "manybody: dimension " << basis.size() << ", " << t.rows.size() << " rows -> " << a.out << "\n";
  int positive = 0;
  for (double u : grid) positive += u > 0.0;
  if (positive >= 3) {
    const auto rep = scaling_absence_check(a.sites, a.bosons, a.jl, grid);
    for (const auto& b : rep.bands)
      std::cout << "band " << b.band << " exponent " << format_scalar(b.fit.exponent) << "\n";
    std::cout << (rep.all_linear ? "all bands linear in U" : "some band deviates from linear scaling") << "\n";
  }
  return failed == 0 && !t.rows.empty() ? 0 : 1;
}

// ---- bifurcation ----------------------------------------------------------

int cmd_bifurcation(const std::string& out) {
  const double gc = bifurcation_gamma_c();
  std::cout << format_scalar(gc) << "\n";
  if (!out.empty()) {
    CsvTable t;
    t.header = {"gamma_c", "discriminant"};
    t.rows.push_back({format_scalar(gc), format_scalar(site2_discriminant(gc))});
    t.manifest = manifest("bifurcation", json::object(), out);
    write_csv_file(out, t);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skin discrete breathers of the nonreciprocal Kerr lattice"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  SpectrumArgs sa;
  auto* spectrum_cmd = app.add_subcommand("spectrum", "Real stationary solutions on a Gamma grid, with stability");
  spectrum_cmd->add_option("--sites", sa.sites, "Number of sites L")->check(CLI::PositiveNumber);
  spectrum_cmd->add_option("--gamma-min", sa.gamma_min);
  spectrum_cmd->add_option("--gamma-max", sa.gamma_max);
  spectrum_cmd->add_option("--steps", sa.steps, "Grid intervals (steps + 1 points)");
  spectrum_cmd->add_option("--boundary", sa.boundary)->check(CLI::IsMember({"obc", "pbc"}));
  spectrum_cmd->add_option("--jl", sa.jl, "Left hopping J_L");
  spectrum_cmd->add_option("--jr-ratio", sa.jr_ratio, "J_R / J_L");
  spectrum_cmd->add_option("--precision", sa.precision, "Digits for the stability eigenvalues");
  spectrum_cmd->add_option("--tau", sa.tau, "Stability threshold on max Re lambda");
  spectrum_cmd->add_option("--seeds", sa.seeds, "Random starts per Gamma");
  spectrum_cmd->add_option("--out", sa.out)->required();

  StabilityArgs sta;
  auto* stability_cmd = app.add_subcommand("stability", "Classify the states of a stored spectrum file");
  stability_cmd->add_option("--in", sta.in)->required()->check(CLI::ExistingFile);
  stability_cmd->add_option("--out", sta.out)->required();
  stability_cmd->add_option("--tau", sta.tau);
  stability_cmd->add_option("--precision", sta.precision);

  ScalingArgs sca;
  auto* scaling_cmd = app.add_subcommand("scaling", "Weak-coupling power laws and decay coordinates");
  scaling_cmd->add_option("--sites", sca.sites);
  scaling_cmd->add_option("--m", sca.branches, "Branch index (repeatable, default all)");
  scaling_cmd->add_option("--gamma-window", sca.window, "lo hi")->expected(2);
  scaling_cmd->add_option("--points", sca.points);
  scaling_cmd->add_option("--precision-digits", sca.precision);
  scaling_cmd->add_option("--decay-gamma", sca.decay_gamma);
  scaling_cmd->add_option("--out", sca.out, "Output prefix")->required();

  AdiabaticArgs ada;
  auto* adiabatic_cmd = app.add_subcommand("adiabatic", "Ramp gamma down from an SDB and track the fidelity");
  adiabatic_cmd->add_option("--sites", ada.sites);
  adiabatic_cmd->add_option("--m", ada.m);
  adiabatic_cmd->add_option("--gamma0", ada.gamma0);
  adiabatic_cmd->add_option("--speed", ada.speeds, "Ramp speed v (repeatable)")->required();
  adiabatic_cmd->add_option("--t-end", ada.t_end);
  adiabatic_cmd->add_option("--samples", ada.samples);
  adiabatic_cmd->add_option("--reltol", ada.reltol);
  adiabatic_cmd->add_option("--out", ada.out, "Output prefix")->required();

  ManyBodyArgs mba;
  auto* manybody_cmd = app.add_subcommand("manybody", "Exact spectrum of the unidirectional Bose-Hubbard chain");
  manybody_cmd->add_option("--sites", mba.sites);
  manybody_cmd->add_option("--bosons", mba.bosons);
  manybody_cmd->add_option("--u-min", mba.u_min);
  manybody_cmd->add_option("--u-max", mba.u_max);
  manybody_cmd->add_option("--steps", mba.steps);
  manybody_cmd->add_option("--jl", mba.jl);
  manybody_cmd->add_option("--out", mba.out)->required();

  std::string bif_out;
  auto* bifurcation_cmd = app.add_subcommand("bifurcation", "Print the site-2 fold point Gamma_c");
  bifurcation_cmd->add_option("--out", bif_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*spectrum_cmd) return cmd_spectrum(sa);
    if (*stability_cmd) return cmd_stability(sta);
    if (*scaling_cmd) return cmd_scaling(sca);
    if (*adiabatic_cmd) return cmd_adiabatic(ada);
    if (*manybody_cmd) return cmd_manybody(mba);
    if (*bifurcation_cmd) return cmd_bifurcation(bif_out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
