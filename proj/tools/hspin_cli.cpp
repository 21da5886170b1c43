// Command-line front end: every computation as a subcommand with
// reproducible, file-based inputs and outputs.
//
// Global flags: --output, --config, --seed, --threads.  Flag values override
// config-file values; the fully resolved configuration is echoed into
// <output>.manifest.json, and feeding that manifest back through --config
// reproduces the run.  Exit codes: 0 success (blow-up is a result, not an
// error), 2 usage error, 3 numeric failure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Dense>

#include "hspin/csvio.hpp"
#include "hspin/errors.hpp"
#include "hspin/lattice.hpp"
#include "hspin/mc.hpp"
#include "hspin/operators.hpp"
#include "hspin/rgflow.hpp"
#include "hspin/spectral.hpp"
#include "hspin/spherical.hpp"

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw UsageError(message);
}

// Possibly-infinite reals are stored as strings in JSON (JSON has no inf).
json encode_real(double x) {
  if (std::isfinite(x)) return json(x);
  return json(x > 0 ? "inf" : "-inf");
}

double decode_real(const json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    throw UsageError("cannot parse '" + s + "' as a real number");
  }
  return j.get<double>();
}

// Config-file fallback: fills values the user did not pass as flags.
class ConfigLayer {
 public:
  ConfigLayer() : obj_(json::object()) {}
  explicit ConfigLayer(json obj) : obj_(std::move(obj)) {}

  template <typename T>
  void fallback(const CLI::Option* opt, const std::string& key,
                T& target) const {
    if (opt != nullptr && opt->count() > 0) return;
    if (!obj_.contains(key)) return;
    target = obj_.at(key).get<T>();
  }

  void fallback_real(const CLI::Option* opt, const std::string& key,
                     double& target) const {
    if (opt != nullptr && opt->count() > 0) return;
    if (!obj_.contains(key)) return;
    target = decode_real(obj_.at(key));
  }

 private:
  json obj_;
};

ConfigLayer load_config(const std::string& path, const std::string& subcommand) {
  if (path.empty()) return ConfigLayer{};
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open config file '" + path + "'");
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw UsageError("config file '" + path + "' is not valid JSON: " +
                     e.what());
  }
  if (j.contains("subcommand") &&
      j.at("subcommand").get<std::string>() != subcommand) {
    throw UsageError("config file '" + path + "' belongs to subcommand '" +
                     j.at("subcommand").get<std::string>() + "'");
  }
  json params = j.contains("params") ? j.at("params") : j;
  if (!params.is_object()) {
    throw UsageError("config file '" + path + "' must hold a JSON object");
  }
  return ConfigLayer{std::move(params)};
}

void write_manifest(const std::string& output, const std::string& subcommand,
                    const json& params) {
  json manifest;
  manifest["subcommand"] = subcommand;
  manifest["params"] = params;
  const std::string path = output + ".manifest.json";
  std::ofstream os(path);
  if (!os) throw hspin::NumericError("cannot write manifest '" + path + "'");
  os << manifest.dump(2) << "\n";
}

std::ofstream open_output(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw hspin::NumericError("cannot write output file '" + path + "'");
  return os;
}

struct GlobalArgs {
  std::string output;
  std::string config_path;
  std::uint64_t seed = 1;
  int threads = 1;

  CLI::Option* output_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;

  void resolve(const ConfigLayer& cfg, const std::string& subcommand) {
    cfg.fallback(output_opt, "output", output);
    cfg.fallback(seed_opt, "seed", seed);
    cfg.fallback(threads_opt, "threads", threads);
    if (output.empty()) output = subcommand + ".csv";
    require(threads >= 1, "--threads must be >= 1");
  }

  void echo(json& params) const {
    params["output"] = output;
    params["seed"] = seed;
    params["threads"] = threads;
  }
};

// ---------------------------------------------------------------------------
// spectrum

struct SpectrumArgs {
  int L = 0, d = 0, K = 0;
  bool dense_check = false;
  CLI::Option *L_opt = nullptr, *d_opt = nullptr, *K_opt = nullptr,
              *dense_opt = nullptr;
};

void run_spectrum(const SpectrumArgs& args, GlobalArgs& globals,
                  const ConfigLayer& cfg) {
  SpectrumArgs a = args;
  cfg.fallback(a.L_opt, "L", a.L);
  cfg.fallback(a.d_opt, "d", a.d);
  cfg.fallback(a.K_opt, "K", a.K);
  cfg.fallback(a.dense_opt, "dense-check", a.dense_check);
  require(a.L > 0, "--L is required");
  require(a.d > 0, "--d is required");
  require(a.K > 0, "--K is required");

  const hspin::LatticeShape shape = hspin::LatticeShape::make(a.L, a.d, a.K);

  std::vector<double> deviation;
  if (a.dense_check) {
    if (shape.n > 1024) {
      throw hspin::CapacityError("--dense-check supports n <= 1024, got n = " +
                                 std::to_string(shape.n));
    }
    const Eigen::MatrixXd dense =
        hspin::HierOperator::laplacian(shape).dense();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense);
    const Eigen::VectorXd eigs = solver.eigenvalues();  // ascending
    deviation.assign(a.K + 1, 0.0);
    std::int64_t pos = 0;  // ascending walk: k = K down to 0
    for (int k = a.K; k >= 0; --k) {
      const double lambda = hspin::eigenvalue(k, shape);
      const std::int64_t mult = hspin::multiplicity(k, shape);
      double dev = 0.0;
      for (std::int64_t i = 0; i < mult; ++i, ++pos) {
        dev = std::max(dev, std::abs(eigs[pos] - lambda));
      }
      deviation[k] = dev;
    }
  }

  std::ofstream os = open_output(globals.output);
  hspin::CsvWriter csv(os);
  std::vector<std::string> head = {"k", "lambda", "multiplicity"};
  if (a.dense_check) head.push_back("dense_deviation");
  csv.header(head);
  for (int k = 0; k <= a.K; ++k) {
    std::vector<std::string> row = {
        hspin::CsvWriter::cell(k),
        hspin::CsvWriter::cell(hspin::eigenvalue(k, shape)),
        hspin::CsvWriter::cell(hspin::multiplicity(k, shape))};
    if (a.dense_check) row.push_back(hspin::CsvWriter::cell(deviation[k]));
    csv.row(row);
  }

  json params;
  params["L"] = a.L;
  params["d"] = a.d;
  params["K"] = a.K;
  params["dense-check"] = a.dense_check;
  globals.echo(params);
  write_manifest(globals.output, "spectrum", params);
}

// ---------------------------------------------------------------------------
// spherical

struct SphericalArgs {
  std::string model = "continuum";
  double d = 0.0;
  double L = 0.0;
  int K = 0;
  double C = kInf;
  double lambda_scale = 1.0;
  std::vector<double> beta_grid;
  bool d4_closed_form = false;
  CLI::Option *model_opt = nullptr, *d_opt = nullptr, *L_opt = nullptr,
              *K_opt = nullptr, *C_opt = nullptr, *scale_opt = nullptr,
              *grid_opt = nullptr, *d4_opt = nullptr;
};

hspin::SpectralModel build_model(const SphericalArgs& a) {
  if (a.model == "finite") {
    require(a.L > 0 && a.d > 0 && a.K > 0,
            "finite model needs --L, --d, --K");
    const int L = static_cast<int>(std::lround(a.L));
    const int d = static_cast<int>(std::lround(a.d));
    require(std::abs(a.L - L) < 1e-9 && std::abs(a.d - d) < 1e-9,
            "finite model needs integer --L and --d");
    return hspin::SpectralModel::finite(L, d, a.K);
  }
  if (a.model == "infiniteK") {
    require(a.L > 1 && a.d > 0, "infiniteK model needs --L > 1 and --d");
    const int d = static_cast<int>(std::lround(a.d));
    require(std::abs(a.d - d) < 1e-9, "infiniteK model needs integer --d");
    return hspin::SpectralModel::infinite_K(a.L, d, a.lambda_scale);
  }
  if (a.model == "continuum") {
    require(a.d > 0, "continuum model needs --d");
    return hspin::SpectralModel::continuum(a.d, a.C);
  }
  throw UsageError("--model must be finite, infiniteK, or continuum");
}

void run_spherical(const SphericalArgs& args, GlobalArgs& globals,
                   const ConfigLayer& cfg) {
  SphericalArgs a = args;
  cfg.fallback(a.model_opt, "model", a.model);
  cfg.fallback(a.d_opt, "d", a.d);
  cfg.fallback(a.L_opt, "L", a.L);
  cfg.fallback(a.K_opt, "K", a.K);
  cfg.fallback_real(a.C_opt, "C", a.C);
  cfg.fallback(a.scale_opt, "lambda-scale", a.lambda_scale);
  cfg.fallback(a.grid_opt, "beta-grid", a.beta_grid);
  cfg.fallback(a.d4_opt, "d4-closed-form", a.d4_closed_form);
  require(!a.beta_grid.empty(), "--beta-grid is required");
  for (double beta : a.beta_grid) {
    require(beta > 0.0, "--beta-grid values must be > 0");
  }
  if (a.d4_closed_form) {
    require(a.model == "continuum" && std::abs(a.d - 4.0) < 1e-12 &&
                std::isinf(a.C),
            "--d4-closed-form needs --model continuum --d 4 with C = inf");
  }

  const hspin::SpectralModel model = build_model(a);
  std::vector<double> grid = a.beta_grid;
  std::sort(grid.begin(), grid.end());

  // The critical temperature decides the condensed branch; when it diverges
  // (d <= 2, or finite continuum cutoff) there is no condensation at any
  // temperature, and the rows carry that status.
  bool betac_divergent = false;
  double betac = kInf;
  std::string betac_note;
  try {
    betac = hspin::beta_c(model);
  } catch (const hspin::DivergenceError& e) {
    betac_divergent = true;
    betac_note = e.what();
  }

  std::ofstream os = open_output(globals.output);
  hspin::CsvWriter csv(os);
  std::vector<std::string> head = {"beta",        "mu",     "rho0",
                                   "free_energy", "clt_variance", "status"};
  if (a.d4_closed_form) {
    head.push_back("mu_d4");
    head.push_back("d4_deviation");
  }
  csv.header(head);

  for (double beta : grid) {
    double mu = kNaN, rho0 = kNaN, f = kNaN, clt = kNaN;
    std::string status = betac_divergent ? "betac-divergent" : "ok";
    try {
      const hspin::SphericalSolution sol = hspin::solve_mu(beta, model);
      mu = sol.mu;
      rho0 = sol.rho0;
      f = sol.free_energy;
      clt = sol.clt_variance;
    } catch (const hspin::DivergenceError&) {
      status = "divergent";
    } catch (const hspin::NumericError&) {
      status = "failed";
    }
    std::vector<std::string> row = {
        hspin::CsvWriter::cell(beta), hspin::CsvWriter::cell(mu),
        hspin::CsvWriter::cell(rho0), hspin::CsvWriter::cell(f),
        hspin::CsvWriter::cell(clt),  status};
    if (a.d4_closed_form) {
      double mu4 = kNaN, dev = kNaN;
      if (beta > 0.0 && beta < 4.0) {
        mu4 = hspin::solve_mu_d4(beta);
        dev = std::abs(mu - mu4);
      }
      row.push_back(hspin::CsvWriter::cell(mu4));
      row.push_back(hspin::CsvWriter::cell(dev));
    }
    csv.row(row);
  }

  json params;
  params["model"] = a.model;
  params["d"] = a.d;
  params["L"] = a.L;
  params["K"] = a.K;
  params["C"] = encode_real(a.C);
  params["lambda-scale"] = a.lambda_scale;
  params["beta-grid"] = a.beta_grid;
  params["d4-closed-form"] = a.d4_closed_form;
  params["beta_c"] = betac_divergent ? json(betac_note) : encode_real(betac);
  globals.echo(params);
  write_manifest(globals.output, "spherical", params);
}

// ---------------------------------------------------------------------------
// rg

struct RgArgs {
  std::string mode = "lpa";
  std::string N = "inf";
  double beta = 0.0;
  int M = 6;
  double d = 4.0;
  double L = 2.0;
  double gamma = kNaN;  // defaults to d + 2
  double t_final = 5.0;
  int steps = 20;
  int samples = 50;
  std::vector<double> init_coeffs;
  CLI::Option *mode_opt = nullptr, *N_opt = nullptr, *beta_opt = nullptr,
              *M_opt = nullptr, *d_opt = nullptr, *L_opt = nullptr,
              *gamma_opt = nullptr, *t_opt = nullptr, *steps_opt = nullptr,
              *samples_opt = nullptr, *init_opt = nullptr;
};

int parse_components(const std::string& s) {
  if (s == "inf" || s == "infinity") return hspin::kInfiniteComponents;
  try {
    const int n = std::stoi(s);
    require(n >= 1, "--N must be a positive integer or 'inf'");
    return n;
  } catch (const std::logic_error&) {
    throw UsageError("--N must be a positive integer or 'inf', got '" + s +
                     "'");
  }
}

void run_rg(const RgArgs& args, GlobalArgs& globals, const ConfigLayer& cfg) {
  RgArgs a = args;
  cfg.fallback(a.mode_opt, "mode", a.mode);
  cfg.fallback(a.N_opt, "N", a.N);
  cfg.fallback(a.beta_opt, "beta", a.beta);
  cfg.fallback(a.M_opt, "M", a.M);
  cfg.fallback(a.d_opt, "d", a.d);
  cfg.fallback(a.L_opt, "L", a.L);
  cfg.fallback_real(a.gamma_opt, "gamma", a.gamma);
  cfg.fallback(a.t_opt, "t-final", a.t_final);
  cfg.fallback(a.steps_opt, "steps", a.steps);
  cfg.fallback(a.samples_opt, "samples", a.samples);
  cfg.fallback(a.init_opt, "init-coeffs", a.init_coeffs);
  require(a.mode == "discrete" || a.mode == "lpa",
          "--mode must be discrete or lpa");
  require(a.M >= 1, "--M must be >= 1");
  require(a.steps >= 1, "--steps must be >= 1");
  require(a.samples >= 1, "--samples must be >= 1");
  require(a.t_final > 0.0, "--t-final must be > 0");
  const int N = parse_components(a.N);
  const double gamma = std::isnan(a.gamma) ? a.d + 2.0 : a.gamma;

  hspin::InitialCondition ic;
  if (!a.init_coeffs.empty()) {
    ic.beta = a.beta;
    ic.N = N;
    ic.coeffs = a.init_coeffs;
    ic.coeffs.resize(static_cast<std::size_t>(a.M), 0.0);
  } else {
    require(a.beta > 0.0, "--beta > 0 is required unless --init-coeffs is given");
    ic = (N == hspin::kInfiniteComponents)
             ? hspin::initial_u0_infinite(a.beta, a.M)
             : hspin::initial_u0(a.beta, N, a.M);
  }
  hspin::FlowState state = hspin::make_flow_state(ic, a.d, a.L, gamma);

  std::ofstream os = open_output(globals.output);
  hspin::CsvWriter csv(os);
  std::vector<std::string> head = {"t_or_k"};
  for (int m = 1; m <= a.M; ++m) head.push_back("c" + std::to_string(m));
  csv.header(head);

  auto emit = [&](const hspin::FlowState& s) {
    std::vector<std::string> row = {hspin::CsvWriter::cell(s.k_or_t)};
    for (double c : s.coeffs) row.push_back(hspin::CsvWriter::cell(c));
    csv.row(row);
  };
  auto emit_blow_up = [&](double when) {
    // Sentinel row: infinite coefficients mark the aborted trajectory.
    std::vector<std::string> row = {hspin::CsvWriter::cell(when)};
    for (int m = 1; m <= a.M; ++m) row.push_back(hspin::CsvWriter::cell(kInf));
    csv.row(row);
  };

  bool blew_up = false;
  double blow_up_time = 0.0;
  emit(state);
  if (a.mode == "discrete") {
    for (int k = 0; k < a.steps; ++k) {
      const hspin::FlowResult r = hspin::rg_step(state);
      if (r.blew_up) {
        blew_up = true;
        blow_up_time = r.blow_up_time;
        break;
      }
      state = r.state;
      emit(state);
    }
  } else {
    std::vector<double> times(a.samples);
    for (int i = 1; i <= a.samples; ++i) {
      times[i - 1] = a.t_final * i / a.samples;
    }
    const hspin::FlowResult r = hspin::lpa_flow(state, a.t_final, times);
    for (const hspin::FlowState& s : r.trajectory) emit(s);
    if (r.blew_up) {
      blew_up = true;
      blow_up_time = r.blow_up_time;
    }
  }
  if (blew_up) emit_blow_up(blow_up_time);

  json params;
  params["mode"] = a.mode;
  params["N"] = a.N;
  params["beta"] = a.beta;
  params["M"] = a.M;
  params["d"] = a.d;
  params["L"] = a.L;
  params["gamma"] = gamma;
  params["t-final"] = a.t_final;
  params["steps"] = a.steps;
  params["samples"] = a.samples;
  params["init-coeffs"] = a.init_coeffs;
  params["blew-up"] = blew_up;
  globals.echo(params);
  write_manifest(globals.output, "rg", params);
}

// ---------------------------------------------------------------------------
// mc

struct McArgs {
  int L = 0, d = 0, K = 0;
  int N = 1;
  double beta = 0.0;
  std::vector<double> z_grid = {0.0, 0.5, 1.0};
  std::int64_t sweeps = 10000;
  std::int64_t burn_in = 1000;
  int chains = 1;
  std::string proposal = "mix";
  double step = 0.5;
  bool exact_check = false;
  CLI::Option *L_opt = nullptr, *d_opt = nullptr, *K_opt = nullptr,
              *N_opt = nullptr, *beta_opt = nullptr, *z_opt = nullptr,
              *sweeps_opt = nullptr, *burn_opt = nullptr, *chains_opt = nullptr,
              *proposal_opt = nullptr, *step_opt = nullptr,
              *exact_opt = nullptr;
};

void run_mc_cmd(const McArgs& args, GlobalArgs& globals,
                const ConfigLayer& cfg) {
  McArgs a = args;
  cfg.fallback(a.L_opt, "L", a.L);
  cfg.fallback(a.d_opt, "d", a.d);
  cfg.fallback(a.K_opt, "K", a.K);
  cfg.fallback(a.N_opt, "N", a.N);
  cfg.fallback(a.beta_opt, "beta", a.beta);
  cfg.fallback(a.z_opt, "z-grid", a.z_grid);
  cfg.fallback(a.sweeps_opt, "sweeps", a.sweeps);
  cfg.fallback(a.burn_opt, "burn-in", a.burn_in);
  cfg.fallback(a.chains_opt, "chains", a.chains);
  cfg.fallback(a.proposal_opt, "proposal", a.proposal);
  cfg.fallback(a.step_opt, "step", a.step);
  cfg.fallback(a.exact_opt, "exact-check", a.exact_check);
  require(a.L > 0, "--L is required");
  require(a.d > 0, "--d is required");
  require(a.K > 0, "--K is required");
  require(a.beta >= 0.0, "--beta must be >= 0");
  require(!a.z_grid.empty(), "--z-grid is required");

  const hspin::LatticeShape shape = hspin::LatticeShape::make(a.L, a.d, a.K);
  hspin::McRunConfig mc;
  mc.shape = shape;
  mc.N = a.N;
  mc.beta = a.beta;
  mc.sweeps = a.sweeps;
  mc.burn_in = a.burn_in;
  mc.chains = a.chains;
  mc.threads = globals.threads;
  mc.seed = globals.seed;
  mc.rotation_step = a.step;
  if (a.proposal == "mix") {
    mc.proposal = hspin::Proposal::Mix;
  } else if (a.proposal == "resphere") {
    mc.proposal = hspin::Proposal::Resphere;
  } else if (a.proposal == "rotation") {
    mc.proposal = hspin::Proposal::Rotation;
  } else {
    throw UsageError("--proposal must be mix, resphere, or rotation");
  }
  if (a.exact_check) {
    require(a.N == 1, "--exact-check needs N = 1");
    require(shape.n <= 20, "--exact-check needs n <= 20");
  }

  std::vector<double> grid = a.z_grid;
  std::sort(grid.begin(), grid.end());
  const hspin::McOutput out = hspin::run_mc(mc, grid);

  std::ofstream os = open_output(globals.output);
  hspin::CsvWriter csv(os);
  std::vector<std::string> head = {"z", "theta_hat", "std_error", "tau_int",
                                   "status"};
  if (a.exact_check) {
    head.push_back("exact");
    head.push_back("deviation_sigmas");
  }
  csv.header(head);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const hspin::McEstimate& est = out.theta[i];
    std::vector<std::string> row = {
        hspin::CsvWriter::cell(grid[i]), hspin::CsvWriter::cell(est.mean),
        hspin::CsvWriter::cell(est.std_error),
        hspin::CsvWriter::cell(est.tau_int),
        est.precision_warning ? "precision-warning" : "ok"};
    if (a.exact_check) {
      const double exact =
          hspin::exact_partition_N1(shape, a.beta, grid[i]).theta;
      const double diff = std::abs(est.mean - exact);
      double sigmas = 0.0;
      if (est.std_error > 0.0) {
        sigmas = diff / est.std_error;
      } else if (diff > 0.0) {
        sigmas = kInf;
      }
      row.push_back(hspin::CsvWriter::cell(exact));
      row.push_back(hspin::CsvWriter::cell(sigmas));
    }
    csv.row(row);
  }

  json params;
  params["L"] = a.L;
  params["d"] = a.d;
  params["K"] = a.K;
  params["N"] = a.N;
  params["beta"] = a.beta;
  params["z-grid"] = a.z_grid;
  params["sweeps"] = a.sweeps;
  params["burn-in"] = a.burn_in;
  params["chains"] = a.chains;
  params["proposal"] = a.proposal;
  params["step"] = a.step;
  params["exact-check"] = a.exact_check;
  params["acceptance-rate"] = out.acceptance_rate;
  globals.echo(params);
  write_manifest(globals.output, "mc", params);
}

// ---------------------------------------------------------------------------
// critical-search

struct CriticalArgs {
  std::string flow = "discrete";
  std::string N = "inf";
  double d = 4.0;
  int M = 6;
  double L = 2.0;
  double beta_lo = 0.0;
  double beta_hi = 0.0;
  double width = 1e-6;
  int steps = 40;
  double horizon = 20.0;
  CLI::Option *flow_opt = nullptr, *N_opt = nullptr, *d_opt = nullptr,
              *M_opt = nullptr, *L_opt = nullptr, *lo_opt = nullptr,
              *hi_opt = nullptr, *width_opt = nullptr, *steps_opt = nullptr,
              *horizon_opt = nullptr;
};

void run_critical(const CriticalArgs& args, GlobalArgs& globals,
                  const ConfigLayer& cfg) {
  CriticalArgs a = args;
  cfg.fallback(a.flow_opt, "flow", a.flow);
  cfg.fallback(a.N_opt, "N", a.N);
  cfg.fallback(a.d_opt, "d", a.d);
  cfg.fallback(a.M_opt, "M", a.M);
  cfg.fallback(a.L_opt, "L", a.L);
  cfg.fallback(a.lo_opt, "beta-lo", a.beta_lo);
  cfg.fallback(a.hi_opt, "beta-hi", a.beta_hi);
  cfg.fallback(a.width_opt, "width", a.width);
  cfg.fallback(a.steps_opt, "steps", a.steps);
  cfg.fallback(a.horizon_opt, "horizon", a.horizon);
  require(a.flow == "discrete" || a.flow == "lpa",
          "--flow must be discrete or lpa");
  require(a.beta_lo > 0.0 && a.beta_hi > 0.0,
          "--beta-lo and --beta-hi must be > 0");
  require(a.M >= 1, "--M must be >= 1");
  const int N = parse_components(a.N);

  hspin::CriticalSearchOptions options;
  options.width = a.width;
  options.discrete_steps = a.steps;
  options.lpa_horizon = a.horizon;
  const hspin::FlowKind kind = (a.flow == "discrete")
                                   ? hspin::FlowKind::Discrete
                                   : hspin::FlowKind::Lpa;
  const hspin::CriticalSearchResult result = hspin::critical_search_beta(
      a.d, N, a.M, kind, a.beta_lo, a.beta_hi, a.L, options);

  std::ofstream os = open_output(globals.output);
  hspin::CsvWriter csv(os);
  csv.header({"critical", "bounded_end", "blowup_end", "iterations"});
  csv.row({hspin::CsvWriter::cell(result.critical),
           hspin::CsvWriter::cell(result.lo), hspin::CsvWriter::cell(result.hi),
           hspin::CsvWriter::cell(result.iterations)});

  json params;
  params["flow"] = a.flow;
  params["N"] = a.N;
  params["d"] = a.d;
  params["M"] = a.M;
  params["L"] = a.L;
  params["beta-lo"] = a.beta_lo;
  params["beta-hi"] = a.beta_hi;
  params["width"] = a.width;
  params["steps"] = a.steps;
  params["horizon"] = a.horizon;
  globals.echo(params);
  write_manifest(globals.output, "critical-search", params);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hspin: hierarchical O(N) / spherical model toolkit"};
  app.require_subcommand(1);

  GlobalArgs globals;
  globals.output_opt =
      app.add_option("--output", globals.output,
                     "Output CSV path (default: <subcommand>.csv); the run "
                     "manifest is written next to it");
  app.add_option("--config", globals.config_path,
                 "JSON config file; flags override its values");
  globals.seed_opt = app.add_option("--seed", globals.seed, "RNG seed");
  globals.threads_opt =
      app.add_option("--threads", globals.threads, "Worker thread budget");

  SpectrumArgs spectrum;
  CLI::App* spectrum_cmd = app.add_subcommand(
      "spectrum", "Eigenvalue/multiplicity table of the hierarchical Laplacian");
  spectrum_cmd->fallthrough();
  spectrum.L_opt = spectrum_cmd->add_option("--L", spectrum.L, "Block side");
  spectrum.d_opt = spectrum_cmd->add_option("--d", spectrum.d, "Dimension");
  spectrum.K_opt = spectrum_cmd->add_option("--K", spectrum.K, "Levels");
  spectrum.dense_opt = spectrum_cmd->add_flag(
      "--dense-check", spectrum.dense_check,
      "Compare against a dense eigensolver (n <= 1024)");
  spectrum_cmd->footer("Example:\n  hspin spectrum --L 2 --d 1 --K 2");

  SphericalArgs spherical;
  CLI::App* spherical_cmd = app.add_subcommand(
      "spherical", "Spherical-model saddle point sweep over beta");
  spherical_cmd->fallthrough();
  spherical.model_opt = spherical_cmd->add_option(
      "--model", spherical.model, "finite | infiniteK | continuum");
  spherical.d_opt = spherical_cmd->add_option("--d", spherical.d, "Dimension");
  spherical.L_opt = spherical_cmd->add_option("--L", spherical.L, "Block side");
  spherical.K_opt = spherical_cmd->add_option("--K", spherical.K, "Levels");
  spherical.C_opt = spherical_cmd->add_option(
      "--C", spherical.C, "Continuum cutoff (default: infinite)");
  spherical.scale_opt = spherical_cmd->add_option(
      "--lambda-scale", spherical.lambda_scale, "Eigenvalue rescale, infiniteK");
  spherical.grid_opt = spherical_cmd->add_option(
      "--beta-grid", spherical.beta_grid, "Inverse temperatures to sweep");
  spherical.d4_opt = spherical_cmd->add_flag(
      "--d4-closed-form", spherical.d4_closed_form,
      "Add the specialized d=4 solver column");
  spherical_cmd->footer(
      "Example:\n  hspin spherical --model continuum --d 4 --beta-grid 0.5 "
      "1.0 1.5 --d4-closed-form");

  RgArgs rg;
  CLI::App* rg_cmd = app.add_subcommand(
      "rg", "Coefficient RG flow trajectory (discrete recursion or LPA)");
  rg_cmd->fallthrough();
  rg.mode_opt = rg_cmd->add_option("--mode", rg.mode, "discrete | lpa");
  rg.N_opt = rg_cmd->add_option("--N", rg.N, "Components (integer or 'inf')");
  rg.beta_opt = rg_cmd->add_option("--beta", rg.beta, "Inverse temperature");
  rg.M_opt = rg_cmd->add_option("--M", rg.M, "Truncation order");
  rg.d_opt = rg_cmd->add_option("--d", rg.d, "Dimension");
  rg.L_opt = rg_cmd->add_option("--L", rg.L, "Block ratio (discrete mode)");
  rg.gamma_opt =
      rg_cmd->add_option("--gamma", rg.gamma, "Scaling exponent (default d+2)");
  rg.t_opt = rg_cmd->add_option("--t-final", rg.t_final, "LPA flow time");
  rg.steps_opt = rg_cmd->add_option("--steps", rg.steps, "Discrete RG steps");
  rg.samples_opt =
      rg_cmd->add_option("--samples", rg.samples, "LPA trajectory rows");
  rg.init_opt = rg_cmd->add_option(
      "--init-coeffs", rg.init_coeffs,
      "Explicit initial coefficients c1 c2 ... (overrides --beta)");
  rg_cmd->footer(
      "Example:\n  hspin rg --mode lpa --N inf --d 4 --M 6 --init-coeffs -1 "
      "--t-final 5");

  McArgs mc;
  CLI::App* mc_cmd = app.add_subcommand(
      "mc", "Metropolis sampling of the O(N) model; MGF estimates per z");
  mc_cmd->fallthrough();
  mc.L_opt = mc_cmd->add_option("--L", mc.L, "Block side");
  mc.d_opt = mc_cmd->add_option("--d", mc.d, "Dimension");
  mc.K_opt = mc_cmd->add_option("--K", mc.K, "Levels");
  mc.N_opt = mc_cmd->add_option("--N", mc.N, "Spin components");
  mc.beta_opt = mc_cmd->add_option("--beta", mc.beta, "Inverse temperature");
  mc.z_opt = mc_cmd->add_option("--z-grid", mc.z_grid, "Field values");
  mc.sweeps_opt = mc_cmd->add_option("--sweeps,--moves", mc.sweeps,
                                     "Measurement sweeps per chain");
  mc.burn_opt = mc_cmd->add_option("--burn-in", mc.burn_in,
                                   "Discarded sweeps per chain");
  mc.chains_opt = mc_cmd->add_option("--chains", mc.chains, "Chain count");
  mc.proposal_opt = mc_cmd->add_option("--proposal", mc.proposal,
                                       "mix | resphere | rotation");
  mc.step_opt = mc_cmd->add_option("--step", mc.step, "Initial rotation step");
  mc.exact_opt = mc_cmd->add_flag("--exact-check", mc.exact_check,
                                  "Compare against exact enumeration "
                                  "(N=1, n <= 20)");
  mc_cmd->footer(
      "Example:\n  hspin mc --L 2 --d 1 --K 2 --N 1 --beta 0.7 --z-grid 0 0.5 "
      "--sweeps 20000 --exact-check");

  CriticalArgs critical;
  CLI::App* critical_cmd = app.add_subcommand(
      "critical-search", "Bisect beta for the bounded/blow-up boundary");
  critical_cmd->fallthrough();
  critical.flow_opt =
      critical_cmd->add_option("--flow", critical.flow, "discrete | lpa");
  critical.N_opt = critical_cmd->add_option("--N", critical.N,
                                            "Components (integer or 'inf')");
  critical.d_opt = critical_cmd->add_option("--d", critical.d, "Dimension");
  critical.M_opt =
      critical_cmd->add_option("--M", critical.M, "Truncation order");
  critical.L_opt =
      critical_cmd->add_option("--L", critical.L, "Block ratio (discrete)");
  critical.lo_opt =
      critical_cmd->add_option("--beta-lo", critical.beta_lo, "Lower endpoint");
  critical.hi_opt =
      critical_cmd->add_option("--beta-hi", critical.beta_hi, "Upper endpoint");
  critical.width_opt =
      critical_cmd->add_option("--width", critical.width, "Bracket width goal");
  critical.steps_opt = critical_cmd->add_option(
      "--steps", critical.steps, "Classification budget (discrete steps)");
  critical.horizon_opt = critical_cmd->add_option(
      "--horizon", critical.horizon, "Classification budget (LPA time)");
  critical_cmd->footer(
      "Example:\n  hspin critical-search --flow discrete --N inf --d 4 --M 6 "
      "--beta-lo 1 --beta-hi 30");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message
    return 2;
  }

  const std::string subcommand = app.get_subcommands().front()->get_name();
  try {
    const ConfigLayer cfg = load_config(globals.config_path, subcommand);
    globals.resolve(cfg, subcommand);
    if (app.got_subcommand(spectrum_cmd)) {
      run_spectrum(spectrum, globals, cfg);
    } else if (app.got_subcommand(spherical_cmd)) {
      run_spherical(spherical, globals, cfg);
    } else if (app.got_subcommand(rg_cmd)) {
      run_rg(rg, globals, cfg);
    } else if (app.got_subcommand(mc_cmd)) {
      run_mc_cmd(mc, globals, cfg);
    } else if (app.got_subcommand(critical_cmd)) {
      run_critical(critical, globals, cfg);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const hspin::DomainError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
