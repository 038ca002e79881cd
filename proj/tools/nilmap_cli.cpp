#include <atomic>
#include <chrono>
#include <cstdlib>
#include <csignal>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stop_token>
#include <thread>

#include <CLI11.hpp>

#include "nilmap/dynamics.hpp"
#include "nilmap/families.hpp"
#include "nilmap/inversion.hpp"
#include "nilmap/report.hpp"
#include "nilmap/spec_io.hpp"

namespace fs = std::filesystem;
using namespace nilmap;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

std::atomic<bool> g_interrupted{false};

// First signal requests a cooperative stop, a second one exits at once.
extern "C" void on_signal(int sig) {
  if (g_interrupted.exchange(true)) std::_Exit(128 + sig);
}

struct Common {
  std::string spec_path;
  std::string out_dir = "./out";
};

class Run {
 public:
  Run(std::string command, const Common& c, std::uint64_t seed = 0)
      : start_(std::chrono::steady_clock::now()), out_dir_(c.out_dir) {
    manifest_.command = std::move(command);
    manifest_.spec_path = c.spec_path;
    manifest_.seed = seed;
  }

  nlohmann::json& parameters() { return manifest_.parameters; }

  void emit(const std::string& name, const std::string& text) {
    const fs::path p = out_dir_ / name;
    write_text(p, text);
    manifest_.outputs.push_back(p.string());
  }

  void finish(const nlohmann::json& report) {
    const std::string text = dump_json(report) + "\n";
    emit(manifest_.command + ".json", text);
    manifest_.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - start_)
                                 .count();
    write_text(out_dir_ / "manifest.json", dump_json(manifest_.to_json()) + "\n");
    std::cout << text;
  }

 private:
  std::chrono::steady_clock::time_point start_;
  fs::path out_dir_;
  RunManifest manifest_;
};

nlohmann::json rationals_json(const std::vector<Rational>& v) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& q : v) j.push_back(to_string(q));
  return j;
}

int verify_nilpotent(const Common& c) {
  const FamilySpec spec = load_family_spec(c.spec_path);
  Run run("verify-nilpotent", c);
  const bool nilpotent_family = spec.family != "hurwitz" && spec.family != "cegmh";
  const PolyMap m = spec.primary_map();
  const PolyMatrix j = jacobian_of(m);
  const auto cert = is_nilpotent(j);
  const auto witness = rows_dependent_over_R(j);
  nlohmann::json rep{{"family", spec.family},
                     {"dimension", spec.dimension()},
                     {"map", nilpotent_family ? "H" : "F"},
                     {"certificate", cert.to_json()},
                     {"rows_dependent", witness.has_value()},
                     {"witness", witness ? rationals_json(*witness) : nlohmann::json(nullptr)}};
  run.finish(rep);
  return cert.nilpotent ? kOk : kCheckFailed;
}

struct InvertArgs {
  std::optional<std::string> lambda;
  bool check_preservation = false;
  bool skip_left = false;
  std::size_t max_iter = 64;
};

int invert(const Common& c, const InvertArgs& a) {
  FamilySpec spec = load_family_spec(c.spec_path);
  Rational lambda = spec.lambda.value_or(Rational(1));
  if (a.lambda) {
    try {
      lambda = parse_rational(*a.lambda);
    } catch (const std::invalid_argument& e) {
      throw SpecError(std::string("--lambda: ") + e.what());
    }
  }
  if (lambda == 0) throw SpecError("--lambda must be nonzero");
  if (auto* s = std::get_if<EssenFamilySpec>(&spec.params)) s->lambda = lambda;
  if (auto* s = std::get_if<Dim4FamilySpec>(&spec.params)) s->lambda = lambda;
  const MapProgram f = spec.shifted_program(lambda);

  Run run("invert", c);
  run.parameters() = {{"lambda", to_string(lambda)},
                      {"max_iter", a.max_iter},
                      {"verify_left", !a.skip_left},
                      {"check_preservation", a.check_preservation}};

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::stop_source stop;
  std::jthread watcher([&stop](std::stop_token st) {
    while (!st.stop_requested()) {
      if (g_interrupted.load()) {
        stop.request_stop();
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
  });

  InverseOptions opts;
  opts.max_iter = a.max_iter;
  opts.verify_left = false;
  opts.stop = stop.get_token();

  nlohmann::json rep{{"family", spec.family}, {"lambda", to_string(lambda)}};
  bool ok = true;
  InverseBundle bundle;
  try {
    bundle = formal_inverse(f, lambda, opts);
  } catch (const InversionError& e) {
    rep["error"] = e.what();
    run.finish(rep);
    return kCheckFailed;
  }
  if (!a.skip_left) {
    // G o F through the family's back-substitution program when there is one:
    // it cancels to X before expanding, where G o F itself has degree deg G * deg F.
    std::optional<MapProgram> inv;
    if (auto* s = std::get_if<EssenFamilySpec>(&spec.params)) inv = essen_inverse_program(*s);
    if (auto* s = std::get_if<Dim4FamilySpec>(&spec.params)) inv = dim4_inverse_program(*s);
    if (auto* s = std::get_if<DependentFamilySpec>(&spec.params)) inv = dependent_inverse_program(*s, lambda);
    const PolyMap id = PolyMap::identity(bundle.F.arity());
    if (inv) {
      bundle.left_identity = inv->expand() == bundle.G && inv->compose(bundle.F) == id;
      rep["left_identity_method"] = "structured";
    } else {
      bundle.left_identity = bundle.G.compose(bundle.F) == id;
      rep["left_identity_method"] = "expanded";
    }
  }
  rep["bundle"] = bundle.to_json();
  ok = ok && bundle.right_identity && (a.skip_left || bundle.left_identity);

  nlohmann::json closed;
  try {
    if (auto* s = std::get_if<EssenFamilySpec>(&spec.params)) {
      closed["matches_formal_inverse"] = build_essen_inverse(*s) == bundle.G;
    } else if (auto* s = std::get_if<Dim4FamilySpec>(&spec.params)) {
      closed["matches_formal_inverse"] = build_dim4_inverse(*s) == bundle.G;
    } else if (auto* s = std::get_if<DependentFamilySpec>(&spec.params)) {
      const auto d = build_dependent_inverse(*s, lambda);
      closed["matches_formal_inverse"] = d.matches_formal_inverse;
      closed["displayed_form_valid"] = d.displayed_form_valid;
    }
  } catch (const InversionError& e) {
    closed["error"] = e.what();
    ok = false;
  }
  rep["closed_form"] = closed;

  const bool series = jbar_series_check(f, bundle);
  rep["jbar_series_identity"] = series;
  ok = ok && series;

  if (a.check_preservation) {
    const auto pres = preservation_check(bundle);
    rep["preservation"] = pres.to_json();
    // Dependence of J H is preserved too, so compare against J H itself.
    const auto h_dep = rows_dependent_over_R(jacobian_of(spec.nilpotent_part()));
    rep["preservation"]["independent_before"] = !h_dep.has_value();
    ok = ok && pres.nilpotent && pres.independent == !h_dep.has_value();
  }
  run.finish(rep);
  return ok ? kOk : kCheckFailed;
}

struct FieldArgs {
  std::size_t samples = 10000;
  std::uint64_t seed = 42;
  std::optional<std::string> alpha;
  double box = 2.0;
  double plane_exclusion = 1e-3;
};

const HurwitzFieldSpec& require_hurwitz(const FamilySpec& spec) {
  const auto* h = std::get_if<HurwitzFieldSpec>(&spec.params);
  if (!h) throw SpecError("this command needs a 'hurwitz' family spec");
  return *h;
}

int check_field(const Common& c, const FieldArgs& a) {
  const FamilySpec spec = load_family_spec(c.spec_path);
  const HurwitzFieldSpec& h = require_hurwitz(spec);
  const Rational bound = alpha_bound(h);
  Rational alpha = bound + Rational(1, 10);
  if (a.alpha) {
    try {
      alpha = parse_rational(*a.alpha);
    } catch (const std::invalid_argument& e) {
      throw SpecError(std::string("--alpha: ") + e.what());
    }
  }
  ScanConfig cfg{a.samples, a.box, a.plane_exclusion, a.seed};
  cfg.validate();

  Run run("check-field", c, a.seed);
  run.parameters() = {{"scan", cfg.to_json()}, {"alpha", to_string(alpha)}, {"alpha_auto", !a.alpha}};

  const PolyMap F = build_hurwitz_F(h);
  const std::size_t m = F.arity();
  Polynomial P(m);
  for (std::size_t i = 0; i + 1 < m; ++i) P += Polynomial::variable(m, i).pow(2);
  P += horner(h.R, Polynomial::variable(m, m - 1), Polynomial::constant(m, 1));
  const Density rho{P, alpha};
  const Polynomial S = divergence_numerator(F, rho);
  const bool s_plane_zero = S.restrict_variable(m - 1, 0).is_zero();

  const ScanReport hs = hurwitz_scan(F, cfg);
  const DensityReport ds = density_scan(S, cfg);
  const bool above = alpha > bound;
  const bool integrable = integrability_check(rho);

  nlohmann::json rep{{"alpha_bound", to_string(bound)},
                     {"alpha_bound_float", bound.get_d()},
                     {"alpha", to_string(alpha)},
                     {"alpha_above_bound", above},
                     {"integrable", integrable},
                     {"divergence_numerator", S.to_string()},
                     {"numerator_vanishes_on_plane", s_plane_zero},
                     {"hurwitz", hs.to_json()},
                     {"density", ds.to_json()}};
  run.finish(rep);
  const bool ok = hs.violations.empty() && hs.on_plane_ok() && ds.violations.empty() &&
                  ds.on_plane_ok() && s_plane_zero && above && integrable;
  return ok ? kOk : kCheckFailed;
}

struct SimArgs {
  std::size_t traj = 100;
  double tmax = 500.0;
  std::uint64_t seed = 42;
  double box = 2.0;
  double min_plane_distance = 0.05;
  std::vector<double> x0;
};

int simulate(const Common& c, const SimArgs& a) {
  const FamilySpec spec = load_family_spec(c.spec_path);
  if (!(a.tmax > 0.0)) throw SpecError("--tmax must be positive");
  Run run("simulate", c, a.seed);
  IntegrateOptions io;
  io.t_max = a.tmax;

  if (spec.family == "cegmh") {
    const PolyMap F = spec.primary_map();
    std::vector<double> x0 = a.x0;
    if (x0.empty()) {
      x0.assign(F.arity(), 0.0);
      x0[0] = 18.0;
      x0[1] = -12.0;
      x0[2] = 1.0;
    }
    if (x0.size() != F.arity()) throw SpecError("--x0 must have " + std::to_string(F.arity()) + " entries");
    run.parameters() = {{"t_max", io.t_max}, {"atol", io.atol}, {"rtol", io.rtol}, {"x0", x0}};
    const Trajectory tr = integrate(F, x0, io);
    run.emit("traj_000.csv", tr.to_csv());
    nlohmann::json rep{{"family", spec.family},
                       {"start", x0},
                       {"terminated", to_string(tr.terminated)},
                       {"final_time", tr.times.back()},
                       {"final_norm", tr.final_norm},
                       {"steps", tr.times.size() - 1}};
    run.finish(rep);
    return tr.terminated == Termination::diverged ? kOk : kCheckFailed;
  }

  const HurwitzFieldSpec& h = require_hurwitz(spec);
  const PolyMap F = build_hurwitz_F(h);
  ScanConfig cfg{std::max<std::size_t>(a.traj, 1), a.box, 0.0, a.seed};
  AttractorOptions ao;
  ao.integrate = io;
  ao.min_plane_distance = a.min_plane_distance;
  ao.keep_trajectories = true;
  run.parameters() = {{"traj", a.traj},
                      {"t_max", io.t_max},
                      {"atol", io.atol},
                      {"rtol", io.rtol},
                      {"converge_norm", io.converge_norm},
                      {"diverge_norm", io.diverge_norm},
                      {"box_halfwidth", a.box},
                      {"min_plane_distance", a.min_plane_distance},
                      {"rotation_t_max", ao.rotation_t_max}};
  const AttractorSummary s = attractor_experiment(F, a.traj, cfg, ao);
  for (std::size_t i = 0; i < s.trajectories.size(); ++i) {
    std::ostringstream name;
    name << "traj_" << std::setw(3) << std::setfill('0') << i << ".csv";
    run.emit(name.str(), s.trajectories[i].to_csv());
  }
  nlohmann::json rep = s.to_json();
  rep["family"] = spec.family;
  run.finish(rep);
  const bool ok = s.num_converged == s.num_traj && s.rotation_ok();
  return ok ? kOk : kCheckFailed;
}

template <class Fn>
int guarded(Fn fn) {
  try {
    return fn();
  } catch (const SpecError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InversionError& e) {
    std::cerr << "check failed: " << e.what() << "\n";
    return kCheckFailed;
  } catch (const NumericError& e) {
    std::cerr << "check failed: " << e.what() << "\n";
    return kCheckFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCheckFailed;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nilpotent-Jacobian polynomial maps: verification, inversion and simulation"};
  app.set_version_flag("--version", std::string(NILMAP_VERSION));
  app.require_subcommand(1);

  Common common;
  auto add_common = [&common](CLI::App* sub) {
    sub->add_option("spec", common.spec_path, "Family spec JSON file")->required();
    sub->add_option("--out-dir", common.out_dir, "Directory for reports and manifest")->capture_default_str();
  };

  auto* verify = app.add_subcommand("verify-nilpotent", "Certify nilpotency of the Jacobian");
  add_common(verify);

  InvertArgs ia;
  auto* inv = app.add_subcommand("invert", "Formal inverse of lambda X + H");
  add_common(inv);
  inv->add_option("--lambda", ia.lambda, "Nonzero rational, e.g. -1 or 3/2");
  inv->add_flag("--check-preservation", ia.check_preservation, "Check nilpotency and row independence of J H~");
  inv->add_flag("--skip-left-check", ia.skip_left, "Do not expand G o F");
  inv->add_option("--max-iter", ia.max_iter, "Iteration limit")->capture_default_str()->check(CLI::PositiveNumber);

  FieldArgs fa;
  auto* field = app.add_subcommand("check-field", "Almost-Hurwitz and density scans");
  add_common(field);
  field->add_option("--samples", fa.samples, "Samples per scan")->capture_default_str()->check(CLI::PositiveNumber);
  field->add_option("--seed", fa.seed, "RNG seed")->capture_default_str();
  field->add_option("--alpha", fa.alpha, "Density exponent (default: alpha_bound + 1/10)");
  field->add_option("--box", fa.box, "Sampling box half-width")->capture_default_str();
  field->add_option("--plane-exclusion", fa.plane_exclusion, "Resample off-plane points with |x_last| below this")
      ->capture_default_str();

  SimArgs sa;
  auto* sim = app.add_subcommand("simulate", "Integrate trajectories and summarize convergence");
  add_common(sim);
  sim->add_option("--traj", sa.traj, "Number of off-plane trajectories")->capture_default_str();
  sim->add_option("--tmax", sa.tmax, "Final time")->capture_default_str();
  sim->add_option("--seed", sa.seed, "RNG seed")->capture_default_str();
  sim->add_option("--box", sa.box, "Start box half-width")->capture_default_str();
  sim->add_option("--min-plane-distance", sa.min_plane_distance, "Minimum |x_last| of starts")->capture_default_str();
  sim->add_option("--x0", sa.x0, "Initial state (cegmh only)")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (*verify) return guarded([&] { return verify_nilpotent(common); });
  if (*inv) return guarded([&] { return invert(common, ia); });
  if (*field) return guarded([&] { return check_field(common, fa); });
  if (*sim) return guarded([&] { return simulate(common, sa); });
  return kUsage;
}
