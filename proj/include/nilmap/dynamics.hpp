#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nilmap/families.hpp"
#include "nilmap/jacobian.hpp"
#include "nilmap/polynomial.hpp"

namespace nilmap {

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major square matrix of doubles.
struct Matrix {
  std::size_t n = 0;
  std::vector<double> a;

  Matrix() = default;
  explicit Matrix(std::size_t size) : n(size), a(size * size, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

/// Polynomial flattened to double coefficients and exponent lists.
class CompiledPolynomial {
 public:
  CompiledPolynomial() = default;
  explicit CompiledPolynomial(const Polynomial& p);
  double operator()(std::span<const double> x) const;

 private:
  struct Entry {
    double coef;
    std::vector<std::pair<std::uint16_t, std::uint16_t>> factors;  // (variable, power)
  };
  std::size_t nvars_ = 0;
  std::vector<Entry> entries_;
};

class CompiledMap {
 public:
  CompiledMap() = default;
  explicit CompiledMap(const PolyMap& f);
  std::size_t arity() const { return comps_.size(); }
  void operator()(std::span<const double> x, std::span<double> out) const;
  std::vector<double> operator()(std::span<const double> x) const;

 private:
  std::vector<CompiledPolynomial> comps_;
};

class CompiledJacobian {
 public:
  CompiledJacobian() = default;
  explicit CompiledJacobian(const PolyMap& f);
  Matrix operator()(std::span<const double> x) const;

 private:
  std::size_t n_ = 0;
  std::vector<CompiledPolynomial> entries_;
};

Matrix jacobian_at(const PolyMap& F, std::span<const double> point);

/// All eigenvalues by balancing, Hessenberg reduction and shifted QR.
/// Throws NumericError after 100 n sweeps without convergence.
std::vector<std::complex<double>> eigenvalues(const Matrix& m);

struct ScanConfig {
  std::size_t num_samples = 10000;
  double box_halfwidth = 2.0;
  /// Off-plane samples with |x_last| below this are drawn again.
  double plane_exclusion = 1e-3;
  std::uint64_t rng_seed = 42;

  void validate() const;
  nlohmann::json to_json() const;
};

/// Point `index` of a seeded stream, uniform in [-B, B]^dim (counter-based,
/// independent of evaluation order).
std::vector<double> sample_point(const ScanConfig& cfg, std::size_t dim, std::uint64_t index,
                                 std::uint64_t stream = 0);

struct MarginBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  double max_real_part = 0.0;
};

struct ScanReport {
  double max_real_part_off_plane = 0.0;
  double min_real_part_off_plane = 0.0;
  double max_abs_real_part_on_plane = 0.0;
  std::size_t num_samples = 0;
  std::size_t num_on_plane = 0;
  std::vector<std::vector<double>> violations;
  /// Largest real part grouped by |x_last|.
  std::vector<MarginBin> margin_profile;

  bool on_plane_ok(double tol = 1e-9) const { return max_abs_real_part_on_plane <= tol; }
  nlohmann::json to_json() const;
};

ScanReport hurwitz_scan(const PolyMap& F, const ScanConfig& cfg);

/// S with div(rho F) = P^{-(alpha+1)} S, i.e. S = P div F - alpha grad P . F.
Polynomial divergence_numerator(const PolyMap& F, const Density& rho);

struct DensityReport {
  double min_value_off_plane = 0.0;
  double max_scaled_abs_on_plane = 0.0;
  std::size_t num_samples = 0;
  std::size_t num_on_plane = 0;
  std::vector<std::vector<double>> violations;

  bool on_plane_ok(double tol = 1e-12) const { return max_scaled_abs_on_plane <= tol; }
  nlohmann::json to_json() const;
};

/// Off-plane samples must give S > 0; on-plane samples |S| <= 1e-12 * scale.
DensityReport density_scan(const Polynomial& S, const ScanConfig& cfg);

bool integrability_check(const Density& rho);

enum class Termination { converged, max_time, diverged };
std::string to_string(Termination t);

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  Termination terminated = Termination::max_time;
  double final_norm = 0.0;
  std::size_t rejected_steps = 0;

  std::string to_csv() const;
};

struct IntegrateOptions {
  double t_max = 500.0;
  double atol = 1e-9;
  double rtol = 1e-9;
  double converge_norm = 1e-6;
  double diverge_norm = 1e6;
  /// Keep every accepted step; otherwise only the endpoints.
  bool record = true;
};

/// Dormand-Prince 5(4) with adaptive steps.
Trajectory integrate(const CompiledMap& F, std::span<const double> x0, const IntegrateOptions& opts = {});
Trajectory integrate(const PolyMap& F, std::span<const double> x0, const IntegrateOptions& opts = {});

struct RotationCheck {
  std::vector<double> start;
  double max_relative_norm_drift = 0.0;
  double max_abs_plane_coordinate = 0.0;
};

/// One on-plane trajectory per rotation pair, started at the unit vector of
/// its first coordinate.
std::vector<RotationCheck> plane_rotation_check(const PolyMap& F, double t_max = 100.0,
                                                double tol = 1e-10);

struct AttractorOptions {
  IntegrateOptions integrate;
  double min_plane_distance = 0.05;
  double rotation_t_max = 100.0;
  /// Keep the full off-plane trajectories in the summary.
  bool keep_trajectories = false;
};

struct TrajectoryRecord {
  std::vector<double> start;
  Termination terminated = Termination::max_time;
  double final_time = 0.0;
  double final_norm = 0.0;
  double final_plane_coordinate = 0.0;
};

struct AttractorSummary {
  std::size_t num_traj = 0;
  std::size_t num_converged = 0;
  double fraction_converged = 0.0;
  std::vector<TrajectoryRecord> records;
  std::vector<RotationCheck> rotation;
  std::vector<Trajectory> trajectories;  // only with keep_trajectories

  bool rotation_ok(double tol = 1e-6) const;
  nlohmann::json to_json() const;
};

AttractorSummary attractor_experiment(const PolyMap& F, std::size_t num_traj, const ScanConfig& cfg,
                                      const AttractorOptions& opts = {});

/// Laurent-style check of an exponential candidate solution. Candidates are
/// polynomials in E = e^t (variable 0) and W = e^{-t} (variable 1); products
/// are reduced with E W = 1 and d/dt E^a W^b = (a - b) E^a W^b.
Polynomial reduce_exponential(const Polynomial& p);
Polynomial exponential_derivative(const Polynomial& p);
std::vector<Polynomial> exponential_residual(const PolyMap& F, const std::vector<Polynomial>& x);
/// (18 E, -12 E^2, W, 0, ...) for the CEGMH field in dimension n.
std::vector<Polynomial> cegmh_candidate(std::size_t n = 3);

}  // namespace nilmap
