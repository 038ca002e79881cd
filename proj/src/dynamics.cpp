#include "nilmap/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

namespace nilmap {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Runs body(i) for i in [0, count) on a few threads; results must be written
// to per-index slots so the outcome does not depend on scheduling.
template <class Body>
void parallel_for(std::size_t count, Body body) {
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(hw, std::max<std::size_t>(count / 64, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < count; i += workers) body(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double max_real(const std::vector<std::complex<double>>& ev) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& z : ev) m = std::max(m, z.real());
  return m;
}

double min_real(const std::vector<std::complex<double>>& ev) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& z : ev) m = std::min(m, z.real());
  return m;
}

nlohmann::json points_json(const std::vector<std::vector<double>>& pts) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& p : pts) j.push_back(p);
  return j;
}

void balance(std::vector<std::vector<double>>& a, std::size_t n) {
  constexpr double radix = 2.0;
  const double sqrdx = radix * radix;
  bool done = false;
  while (!done) {
    done = true;
    for (std::size_t i = 1; i <= n; ++i) {
      double r = 0.0, c = 0.0;
      for (std::size_t j = 1; j <= n; ++j)
        if (j != i) {
          c += std::abs(a[j][i]);
          r += std::abs(a[i][j]);
        }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix, f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= sqrdx;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sqrdx;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        g = 1.0 / f;
        for (std::size_t j = 1; j <= n; ++j) a[i][j] *= g;
        for (std::size_t j = 1; j <= n; ++j) a[j][i] *= f;
      }
    }
  }
}

void to_hessenberg(std::vector<std::vector<double>>& a, std::size_t n) {
  for (std::size_t m = 2; m < n; ++m) {
    double x = 0.0;
    std::size_t i = m;
    for (std::size_t j = m; j <= n; ++j)
      if (std::abs(a[j][m - 1]) > std::abs(x)) {
        x = a[j][m - 1];
        i = j;
      }
    if (i != m) {
      for (std::size_t j = m - 1; j <= n; ++j) std::swap(a[i][j], a[m][j]);
      for (std::size_t j = 1; j <= n; ++j) std::swap(a[j][i], a[j][m]);
    }
    if (x == 0.0) continue;
    for (i = m + 1; i <= n; ++i) {
      double y = a[i][m - 1];
      if (y == 0.0) continue;
      y /= x;
      a[i][m - 1] = y;
      for (std::size_t j = m; j <= n; ++j) a[i][j] -= y * a[m][j];
      for (std::size_t j = 1; j <= n; ++j) a[j][m] += y * a[j][i];
    }
  }
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j + 1 < i; ++j) a[i][j] = 0.0;
}

// Francis double-shift QR on an upper Hessenberg matrix (1-based storage).
std::vector<std::complex<double>> hessenberg_qr(std::vector<std::vector<double>>& a, std::size_t n) {
  std::vector<double> wr(n + 1, 0.0), wi(n + 1, 0.0);
  double anorm = 0.0;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = std::max<std::size_t>(i - 1, 1); j <= n; ++j) anorm += std::abs(a[i][j]);

  const std::size_t max_sweeps = 100 * n;
  std::size_t sweeps = 0;
  long nn = static_cast<long>(n);
  double t = 0.0;
  while (nn >= 1) {
    int its = 0;
    long l;
    do {
      for (l = nn; l >= 2; --l) {
        double s = std::abs(a[l - 1][l - 1]) + std::abs(a[l][l]);
        if (s == 0.0) s = anorm;
        if (std::abs(a[l][l - 1]) + s == s) {
          a[l][l - 1] = 0.0;
          break;
        }
      }
      double x = a[nn][nn];
      if (l == nn) {
        wr[nn] = x + t;
        wi[nn--] = 0.0;
      } else {
        double y = a[nn - 1][nn - 1];
        double w = a[nn][nn - 1] * a[nn - 1][nn];
        if (l == nn - 1) {
          double p = 0.5 * (y - x);
          double q = p * p + w;
          double z = std::sqrt(std::abs(q));
          x += t;
          if (q >= 0.0) {
            z = p + std::copysign(z, p);
            wr[nn - 1] = wr[nn] = x + z;
            if (z != 0.0) wr[nn] = x - w / z;
            wi[nn - 1] = wi[nn] = 0.0;
          } else {
            wr[nn - 1] = wr[nn] = x + p;
            wi[nn - 1] = -(wi[nn] = z);
          }
          nn -= 2;
        } else {
          if (++sweeps > max_sweeps) throw NumericError("eigenvalues: QR iteration did not converge");
          if (its > 0 && its % 10 == 0) {
            t += x;
            for (long i = 1; i <= nn; ++i) a[i][i] -= x;
            double s = std::abs(a[nn][nn - 1]) + std::abs(a[nn - 1][nn - 2]);
            y = x = 0.75 * s;
            w = -0.4375 * s * s;
          }
          ++its;
          long m;
          double p = 0, q = 0, r = 0, z = 0;
          for (m = nn - 2; m >= l; --m) {
            z = a[m][m];
            r = x - z;
            double s = y - z;
            p = (r * s - w) / a[m + 1][m] + a[m][m + 1];
            q = a[m + 1][m + 1] - z - r - s;
            r = a[m + 2][m + 1];
            s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            double u = std::abs(a[m][m - 1]) * (std::abs(q) + std::abs(r));
            double v = std::abs(p) * (std::abs(a[m - 1][m - 1]) + std::abs(z) + std::abs(a[m + 1][m + 1]));
            if (u + v == v) break;
          }
          for (long i = m + 2; i <= nn; ++i) {
            a[i][i - 2] = 0.0;
            if (i != m + 2) a[i][i - 3] = 0.0;
          }
          for (long k = m; k <= nn - 1; ++k) {
            if (k != m) {
              p = a[k][k - 1];
              q = a[k + 1][k - 1];
              r = 0.0;
              if (k != nn - 1) r = a[k + 2][k - 1];
              if ((x = std::abs(p) + std::abs(q) + std::abs(r)) != 0.0) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            double s = std::copysign(std::sqrt(p * p + q * q + r * r), p);
            if (s == 0.0) continue;
            if (k == m) {
              if (l != m) a[k][k - 1] = -a[k][k - 1];
            } else {
              a[k][k - 1] = -s * x;
            }
            p += s;
            x = p / s;
            y = q / s;
            z = r / s;
            q /= p;
            r /= p;
            for (long j = k; j <= nn; ++j) {
              p = a[k][j] + q * a[k + 1][j];
              if (k != nn - 1) {
                p += r * a[k + 2][j];
                a[k + 2][j] -= p * z;
              }
              a[k + 1][j] -= p * y;
              a[k][j] -= p * x;
            }
            long mmin = nn < k + 3 ? nn : k + 3;
            for (long i = l; i <= mmin; ++i) {
              p = x * a[i][k] + y * a[i][k + 1];
              if (k != nn - 1) {
                p += z * a[i][k + 2];
                a[i][k + 2] -= p * r;
              }
              a[i][k + 1] -= p * q;
              a[i][k] -= p;
            }
          }
        }
      }
    } while (l < nn - 1);
  }
  std::vector<std::complex<double>> out;
  out.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) out.emplace_back(wr[i], wi[i]);
  return out;
}

}  // namespace

CompiledPolynomial::CompiledPolynomial(const Polynomial& p) : nvars_(p.nvars()) {
  for (const auto& t : p.terms()) {
    Entry e{t.coef.get_d(), {}};
    for (std::size_t v = 0; v < p.nvars(); ++v)
      if (t.mono.exp[v] != 0)
        e.factors.emplace_back(static_cast<std::uint16_t>(v), t.mono.exp[v]);
    entries_.push_back(std::move(e));
  }
}

double CompiledPolynomial::operator()(std::span<const double> x) const {
  if (x.size() != nvars_) throw DimensionError("eval: point length mismatch");
  double acc = 0.0;
  for (const auto& e : entries_) {
    double term = e.coef;
    for (auto [v, k] : e.factors) {
      const double b = x[v];
      double pw = b;
      for (unsigned i = 1; i < k; ++i) pw *= b;
      term *= pw;
    }
    acc += term;
  }
  return acc;
}

CompiledMap::CompiledMap(const PolyMap& f) {
  for (const auto& c : f.components()) comps_.emplace_back(c);
}

void CompiledMap::operator()(std::span<const double> x, std::span<double> out) const {
  for (std::size_t i = 0; i < comps_.size(); ++i) out[i] = comps_[i](x);
}

std::vector<double> CompiledMap::operator()(std::span<const double> x) const {
  std::vector<double> out(comps_.size());
  (*this)(x, out);
  return out;
}

CompiledJacobian::CompiledJacobian(const PolyMap& f) : n_(f.arity()) {
  const PolyMatrix j = jacobian_of(f);
  for (std::size_t r = 0; r < n_; ++r)
    for (std::size_t c = 0; c < n_; ++c) entries_.emplace_back(j(r, c));
}

Matrix CompiledJacobian::operator()(std::span<const double> x) const {
  Matrix m(n_);
  for (std::size_t i = 0; i < entries_.size(); ++i) m.a[i] = entries_[i](x);
  return m;
}

Matrix jacobian_at(const PolyMap& F, std::span<const double> point) {
  if (point.size() != F.arity()) throw DimensionError("jacobian_at: point length mismatch");
  return CompiledJacobian(F)(point);
}

std::vector<std::complex<double>> eigenvalues(const Matrix& m) {
  const std::size_t n = m.n;
  if (m.a.size() != n * n) throw DimensionError("eigenvalues: matrix is not square");
  for (double v : m.a)
    if (!std::isfinite(v)) throw NumericError("eigenvalues: non-finite entry");
  if (n == 0) return {};
  std::vector<std::vector<double>> a(n + 1, std::vector<double>(n + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i + 1][j + 1] = m(i, j);
  balance(a, n);
  to_hessenberg(a, n);
  auto ev = hessenberg_qr(a, n);
  std::sort(ev.begin(), ev.end(), [](const auto& x, const auto& y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  });
  return ev;
}

void ScanConfig::validate() const {
  if (num_samples < 1) throw std::invalid_argument("scan: num_samples must be at least 1");
  if (!(box_halfwidth > 0.0)) throw std::invalid_argument("scan: box half-width must be positive");
  if (!(plane_exclusion >= 0.0)) throw std::invalid_argument("scan: plane exclusion must be >= 0");
  if (plane_exclusion >= box_halfwidth)
    throw std::invalid_argument("scan: plane exclusion must be below the box half-width");
}

nlohmann::json ScanConfig::to_json() const {
  return {{"num_samples", num_samples},
          {"box_halfwidth", box_halfwidth},
          {"plane_exclusion", plane_exclusion},
          {"rng_seed", rng_seed}};
}

std::vector<double> sample_point(const ScanConfig& cfg, std::size_t dim, std::uint64_t index,
                                 std::uint64_t stream) {
  std::uint64_t key = splitmix64(cfg.rng_seed);
  key = splitmix64(key ^ splitmix64(index));
  key = splitmix64(key ^ splitmix64(stream + 0x5851F42D4C957F2Dull));
  std::mt19937_64 gen(key);
  std::uniform_real_distribution<double> dist(-cfg.box_halfwidth, cfg.box_halfwidth);
  std::vector<double> x(dim);
  for (auto& v : x) v = dist(gen);
  return x;
}

nlohmann::json ScanReport::to_json() const {
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& b : margin_profile)
    bins.push_back({{"abs_last_lower", b.lower},
                    {"abs_last_upper", b.upper},
                    {"count", b.count},
                    {"max_real_part", b.max_real_part}});
  return {{"max_real_part_off_plane", max_real_part_off_plane},
          {"min_real_part_off_plane", min_real_part_off_plane},
          {"max_abs_real_part_on_plane", max_abs_real_part_on_plane},
          {"num_samples", num_samples},
          {"num_on_plane", num_on_plane},
          {"violations", points_json(violations)},
          {"margin_profile", bins}};
}

ScanReport hurwitz_scan(const PolyMap& F, const ScanConfig& cfg) {
  cfg.validate();
  const std::size_t dim = F.arity();
  const CompiledJacobian jac(F);
  const std::size_t count = cfg.num_samples;

  std::vector<std::vector<double>> points(count);
  std::vector<double> hi(count), lo(count), on_plane(count);
  parallel_for(count, [&](std::size_t i) {
    std::vector<double> x;
    for (std::uint64_t attempt = 0;; ++attempt) {
      x = sample_point(cfg, dim, i, attempt);
      if (std::abs(x.back()) >= cfg.plane_exclusion && (cfg.plane_exclusion > 0.0 || x.back() != 0.0))
        break;
    }
    auto ev = eigenvalues(jac(x));
    hi[i] = max_real(ev);
    lo[i] = min_real(ev);
    points[i] = x;

    std::vector<double> p = sample_point(cfg, dim, i, 1u << 20);
    p.back() = 0.0;
    double m = 0.0;
    for (const auto& z : eigenvalues(jac(p))) m = std::max(m, std::abs(z.real()));
    on_plane[i] = m;
  });

  ScanReport rep;
  rep.num_samples = count;
  rep.num_on_plane = count;
  rep.max_real_part_off_plane = -std::numeric_limits<double>::infinity();
  rep.min_real_part_off_plane = std::numeric_limits<double>::infinity();

  std::vector<double> edges{cfg.plane_exclusion};
  for (double e : {1e-2, 1e-1, 1.0})
    if (e > cfg.plane_exclusion && e < cfg.box_halfwidth) edges.push_back(e);
  edges.push_back(cfg.box_halfwidth);
  for (std::size_t b = 0; b + 1 < edges.size(); ++b)
    rep.margin_profile.push_back({edges[b], edges[b + 1], 0, -std::numeric_limits<double>::infinity()});

  for (std::size_t i = 0; i < count; ++i) {
    rep.max_real_part_off_plane = std::max(rep.max_real_part_off_plane, hi[i]);
    rep.min_real_part_off_plane = std::min(rep.min_real_part_off_plane, lo[i]);
    rep.max_abs_real_part_on_plane = std::max(rep.max_abs_real_part_on_plane, on_plane[i]);
    if (hi[i] >= 0.0) rep.violations.push_back(points[i]);
    const double d = std::abs(points[i].back());
    for (auto& bin : rep.margin_profile)
      if (d >= bin.lower && (d < bin.upper || &bin == &rep.margin_profile.back())) {
        ++bin.count;
        bin.max_real_part = std::max(bin.max_real_part, hi[i]);
        break;
      }
  }
  std::erase_if(rep.margin_profile, [](const MarginBin& b) { return b.count == 0; });
  return rep;
}

Polynomial divergence_numerator(const PolyMap& F, const Density& rho) {
  const std::size_t n = F.arity();
  if (rho.P.nvars() != n) throw DimensionError("divergence_numerator: density dimension mismatch");
  Polynomial div(n), flux(n);
  for (std::size_t i = 0; i < n; ++i) {
    div += F[i].partial(i);
    flux += rho.P.partial(i) * F[i];
  }
  return rho.P * div - flux * rho.alpha;
}

nlohmann::json DensityReport::to_json() const {
  return {{"min_value_off_plane", min_value_off_plane},
          {"max_scaled_abs_on_plane", max_scaled_abs_on_plane},
          {"num_samples", num_samples},
          {"num_on_plane", num_on_plane},
          {"violations", points_json(violations)}};
}

DensityReport density_scan(const Polynomial& S, const ScanConfig& cfg) {
  cfg.validate();
  const std::size_t dim = S.nvars();
  const CompiledPolynomial value(S);
  std::vector<Term> abs_terms(S.terms().begin(), S.terms().end());
  for (auto& t : abs_terms) t.coef = abs(t.coef);
  const CompiledPolynomial magnitude(Polynomial::from_terms(dim, std::move(abs_terms)));
  const std::size_t count = cfg.num_samples;

  std::vector<std::vector<double>> points(count);
  std::vector<double> vals(count), on_plane(count);
  parallel_for(count, [&](std::size_t i) {
    std::vector<double> x;
    for (std::uint64_t attempt = 0;; ++attempt) {
      x = sample_point(cfg, dim, i, attempt);
      if (std::abs(x.back()) >= cfg.plane_exclusion && (cfg.plane_exclusion > 0.0 || x.back() != 0.0))
        break;
    }
    vals[i] = value(x);
    points[i] = x;

    std::vector<double> p = sample_point(cfg, dim, i, 1u << 20);
    p.back() = 0.0;
    std::vector<double> ap(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) ap[k] = std::abs(p[k]);
    const double scale = magnitude(ap);
    on_plane[i] = scale == 0.0 ? 0.0 : std::abs(value(p)) / scale;
  });

  DensityReport rep;
  rep.num_samples = count;
  rep.num_on_plane = count;
  rep.min_value_off_plane = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < count; ++i) {
    rep.min_value_off_plane = std::min(rep.min_value_off_plane, vals[i]);
    rep.max_scaled_abs_on_plane = std::max(rep.max_scaled_abs_on_plane, on_plane[i]);
    if (!(vals[i] > 0.0)) rep.violations.push_back(points[i]);
  }
  return rep;
}

bool integrability_check(const Density& rho) { return rho.alpha > 2; }

std::string to_string(Termination t) {
  switch (t) {
    case Termination::converged:
      return "converged";
    case Termination::max_time:
      return "max_time";
    case Termination::diverged:
      return "diverged";
  }
  return "unknown";
}

std::string Trajectory::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(17);
  const std::size_t d = states.empty() ? 0 : states.front().size();
  os << "t";
  for (std::size_t i = 1; i <= d; ++i) os << ",x" << i;
  os << "\n";
  for (std::size_t k = 0; k < times.size(); ++k) {
    os << times[k];
    for (double v : states[k]) os << "," << v;
    os << "\n";
  }
  return os.str();
}

Trajectory integrate(const PolyMap& F, std::span<const double> x0, const IntegrateOptions& opts) {
  return integrate(CompiledMap(F), x0, opts);
}

Trajectory integrate(const CompiledMap& F, std::span<const double> x0, const IntegrateOptions& opts) {
  const std::size_t n = F.arity();
  if (x0.size() != n) throw DimensionError("integrate: initial state length mismatch");
  for (double v : x0)
    if (!std::isfinite(v)) throw std::invalid_argument("integrate: initial state must be finite");
  if (!(opts.atol > 0.0) || !(opts.rtol > 0.0))
    throw std::invalid_argument("integrate: tolerances must be positive");
  if (!(opts.t_max > 0.0)) throw std::invalid_argument("integrate: t_max must be positive");

  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  Trajectory tr;
  std::vector<double> y(x0.begin(), x0.end()), ynew(n), tmp(n);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
  double t = 0.0;
  auto record = [&](double time, const std::vector<double>& state) {
    tr.times.push_back(time);
    tr.states.push_back(state);
  };
  record(t, y);

  auto classify = [&](const std::vector<double>& s) -> std::optional<Termination> {
    for (double v : s)
      if (!std::isfinite(v)) return Termination::diverged;
    const double nr = norm2(s);
    if (nr < opts.converge_norm) return Termination::converged;
    if (nr > opts.diverge_norm) return Termination::diverged;
    return std::nullopt;
  };
  auto scaled_norm = [&](const std::vector<double>& v, const std::vector<double>& ref) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sc = opts.atol + opts.rtol * std::abs(ref[i]);
      s += (v[i] / sc) * (v[i] / sc);
    }
    return std::sqrt(s / static_cast<double>(n));
  };

  if (auto c = classify(y)) {
    tr.terminated = *c;
    tr.final_norm = norm2(y);
    return tr;
  }

  F(y, k1);
  // Initial step size (Hairer, Norsett & Wanner, II.4).
  double h;
  {
    const double d0 = scaled_norm(y, y), d1 = scaled_norm(k1, y);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h0 * k1[i];
    F(tmp, k2);
    for (std::size_t i = 0; i < n; ++i) k3[i] = k2[i] - k1[i];
    const double d2 = scaled_norm(k3, y) / h0;
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 5.0);
    h = std::min({100 * h0, h1, opts.t_max});
  }

  Termination status = Termination::max_time;
  while (t < opts.t_max) {
    if (h < 1e-14 * std::max(1.0, std::abs(t))) throw NumericError("integrate: step size underflow");
    const bool last = t + h >= opts.t_max;
    if (last) h = opts.t_max - t;

    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    F(tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    F(tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    F(tmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    F(tmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    F(tmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    F(ynew, k7);

    double err = 0.0;
    bool finite = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = opts.atol + opts.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      err += (e / sc) * (e / sc);
      finite = finite && std::isfinite(ynew[i]);
    }
    err = std::sqrt(err / static_cast<double>(n));
    if (!finite) err = std::numeric_limits<double>::infinity();

    if (err <= 1.0) {
      t = last ? opts.t_max : t + h;
      y.swap(ynew);
      k1.swap(k7);
      if (opts.record) record(t, y);
      if (auto c = classify(y)) {
        status = *c;
        break;
      }
      const double fac = err == 0.0 ? 10.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 10.0);
      h *= fac;
    } else {
      ++tr.rejected_steps;
      h *= std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.1;
    }
  }
  if (!opts.record) record(t, y);
  tr.terminated = status;
  tr.final_norm = norm2(y);
  return tr;
}

std::vector<RotationCheck> plane_rotation_check(const PolyMap& F, double t_max, double tol) {
  const std::size_t dim = F.arity();
  if (dim < 3 || dim % 2 == 0) throw DimensionError("plane_rotation_check: expected n+1 with n even");
  const CompiledMap f(F);
  IntegrateOptions opts;
  opts.t_max = t_max;
  opts.atol = tol;
  opts.rtol = tol;
  opts.converge_norm = 0.0;
  opts.diverge_norm = std::numeric_limits<double>::infinity();
  std::vector<RotationCheck> out((dim - 1) / 2);
  parallel_for(out.size(), [&](std::size_t j) {
    std::vector<double> x0(dim, 0.0);
    x0[2 * j] = 1.0;
    Trajectory tr = integrate(f, x0, opts);
    RotationCheck rc{x0, 0.0, 0.0};
    for (const auto& s : tr.states) {
      rc.max_relative_norm_drift = std::max(rc.max_relative_norm_drift, std::abs(norm2(s) - 1.0));
      rc.max_abs_plane_coordinate = std::max(rc.max_abs_plane_coordinate, std::abs(s.back()));
    }
    out[j] = std::move(rc);
  });
  return out;
}

bool AttractorSummary::rotation_ok(double tol) const {
  for (const auto& r : rotation)
    if (r.max_relative_norm_drift > tol || r.max_abs_plane_coordinate != 0.0) return false;
  return true;
}

nlohmann::json AttractorSummary::to_json() const {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : records)
    recs.push_back({{"start", r.start},
                    {"terminated", to_string(r.terminated)},
                    {"final_time", r.final_time},
                    {"final_norm", r.final_norm},
                    {"final_plane_coordinate", r.final_plane_coordinate}});
  nlohmann::json rot = nlohmann::json::array();
  for (const auto& r : rotation)
    rot.push_back({{"start", r.start},
                   {"max_relative_norm_drift", r.max_relative_norm_drift},
                   {"max_abs_plane_coordinate", r.max_abs_plane_coordinate}});
  return {{"num_traj", num_traj},
          {"num_converged", num_converged},
          {"fraction_converged", fraction_converged},
          {"trajectories", recs},
          {"on_plane", rot}};
}

AttractorSummary attractor_experiment(const PolyMap& F, std::size_t num_traj, const ScanConfig& cfg,
                                      const AttractorOptions& opts) {
  AttractorSummary s;
  s.num_traj = num_traj;
  if (num_traj == 0) return s;
  if (!(cfg.box_halfwidth > opts.min_plane_distance))
    throw std::invalid_argument("attractor_experiment: box must extend beyond the plane distance");
  const std::size_t dim = F.arity();
  const CompiledMap f(F);
  IntegrateOptions io = opts.integrate;
  io.record = opts.keep_trajectories;

  s.records.resize(num_traj);
  if (opts.keep_trajectories) s.trajectories.resize(num_traj);
  parallel_for(num_traj, [&](std::size_t i) {
    std::vector<double> x0;
    for (std::uint64_t attempt = 0;; ++attempt) {
      x0 = sample_point(cfg, dim, i, attempt);
      if (std::abs(x0.back()) >= opts.min_plane_distance) break;
    }
    Trajectory tr = integrate(f, x0, io);
    s.records[i] = {x0, tr.terminated, tr.times.back(), tr.final_norm, tr.states.back().back()};
    if (opts.keep_trajectories) s.trajectories[i] = std::move(tr);
  });
  for (const auto& r : s.records)
    if (r.terminated == Termination::converged) ++s.num_converged;
  s.fraction_converged = static_cast<double>(s.num_converged) / static_cast<double>(num_traj);
  s.rotation = plane_rotation_check(F, opts.rotation_t_max);
  return s;
}

Polynomial reduce_exponential(const Polynomial& p) {
  if (p.nvars() != 2) throw DimensionError("exponential polynomials use two variables (E, W)");
  std::vector<Term> terms;
  for (const auto& t : p.terms()) {
    const unsigned a = t.mono.exp[0], b = t.mono.exp[1];
    const unsigned m = std::min(a, b);
    terms.push_back({Monomial::variable(0, static_cast<std::uint16_t>(a - m)) *
                         Monomial::variable(1, static_cast<std::uint16_t>(b - m)),
                     t.coef});
  }
  return Polynomial::from_terms(2, std::move(terms));
}

Polynomial exponential_derivative(const Polynomial& p) {
  const Polynomial r = reduce_exponential(p);
  std::vector<Term> terms;
  for (const auto& t : r.terms()) {
    const long rate = static_cast<long>(t.mono.exp[0]) - static_cast<long>(t.mono.exp[1]);
    terms.push_back({t.mono, t.coef * Rational(rate)});
  }
  return Polynomial::from_terms(2, std::move(terms));
}

std::vector<Polynomial> exponential_residual(const PolyMap& F, const std::vector<Polynomial>& x) {
  if (x.size() != F.arity()) throw DimensionError("exponential_residual: candidate length mismatch");
  std::vector<Polynomial> out;
  for (std::size_t i = 0; i < x.size(); ++i)
    out.push_back(exponential_derivative(x[i]) - reduce_exponential(F[i].compose(x)));
  return out;
}

std::vector<Polynomial> cegmh_candidate(std::size_t n) {
  if (n < 3) throw DimensionError("cegmh candidate: dimension must be at least 3");
  const Polynomial e = Polynomial::variable(2, 0), w = Polynomial::variable(2, 1);
  std::vector<Polynomial> x{e * Rational(18), e * e * Rational(-12), w};
  for (std::size_t i = 3; i < n; ++i) x.emplace_back(2);
  return x;
}

}  // namespace nilmap
