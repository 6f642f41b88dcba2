#include "hairforge/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hairforge/errors.hpp"
#include "hairforge/morphology.hpp"

namespace hairforge {

namespace {

constexpr int kDx[4] = {1, -1, 0, 0};
constexpr int kDy[4] = {0, 0, 1, -1};
constexpr double kDiagonal = 4.0;

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void residual_into(const PoissonProblem& problem, std::span<const double> x, std::span<double> r) {
  problem.apply(x, r);
  const auto b = problem.system_rhs();
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
}

// Preconditioned CG with the (constant) diagonal as preconditioner. The
// recursive residual only triggers a convergence test; the true residual
// decides, and a mismatch restarts the recurrence from the true residual.
SolveResult conjugate_gradient(const PoissonProblem& problem, const SolverConfig& config, std::vector<double> x) {
  const std::size_t n = problem.rows();
  std::vector<double> r(n), z(n), p(n), q(n);
  residual_into(problem, x, r);

  SolveResult result;
  if (max_abs(r) <= config.tolerance) {
    result.residual = max_abs(r);
    result.values = std::move(x);
    return result;
  }

  auto restart = [&](double& rz) {
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / kDiagonal;
    p = z;
    rz = dot(r, z);
  };
  double rz = 0.0;
  restart(rz);

  std::size_t it = 0;
  while (it < config.max_iterations) {
    ++it;
    problem.apply(p, q);
    const double pq = dot(p, q);
    if (pq <= 0.0) break;
    const double alpha = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    if (max_abs(r) <= config.tolerance) {
      residual_into(problem, x, r);
      if (max_abs(r) <= config.tolerance) break;
      restart(rz);
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / kDiagonal;
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }

  result.residual = problem.residual_max_norm(x);
  result.iterations = it;
  if (result.residual > config.tolerance) throw DidNotConverge(result.residual, it);
  result.values = std::move(x);
  return result;
}

// Lexicographic Gauss-Seidel sweeps; one iteration is one sweep.
SolveResult gauss_seidel(const PoissonProblem& problem, const SolverConfig& config, std::vector<double> x) {
  const auto b = problem.system_rhs();
  const auto nbrs = problem.neighbours();
  SolveResult result;
  double residual = problem.residual_max_norm(x);
  std::size_t it = 0;
  while (residual > config.tolerance && it < config.max_iterations) {
    ++it;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double s = b[i];
      for (int k = 0; k < 4; ++k) {
        if (nbrs[i][k] != PoissonProblem::kNoRow) s += x[static_cast<std::size_t>(nbrs[i][k])];
      }
      x[i] = s / kDiagonal;
    }
    residual = problem.residual_max_norm(x);
  }
  result.iterations = it;
  result.residual = residual;
  if (residual > config.tolerance) throw DidNotConverge(residual, it);
  result.values = std::move(x);
  return result;
}

void require_same_size(const BlendRequest& req) {
  if (req.source.size() != req.destination.size() || req.mask.size() != req.destination.size()) {
    throw DimensionMismatch("source, destination and mask must share dimensions");
  }
  if (req.source.channels() != req.destination.channels()) {
    throw DimensionMismatch("source and destination channel counts differ");
  }
}

// Blends one pair of images with source guidance or membrane, appending one
// diagnostics entry per channel.
RasterImage blend_channels(const RasterImage& source, const RasterImage& destination, const BinaryMask& mask,
                           Guidance guidance, const SolverConfig& config, BlendDiagnostics& diagnostics) {
  if (mask.touches_border()) throw MaskTouchesBorder("blend mask has pixels on the image border");
  RasterImage out = destination;
  for (int c = 0; c < destination.channels(); ++c) {
    const Plane src = source.channel(c);
    Plane dst = destination.channel(c);
    const PoissonProblem problem = assemble(src, dst, mask, guidance);

    std::vector<double> guess(problem.rows());
    if (guidance == Guidance::source_gradient) {
      for (std::size_t i = 0; i < guess.size(); ++i) guess[i] = src.data()[problem.pixel_of_row()[i]];
    } else if (!problem.boundary_values().empty()) {
      double mean = 0.0;
      for (const auto& [pixel, v] : problem.boundary_values()) mean += v;
      mean /= static_cast<double>(problem.boundary_values().size());
      std::fill(guess.begin(), guess.end(), mean);
    }

    const SolveResult solved = solve(problem, config, guess);
    diagnostics.solves.push_back({solved.iterations, solved.residual});
    for (std::size_t i = 0; i < solved.values.size(); ++i) dst.data()[problem.pixel_of_row()[i]] = solved.values[i];
    out.set_channel(c, dst);
  }
  return out;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(tolerance > 0.0)) throw ConfigError("solver tolerance must be positive");
  if (max_iterations < 1) throw ConfigError("solver max_iterations must be at least 1");
}

std::string_view to_string(SolverMethod method) {
  switch (method) {
    case SolverMethod::gauss_seidel:
      return "gauss_seidel";
    case SolverMethod::conjugate_gradient:
      return "conjugate_gradient";
  }
  return "unknown";
}

std::string_view to_string(BlendMode mode) {
  switch (mode) {
    case BlendMode::naive:
      return "naive";
    case BlendMode::membrane:
      return "membrane";
    case BlendMode::guided:
      return "guided";
    case BlendMode::two_step:
      return "two_step";
  }
  return "unknown";
}

std::optional<SolverMethod> parse_solver_method(std::string_view name) {
  if (name == "gauss_seidel") return SolverMethod::gauss_seidel;
  if (name == "conjugate_gradient" || name == "cg") return SolverMethod::conjugate_gradient;
  return std::nullopt;
}

std::optional<BlendMode> parse_blend_mode(std::string_view name) {
  for (BlendMode m : {BlendMode::naive, BlendMode::membrane, BlendMode::guided, BlendMode::two_step}) {
    if (name == to_string(m)) return m;
  }
  return std::nullopt;
}

void PoissonProblem::apply(std::span<const double> x, std::span<double> out) const {
  for (std::size_t i = 0; i < neighbours_.size(); ++i) {
    double v = kDiagonal * x[i];
    for (int k = 0; k < 4; ++k) {
      const int j = neighbours_[i][k];
      if (j != kNoRow) v -= x[static_cast<std::size_t>(j)];
    }
    out[i] = v;
  }
}

double PoissonProblem::residual_max_norm(std::span<const double> x) const {
  std::vector<double> r(rows());
  residual_into(*this, x, r);
  return max_abs(r);
}

PoissonProblem assemble(const Plane& source, const Plane& destination, const BinaryMask& mask, Guidance guidance) {
  if (destination.size() != mask.size() ||
      (guidance == Guidance::source_gradient && source.size() != mask.size())) {
    throw DimensionMismatch("assemble: plane and mask dimensions differ");
  }
  if (mask.touches_border()) throw MaskTouchesBorder("assemble: mask has pixels on the image border");

  PoissonProblem p;
  p.size_ = mask.size();
  p.row_of_pixel_.assign(mask.size().area(), PoissonProblem::kNoRow);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y)) continue;
      const std::size_t pixel = mask.index(x, y);
      p.row_of_pixel_[pixel] = static_cast<int>(p.pixel_of_row_.size());
      p.pixel_of_row_.push_back(pixel);
    }
  }

  const std::size_t n = p.pixel_of_row_.size();
  p.neighbours_.resize(n);
  p.rhs_.assign(n, 0.0);
  p.system_rhs_.assign(n, 0.0);
  std::vector<std::size_t> boundary_pixels;
  for (std::size_t row = 0; row < n; ++row) {
    const int x = static_cast<int>(p.pixel_of_row_[row] % static_cast<std::size_t>(mask.width()));
    const int y = static_cast<int>(p.pixel_of_row_[row] / static_cast<std::size_t>(mask.width()));
    double guidance_rhs = 0.0;
    if (guidance == Guidance::source_gradient) {
      // Summed as differences so a constant source gives exactly zero.
      for (int k = 0; k < 4; ++k) guidance_rhs += source(x, y) - source(x + kDx[k], y + kDy[k]);
    }
    double dirichlet = 0.0;
    for (int k = 0; k < 4; ++k) {
      const int nx = x + kDx[k];
      const int ny = y + kDy[k];
      const std::size_t q = mask.index(nx, ny);
      p.neighbours_[row][k] = p.row_of_pixel_[q];
      if (p.row_of_pixel_[q] == PoissonProblem::kNoRow) {
        dirichlet += destination(nx, ny);
        boundary_pixels.push_back(q);
      }
    }
    p.rhs_[row] = guidance_rhs;
    p.system_rhs_[row] = guidance_rhs + dirichlet;
  }

  std::sort(boundary_pixels.begin(), boundary_pixels.end());
  boundary_pixels.erase(std::unique(boundary_pixels.begin(), boundary_pixels.end()), boundary_pixels.end());
  p.boundary_values_.reserve(boundary_pixels.size());
  for (std::size_t q : boundary_pixels) p.boundary_values_.emplace_back(q, destination.data()[q]);
  return p;
}

SolveResult solve(const PoissonProblem& problem, const SolverConfig& config, std::span<const double> initial_guess) {
  config.validate();
  std::vector<double> x(problem.rows(), 0.0);
  if (!initial_guess.empty()) {
    if (initial_guess.size() != problem.rows()) throw DimensionMismatch("initial guess length differs from row count");
    std::copy(initial_guess.begin(), initial_guess.end(), x.begin());
  }
  if (problem.rows() == 0) return SolveResult{};
  switch (config.method) {
    case SolverMethod::gauss_seidel:
      return gauss_seidel(problem, config, std::move(x));
    case SolverMethod::conjugate_gradient:
      break;
  }
  return conjugate_gradient(problem, config, std::move(x));
}

std::size_t BlendDiagnostics::total_iterations() const {
  std::size_t total = 0;
  for (const auto& s : solves) total += s.iterations;
  return total;
}

double BlendDiagnostics::max_residual() const {
  double m = 0.0;
  for (const auto& s : solves) m = std::max(m, s.residual);
  return m;
}

RasterImage blend_naive(const BlendRequest& req) {
  require_same_size(req);
  RasterImage out = req.destination;
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      if (!req.mask(x, y)) continue;
      for (int c = 0; c < out.channels(); ++c) out.set(x, y, c, req.source.at(x, y, c));
    }
  }
  return out;
}

BlendResult blend_poisson(const BlendRequest& req) {
  require_same_size(req);
  req.solver.validate();
  const Guidance guidance = req.mode == BlendMode::membrane ? Guidance::membrane : Guidance::source_gradient;
  BlendDiagnostics diagnostics;
  RasterImage image = blend_channels(req.source, req.destination, req.mask, guidance, req.solver, diagnostics);
  return {std::move(image), std::move(diagnostics)};
}

BlendResult blend_two_step(const BlendRequest& req) {
  require_same_size(req);
  req.solver.validate();
  if (req.mask.empty()) return {req.destination, {}};
  if (req.mask.touches_border()) throw MaskTouchesBorder("blend mask has pixels on the image border");

  const BinaryMask complement = clear_border(req.mask.complement(), 1);
  if (complement.empty()) throw EmptyRegion("two-step blend: mask complement is empty after border erosion");

  BlendDiagnostics diagnostics;
  const RasterImage intermediate =
      blend_channels(req.destination, req.source, complement, Guidance::source_gradient, req.solver, diagnostics);
  RasterImage image =
      blend_channels(intermediate, req.destination, req.mask, Guidance::source_gradient, req.solver, diagnostics);
  return {std::move(image), std::move(diagnostics)};
}

BlendResult blend(const BlendRequest& req) {
  switch (req.mode) {
    case BlendMode::naive:
      return {blend_naive(req), {}};
    case BlendMode::membrane:
    case BlendMode::guided:
      return blend_poisson(req);
    case BlendMode::two_step:
      return blend_two_step(req);
  }
  throw ConfigError("unknown blend mode");
}

}  // namespace hairforge
