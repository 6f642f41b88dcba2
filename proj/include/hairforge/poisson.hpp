#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hairforge/image.hpp"

namespace hairforge {

enum class SolverMethod { gauss_seidel, conjugate_gradient };

struct SolverConfig {
  SolverMethod method = SolverMethod::conjugate_gradient;
  std::size_t max_iterations = 10000;
  // Max-norm residual threshold on the [0,1] intensity scale.
  double tolerance = 1e-4;

  // Throws ConfigError unless tolerance > 0 and max_iterations >= 1.
  void validate() const;
};

enum class BlendMode { naive, membrane, guided, two_step };

std::string_view to_string(SolverMethod method);
std::string_view to_string(BlendMode mode);
std::optional<SolverMethod> parse_solver_method(std::string_view name);
std::optional<BlendMode> parse_blend_mode(std::string_view name);

enum class Guidance {
  // Zero guidance: the solution is discrete-harmonic inside the mask.
  membrane,
  // Guidance is the source gradient; the right-hand side is the source's
  // discrete Laplacian.
  source_gradient,
};

// One channel's discrete Poisson system over the mask pixels. The matrix is
// the implicit 5-point stencil: row p reads
//   4*r_p - sum_{q in N4(p), q in mask} r_q = rhs_p + sum_{q in N4(p), q not in mask} d_q
class PoissonProblem {
 public:
  static constexpr int kNoRow = -1;

  Size size() const { return size_; }
  std::size_t rows() const { return pixel_of_row_.size(); }

  // Row index of each pixel (kNoRow outside the mask).
  std::span<const int> row_of_pixel() const { return row_of_pixel_; }
  std::span<const std::size_t> pixel_of_row() const { return pixel_of_row_; }
  // Row indices of the four neighbours, kNoRow where the neighbour is a
  // Dirichlet pixel.
  std::span<const std::array<int, 4>> neighbours() const { return neighbours_; }
  // Guidance part of the right-hand side (0 for membrane problems).
  std::span<const double> rhs() const { return rhs_; }
  // Destination values at the outer boundary, keyed by pixel index, ascending.
  std::span<const std::pair<std::size_t, double>> boundary_values() const { return boundary_values_; }
  // rhs plus the Dirichlet contributions: the full right-hand side b.
  std::span<const double> system_rhs() const { return system_rhs_; }

  // out = A x.
  void apply(std::span<const double> x, std::span<double> out) const;
  // max_p |b_p - (A x)_p|; 0 for an empty system.
  double residual_max_norm(std::span<const double> x) const;

 private:
  friend PoissonProblem assemble(const Plane&, const Plane&, const BinaryMask&, Guidance);

  Size size_;
  std::vector<int> row_of_pixel_;
  std::vector<std::size_t> pixel_of_row_;
  std::vector<std::array<int, 4>> neighbours_;
  std::vector<double> rhs_;
  std::vector<std::pair<std::size_t, double>> boundary_values_;
  std::vector<double> system_rhs_;
};

// Builds the system for one channel. `source` is only read for
// Guidance::source_gradient. Throws MaskTouchesBorder if a mask pixel lies on
// the image border, DimensionMismatch on size disagreement.
PoissonProblem assemble(const Plane& source, const Plane& destination, const BinaryMask& mask, Guidance guidance);

struct SolveResult {
  std::vector<double> values;
  std::size_t iterations = 0;
  // Max-norm residual of `values`, recomputed from scratch at exit.
  double residual = 0.0;
};

// Iterates until the max-norm residual is <= config.tolerance. An empty
// initial guess starts from zero. Throws DidNotConverge.
SolveResult solve(const PoissonProblem& problem, const SolverConfig& config,
                  std::span<const double> initial_guess = {});

struct BlendRequest {
  RasterImage source;
  RasterImage destination;
  BinaryMask mask;
  BlendMode mode = BlendMode::two_step;
  SolverConfig solver;
};

struct ChannelDiagnostics {
  std::size_t iterations = 0;
  double residual = 0.0;
};

struct BlendDiagnostics {
  // One entry per channel solve, in execution order (two_step lists step 1's
  // channels before step 2's).
  std::vector<ChannelDiagnostics> solves;

  std::size_t total_iterations() const;
  double max_residual() const;
};

struct BlendResult {
  RasterImage image;
  BlendDiagnostics diagnostics;
};

// Pointwise selection: source inside the mask, destination elsewhere.
RasterImage blend_naive(const BlendRequest& req);

// Per-channel membrane (mode membrane) or source-guided (mode guided) solve.
// Pixels outside the mask are copied from the destination unchanged.
BlendResult blend_poisson(const BlendRequest& req);

// Step 1 blends the destination into the source over the mask complement
// (border ring excluded); step 2 blends that intermediate into the
// destination over the original mask. Both steps use source guidance.
BlendResult blend_two_step(const BlendRequest& req);

// Dispatches on req.mode.
BlendResult blend(const BlendRequest& req);

}  // namespace hairforge
