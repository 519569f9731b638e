#pragma once

// Plants, data-collection protocols and receding-horizon simulation.

#include "dpc/execution.hpp"
#include "dpc/ocp.hpp"
#include "dpc/predictor.hpp"
#include "dpc/trajdata.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace dpc {

/// Seeded 64-bit generator. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard; the uniform and normal transforms
/// are implemented here so samples are identical across standard libraries.
class Rng {
 public:
  static constexpr std::string_view algorithm = "mt19937_64";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Standard normal via Box-Muller (both variates used).
  double normal();
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform01() * static_cast<double>(n)); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct Distribution {
  enum class Kind { uniform, gaussian, prbs };
  Kind kind = Kind::uniform;
  double lower = -1.0;  // uniform
  double upper = 1.0;
  double mean = 0.0;    // gaussian
  double stddev = 1.0;
  std::vector<double> levels;  // prbs: i.i.d. draws from these levels

  static Distribution uniform_on(double lo, double hi);
  static Distribution gaussian(double mean, double stddev);
  static Distribution prbs(std::vector<double> levels);

  void validate() const;
  double sample(Rng& rng) const;
  Vector sample(Rng& rng, Index n) const;
};

enum class PlantKind { lti, scalar_quadratic, custom_polynomial };
std::string_view to_string(PlantKind k);

/// Term c * x^i * u^j of a scalar polynomial map x+ = f(x, u).
struct PolynomialTerm {
  double coefficient = 0.0;
  int x_power = 0;
  int u_power = 0;
};

class Plant {
 public:
  static Plant lti(Matrix a, Matrix b, Matrix c, Matrix d);
  /// x+ = 2x^2 + 2u^2 - 1.
  static Plant scalar_quadratic();
  static Plant custom_polynomial(std::vector<PolynomialTerm> terms);

  [[nodiscard]] PlantKind kind() const { return kind_; }
  [[nodiscard]] Index state_dim() const;
  [[nodiscard]] Index input_dim() const;
  [[nodiscard]] Index output_dim() const;
  /// io for lti plants, state_space for the scalar maps (the state is measured).
  [[nodiscard]] Setting setting() const { return kind_ == PlantKind::lti ? Setting::io : Setting::state_space; }

  [[nodiscard]] Vector step(const Vector& x, const Vector& u) const;
  /// y = Cx + Du for lti plants; unused for state_space plants.
  [[nodiscard]] Vector output(const Vector& x, const Vector& u) const;
  /// Scalar map value f(x, u) for the polynomial plants.
  [[nodiscard]] double f(double x, double u) const;

  [[nodiscard]] const Matrix& a() const { return a_; }
  [[nodiscard]] const Matrix& b() const { return b_; }
  [[nodiscard]] const Matrix& c() const { return c_; }
  [[nodiscard]] const Matrix& d() const { return d_; }
  [[nodiscard]] const std::vector<PolynomialTerm>& terms() const { return terms_; }

 private:
  PlantKind kind_ = PlantKind::lti;
  Matrix a_, b_, c_, d_;
  std::vector<PolynomialTerm> terms_;
};

struct ExcitationSpec {
  Distribution input;
  Distribution initial_state;
  Index horizon = 1;   // samples per record
  Index records = 1;
  std::uint64_t seed = 0;
  double output_noise_std = 0.0;  // additive gaussian noise on measured outputs (lti only)

  void validate() const;
};

/// Simulates each record through the plant. Draw order per record:
/// initial state entries, inputs (time-major), then output noise.
TrajectoryBank collect(const Plant& plant, const ExcitationSpec& excitation);

/// Abstract planar atoms: `count` vectors drawn entry-wise from `dist`,
/// stored as one-step state_space records (n = 1, m = 0) so that the data
/// matrix columns are exactly the drawn vectors.
TrajectoryBank collect_abstract_atoms(Index count, const Distribution& dist, std::uint64_t seed);

namespace protocols {
/// Eight standard normal atoms in the plane.
TrajectoryBank planar_gaussian_atoms(std::uint64_t seed, Index count = 8);
/// Twenty one-step samples of the quadratic plant with x0, u uniform on [-1, 1].
TrajectoryBank quadratic_plant_samples(std::uint64_t seed, Index count = 20);
}  // namespace protocols

struct ClosedLoopStep {
  Index step = 0;
  Vector xi;
  Vector u_solved;
  Vector u_applied;
  Vector y_measured;
  Vector y_predicted;  // first block of the optimal output sequence
  double prediction_error = 0.0;
  double cost = 0.0;
  double l1_generator = 0.0;
  std::vector<Index> support;
  /// Set when a PWA map was supplied and (xi, u*) lies in its parameter box.
  bool region_checked = false;
  Index region = -1;
  /// Some containing region reproduces the optimal generator and its support contains the step's support.
  bool support_matches_region = true;
};

struct ClosedLoopLog {
  std::vector<ClosedLoopStep> steps;
  bool truncated = false;
  Index failed_step = -1;
  std::string failure;
};

struct ClosedLoopInit {
  Vector plant_state;   // true state at the start of the past window
  Matrix past_inputs;   // m x N_p applied before the first solve (io only)
};

struct ClosedLoopOptions {
  const PwaFunction* pwa = nullptr;
  ToleranceConfig tol = default_tolerances();
};

/// Solve, apply the first input, advance the plant, shift the regressor.
ClosedLoopLog run_closed_loop(const Plant& plant, const OcpSpec& spec, const ClosedLoopInit& init, Index steps,
                              const ClosedLoopOptions& options = {});

struct ErrorMapRow {
  double x0 = 0.0;
  double u = 0.0;
  double plant = 0.0;
  double predictor = 0.0;
  double abs_error = 0.0;
};

using PredictorHandle = std::function<double(double x0, double u)>;

/// |predictor - f(x0, u)| over the grid xs x us (scalar plants only).
std::vector<ErrorMapRow> prediction_error_map(const Plant& plant, const PredictorHandle& predictor,
                                              const std::vector<double>& xs, const std::vector<double>& us,
                                              Execution exec = Execution::parallel);

/// Predictor handle solving the pointwise problem at (x0, u).
PredictorHandle pointwise_handle(const PredictorSpec& spec);
/// Predictor handle evaluating an explicit map.
PredictorHandle explicit_handle(const PwaFunction& pwa);

std::vector<double> linspace(double lo, double hi, Index n);

void write_closed_loop_csv(std::ostream& out, const ClosedLoopLog& log);
void write_error_map_csv(std::ostream& out, const std::vector<ErrorMapRow>& rows);

}  // namespace dpc
