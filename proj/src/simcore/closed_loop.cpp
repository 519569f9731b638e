#include "dpc/simcore.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <ostream>

namespace dpc {
namespace {

constexpr double kGeneratorMatchTol = 1e-6;

std::vector<Index> signed_support(const Vector& a, const ToleranceConfig& tol) {
  std::vector<Index> s;
  const double threshold = tol.active * std::max(1.0, a.cwiseAbs().maxCoeff());
  for (Index i = 0; i < a.size(); ++i)
    if (std::abs(a(i)) > threshold) s.push_back(i);
  return s;
}

bool inside(const Box& box, const Vector& z) {
  if (box.size() != z.size()) return false;
  const double slack = 1e-9;
  return ((z - box.lower).array() >= -slack).all() && ((box.upper - z).array() >= -slack).all();
}

void shift_append(Matrix& window, const Vector& column) {
  if (window.cols() == 0) return;
  const Index k = window.cols();
  if (k > 1) window.leftCols(k - 1) = window.rightCols(k - 1).eval();
  window.col(k - 1) = column;
}

}  // namespace

ClosedLoopLog run_closed_loop(const Plant& plant, const OcpSpec& spec, const ClosedLoopInit& init, Index steps,
                              const ClosedLoopOptions& options) {
  if (steps < 0) throw Error(ErrorKind::invalid_argument, "closed loop needs steps >= 0");
  spec.validate(options.tol);
  const auto& dims = spec.dict.dims();
  if (dims.setting != plant.setting())
    throw Error(ErrorKind::invalid_argument, "plant and data matrix use different settings");
  if (dims.m != plant.input_dim())
    throw Error(ErrorKind::dimension_mismatch, "plant input dimension differs from the data");
  const Index meas_dim = plant.setting() == Setting::io ? plant.output_dim() : plant.state_dim();
  if (dims.p != meas_dim) throw Error(ErrorKind::dimension_mismatch, "plant output dimension differs from the data");
  if (init.plant_state.size() != plant.state_dim())
    throw Error(ErrorKind::dimension_mismatch, "initial plant state has the wrong dimension");

  Vector x = init.plant_state;
  Matrix past_u, past_y;
  if (plant.setting() == Setting::io) {
    if (init.past_inputs.rows() != dims.m || init.past_inputs.cols() != dims.past)
      throw Error(ErrorKind::dimension_mismatch, "past inputs must be m x N_p");
    past_u = init.past_inputs;
    past_y.resize(dims.p, dims.past);
    for (Index k = 0; k < dims.past; ++k) {
      const Vector u = past_u.col(k);
      past_y.col(k) = plant.output(x, u);
      x = plant.step(x, u);
    }
  }

  ClosedLoopLog log;
  for (Index k = 0; k < steps; ++k) {
    ClosedLoopStep entry;
    entry.step = k;
    entry.xi = plant.setting() == Setting::io ? extract_regressor(past_u, past_y, dims.past) : x;

    OcpSolution sol;
    try {
      sol = solve_ocp(spec, entry.xi, options.tol);
    } catch (const Error& e) {
      log.truncated = true;
      log.failed_step = k;
      log.failure = e.what();
      break;
    }
    entry.u_solved = sol.u.head(dims.m);
    entry.u_applied = entry.u_solved;
    entry.y_predicted = sol.y.head(dims.p);
    entry.cost = sol.cost;
    if (spec.regularized()) {
      entry.l1_generator = sol.a_pm.sum();
      entry.support = generator_support(sol.a_pm, options.tol);
    } else {
      entry.l1_generator = sol.a.lpNorm<1>();
      entry.support = signed_support(sol.a, options.tol);
    }

    if (options.pwa != nullptr && spec.regularized()) {
      Vector z(entry.xi.size() + sol.u.size());
      z << entry.xi, sol.u;
      entry.region_checked = inside(options.pwa->param_box, z);
      if (entry.region_checked) {
        const auto regions = containing_regions(*options.pwa, z);
        entry.region = regions.empty() ? -1 : regions.front();
        const double scale = 1.0 + sol.a_pm.lpNorm<Eigen::Infinity>();
        entry.support_matches_region = std::any_of(regions.begin(), regions.end(), [&](Index r) {
          const auto& reg = options.pwa->regions[static_cast<std::size_t>(r)];
          const Vector a = reg.generator_gain * z + reg.generator_offset;
          return (a - sol.a_pm).lpNorm<Eigen::Infinity>() <= kGeneratorMatchTol * scale &&
                 std::includes(reg.support.begin(), reg.support.end(), entry.support.begin(), entry.support.end());
        });
      }
    }
    if (plant.setting() == Setting::io) {
      entry.y_measured = plant.output(x, entry.u_applied);
      x = plant.step(x, entry.u_applied);
      shift_append(past_u, entry.u_applied);
      shift_append(past_y, entry.y_measured);
    } else {
      x = plant.step(x, entry.u_applied);
      entry.y_measured = x;
    }
    entry.prediction_error = (entry.y_predicted - entry.y_measured).lpNorm<Eigen::Infinity>();
    log.steps.push_back(std::move(entry));
  }
  return log;
}

std::vector<ErrorMapRow> prediction_error_map(const Plant& plant, const PredictorHandle& predictor,
                                              const std::vector<double>& xs, const std::vector<double>& us,
                                              Execution exec) {
  if (plant.kind() == PlantKind::lti) throw Error(ErrorKind::invalid_argument, "error map needs a scalar plant");
  const Index total = static_cast<Index>(xs.size() * us.size());
  std::vector<ErrorMapRow> rows(static_cast<std::size_t>(total));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(total));
  const auto nu = static_cast<Index>(us.size());
  auto body = [&](Index i) {
    try {
      ErrorMapRow& r = rows[static_cast<std::size_t>(i)];
      r.x0 = xs[static_cast<std::size_t>(i / nu)];
      r.u = us[static_cast<std::size_t>(i % nu)];
      r.plant = plant.f(r.x0, r.u);
      r.predictor = predictor(r.x0, r.u);
      r.abs_error = std::abs(r.predictor - r.plant);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  };
#pragma omp parallel for schedule(dynamic) if (exec == Execution::parallel)
  for (Index i = 0; i < total; ++i) body(i);
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

PredictorHandle pointwise_handle(const PredictorSpec& spec) {
  spec.validate();
  return [spec](double x0, double u) {
    Vector z(2);
    z << x0, u;
    return predict_pointwise(spec, z).y(0);
  };
}

PredictorHandle explicit_handle(const PwaFunction& pwa) {
  return [&pwa](double x0, double u) {
    Vector z(2);
    z << x0, u;
    return evaluate_pwa(pwa, z).y(0);
  };
}

std::vector<double> linspace(double lo, double hi, Index n) {
  if (n < 1) throw Error(ErrorKind::invalid_argument, "linspace needs n >= 1");
  std::vector<double> v(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    v[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

void write_closed_loop_csv(std::ostream& out, const ClosedLoopLog& log) {
  out.precision(17);
  const Index nxi = log.steps.empty() ? 0 : log.steps.front().xi.size();
  const Index nu = log.steps.empty() ? 0 : log.steps.front().u_applied.size();
  const Index ny = log.steps.empty() ? 0 : log.steps.front().y_measured.size();
  out << "step";
  for (Index i = 0; i < nxi; ++i) out << ",xi" << i + 1;
  for (Index i = 0; i < nu; ++i) out << ",u_applied" << i + 1;
  for (Index i = 0; i < ny; ++i) out << ",y_measured" << i + 1;
  out << ",cost,l1_generator,support\n";
  for (const auto& s : log.steps) {
    out << s.step;
    for (Index i = 0; i < s.xi.size(); ++i) out << ',' << s.xi(i);
    for (Index i = 0; i < s.u_applied.size(); ++i) out << ',' << s.u_applied(i);
    for (Index i = 0; i < s.y_measured.size(); ++i) out << ',' << s.y_measured(i);
    out << ',' << s.cost << ',' << s.l1_generator << ',';
    for (std::size_t i = 0; i < s.support.size(); ++i) out << (i ? " " : "") << s.support[i];
    out << '\n';
  }
}

void write_error_map_csv(std::ostream& out, const std::vector<ErrorMapRow>& rows) {
  out.precision(17);
  out << "x0,u,plant,predictor,abs_error\n";
  for (const auto& r : rows) out << r.x0 << ',' << r.u << ',' << r.plant << ',' << r.predictor << ',' << r.abs_error << '\n';
}

}  // namespace dpc
