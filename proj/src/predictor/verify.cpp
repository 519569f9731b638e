#include "dpc/json_eigen.hpp"
#include "dpc/predictor.hpp"

#include <exception>

namespace dpc {
namespace {

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * (1.0 + std::max(std::abs(a), std::abs(b))); }

bool close(const Matrix& a, const Matrix& b, double tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      if (!close(a(i, j), b(i, j), tol)) return false;
  return true;
}

// Same row set up to permutation.
bool same_rows(const Matrix& c1, const Vector& d1, const Matrix& c2, const Vector& d2, double tol) {
  if (c1.rows() != c2.rows()) return false;
  std::vector<bool> used(static_cast<size_t>(c2.rows()), false);
  for (Index i = 0; i < c1.rows(); ++i) {
    bool hit = false;
    for (Index j = 0; j < c2.rows() && !hit; ++j) {
      if (used[static_cast<size_t>(j)]) continue;
      if (close(Matrix(c1.row(i)), Matrix(c2.row(j)), tol) && close(d1(i), d2(j), tol)) {
        used[static_cast<size_t>(j)] = true;
        hit = true;
      }
    }
    if (!hit) return false;
  }
  return true;
}

template <class Fn>
void for_each_probe(Index n, Execution exec, Fn&& fn) {
  std::vector<std::exception_ptr> errors(static_cast<size_t>(n));
#pragma omp parallel for schedule(dynamic) if (exec == Execution::parallel)
  for (Index i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      errors[static_cast<size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

ScalingReport verify_scaling(const PredictorSpec& spec, double eta, const Matrix& probes, double tol_opt,
                             const ToleranceConfig& tol, Execution exec) {
  if (!(eta > 0.0)) throw Error(ErrorKind::invalid_argument, "scaling factor eta must be > 0");
  PredictorSpec scaled = spec;
  scaled.lambda = eta * spec.lambda;
  const Index n = probes.cols();
  std::vector<char> same_active(static_cast<size_t>(n));
  std::vector<double> deviation(static_cast<size_t>(n));
  for_each_probe(n, exec, [&](Index i) {
    const Vector z = probes.col(i);
    const PointwiseResult base = predict_pointwise(spec, z, tol);
    const PointwiseResult big = predict_pointwise(scaled, eta * z, tol);
    same_active[static_cast<size_t>(i)] = base.active_set == big.active_set;
    deviation[static_cast<size_t>(i)] = (big.decision() - eta * base.decision()).cwiseAbs().maxCoeff();
  });
  ScalingReport r;
  r.eta = eta;
  r.probes = n;
  for (Index i = 0; i < n; ++i) {
    const bool bad_set = !same_active[static_cast<size_t>(i)];
    const bool bad_opt = deviation[static_cast<size_t>(i)] > tol_opt;
    r.active_set_violations += bad_set;
    r.optimizer_violations += bad_opt;
    r.max_optimizer_deviation = std::max(r.max_optimizer_deviation, deviation[static_cast<size_t>(i)]);
    if (bad_set || bad_opt) r.violating_probes.push_back(i);
  }
  return r;
}

SymmetryReport verify_symmetry(const PredictorSpec& spec, const Matrix& probes, const ToleranceConfig& tol,
                               Execution exec) {
  const Index n = probes.cols();
  std::vector<double> dev(static_cast<size_t>(n));
  for_each_probe(n, exec, [&](Index i) {
    const Vector z = probes.col(i);
    dev[static_cast<size_t>(i)] =
        (predict_pointwise(spec, z, tol).y + predict_pointwise(spec, -z, tol).y).cwiseAbs().maxCoeff();
  });
  SymmetryReport r;
  r.probes = n;
  for (double v : dev) r.max_deviation = std::max(r.max_deviation, v);
  r.origin_norm = predict_pointwise(spec, Vector::Zero(spec.z_dim()), tol).y.cwiseAbs().maxCoeff();
  return r;
}

RegionMatchReport check_negated_pairing(const PwaFunction& pwa, double tol) {
  RegionMatchReport rep;
  rep.regions = static_cast<Index>(pwa.regions.size());
  for (Index i = 0; i < rep.regions; ++i) {
    const auto& a = pwa.regions[static_cast<size_t>(i)];
    bool found = false;
    for (const auto& b : pwa.regions) {
      if (close(a.F, b.F, tol) && close(Matrix(a.g), Matrix(-b.g), tol) && same_rows(-a.C, a.d, b.C, b.d, tol)) {
        found = true;
        break;
      }
    }
    if (!found) {
      ++rep.unmatched;
      rep.unmatched_regions.push_back(i);
    }
  }
  return rep;
}

RegionMatchReport compare_scaled_regions(const PwaFunction& base, const PwaFunction& scaled, double eta, double tol) {
  RegionMatchReport rep;
  rep.regions = static_cast<Index>(base.regions.size());
  auto matches = [&](const CriticalRegion& a, const CriticalRegion& b) {
    return a.support == b.support && close(a.F, b.F, tol) && close(Matrix(eta * a.g), Matrix(b.g), tol) &&
           same_rows(a.C, eta * a.d, b.C, b.d, tol);
  };
  for (Index i = 0; i < rep.regions; ++i) {
    bool found = false;
    for (const auto& b : scaled.regions) found = found || matches(base.regions[static_cast<size_t>(i)], b);
    if (!found) {
      ++rep.unmatched;
      rep.unmatched_regions.push_back(i);
    }
  }
  // Nothing extra on the scaled side either.
  if (scaled.regions.size() != base.regions.size()) rep.unmatched += 1;
  return rep;
}

nlohmann::json to_json(const PwaFunction& pwa) {
  nlohmann::json regions = nlohmann::json::array();
  for (const auto& r : pwa.regions) {
    regions.push_back({{"C", matrix_to_json(r.C)},
                       {"d", vector_to_json(r.d)},
                       {"F", matrix_to_json(r.F)},
                       {"g", vector_to_json(r.g)},
                       {"active_set", r.active_set},
                       {"support", r.support},
                       {"chebyshev_center", vector_to_json(r.chebyshev_center)},
                       {"chebyshev_radius", r.chebyshev_radius}});
  }
  nlohmann::json box = nlohmann::json::array();
  for (Index i = 0; i < pwa.param_box.size(); ++i) box.push_back({pwa.param_box.lower(i), pwa.param_box.upper(i)});
  return {{"dims", {{"z", pwa.z_dim}, {"y", pwa.y_dim}, {"atoms", pwa.atoms}}},
          {"lambda", pwa.lambda},
          {"Q", matrix_to_json(pwa.output_weight)},
          {"param_box", box},
          {"complete", pwa.complete},
          {"candidates_examined", pwa.candidates_examined},
          {"regions", regions}};
}

}  // namespace dpc
