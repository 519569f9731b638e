#include "cli.hpp"

#include "dpc/json_eigen.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace dpc::cli {
namespace {

constexpr double kThm1Tol = 1e-6;
constexpr double kDiscardTol = 1e-8;
constexpr double kGaugeTol = 1e-7;
constexpr double kAgreeTol = 1e-6;
// Side checks that need the explicit map run only below this many candidate supports.
constexpr double kExplicitCheckLimit = 2e5;

std::string number_label(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

std::uint64_t require_seed(const RunConfig& c) {
  if (!c.seed) throw Error(ErrorKind::parse, "a seed is required (config 'seed' or --seed)");
  return *c.seed;
}

/// Independent stream k derived from the run seed.
Rng stream(const RunConfig& c, std::uint64_t k) { return Rng(c.seed.value_or(0) ^ (0x9E3779B97F4A7C15ULL * (k + 1))); }

nlohmann::json meta(const RunConfig& c, const char* command) {
  nlohmann::json m = {{"command", command}, {"experiment", c.experiment}, {"rng", std::string(Rng::algorithm)}};
  m["seed"] = c.seed ? nlohmann::json(*c.seed) : nlohmann::json(nullptr);
  return m;
}

DataDictionary load_full(const RunConfig& c) {
  const auto& d = c.data;
  if (d.source == "dictionary") {
    std::ifstream f(d.path);
    if (!f) throw Error(ErrorKind::parse, "cannot open " + d.path.string());
    nlohmann::json j;
    try {
      f >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::parse, d.path.string() + ": " + e.what());
    }
    return dictionary_from_json(j);
  }
  if (d.source == "planar_atoms")
    return build_dictionary(collect_abstract_atoms(d.count, d.distribution, require_seed(c)), 0, 1,
                            Windowing::one_column_per_record);
  TrajectoryBank bank;
  if (d.source == "csv") {
    bank = read_trajectory_csv_file(d.path.string());
  } else {
    ExcitationSpec ex = *c.excitation;
    ex.seed = require_seed(c);
    bank = collect(*c.plant, ex);
  }
  const Index past = bank.setting == Setting::state_space ? 0 : c.dims.past;
  return build_dictionary(bank, past, c.dims.horizon, c.dims.windowing, c.dims.order);
}

/// Scalar weight shorthand q -> q * I.
nlohmann::json expand_weights(nlohmann::json j, const DataDictionary& dict) {
  auto expand = [&](const char* key, Index n) {
    if (!j.contains(key) || !j[key].is_number()) return;
    j[key] = matrix_to_json(j[key].get<double>() * Matrix::Identity(n, n));
  };
  expand("Q", dict.dims().output_rows());
  expand("R", dict.dims().input_rows());
  return j;
}

OcpSpec ocp_spec(const RunConfig& c, const DataDictionary& dict) {
  if (c.ocp.is_null()) throw Error(ErrorKind::parse, "this command needs an 'ocp' block");
  return ocp_spec_from_json(expand_weights(c.ocp, dict), dict);
}

PredictorSpec predictor_spec(const RunConfig& c, const DataDictionary& pruned) {
  OcpSpec o = ocp_spec(c, pruned);
  PredictorSpec p{pruned, o.output_weight, o.lambda};
  try {
    p.validate(c.tol);
  } catch (const Error& e) {
    throw Error(ErrorKind::parse, std::string("predictor: ") + e.what());
  }
  return p;
}

Box param_box(const RunConfig& c, Index dim) {
  if (!c.param_box) throw Error(ErrorKind::parse, "this command needs 'param_box'");
  c.param_box->validate(dim, "param_box");
  if (!c.param_box->lower.allFinite() || !c.param_box->upper.allFinite())
    throw Error(ErrorKind::parse, "param_box must be bounded");
  return *c.param_box;
}

/// Uniform samples in the box; unbounded entries fall back to [-1, 1].
Matrix box_samples(Rng& rng, const std::optional<Box>& box, Index dim, Index count) {
  Matrix s(dim, count);
  for (Index k = 0; k < count; ++k)
    for (Index i = 0; i < dim; ++i) {
      double lo = -1.0, hi = 1.0;
      if (box && box->size() == dim && std::isfinite(box->lower(i)) && std::isfinite(box->upper(i))) {
        lo = box->lower(i);
        hi = box->upper(i);
      }
      s(i, k) = rng.uniform(lo, hi);
    }
  return s;
}

/// Trajectories w = D a with gaussian a.
Matrix span_samples(Rng& rng, const Matrix& d, Index count) {
  Matrix w(d.rows(), count);
  for (Index k = 0; k < count; ++k) w.col(k) = d * Distribution::gaussian(0.0, 1.0).sample(rng, d.cols());
  return w;
}

/// Largest full-data generator weight on atoms removed by pruning.
double discarded_weight(const PrunedData& pd, const OcpSolution& full, Index columns) {
  double worst = 0.0;
  const auto& labels = pd.mirrored.set.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (pd.extreme.retained[i]) continue;
    const Index idx = labels[i].source + (labels[i].sign < 0 ? columns : 0);
    worst = std::max(worst, std::abs(full.a_pm(idx)));
  }
  return worst;
}

bool unbounded(const Box& b) {
  return b.size() == 0 || ((b.lower.array() == -std::numeric_limits<double>::infinity()).all() &&
                           (b.upper.array() == std::numeric_limits<double>::infinity()).all());
}

bool zero_reference(const OcpSpec& s) { return s.output_ref.size() == 0 || s.output_ref.isZero(0.0); }

// ---- prune -----------------------------------------------------------------

int cmd_prune(const RunConfig& c, std::ostream& out) {
  const DataDictionary full = load_full(c);
  const PrunedData pd = prune_dictionary(full, c.hull, c.tol);
  nlohmann::json report = pruning_report(pd, full);
  report["meta"] = meta(c, "prune");
  write_file_atomic(c.out_dir / "pruned_dictionary.json", dump(to_json(pd.dictionary)));
  write_file_atomic(c.out_dir / "pruning_report.json", dump(report));
  out << "retained " << pd.dictionary.columns() << " of " << full.columns() << " columns ("
      << pd.mirrored.set.size() << " mirrored atoms -> " << pd.extreme.pruned.size() << ")\n";
  return exit_ok;
}

// ---- gauge -----------------------------------------------------------------

int cmd_gauge(const RunConfig& c, std::ostream& out) {
  const DataDictionary full = load_full(c);
  const PrunedData pd = prune_dictionary(full, c.hull, c.tol);
  const double lambda = c.ocp.is_null() ? 1.0 : ocp_spec(c, full).lambda;
  if (!(lambda > 0.0)) throw Error(ErrorKind::parse, "gauge needs lambda > 0");
  Matrix w = c.gauge_w;
  if (w.size() > 0 && w.rows() != full.rows())
    throw Error(ErrorKind::parse, "gauge.w rows must have length " + std::to_string(full.rows()));
  const Index random = c.gauge_random > 0 || w.cols() > 0 ? c.gauge_random : c.probe_count;
  if (random > 0) {
    Rng rng = stream(c, 1);
    Matrix extra = span_samples(rng, full.matrix(), random);
    Matrix all(full.rows(), w.cols() + random);
    all << w, extra;
    w = all;
  }
  std::ostringstream csv;
  csv.precision(17);
  csv << "id,atomic_norm,lambda_times_norm,full_dict_lp,discrepancy,status\n";
  double worst = 0.0;
  Index violations = 0;
  for (Index k = 0; k < w.cols(); ++k) {
    try {
      const auto e = trajectory_specific_effect(w.col(k), full, pd.extreme.pruned, lambda, c.tol);
      csv << k << ',' << e.scaled_norm / lambda << ',' << e.scaled_norm << ',' << e.full_lp << ',' << e.discrepancy
          << ",ok\n";
      worst = std::max(worst, e.discrepancy);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::span_violation) throw;
      csv << k << ",,,,," << "span_violation\n";
      ++violations;
    }
  }
  write_file_atomic(c.out_dir / "gauge.csv", csv.str());
  out << w.cols() << " trajectories, max discrepancy " << worst << ", span violations " << violations << "\n";
  return exit_ok;
}

// ---- solve -----------------------------------------------------------------

int cmd_solve(const RunConfig& c, std::ostream& out) {
  const DataDictionary full = load_full(c);
  if (!c.xi) throw Error(ErrorKind::parse, "solve needs 'xi'");
  const OcpSpec full_spec = ocp_spec(c, full);
  const bool prune = full_spec.regularized() && zero_reference(full_spec);
  std::optional<PrunedData> pd;
  if (prune) pd = prune_dictionary(full, c.hull, c.tol);
  const OcpSpec spec = prune ? ocp_spec(c, pd->dictionary) : full_spec;
  const OcpSolution sol = solve_ocp(spec, *c.xi, c.tol);

  nlohmann::json j = to_json(sol);
  j["data"] = prune ? "pruned" : "full";
  nlohmann::json sources = nlohmann::json::array();
  const auto support = spec.regularized() ? generator_support(sol.a_pm, c.tol) : std::vector<Index>{};
  const Index cols = spec.dict.columns();
  for (Index s : support) {
    const auto& prov = spec.dict.provenance()[static_cast<std::size_t>(s % cols)];
    sources.push_back({{"atom", s}, {"sign", s < cols ? 1 : -1}, {"record", prov.record}, {"offset", prov.offset}});
  }
  j["support"] = sources;
  if (c.compare_full && prune) {
    const OcpSolution f = solve_ocp(full_spec, *c.xi, c.tol);
    const double cost_delta = std::abs(f.cost - sol.cost);
    const double traj_delta =
        std::max((f.u - sol.u).lpNorm<Eigen::Infinity>(), (f.y - sol.y).lpNorm<Eigen::Infinity>());
    const double discarded = discarded_weight(*pd, f, full.columns());
    j["full_comparison"] = {{"cost_delta", cost_delta},
                            {"trajectory_delta", traj_delta},
                            {"discarded_max_weight", discarded},
                            {"passed", cost_delta <= kThm1Tol && traj_delta <= kThm1Tol && discarded <= kDiscardTol}};
    out << "pruned vs full: cost delta " << cost_delta << ", trajectory delta " << traj_delta << "\n";
  }
  j["meta"] = meta(c, "solve");
  write_file_atomic(c.out_dir / "solution.json", dump(j));
  out << "optimal cost " << sol.cost << "\n";
  if (j.contains("full_comparison") && !j["full_comparison"]["passed"].get<bool>()) return exit_verification;
  return exit_ok;
}

// ---- explicit ----------------------------------------------------------------

std::string regions_csv(const PwaFunction& pwa) {
  std::ostringstream os;
  os.precision(17);
  os << "region,row";
  for (Index i = 0; i < pwa.z_dim; ++i) os << ",c" << i + 1;
  os << ",d\n";
  for (std::size_t r = 0; r < pwa.regions.size(); ++r) {
    const auto& reg = pwa.regions[r];
    for (Index k = 0; k < reg.C.rows(); ++k) {
      os << r << ',' << k;
      for (Index i = 0; i < reg.C.cols(); ++i) os << ',' << reg.C(k, i);
      os << ',' << reg.d(k) << '\n';
    }
  }
  return os.str();
}

struct Agreement {
  Index probes = 0;
  Index uncovered = 0;
  double max_deviation = 0.0;
  [[nodiscard]] bool passed() const { return uncovered == 0 && max_deviation <= kAgreeTol; }
  [[nodiscard]] nlohmann::json json() const {
    return {{"probes", probes}, {"uncovered", uncovered}, {"max_deviation", max_deviation}, {"passed", passed()}};
  }
};

Agreement probe_agreement(const PredictorSpec& spec, const PwaFunction& pwa, const Matrix& probes,
                          const ToleranceConfig& tol) {
  Agreement a;
  a.probes = probes.cols();
  for (Index k = 0; k < probes.cols(); ++k) {
    const Vector z = probes.col(k);
    const Vector y = predict_pointwise(spec, z, tol).y;
    try {
      a.max_deviation = std::max(a.max_deviation, (evaluate_pwa(pwa, z).y - y).lpNorm<Eigen::Infinity>());
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::uncovered) throw;
      ++a.uncovered;
    }
  }
  return a;
}

int cmd_explicit(const RunConfig& c, std::ostream& out) {
  const DataDictionary full = load_full(c);
  const PrunedData pd = prune_dictionary(full, c.hull, c.tol);
  const PredictorSpec spec = predictor_spec(c, pd.dictionary);
  const Box box = param_box(c, spec.z_dim());
  const PwaFunction pwa = enumerate_pwa(spec, box, c.tol);
  Rng rng = stream(c, 2);
  const Agreement agree = probe_agreement(spec, pwa, box_samples(rng, box, spec.z_dim(), c.probe_count), c.tol);

  nlohmann::json report = {{"regions", pwa.regions.size()},
                           {"complete", pwa.complete},
                           {"candidates_examined", pwa.candidates_examined},
                           {"probe_agreement", agree.json()}};
  bool ok = pwa.complete && agree.passed();
  if (c.lambda_compare) {
    const double eta = *c.lambda_compare / spec.lambda;
    PredictorSpec other = spec;
    other.lambda = *c.lambda_compare;
    const Box scaled{eta * box.lower, eta * box.upper};
    const PwaFunction pwa2 = enumerate_pwa(other, scaled, c.tol);
    const RegionMatchReport m = compare_scaled_regions(pwa, pwa2, eta);
    report["scaled_comparison"] = {{"lambda", other.lambda},
                                   {"eta", eta},
                                   {"regions", pwa2.regions.size()},
                                   {"unmatched", m.unmatched},
                                   {"passed", m.passed()}};
    write_file_atomic(c.out_dir / ("pwa_lambda_" + number_label(other.lambda) + ".json"), dump(to_json(pwa2)));
    ok = ok && m.passed();
    out << "lambda " << other.lambda << ": " << pwa2.regions.size() << " regions, scaling match "
        << (m.passed() ? "passed" : "FAILED") << "\n";
  }
  report["meta"] = meta(c, "explicit");
  write_file_atomic(c.out_dir / "pwa.json", dump(to_json(pwa)));
  write_file_atomic(c.out_dir / "regions.csv", regions_csv(pwa));
  write_file_atomic(c.out_dir / "explicit_report.json", dump(report));
  out << pwa.regions.size() << " regions, probe deviation " << agree.max_deviation << ", uncovered "
      << agree.uncovered << "\n";
  return ok ? exit_ok : exit_verification;
}

// ---- verify ------------------------------------------------------------------

nlohmann::json suite_pruning(const RunConfig& c, const DataDictionary& full, const PrunedData& pd) {
  const OcpSpec fs = ocp_spec(c, full);
  if (!fs.regularized() || !zero_reference(fs)) return {{"skipped", "needs lambda > 0 and zero output reference"}};
  const OcpSpec ps = ocp_spec(c, pd.dictionary);
  Rng rng = stream(c, 3);
  const Index nxi = full.dims().past_rows();
  std::optional<Box> xi_box;
  if (c.param_box && c.param_box->size() >= nxi)
    xi_box = Box{c.param_box->lower.head(nxi), c.param_box->upper.head(nxi)};
  const Matrix xis = box_samples(rng, xi_box, nxi, c.probe_count);
  double cost = 0.0, traj = 0.0, discarded = 0.0;
  Index infeasible = 0, mismatched = 0;
  for (Index k = 0; k < xis.cols(); ++k) {
    std::optional<OcpSolution> f, p;
    try {
      f = solve_ocp(fs, xis.col(k), c.tol);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::infeasible) throw;
    }
    try {
      p = solve_ocp(ps, xis.col(k), c.tol);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::infeasible) throw;
    }
    if (!f && !p) {
      ++infeasible;
      continue;
    }
    if (!f || !p) {
      ++mismatched;
      continue;
    }
    cost = std::max(cost, std::abs(f->cost - p->cost));
    traj = std::max({traj, (f->u - p->u).lpNorm<Eigen::Infinity>(), (f->y - p->y).lpNorm<Eigen::Infinity>()});
    discarded = std::max(discarded, discarded_weight(pd, *f, full.columns()));
  }
  const bool passed = mismatched == 0 && cost <= kThm1Tol && traj <= kThm1Tol && discarded <= kDiscardTol;
  return {{"probes", xis.cols()},       {"both_infeasible", infeasible}, {"feasibility_mismatch", mismatched},
          {"max_cost_delta", cost},     {"max_trajectory_delta", traj},  {"max_discarded_weight", discarded},
          {"passed", passed}};
}

nlohmann::json suite_gauge(const RunConfig& c, const DataDictionary& full, const PrunedData& pd) {
  const double lambda = c.ocp.is_null() ? 1.0 : ocp_spec(c, full).lambda;
  if (!(lambda > 0.0)) return {{"skipped", "needs lambda > 0"}};
  Rng rng = stream(c, 4);
  const Matrix w = span_samples(rng, full.matrix(), c.probe_count);
  double worst = 0.0;
  for (Index k = 0; k < w.cols(); ++k)
    worst = std::max(worst, trajectory_specific_effect(w.col(k), full, pd.extreme.pruned, lambda, c.tol).discrepancy);
  return {{"probes", w.cols()}, {"lambda", lambda}, {"max_discrepancy", worst}, {"passed", worst <= kGaugeTol}};
}

nlohmann::json suite_membership(const RunConfig& c, const DataDictionary& full, const PrunedData& pd) {
  Rng rng = stream(c, 5);
  const Index half = c.probe_count / 2;
  Matrix probes(full.rows(), c.probe_count);
  probes.leftCols(half) = span_samples(rng, full.matrix(), half);
  for (Index k = half; k < c.probe_count; ++k)
    probes.col(k) = Distribution::gaussian(0.0, 1.0).sample(rng, full.rows());
  Index disagree = 0, inside = 0;
  for (Index k = 0; k < probes.cols(); ++k) {
    const MembershipProbe m = membership_probe(probes.col(k), pd, c.tol);
    if (!m.agree()) ++disagree;
    if (m.span_original) ++inside;
  }
  return {{"probes", probes.cols()}, {"inside_span", inside}, {"disagreements", disagree}, {"passed", disagree == 0}};
}

nlohmann::json suite_scaling(const RunConfig& c, const PredictorSpec& spec) {
  Rng rng = stream(c, 6);
  const Matrix probes = box_samples(rng, c.param_box, spec.z_dim(), c.probe_count);
  nlohmann::json per_eta = nlohmann::json::array();
  bool passed = true;
  for (double eta : c.eta) {
    const ScalingReport r = verify_scaling(spec, eta, probes, kAgreeTol, c.tol);
    per_eta.push_back({{"eta", eta},
                       {"active_set_violations", r.active_set_violations},
                       {"optimizer_violations", r.optimizer_violations},
                       {"max_optimizer_deviation", r.max_optimizer_deviation},
                       {"passed", r.passed()}});
    passed = passed && r.passed();
  }
  return {{"probes", probes.cols()}, {"eta", per_eta}, {"passed", passed}};
}

nlohmann::json suite_symmetry(const RunConfig& c, const PredictorSpec& spec) {
  Rng rng = stream(c, 7);
  const Matrix probes = box_samples(rng, c.param_box, spec.z_dim(), c.probe_count);
  const SymmetryReport s = verify_symmetry(spec, probes, c.tol);
  nlohmann::json j = {{"probes", s.probes}, {"max_deviation", s.max_deviation}, {"origin_norm", s.origin_norm}};
  bool passed = s.passed(kAgreeTol) && s.origin_norm <= 1e-8;
  if (c.param_box && candidate_support_count(spec) > kExplicitCheckLimit) {
    j["pairing"] = {{"skipped", "explicit map too large for a side check"}};
  } else if (c.param_box) {
    const PwaFunction pwa = enumerate_pwa(spec, param_box(c, spec.z_dim()), c.tol);
    const RegionMatchReport m = check_negated_pairing(pwa);
    j["pairing"] = {{"regions", m.regions}, {"unmatched", m.unmatched}, {"passed", m.passed()}};
    passed = passed && m.passed();
  }
  j["passed"] = passed;
  return j;
}

int cmd_verify(const RunConfig& c, std::ostream& out) {
  const DataDictionary full = load_full(c);
  const PrunedData pd = prune_dictionary(full, c.hull, c.tol);
  nlohmann::json suites;
  suites["pruning_equivalence"] = suite_pruning(c, full, pd);
  suites["atomic_norm_identity"] = suite_gauge(c, full, pd);
  suites["membership"] = suite_membership(c, full, pd);
  std::optional<PredictorSpec> spec;
  try {
    spec = predictor_spec(c, pd.dictionary);
  } catch (const Error& e) {
    suites["scaling"] = {{"skipped", e.what()}};
    suites["symmetry"] = {{"skipped", e.what()}};
  }
  if (spec) {
    suites["scaling"] = suite_scaling(c, *spec);
    suites["symmetry"] = suite_symmetry(c, *spec);
  }
  bool ok = true;
  for (auto it = suites.begin(); it != suites.end(); ++it) {
    const bool skipped = it.value().contains("skipped");
    const bool passed = skipped || it.value().at("passed").get<bool>();
    ok = ok && passed;
    out << (skipped ? "SKIP " : passed ? "PASS " : "FAIL ") << it.key() << "\n";
  }
  nlohmann::json report = {{"suites", suites}, {"passed", ok}, {"meta", meta(c, "verify")}};
  write_file_atomic(c.out_dir / "verify.json", dump(report));
  return ok ? exit_ok : exit_verification;
}

// ---- simulate ----------------------------------------------------------------

int cmd_simulate(const RunConfig& c, std::ostream& out) {
  if (!c.plant) throw Error(ErrorKind::parse, "simulate needs a 'plant' block");
  if (!c.initial_state) throw Error(ErrorKind::parse, "simulate needs closed_loop.x0");
  const DataDictionary full = load_full(c);
  const OcpSpec full_spec = ocp_spec(c, full);
  const bool prune = full_spec.regularized() && zero_reference(full_spec);
  const DataDictionary dict = prune ? prune_dictionary(full, c.hull, c.tol).dictionary : full;
  const OcpSpec spec = prune ? ocp_spec(c, dict) : full_spec;

  ClosedLoopInit init{*c.initial_state, c.past_inputs.value_or(Matrix::Zero(dict.dims().m, dict.dims().past))};
  ClosedLoopOptions options;
  options.tol = c.tol;
  std::optional<PwaFunction> pwa;
  PredictorSpec ps{dict, spec.output_weight, spec.lambda};
  if (c.param_box && prune && zero_reference(spec) && unbounded(spec.input_box) && unbounded(spec.output_box) &&
      candidate_support_count(ps) <= kExplicitCheckLimit) {
    pwa = enumerate_pwa(ps, param_box(c, ps.z_dim()), c.tol);
    options.pwa = &*pwa;
  }
  const ClosedLoopLog log = run_closed_loop(*c.plant, spec, init, c.steps, options);

  std::ostringstream csv;
  write_closed_loop_csv(csv, log);
  Index mismatches = 0;
  double max_error = 0.0;
  for (const auto& s : log.steps) {
    if (!s.support_matches_region) ++mismatches;
    max_error = std::max(max_error, s.prediction_error);
  }
  nlohmann::json summary = {{"steps_requested", c.steps},
                            {"steps_logged", log.steps.size()},
                            {"truncated", log.truncated},
                            {"failed_step", log.failed_step},
                            {"failure", log.failure},
                            {"max_prediction_error", max_error},
                            {"region_cross_check", pwa.has_value()},
                            {"support_region_mismatches", mismatches},
                            {"meta", meta(c, "simulate")}};
  write_file_atomic(c.out_dir / "closed_loop.csv", csv.str());
  write_file_atomic(c.out_dir / "closed_loop.json", dump(summary));
  out << log.steps.size() << " steps" << (log.truncated ? " (truncated: " + log.failure + ")" : "") << "\n";
  if (log.truncated) return exit_numerical;
  return mismatches == 0 ? exit_ok : exit_verification;
}

// ---- figures -----------------------------------------------------------------

/// Vertices of {z in R^2 : C z <= d}, counter-clockwise.
std::vector<Vector> polygon(const CriticalRegion& r) {
  std::vector<Vector> pts;
  const Index k = r.C.rows();
  for (Index i = 0; i < k; ++i)
    for (Index j = i + 1; j < k; ++j) {
      Eigen::Matrix2d a;
      a << r.C(i, 0), r.C(i, 1), r.C(j, 0), r.C(j, 1);
      if (std::abs(a.determinant()) < 1e-12) continue;
      const Eigen::Vector2d v = a.partialPivLu().solve(Eigen::Vector2d(r.d(i), r.d(j)));
      if (((r.C * v - r.d).array() > 1e-9 * (1.0 + r.d.cwiseAbs().array())).any()) continue;
      const bool dup = std::any_of(pts.begin(), pts.end(), [&](const Vector& p) { return (p - v).norm() < 1e-9; });
      if (!dup) pts.emplace_back(v);
    }
  if (pts.empty()) return pts;
  Vector center = Vector::Zero(2);
  for (const auto& p : pts) center += p;
  center /= static_cast<double>(pts.size());
  std::sort(pts.begin(), pts.end(), [&](const Vector& a, const Vector& b) {
    return std::atan2(a(1) - center(1), a(0) - center(0)) < std::atan2(b(1) - center(1), b(0) - center(0));
  });
  return pts;
}

void figure1(const RunConfig& c, std::ostream& out) {
  const DataDictionary full = load_full(c);
  if (full.rows() != 2) throw Error(ErrorKind::parse, "fig1 needs planar atoms (2 rows)");
  const PrunedData pd = prune_dictionary(full, c.hull, c.tol);
  std::vector<bool> kept(static_cast<std::size_t>(full.columns()), false);
  for (const auto& l : pd.pruned.labels()) kept[static_cast<std::size_t>(l.source)] = true;

  std::ostringstream atoms, mirrored, hull_csv;
  atoms.precision(17);
  mirrored.precision(17);
  hull_csv.precision(17);
  atoms << "id,w1,w2,retained\n";
  for (Index j = 0; j < full.columns(); ++j)
    atoms << j << ',' << full.matrix()(0, j) << ',' << full.matrix()(1, j) << ','
          << (kept[static_cast<std::size_t>(j)] ? 1 : 0) << '\n';
  const AtomSet& m = pd.mirrored.set;
  mirrored << "index,source,sign,w1,w2,retained\n";
  for (Index i = 0; i < m.size(); ++i)
    mirrored << i << ',' << m.labels()[static_cast<std::size_t>(i)].source << ','
             << m.labels()[static_cast<std::size_t>(i)].sign << ',' << m.atom(i)(0) << ',' << m.atom(i)(1) << ','
             << (pd.extreme.retained[static_cast<std::size_t>(i)] ? 1 : 0) << '\n';
  hull_csv << "order,index,w1,w2\n";
  const auto order = hull::ordered_vertices_2d(m.atoms());
  for (std::size_t k = 0; k < order.size(); ++k)
    hull_csv << k << ',' << order[k] << ',' << m.atom(order[k])(0) << ',' << m.atom(order[k])(1) << '\n';
  nlohmann::json report = pruning_report(pd, full);
  report["meta"] = meta(c, "figures");
  write_file_atomic(c.out_dir / "fig1_atoms.csv", atoms.str());
  write_file_atomic(c.out_dir / "fig1_mirrored.csv", mirrored.str());
  write_file_atomic(c.out_dir / "fig1_hull.csv", hull_csv.str());
  write_file_atomic(c.out_dir / "fig1_report.json", dump(report));
  out << "fig1: " << full.columns() << " atoms, " << pd.dictionary.columns() << " retained, " << order.size()
      << " hull vertices\n";
}

void figure2(const RunConfig& c, std::ostream& out) {
  const DataDictionary full = load_full(c);
  const PrunedData pd = prune_dictionary(full, c.hull, c.tol);
  const PredictorSpec base = predictor_spec(c, pd.dictionary);
  if (base.z_dim() != 2 || base.y_dim() != 1) throw Error(ErrorKind::parse, "fig2 needs z in R^2 and scalar y");
  const Box box = param_box(c, 2);
  std::vector<double> lambdas{base.lambda};
  if (c.lambda_compare) lambdas.push_back(*c.lambda_compare);
  for (double lambda : lambdas) {
    PredictorSpec spec = base;
    spec.lambda = lambda;
    const PwaFunction pwa = enumerate_pwa(spec, box, c.tol);
    std::ostringstream poly;
    poly.precision(17);
    poly << "region,vertex,z1,z2,y\n";
    for (std::size_t r = 0; r < pwa.regions.size(); ++r) {
      const auto pts = polygon(pwa.regions[r]);
      for (std::size_t v = 0; v < pts.size(); ++v)
        poly << r << ',' << v << ',' << pts[v](0) << ',' << pts[v](1) << ',' << pwa.regions[r].predict(pts[v])(0)
             << '\n';
    }
    const std::string tag = number_label(lambda);
    write_file_atomic(c.out_dir / ("fig2_regions_lambda_" + tag + ".json"), dump(to_json(pwa)));
    write_file_atomic(c.out_dir / ("fig2_polygons_lambda_" + tag + ".csv"), poly.str());
    out << "fig2: lambda " << tag << ", " << pwa.regions.size() << " regions\n";
  }
}

void figure3(const RunConfig& c, std::ostream& out) {
  const Plant plant = c.plant.value_or(Plant::scalar_quadratic());
  const DataDictionary full = load_full(c);
  const PrunedData pd = prune_dictionary(full, c.hull, c.tol);
  const PredictorSpec base = predictor_spec(c, pd.dictionary);
  if (base.z_dim() != 2 || base.y_dim() != 1) throw Error(ErrorKind::parse, "fig3 needs a scalar plant setting");

  std::vector<bool> kept(static_cast<std::size_t>(full.columns()), false);
  for (const auto& l : pd.pruned.labels()) kept[static_cast<std::size_t>(l.source)] = true;
  std::ostringstream data;
  data.precision(17);
  data << "id,x0,u,x1,retained\n";
  for (Index j = 0; j < full.columns(); ++j)
    data << j << ',' << full.matrix()(0, j) << ',' << full.matrix()(1, j) << ',' << full.matrix()(2, j) << ','
         << (kept[static_cast<std::size_t>(j)] ? 1 : 0) << '\n';
  write_file_atomic(c.out_dir / "fig3_data.csv", data.str());

  const auto xs = linspace(c.grid_x0.lower, c.grid_x0.upper, c.grid_x0.points);
  const auto us = linspace(c.grid_u.lower, c.grid_u.upper, c.grid_u.points);
  std::vector<double> lambdas = c.lambda_sweep.empty() ? std::vector<double>{base.lambda} : c.lambda_sweep;
  for (double lambda : lambdas) {
    PredictorSpec spec = base;
    spec.lambda = lambda;
    const auto rows = prediction_error_map(plant, pointwise_handle(spec), xs, us);
    std::ostringstream csv;
    write_error_map_csv(csv, rows);
    const std::string tag = number_label(lambda);
    write_file_atomic(c.out_dir / ("fig3_surface_lambda_" + tag + ".csv"), csv.str());
    double worst = 0.0;
    for (const auto& r : rows) worst = std::max(worst, r.abs_error);
    out << "fig3: lambda " << tag << ", " << rows.size() << " grid points, max error " << worst << "\n";
  }
}

int cmd_figures(const RunConfig& c, const std::string& which, std::ostream& out) {
  const std::string fig = which.empty() ? c.experiment : which;
  if (fig == "fig1") {
    figure1(c, out);
  } else if (fig == "fig2") {
    figure2(c, out);
  } else if (fig == "fig3") {
    figure3(c, out);
  } else {
    throw Error(ErrorKind::parse, "figures: unknown figure '" + fig + "' (fig1, fig2 or fig3)");
  }
  return exit_ok;
}

int exit_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_argument:
    case ErrorKind::dimension_mismatch:
    case ErrorKind::parse: return exit_schema;
    default: return exit_numerical;
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"1-norm regularized data-driven predictive control toolkit", "dpc_cli"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  std::string config_path, out_dir, figure;
  std::optional<std::uint64_t> seed;
  std::map<std::string, double> tol_flags;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_dir, "output directory (overrides paths.out)");
  app.add_option("--seed", seed, "random seed (overrides the config)");
  for (const char* name : {"kkt", "feas", "active", "span", "dup", "interior", "pivot"}) {
    app.add_option_function<double>(
        std::string("--tol-") + name, [&tol_flags, name](double v) { tol_flags[name] = v; },
        std::string("override tolerance '") + name + "'");
  }
  app.add_subcommand("prune", "extreme-point pruning of the data matrix");
  app.add_subcommand("gauge", "trajectory-specific effect and atomic norm table");
  app.add_subcommand("solve", "solve the predictive control problem at xi");
  app.add_subcommand("explicit", "explicit predictor as a piecewise affine map");
  app.add_subcommand("verify", "pruning, atomic norm, membership, scaling and symmetry suites");
  app.add_subcommand("simulate", "closed-loop receding-horizon simulation");
  app.add_subcommand("figures", "data bundles for the figures")
      ->add_option("--figure", figure, "fig1, fig2 or fig3 (default: experiment name)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_schema;
  }

  try {
    std::ifstream f(config_path);
    if (!f) throw Error(ErrorKind::parse, "cannot open config " + config_path);
    nlohmann::json j;
    try {
      f >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::parse, config_path + ": " + e.what());
    }
    RunConfig cfg = parse_config(j, std::filesystem::path(config_path).parent_path());
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed) cfg.seed = seed;
    for (const auto& [name, v] : tol_flags) {
      if (!(v > 0.0)) throw Error(ErrorKind::parse, "--tol-" + name + " must be > 0");
      if (name == "kkt") cfg.tol.kkt = v;
      if (name == "feas") cfg.tol.feas = v;
      if (name == "active") cfg.tol.active = v;
      if (name == "span") cfg.tol.span = v;
      if (name == "dup") cfg.tol.dup = v;
      if (name == "interior") cfg.tol.interior = v;
      if (name == "pivot") cfg.tol.pivot = v;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "prune") return cmd_prune(cfg, out);
    if (cmd == "gauge") return cmd_gauge(cfg, out);
    if (cmd == "solve") return cmd_solve(cfg, out);
    if (cmd == "explicit") return cmd_explicit(cfg, out);
    if (cmd == "verify") return cmd_verify(cfg, out);
    if (cmd == "simulate") return cmd_simulate(cfg, out);
    return cmd_figures(cfg, figure, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error (io): " << e.what() << "\n";
    return exit_schema;
  }
}

}  // namespace dpc::cli
