#include "cli.hpp"

#include "dpc/json_eigen.hpp"

#include <fstream>
#include <sstream>

namespace dpc::cli {
namespace {

Index index_from_json(const nlohmann::json& j, const char* what, Index min_value) {
  if (!j.is_number_integer()) throw Error(ErrorKind::parse, std::string(what) + ": expected an integer");
  const auto v = j.get<Index>();
  if (v < min_value)
    throw Error(ErrorKind::parse, std::string(what) + ": must be >= " + std::to_string(min_value));
  return v;
}

Distribution distribution_from_json(const nlohmann::json& j, const std::string& what) {
  reject_unknown_keys(j, {"kind", "lower", "upper", "mean", "stddev", "levels"}, what);
  const std::string kind = j.at("kind").get<std::string>();
  Distribution d;
  if (kind == "uniform") {
    d = Distribution::uniform_on(number_from_json(j.at("lower")), number_from_json(j.at("upper")));
  } else if (kind == "gaussian") {
    d = Distribution::gaussian(j.contains("mean") ? number_from_json(j["mean"]) : 0.0,
                               j.contains("stddev") ? number_from_json(j["stddev"]) : 1.0);
  } else if (kind == "prbs") {
    std::vector<double> levels;
    for (const auto& v : j.at("levels")) levels.push_back(number_from_json(v));
    d = Distribution::prbs(std::move(levels));
  } else {
    throw Error(ErrorKind::parse, what + ": unknown distribution '" + kind + "'");
  }
  try {
    d.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::parse, what + ": " + e.what());
  }
  return d;
}

Plant plant_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j, {"kind", "A", "B", "C", "D", "terms"}, "plant");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "scalar_quadratic") return Plant::scalar_quadratic();
  if (kind == "custom_polynomial") {
    std::vector<PolynomialTerm> terms;
    for (const auto& t : j.at("terms")) {
      reject_unknown_keys(t, {"coefficient", "x_power", "u_power"}, "plant term");
      terms.push_back({number_from_json(t.at("coefficient")), t.value("x_power", 0), t.value("u_power", 0)});
    }
    return Plant::custom_polynomial(std::move(terms));
  }
  if (kind == "lti") {
    Matrix a = matrix_from_json(j.at("A"));
    Matrix b = matrix_from_json(j.at("B"), 0);
    Matrix c = matrix_from_json(j.at("C"), a.rows());
    Matrix d = j.contains("D") ? matrix_from_json(j["D"], b.cols()) : Matrix(Matrix::Zero(c.rows(), b.cols()));
    try {
      return Plant::lti(std::move(a), std::move(b), std::move(c), std::move(d));
    } catch (const Error& e) {
      throw Error(ErrorKind::parse, std::string("plant: ") + e.what());
    }
  }
  throw Error(ErrorKind::parse, "plant: unknown kind '" + kind + "'");
}

GridAxis axis_from_json(const nlohmann::json& j, const char* what) {
  reject_unknown_keys(j, {"lower", "upper", "points"}, what);
  GridAxis a;
  a.lower = number_from_json(j.at("lower"));
  a.upper = number_from_json(j.at("upper"));
  a.points = index_from_json(j.at("points"), what, 1);
  if (!(a.lower <= a.upper)) throw Error(ErrorKind::parse, std::string(what) + ": lower > upper");
  return a;
}

void tolerances_from_json(const nlohmann::json& j, ToleranceConfig& tol) {
  reject_unknown_keys(j, {"kkt", "feas", "sym", "psd", "dup", "pivot", "active", "interior", "span",
                          "complementarity", "rank"},
                      "tolerances");
  auto read = [&](const char* key, double& field) {
    if (!j.contains(key)) return;
    field = number_from_json(j[key]);
    if (!(field > 0.0)) throw Error(ErrorKind::parse, std::string("tolerances: ") + key + " must be > 0");
  };
  read("kkt", tol.kkt);
  read("feas", tol.feas);
  read("sym", tol.sym);
  read("psd", tol.psd);
  read("dup", tol.dup);
  read("pivot", tol.pivot);
  read("active", tol.active);
  read("interior", tol.interior);
  read("span", tol.span);
  read("complementarity", tol.complementarity);
  if (j.contains("rank")) tol.rank_threshold = number_from_json(j["rank"]);
}

RunConfig parse_impl(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  reject_unknown_keys(j,
                      {"experiment", "seed", "paths", "data", "dims", "plant", "excitation", "hull_method", "ocp",
                       "param_box", "probes", "eta", "lambda_compare", "lambda_sweep", "xi", "compare_full",
                       "gauge", "closed_loop", "grid", "tolerances"},
                      "config");
  RunConfig c;
  c.experiment = j.value("experiment", std::string{});
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw Error(ErrorKind::parse, "seed: expected a nonnegative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }

  std::filesystem::path data_path;
  if (j.contains("paths")) {
    const auto& p = j["paths"];
    reject_unknown_keys(p, {"data", "out"}, "paths");
    if (p.contains("data")) data_path = base_dir / p["data"].get<std::string>();
    if (p.contains("out")) c.out_dir = base_dir / p["out"].get<std::string>();
  }

  const auto& d = j.at("data");
  reject_unknown_keys(d, {"source", "count", "distribution"}, "data");
  c.data.source = d.at("source").get<std::string>();
  if (c.data.source == "csv" || c.data.source == "dictionary") {
    if (data_path.empty()) throw Error(ErrorKind::parse, "data: source '" + c.data.source + "' needs paths.data");
    c.data.path = data_path;
  } else if (c.data.source == "planar_atoms") {
    if (d.contains("count")) c.data.count = index_from_json(d["count"], "data.count", 1);
    if (d.contains("distribution")) c.data.distribution = distribution_from_json(d["distribution"], "data.distribution");
  } else if (c.data.source != "plant") {
    throw Error(ErrorKind::parse, "data: unknown source '" + c.data.source + "'");
  }

  if (j.contains("dims")) {
    const auto& jd = j["dims"];
    reject_unknown_keys(jd, {"N_p", "N", "n", "windowing"}, "dims");
    if (jd.contains("N_p")) c.dims.past = index_from_json(jd["N_p"], "dims.N_p", 0);
    if (jd.contains("N")) c.dims.horizon = index_from_json(jd["N"], "dims.N", 1);
    if (jd.contains("n")) c.dims.order = index_from_json(jd["n"], "dims.n", 0);
    if (jd.contains("windowing")) c.dims.windowing = windowing_from_string(jd["windowing"].get<std::string>());
  }

  if (j.contains("plant")) c.plant = plant_from_json(j["plant"]);
  if (j.contains("excitation")) {
    const auto& je = j["excitation"];
    reject_unknown_keys(je, {"input", "initial_state", "horizon", "records", "output_noise_std"}, "excitation");
    ExcitationSpec ex;
    ex.input = distribution_from_json(je.at("input"), "excitation.input");
    ex.initial_state = je.contains("initial_state")
                           ? distribution_from_json(je["initial_state"], "excitation.initial_state")
                           : ex.input;
    if (je.contains("horizon")) ex.horizon = index_from_json(je["horizon"], "excitation.horizon", 1);
    if (je.contains("records")) ex.records = index_from_json(je["records"], "excitation.records", 1);
    if (je.contains("output_noise_std")) {
      ex.output_noise_std = number_from_json(je["output_noise_std"]);
      if (!(ex.output_noise_std >= 0.0)) throw Error(ErrorKind::parse, "excitation.output_noise_std must be >= 0");
    }
    c.excitation = ex;
  }
  if (c.data.source == "plant" && (!c.plant || !c.excitation))
    throw Error(ErrorKind::parse, "data: source 'plant' needs 'plant' and 'excitation' blocks");

  if (j.contains("hull_method")) c.hull = hull_method_from_string(j["hull_method"].get<std::string>());
  if (j.contains("ocp")) {
    c.ocp = j["ocp"];
    reject_unknown_keys(c.ocp, {"dictionary", "N", "N_p", "Q", "R", "lambda", "u_ref", "y_ref", "u_box", "y_box",
                                "allow_unregularized"},
                        "ocp");
  }
  if (j.contains("param_box")) c.param_box = box_from_json(j["param_box"], "param_box");
  if (j.contains("probes")) {
    reject_unknown_keys(j["probes"], {"count"}, "probes");
    if (j["probes"].contains("count")) c.probe_count = index_from_json(j["probes"]["count"], "probes.count", 1);
  }
  if (j.contains("eta")) {
    c.eta.clear();
    for (const auto& v : j["eta"]) {
      c.eta.push_back(number_from_json(v));
      if (!(c.eta.back() > 0.0)) throw Error(ErrorKind::parse, "eta: entries must be > 0");
    }
  }
  if (j.contains("lambda_compare")) {
    c.lambda_compare = number_from_json(j["lambda_compare"]);
    if (!(*c.lambda_compare > 0.0)) throw Error(ErrorKind::parse, "lambda_compare must be > 0");
  }
  if (j.contains("lambda_sweep"))
    for (const auto& v : j["lambda_sweep"]) c.lambda_sweep.push_back(number_from_json(v));
  if (j.contains("xi")) c.xi = vector_from_json(j["xi"]);
  if (j.contains("compare_full")) c.compare_full = j["compare_full"].get<bool>();
  if (j.contains("gauge")) {
    const auto& g = j["gauge"];
    reject_unknown_keys(g, {"w", "random"}, "gauge");
    if (g.contains("w")) c.gauge_w = matrix_from_json(g["w"]).transpose();
    if (g.contains("random")) c.gauge_random = index_from_json(g["random"], "gauge.random", 0);
  }
  if (j.contains("closed_loop")) {
    const auto& cl = j["closed_loop"];
    reject_unknown_keys(cl, {"steps", "x0", "past_inputs"}, "closed_loop");
    if (cl.contains("steps")) c.steps = index_from_json(cl["steps"], "closed_loop.steps", 0);
    if (cl.contains("x0")) c.initial_state = vector_from_json(cl["x0"]);
    if (cl.contains("past_inputs")) c.past_inputs = matrix_from_json(cl["past_inputs"]);
  }
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    reject_unknown_keys(g, {"x0", "u"}, "grid");
    if (g.contains("x0")) c.grid_x0 = axis_from_json(g["x0"], "grid.x0");
    if (g.contains("u")) c.grid_u = axis_from_json(g["u"], "grid.u");
  }
  if (j.contains("tolerances")) tolerances_from_json(j["tolerances"], c.tol);
  return c;
}

}  // namespace

RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  try {
    return parse_impl(j, base_dir);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("config: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::parse) throw;
    throw Error(ErrorKind::parse, std::string("config: ") + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::invalid_argument, "cannot write " + tmp.string());
    f << content;
    if (!f) throw Error(ErrorKind::invalid_argument, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace dpc::cli
