#include "dpc/simcore.hpp"

#include <cmath>

namespace dpc {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * 3.14159265358979323846 * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Distribution Distribution::uniform_on(double lo, double hi) {
  Distribution d;
  d.kind = Kind::uniform;
  d.lower = lo;
  d.upper = hi;
  return d;
}

Distribution Distribution::gaussian(double mean, double stddev) {
  Distribution d;
  d.kind = Kind::gaussian;
  d.mean = mean;
  d.stddev = stddev;
  return d;
}

Distribution Distribution::prbs(std::vector<double> levels) {
  Distribution d;
  d.kind = Kind::prbs;
  d.levels = std::move(levels);
  return d;
}

void Distribution::validate() const {
  switch (kind) {
    case Kind::uniform:
      if (!(lower < upper)) throw Error(ErrorKind::invalid_argument, "uniform distribution needs lower < upper");
      break;
    case Kind::gaussian:
      if (!(stddev >= 0.0)) throw Error(ErrorKind::invalid_argument, "gaussian distribution needs stddev >= 0");
      break;
    case Kind::prbs:
      if (levels.empty()) throw Error(ErrorKind::invalid_argument, "prbs distribution needs at least one level");
      break;
  }
}

double Distribution::sample(Rng& rng) const {
  switch (kind) {
    case Kind::uniform: return rng.uniform(lower, upper);
    case Kind::gaussian: return mean + stddev * rng.normal();
    case Kind::prbs: return levels[rng.index(levels.size())];
  }
  return 0.0;
}

Vector Distribution::sample(Rng& rng, Index n) const {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = sample(rng);
  return v;
}

std::string_view to_string(PlantKind k) {
  switch (k) {
    case PlantKind::lti: return "lti";
    case PlantKind::scalar_quadratic: return "scalar_quadratic";
    case PlantKind::custom_polynomial: return "custom_polynomial";
  }
  return "?";
}

Plant Plant::lti(Matrix a, Matrix b, Matrix c, Matrix d) {
  const Index n = a.rows();
  if (a.cols() != n || b.rows() != n || c.cols() != n || d.rows() != c.rows() || d.cols() != b.cols())
    throw Error(ErrorKind::dimension_mismatch, "lti plant matrices have inconsistent shapes");
  Plant p;
  p.kind_ = PlantKind::lti;
  p.a_ = std::move(a);
  p.b_ = std::move(b);
  p.c_ = std::move(c);
  p.d_ = std::move(d);
  return p;
}

Plant Plant::scalar_quadratic() {
  Plant p = custom_polynomial({{2.0, 2, 0}, {2.0, 0, 2}, {-1.0, 0, 0}});
  p.kind_ = PlantKind::scalar_quadratic;
  return p;
}

Plant Plant::custom_polynomial(std::vector<PolynomialTerm> terms) {
  for (const auto& t : terms)
    if (t.x_power < 0 || t.u_power < 0)
      throw Error(ErrorKind::invalid_argument, "polynomial powers must be nonnegative");
  Plant p;
  p.kind_ = PlantKind::custom_polynomial;
  p.terms_ = std::move(terms);
  return p;
}

Index Plant::state_dim() const { return kind_ == PlantKind::lti ? a_.rows() : 1; }
Index Plant::input_dim() const { return kind_ == PlantKind::lti ? b_.cols() : 1; }
Index Plant::output_dim() const { return kind_ == PlantKind::lti ? c_.rows() : 1; }

double Plant::f(double x, double u) const {
  if (kind_ == PlantKind::lti) throw Error(ErrorKind::invalid_argument, "scalar map requested from an lti plant");
  double v = 0.0;
  for (const auto& t : terms_) v += t.coefficient * std::pow(x, t.x_power) * std::pow(u, t.u_power);
  return v;
}

Vector Plant::step(const Vector& x, const Vector& u) const {
  if (x.size() != state_dim() || u.size() != input_dim())
    throw Error(ErrorKind::dimension_mismatch, "plant step: state or input has the wrong dimension");
  if (kind_ == PlantKind::lti) return a_ * x + b_ * u;
  return Vector::Constant(1, f(x(0), u(0)));
}

Vector Plant::output(const Vector& x, const Vector& u) const {
  if (kind_ != PlantKind::lti) return x;
  return c_ * x + d_ * u;
}

void ExcitationSpec::validate() const {
  input.validate();
  initial_state.validate();
  if (horizon < 1) throw Error(ErrorKind::invalid_argument, "excitation horizon must be >= 1");
  if (records < 1) throw Error(ErrorKind::invalid_argument, "excitation needs at least one record");
  if (!(output_noise_std >= 0.0)) throw Error(ErrorKind::invalid_argument, "output noise must be >= 0");
}

TrajectoryBank collect(const Plant& plant, const ExcitationSpec& ex) {
  ex.validate();
  Rng rng(ex.seed);
  TrajectoryBank bank;
  bank.setting = plant.setting();
  bank.input_dim = plant.input_dim();
  bank.output_dim = plant.kind() == PlantKind::lti ? plant.output_dim() : plant.state_dim();
  const Index t = ex.horizon;
  for (Index r = 0; r < ex.records; ++r) {
    Vector x = ex.initial_state.sample(rng, plant.state_dim());
    Record rec;
    rec.inputs.resize(plant.input_dim(), t);
    for (Index k = 0; k < t; ++k) rec.inputs.col(k) = ex.input.sample(rng, plant.input_dim());
    rec.outputs.resize(bank.output_dim, t);
    if (plant.setting() == Setting::state_space) rec.initial = x;
    for (Index k = 0; k < t; ++k) {
      const Vector u = rec.inputs.col(k);
      if (plant.setting() == Setting::io) {
        rec.outputs.col(k) = plant.output(x, u);
        x = plant.step(x, u);
      } else {
        x = plant.step(x, u);
        rec.outputs.col(k) = x;
      }
    }
    if (ex.output_noise_std > 0.0 && plant.setting() == Setting::io)
      for (Index k = 0; k < t; ++k)
        for (Index i = 0; i < bank.output_dim; ++i) rec.outputs(i, k) += ex.output_noise_std * rng.normal();
    bank.records.push_back(std::move(rec));
  }
  return bank;
}

TrajectoryBank collect_abstract_atoms(Index count, const Distribution& dist, std::uint64_t seed) {
  dist.validate();
  if (count < 1) throw Error(ErrorKind::invalid_argument, "need at least one atom");
  Rng rng(seed);
  TrajectoryBank bank;
  bank.setting = Setting::state_space;
  bank.input_dim = 0;
  bank.output_dim = 1;
  for (Index i = 0; i < count; ++i) {
    Record r;
    r.initial = Vector::Constant(1, dist.sample(rng));
    r.inputs = Matrix::Zero(0, 1);
    r.outputs = Matrix::Constant(1, 1, dist.sample(rng));
    bank.records.push_back(std::move(r));
  }
  return bank;
}

namespace protocols {

TrajectoryBank planar_gaussian_atoms(std::uint64_t seed, Index count) {
  return collect_abstract_atoms(count, Distribution::gaussian(0.0, 1.0), seed);
}

TrajectoryBank quadratic_plant_samples(std::uint64_t seed, Index count) {
  ExcitationSpec ex;
  ex.input = Distribution::uniform_on(-1.0, 1.0);
  ex.initial_state = Distribution::uniform_on(-1.0, 1.0);
  ex.horizon = 1;
  ex.records = count;
  ex.seed = seed;
  return collect(Plant::scalar_quadratic(), ex);
}

}  // namespace protocols
}  // namespace dpc
