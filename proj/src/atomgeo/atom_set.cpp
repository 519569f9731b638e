#include "dpc/atomgeo.hpp"

#include <algorithm>

namespace dpc {
namespace {

double close_tol(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b, double tol) {
  return tol * (1.0 + std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()));
}

bool is_mirrored(AtomKind k) { return k == AtomKind::mirrored || k == AtomKind::pruned_mirrored; }

}  // namespace

std::string_view to_string(AtomKind k) {
  switch (k) {
    case AtomKind::original: return "original";
    case AtomKind::mirrored: return "mirrored";
    case AtomKind::pruned: return "pruned";
    case AtomKind::pruned_mirrored: return "pruned_mirrored";
  }
  return "?";
}

AtomSet::AtomSet(Matrix atoms, std::vector<AtomLabel> labels, AtomKind kind)
    : atoms_(std::move(atoms)), labels_(std::move(labels)), kind_(kind) {
  if (static_cast<Index>(labels_.size()) != atoms_.cols())
    throw Error(ErrorKind::dimension_mismatch, "atom set needs one label per atom");
  for (const auto& l : labels_)
    if (l.sign != 1 && l.sign != -1) throw Error(ErrorKind::invalid_argument, "atom label sign must be +1 or -1");
  if (!atoms_.allFinite()) throw Error(ErrorKind::invalid_argument, "atom set contains non-finite entries");
  if (is_mirrored(kind_) && !centrally_symmetric())
    throw Error(ErrorKind::invalid_argument, "mirrored atom set is not centrally symmetric");
}

AtomSet AtomSet::from_dictionary(const DataDictionary& dict) {
  std::vector<AtomLabel> labels;
  for (Index c = 0; c < dict.columns(); ++c) labels.push_back({c, 1});
  return AtomSet(dict.matrix(), std::move(labels), AtomKind::original);
}

std::vector<Index> AtomSet::positive_sources() const {
  std::vector<Index> out;
  for (const auto& l : labels_)
    if (l.sign > 0) out.push_back(l.source);
  return out;
}

bool AtomSet::centrally_symmetric(double tol) const {
  for (Index i = 0; i < size(); ++i) {
    bool found = false;
    for (Index j = 0; j < size() && !found; ++j) {
      const Vector neg = -atoms_.col(j);
      found = (atoms_.col(i) - neg).cwiseAbs().maxCoeff() <= close_tol(atoms_.col(i), neg, tol);
    }
    if (!found) return false;
  }
  return true;
}

MirrorResult mirror(const AtomSet& original, const ToleranceConfig& tol) {
  if (original.kind() != AtomKind::original && original.kind() != AtomKind::pruned)
    throw Error(ErrorKind::invalid_argument, "mirror expects an unmirrored atom set");
  MirrorReport report;
  report.candidates = 2 * original.size();
  std::vector<Index> kept;
  for (Index j = 0; j < original.size(); ++j) {
    const auto w = original.atom(j);
    if (w.cwiseAbs().maxCoeff() <= tol.dup) {
      report.zero_atoms.push_back(j);
      continue;
    }
    bool dropped = false;
    for (Index i : kept) {
      const auto v = original.atom(i);
      const double t = close_tol(v, w, tol.dup);
      if ((w - v).cwiseAbs().maxCoeff() <= t) {
        report.duplicates.emplace_back(i, j);
        dropped = true;
      } else if ((w + v).cwiseAbs().maxCoeff() <= t) {
        report.antipodal.emplace_back(i, j);
        dropped = true;
      }
      if (dropped) break;
    }
    if (!dropped) kept.push_back(j);
  }

  const Index k = static_cast<Index>(kept.size());
  Matrix atoms(original.dim(), 2 * k);
  std::vector<AtomLabel> labels(static_cast<size_t>(2 * k));
  for (Index i = 0; i < k; ++i) {
    const Index j = kept[static_cast<size_t>(i)];
    const Index src = original.labels()[static_cast<size_t>(j)].source;
    atoms.col(i) = original.atom(j);
    atoms.col(k + i) = -original.atom(j);
    labels[static_cast<size_t>(i)] = {src, 1};
    labels[static_cast<size_t>(k + i)] = {src, -1};
  }
  return {AtomSet(std::move(atoms), std::move(labels), AtomKind::mirrored), std::move(report)};
}

AtomSet unmirror(const AtomSet& pruned_mirrored, const AtomSet& original) {
  if (pruned_mirrored.kind() != AtomKind::pruned_mirrored)
    throw Error(ErrorKind::invalid_argument, "unmirror expects a pruned mirrored atom set");
  if (pruned_mirrored.dim() != original.dim())
    throw Error(ErrorKind::dimension_mismatch, "pruned and original atoms live in different spaces");

  // Position of each source column inside `original`.
  std::vector<std::pair<Index, Index>> order;  // (source, position in original)
  for (Index i = 0; i < pruned_mirrored.size(); ++i) {
    const auto& l = pruned_mirrored.labels()[static_cast<size_t>(i)];
    if (l.sign < 0) continue;
    Index pos = -1;
    for (Index j = 0; j < original.size(); ++j)
      if (original.labels()[static_cast<size_t>(j)].source == l.source) pos = j;
    if (pos < 0)
      throw Error(ErrorKind::invalid_argument, "pruned atom refers to source column " + std::to_string(l.source) +
                                                   " absent from the original set");
    const auto w = pruned_mirrored.atom(i), v = original.atom(pos);
    if ((w - v).cwiseAbs().maxCoeff() > close_tol(w, v, 1e-10))
      throw Error(ErrorKind::invalid_argument,
                  "label mismatch: pruned atom differs from original column " + std::to_string(l.source));
    order.emplace_back(l.source, pos);
  }
  std::sort(order.begin(), order.end());
  Matrix atoms(original.dim(), static_cast<Index>(order.size()));
  std::vector<AtomLabel> labels;
  for (size_t k = 0; k < order.size(); ++k) {
    atoms.col(static_cast<Index>(k)) = original.atom(order[k].second);
    labels.push_back({order[k].first, 1});
  }
  return AtomSet(std::move(atoms), std::move(labels), AtomKind::pruned);
}

}  // namespace dpc
