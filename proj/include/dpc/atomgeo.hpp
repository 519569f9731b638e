#pragma once

// Atom-set geometry for 1-norm regularized data-driven prediction:
// mirroring, extreme-point pruning of conv(D±), the atomic norm induced by
// the pruned mirrored set, and conic / span membership tests.

#include "dpc/execution.hpp"
#include "dpc/numsolve.hpp"
#include "dpc/trajdata.hpp"

#include <nlohmann/json_fwd.hpp>

#include <string_view>
#include <utility>
#include <vector>

namespace dpc {

enum class AtomKind { original, mirrored, pruned, pruned_mirrored };
std::string_view to_string(AtomKind k);

struct AtomLabel {
  Index source = 0;  // column of the data matrix the atom came from
  int sign = 1;      // +1 or -1
  bool operator==(const AtomLabel&) const = default;
};

/// Finite set of trajectory atoms stored column-wise.
class AtomSet {
 public:
  AtomSet(Matrix atoms, std::vector<AtomLabel> labels, AtomKind kind);

  /// Columns of the data matrix as an original (unmirrored) set.
  static AtomSet from_dictionary(const DataDictionary& dict);

  [[nodiscard]] const Matrix& atoms() const { return atoms_; }
  [[nodiscard]] const std::vector<AtomLabel>& labels() const { return labels_; }
  [[nodiscard]] AtomKind kind() const { return kind_; }
  [[nodiscard]] Index size() const { return atoms_.cols(); }
  [[nodiscard]] Index dim() const { return atoms_.rows(); }
  [[nodiscard]] auto atom(Index i) const { return atoms_.col(i); }

  /// Source columns of the +-labelled atoms, in storage order.
  [[nodiscard]] std::vector<Index> positive_sources() const;
  /// True if every atom's negation is also present (within tol).
  [[nodiscard]] bool centrally_symmetric(double tol = 1e-10) const;

 private:
  Matrix atoms_;
  std::vector<AtomLabel> labels_;
  AtomKind kind_;
};

struct MirrorReport {
  Index candidates = 0;                            // 2 * |D| before dedup
  std::vector<std::pair<Index, Index>> duplicates; // (kept, dropped) with w_dropped = w_kept
  std::vector<std::pair<Index, Index>> antipodal;  // (kept, dropped) with w_dropped = -w_kept
  std::vector<Index> zero_atoms;                   // dropped, contribute nothing
  [[nodiscard]] bool clean() const { return duplicates.empty() && antipodal.empty() && zero_atoms.empty(); }
};

struct MirrorResult {
  AtomSet set;
  MirrorReport report;
};

/// D -> D± = {+w, -w}. Duplicates, antipodal pairs and zero atoms of D are
/// removed first (the lower index survives) and listed in the report.
/// Storage order: all + atoms, then all - atoms, in source order.
MirrorResult mirror(const AtomSet& original, const ToleranceConfig& tol = default_tolerances());

enum class HullMethod { lp_test, quickhull_lowdim };
std::string_view to_string(HullMethod m);
HullMethod hull_method_from_string(std::string_view s);

struct ExtremePointResult {
  AtomSet pruned;                        // kind pruned_mirrored
  std::vector<bool> retained;            // per input atom
  /// For each discarded atom, convex weights over the input atoms that
  /// reproduce it (empty for retained atoms or for the geometric method).
  std::vector<Vector> certificates;
  Index boundary_removed = 0;            // removed atoms with gauge 1 (facet, non-vertex)
  Index symmetry_repairs = 0;            // +/- pairs decided differently, both kept
  HullMethod method = HullMethod::lp_test;
};

/// Extreme points of conv(D±). The LP test removes atom j iff convex
/// weights over the other atoms reproduce it within tol.feas; the
/// low-dimensional hull method (dim <= 3) is an independent cross-check.
ExtremePointResult extreme_points(const AtomSet& mirrored, HullMethod method = HullMethod::lp_test,
                                  const ToleranceConfig& tol = default_tolerances(),
                                  Execution exec = Execution::parallel);

/// D̄ = D ∩ D̄±: originals whose + copy survived pruning.
AtomSet unmirror(const AtomSet& pruned_mirrored, const AtomSet& original);

struct GaugeResult {
  double value = 0.0;
  Vector coefficients;     // over the atoms of the set, nonnegative
  std::vector<Index> support;
  SolveResult certificate;
};

/// Atomic norm  min 1'a  s.t.  sum a_i w_i = w, a >= 0.
/// Throws Error{span_violation} if w is outside the span of the atoms.
GaugeResult atomic_norm(const Vector& w, const AtomSet& atoms, const ToleranceConfig& tol = default_tolerances());

struct TrajectoryEffect {
  double full_lp = 0.0;        // min lambda*|a|_1 s.t. w = D a, over the full data
  double scaled_norm = 0.0;    // lambda * atomic norm over the pruned mirrored set
  double discrepancy = 0.0;    // |full_lp - scaled_norm|
  SolveResult full_certificate;
  SolveResult norm_certificate;
};

/// Price of synthesizing w under lambda*|a|_1, computed both over the full
/// data matrix and as a scaled atomic norm of the pruned mirrored set.
TrajectoryEffect trajectory_specific_effect(const Vector& w, const DataDictionary& dict,
                                            const AtomSet& pruned_mirrored, double lambda,
                                            const ToleranceConfig& tol = default_tolerances());

/// Convenience overload that prunes the dictionary first.
TrajectoryEffect trajectory_specific_effect(const Vector& w, const DataDictionary& dict, double lambda,
                                            const ToleranceConfig& tol = default_tolerances());

/// w in coni(atoms), by LP feasibility.
bool conic_membership(const Vector& w, const AtomSet& atoms, const ToleranceConfig& tol = default_tolerances());

/// w in span(columns), by least-squares residual <= tol.span * (1 + |w|).
bool span_membership(const Vector& w, const Matrix& columns, const ToleranceConfig& tol = default_tolerances());

struct MembershipProbe {
  bool span_pruned = false;           // span(D̄)
  bool coni_pruned_mirrored = false;  // coni(D̄±)
  bool coni_mirrored = false;         // coni(D±)
  bool span_original = false;         // span(D)
  [[nodiscard]] bool agree() const {
    return span_pruned == coni_pruned_mirrored && coni_pruned_mirrored == coni_mirrored &&
           coni_mirrored == span_original;
  }
};

struct PrunedData;

/// The four set-membership predicates relating D, D±, D̄ and D̄±.
MembershipProbe membership_probe(const Vector& w, const PrunedData& data,
                                 const ToleranceConfig& tol = default_tolerances());

/// Full offline pruning pipeline on a data matrix.
struct PrunedData {
  AtomSet original;
  MirrorResult mirrored;
  ExtremePointResult extreme;
  AtomSet pruned;              // D̄
  DataDictionary dictionary;   // columns of D̄
  double elapsed_ms = 0.0;
};

PrunedData prune_dictionary(const DataDictionary& dict, HullMethod method = HullMethod::lp_test,
                            const ToleranceConfig& tol = default_tolerances(),
                            Execution exec = Execution::parallel);

/// Pruning report: retained/discarded columns with provenance, the convex
/// weights certifying each discard, and timing.
nlohmann::json pruning_report(const PrunedData& data, const DataDictionary& full);

// Low-dimensional hull helpers (dim <= 3 after projection onto the span).
namespace hull {
/// Indices of the vertices of conv(points) (columns), dimension <= 3.
std::vector<Index> vertices_lowdim(const Matrix& points, double rel_tol = 1e-10);
/// Counter-clockwise vertex order of a planar point set.
std::vector<Index> ordered_vertices_2d(const Matrix& points, double rel_tol = 1e-10);
}  // namespace hull

}  // namespace dpc
