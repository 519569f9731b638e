#include "dpc/atomgeo.hpp"

#include <nlohmann/json.hpp>

#include <set>

namespace dpc {

nlohmann::json pruning_report(const PrunedData& data, const DataDictionary& full) {
  using nlohmann::json;
  auto column = [&](Index c) {
    const auto& p = full.provenance().at(static_cast<size_t>(c));
    return json{{"column", c}, {"record", p.record}, {"offset", p.offset}};
  };
  auto pairs = [](const std::vector<std::pair<Index, Index>>& v) {
    json a = json::array();
    for (const auto& [kept, dropped] : v) a.push_back({{"kept", kept}, {"dropped", dropped}});
    return a;
  };

  const AtomSet& mset = data.mirrored.set;
  std::set<Index> retained;
  for (const auto& l : data.pruned.labels()) retained.insert(l.source);
  std::set<Index> deduped(data.mirrored.report.zero_atoms.begin(), data.mirrored.report.zero_atoms.end());
  for (const auto& pr : data.mirrored.report.duplicates) deduped.insert(pr.second);
  for (const auto& pr : data.mirrored.report.antipodal) deduped.insert(pr.second);

  json kept = json::array(), discarded = json::array();
  for (Index c : retained) kept.push_back(column(c));
  for (Index i = 0; i < mset.size(); ++i) {
    const AtomLabel& l = mset.labels()[static_cast<size_t>(i)];
    if (l.sign < 0 || retained.count(l.source)) continue;
    json entry = column(l.source);
    json weights = json::array();
    const Vector& cert = data.extreme.certificates[static_cast<size_t>(i)];
    for (Index a = 0; a < cert.size(); ++a) {
      if (cert(a) <= 0.0) continue;
      const AtomLabel& la = mset.labels()[static_cast<size_t>(a)];
      weights.push_back({{"source", la.source}, {"sign", la.sign > 0 ? "+" : "-"}, {"weight", cert(a)}});
    }
    entry["certificate"] = weights;
    discarded.push_back(entry);
  }
  json dedup_only = json::array();
  for (Index c : deduped) dedup_only.push_back(column(c));

  return {{"method", std::string(to_string(data.extreme.method))},
          {"columns", full.columns()},
          {"candidates", data.mirrored.report.candidates},
          {"mirrored_atoms", mset.size()},
          {"pruned_mirrored_atoms", data.extreme.pruned.size()},
          {"dedup",
           {{"duplicates", pairs(data.mirrored.report.duplicates)},
            {"antipodal", pairs(data.mirrored.report.antipodal)},
            {"zero_atoms", data.mirrored.report.zero_atoms},
            {"columns", dedup_only}}},
          {"retained", kept},
          {"discarded", discarded},
          {"boundary_removed", data.extreme.boundary_removed},
          {"symmetry_repairs", data.extreme.symmetry_repairs},
          {"elapsed_ms", data.elapsed_ms}};
}

}  // namespace dpc
