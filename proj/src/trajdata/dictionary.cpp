#include "dpc/json_eigen.hpp"
#include "dpc/trajdata.hpp"

#include <sstream>

namespace dpc {

std::string_view to_string(Setting s) { return s == Setting::io ? "io" : "state_space"; }

std::string_view to_string(Windowing w) {
  return w == Windowing::hankel_sliding ? "hankel_sliding" : "one_column_per_record";
}

Setting setting_from_string(std::string_view s) {
  if (s == "io") return Setting::io;
  if (s == "state_space") return Setting::state_space;
  throw Error(ErrorKind::parse, "unknown setting '" + std::string(s) + "'");
}

Windowing windowing_from_string(std::string_view s) {
  if (s == "hankel_sliding") return Windowing::hankel_sliding;
  if (s == "one_column_per_record") return Windowing::one_column_per_record;
  throw Error(ErrorKind::parse, "unknown windowing '" + std::string(s) + "'");
}

void TrajectoryBank::validate() const {
  if (records.empty()) throw Error(ErrorKind::invalid_argument, "trajectory bank is empty");
  for (size_t i = 0; i < records.size(); ++i) {
    const Record& r = records[i];
    std::string tag = "record " + std::to_string(i) + ": ";
    if (r.inputs.rows() != input_dim || r.outputs.rows() != output_dim)
      throw Error(ErrorKind::dimension_mismatch, tag + "signal dimensions differ from the bank's");
    if (r.inputs.cols() != r.outputs.cols())
      throw Error(ErrorKind::dimension_mismatch, tag + "input and output sequences differ in length");
    if (r.length() < 1) throw Error(ErrorKind::invalid_argument, tag + "empty record");
    if (setting == Setting::state_space && r.initial.size() != output_dim)
      throw Error(ErrorKind::dimension_mismatch, tag + "initial state has wrong dimension");
    if (setting == Setting::io && r.initial.size() != 0)
      throw Error(ErrorKind::invalid_argument, tag + "io records carry no initial state");
  }
}

Index DictionaryDims::past_rows() const {
  return setting == Setting::io ? (m + p) * past : p;
}

DataDictionary::DataDictionary(DictionaryDims dims, Matrix matrix, std::vector<ColumnProvenance> provenance)
    : dims_(dims), matrix_(std::move(matrix)), provenance_(std::move(provenance)) {
  if (matrix_.rows() != dims_.rows())
    throw Error(ErrorKind::dimension_mismatch, "data matrix row count does not match the declared dimensions");
  if (static_cast<Index>(provenance_.size()) != matrix_.cols())
    throw Error(ErrorKind::dimension_mismatch, "provenance list length differs from column count");
  if (dims_.setting == Setting::state_space && dims_.past != 0)
    throw Error(ErrorKind::invalid_argument, "state_space dictionaries have no past window (N_p = 0)");
  if (dims_.horizon < 1) throw Error(ErrorKind::invalid_argument, "prediction horizon N must be >= 1");
}

DataDictionary DataDictionary::select_columns(const std::vector<Index>& cols) const {
  Matrix sub(rows(), static_cast<Index>(cols.size()));
  std::vector<ColumnProvenance> prov;
  prov.reserve(cols.size());
  for (size_t k = 0; k < cols.size(); ++k) {
    Index c = cols[k];
    if (c < 0 || c >= columns()) throw Error(ErrorKind::invalid_argument, "column index out of range");
    sub.col(static_cast<Index>(k)) = matrix_.col(c);
    prov.push_back(provenance_[static_cast<size_t>(c)]);
  }
  return DataDictionary(dims_, std::move(sub), std::move(prov));
}

namespace {

// Writes the window of `rec` starting at `offset` into column `col`.
void fill_io_column(Matrix& d, Index col, const Record& rec, Index offset, const DictionaryDims& dims) {
  const Index m = dims.m, p = dims.p, np = dims.past, n = dims.horizon;
  Index row = 0;
  for (Index k = 0; k < np; ++k, row += m) d.col(col).segment(row, m) = rec.inputs.col(offset + k);
  for (Index k = 0; k < np; ++k, row += p) d.col(col).segment(row, p) = rec.outputs.col(offset + k);
  for (Index k = 0; k < n; ++k, row += m) d.col(col).segment(row, m) = rec.inputs.col(offset + np + k);
  for (Index k = 0; k < n; ++k, row += p) d.col(col).segment(row, p) = rec.outputs.col(offset + np + k);
}

// State-space window: x(offset) | u(offset..offset+N-1) | x(offset+1..offset+N).
void fill_state_column(Matrix& d, Index col, const Record& rec, Index offset, const DictionaryDims& dims) {
  const Index m = dims.m, nx = dims.p, n = dims.horizon;
  Index row = 0;
  d.col(col).segment(row, nx) = offset == 0 ? rec.initial : Vector(rec.outputs.col(offset - 1));
  row += nx;
  for (Index k = 0; k < n; ++k, row += m) d.col(col).segment(row, m) = rec.inputs.col(offset + k);
  for (Index k = 0; k < n; ++k, row += nx) d.col(col).segment(row, nx) = rec.outputs.col(offset + k);
}

}  // namespace

DataDictionary build_dictionary(const TrajectoryBank& bank, Index past, Index horizon, Windowing windowing,
                                std::optional<Index> order) {
  bank.validate();
  if (horizon < 1) throw Error(ErrorKind::invalid_argument, "prediction horizon N must be >= 1");
  if (bank.setting == Setting::io && past < 1)
    throw Error(ErrorKind::invalid_argument, "io setting needs a past window N_p >= 1");
  if (bank.setting == Setting::state_space && past != 0)
    throw Error(ErrorKind::invalid_argument, "state_space setting uses N_p = 0 (x0 replaces the past window)");

  DictionaryDims dims{bank.setting, bank.input_dim, bank.output_dim, order, past, horizon};
  if (bank.setting == Setting::state_space) dims.n = order.value_or(bank.output_dim);
  // Samples consumed per window: inputs/outputs indexed 0..L-1 (io) or
  // inputs 0..N-1 plus the initial state (state_space).
  const Index span = bank.setting == Setting::io ? past + horizon : horizon;

  std::vector<ColumnProvenance> prov;
  for (size_t i = 0; i < bank.records.size(); ++i) {
    const Index t = bank.records[i].length();
    std::string tag = "record " + std::to_string(i);
    if (windowing == Windowing::one_column_per_record) {
      if (t != span)
        throw Error(ErrorKind::invalid_argument,
                    tag + " has length " + std::to_string(t) + ", expected exactly " + std::to_string(span));
      prov.push_back({static_cast<Index>(i), 0});
    } else {
      if (t < span)
        throw Error(ErrorKind::invalid_argument,
                    tag + " is too short: length " + std::to_string(t) + " < " + std::to_string(span));
      for (Index off = 0; off + span <= t; ++off) prov.push_back({static_cast<Index>(i), off});
    }
  }

  Matrix d(dims.rows(), static_cast<Index>(prov.size()));
  for (size_t c = 0; c < prov.size(); ++c) {
    const Record& rec = bank.records[static_cast<size_t>(prov[c].record)];
    if (bank.setting == Setting::io) {
      fill_io_column(d, static_cast<Index>(c), rec, prov[c].offset, dims);
    } else {
      fill_state_column(d, static_cast<Index>(c), rec, prov[c].offset, dims);
    }
  }
  return DataDictionary(dims, std::move(d), std::move(prov));
}

GpeCheck check_gpe(const DataDictionary& dict, Index order, const RankPolicy& policy) {
  const auto& dims = dict.dims();
  GpeCheck out;
  out.rows = dict.rows();
  out.required = dims.setting == Setting::io ? dims.window() * dims.m + order : order + dims.m * dims.horizon;
  out.rank = numeric_rank(dict.matrix(), policy);
  out.holds = out.rank == out.required;
  return out;
}

bool check_full_row_rank(const DataDictionary& dict, const RankPolicy& policy) {
  return numeric_rank(dict.matrix(), policy) == dict.rows();
}

Vector extract_regressor(const Matrix& recent_inputs, const Matrix& recent_outputs, Index past) {
  if (recent_inputs.cols() != past || recent_outputs.cols() != past) {
    std::ostringstream os;
    os << "regressor needs exactly " << past << " recent steps, got " << recent_inputs.cols() << " inputs and "
       << recent_outputs.cols() << " outputs";
    throw Error(ErrorKind::dimension_mismatch, os.str());
  }
  const Index m = recent_inputs.rows(), p = recent_outputs.rows();
  Vector xi((m + p) * past);
  for (Index k = 0; k < past; ++k) xi.segment(k * m, m) = recent_inputs.col(k);
  for (Index k = 0; k < past; ++k) xi.segment(m * past + k * p, p) = recent_outputs.col(k);
  return xi;
}

nlohmann::json to_json(const DataDictionary& dict) {
  const auto& d = dict.dims();
  nlohmann::json dims = {{"m", d.m},         {"p", d.p},       {"N_p", d.past},
                         {"N", d.horizon},   {"L", d.window()}, {"rows", dict.rows()},
                         {"columns", dict.columns()}};
  dims["n"] = d.n ? nlohmann::json(*d.n) : nlohmann::json(nullptr);
  auto range = [](RowRange r) { return nlohmann::json::array({r.begin, r.end()}); };
  nlohmann::json entries = nlohmann::json::array();
  for (Index c = 0; c < dict.columns(); ++c)
    for (Index r = 0; r < dict.rows(); ++r) entries.push_back(dict.matrix()(r, c));
  nlohmann::json prov = nlohmann::json::array();
  for (const auto& p : dict.provenance()) prov.push_back({{"record", p.record}, {"offset", p.offset}});
  return {{"setting", std::string(to_string(d.setting))},
          {"dims", dims},
          {"partitions", {{"W", range(dict.past_range())}, {"U", range(dict.input_range())}, {"Y", range(dict.output_range())}}},
          {"layout", "column_major"},
          {"entries", entries},
          {"provenance", prov}};
}

DataDictionary dictionary_from_json(const nlohmann::json& j) {
  try {
    DictionaryDims dims;
    dims.setting = setting_from_string(j.at("setting").get<std::string>());
    const auto& jd = j.at("dims");
    dims.m = jd.at("m").get<Index>();
    dims.p = jd.at("p").get<Index>();
    dims.past = jd.at("N_p").get<Index>();
    dims.horizon = jd.at("N").get<Index>();
    if (jd.contains("n") && !jd["n"].is_null()) dims.n = jd["n"].get<Index>();
    const Index rows = jd.at("rows").get<Index>();
    const Index cols = jd.at("columns").get<Index>();
    const auto& entries = j.at("entries");
    if (static_cast<Index>(entries.size()) != rows * cols)
      throw Error(ErrorKind::parse, "dictionary entries do not match rows x columns");
    Matrix m(rows, cols);
    for (Index c = 0; c < cols; ++c)
      for (Index r = 0; r < rows; ++r) m(r, c) = number_from_json(entries[static_cast<size_t>(c * rows + r)]);
    std::vector<ColumnProvenance> prov;
    for (const auto& p : j.at("provenance")) prov.push_back({p.at("record").get<Index>(), p.at("offset").get<Index>()});
    return DataDictionary(dims, std::move(m), std::move(prov));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("malformed dictionary json: ") + e.what());
  }
}

}  // namespace dpc
