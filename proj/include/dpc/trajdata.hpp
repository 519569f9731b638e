#pragma once

// Trajectory data and the partitioned data matrix built from it.
//
// Row layout of the data matrix (top to bottom):
//   io:           U_p (m*Np) | Y_p (p*Np) | U (m*N) | Y (p*N)
//   state_space:  X_0 (n)    | U (m*N)    | X (n*N)
// The first block (U_p over Y_p, or X_0) is the past/initial-condition block
// W; W and U together form Z. Inside each block samples are time-major.

#include "dpc/numsolve.hpp"
#include "dpc/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dpc {

enum class Setting { io, state_space };
enum class Windowing { hankel_sliding, one_column_per_record };

std::string_view to_string(Setting s);
std::string_view to_string(Windowing w);
Setting setting_from_string(std::string_view s);
Windowing windowing_from_string(std::string_view s);

/// One recorded experiment. For state_space records `initial` holds x(0)
/// and `outputs` holds x(1..T); for io records `initial` is empty.
struct Record {
  Vector initial;
  Matrix inputs;   // m x T
  Matrix outputs;  // p x T (io) or n x T (state_space)

  [[nodiscard]] Index length() const { return inputs.cols(); }
};

struct TrajectoryBank {
  Setting setting = Setting::io;
  Index input_dim = 0;   // m
  Index output_dim = 0;  // p (io) or n (state_space)
  std::vector<Record> records;

  void validate() const;
};

struct RowRange {
  Index begin = 0;
  Index size = 0;
  [[nodiscard]] Index end() const { return begin + size; }
};

struct ColumnProvenance {
  Index record = 0;
  Index offset = 0;
  bool operator==(const ColumnProvenance&) const = default;
};

struct DictionaryDims {
  Setting setting = Setting::io;
  Index m = 0;                 // input dimension
  Index p = 0;                 // output dimension (n in state_space)
  std::optional<Index> n;      // true system order, when known
  Index past = 0;              // N_p (unused in state_space)
  Index horizon = 0;           // N

  [[nodiscard]] Index window() const { return past + horizon; }
  [[nodiscard]] Index past_rows() const;
  [[nodiscard]] Index input_rows() const { return m * horizon; }
  [[nodiscard]] Index output_rows() const { return p * horizon; }
  [[nodiscard]] Index rows() const { return past_rows() + input_rows() + output_rows(); }
};

/// Immutable partitioned data matrix with per-column provenance.
class DataDictionary {
 public:
  DataDictionary(DictionaryDims dims, Matrix matrix, std::vector<ColumnProvenance> provenance);

  [[nodiscard]] const DictionaryDims& dims() const { return dims_; }
  [[nodiscard]] const Matrix& matrix() const { return matrix_; }
  [[nodiscard]] const std::vector<ColumnProvenance>& provenance() const { return provenance_; }
  [[nodiscard]] Index rows() const { return matrix_.rows(); }
  [[nodiscard]] Index columns() const { return matrix_.cols(); }

  [[nodiscard]] RowRange past_range() const { return {0, dims_.past_rows()}; }
  [[nodiscard]] RowRange input_range() const { return {dims_.past_rows(), dims_.input_rows()}; }
  [[nodiscard]] RowRange output_range() const {
    return {dims_.past_rows() + dims_.input_rows(), dims_.output_rows()};
  }
  /// Parameter dimension: rows of Z = (W; U).
  [[nodiscard]] Index z_dim() const { return dims_.past_rows() + dims_.input_rows(); }

  [[nodiscard]] auto past_block() const { return matrix_.topRows(dims_.past_rows()); }
  [[nodiscard]] auto input_block() const { return matrix_.middleRows(dims_.past_rows(), dims_.input_rows()); }
  [[nodiscard]] auto output_block() const { return matrix_.bottomRows(dims_.output_rows()); }
  [[nodiscard]] auto z_block() const { return matrix_.topRows(z_dim()); }

  /// Sub-dictionary with the given columns, provenance carried along.
  [[nodiscard]] DataDictionary select_columns(const std::vector<Index>& cols) const;

 private:
  DictionaryDims dims_;
  Matrix matrix_;
  std::vector<ColumnProvenance> provenance_;
};

/// Builds the data matrix from length-L windows of each record
/// (L = N_p + N for io, N for state_space).
DataDictionary build_dictionary(const TrajectoryBank& bank, Index past, Index horizon, Windowing windowing,
                                std::optional<Index> order = std::nullopt);

struct GpeCheck {
  bool holds = false;
  Index rank = 0;
  Index required = 0;
  Index rows = 0;
};

/// Rank condition rank(D) = L*m + n (io) or n + m*N (state_space).
GpeCheck check_gpe(const DataDictionary& dict, Index order, const RankPolicy& policy = {});

/// Data-matrix full row rank.
bool check_full_row_rank(const DataDictionary& dict, const RankPolicy& policy = {});

/// Stacks the last N_p inputs (m x N_p) and outputs (p x N_p) in the
/// row order of the past block.
Vector extract_regressor(const Matrix& recent_inputs, const Matrix& recent_outputs, Index past);

// ---- interchange formats --------------------------------------------------

/// CSV with header `record,k,u1..um,y1..yp` (io) or `record,k,x1..xn,u1..um`
/// (state_space; rows k = 0..T, inputs left empty on the final row).
TrajectoryBank read_trajectory_csv(std::istream& in);
TrajectoryBank read_trajectory_csv_file(const std::string& path);
void write_trajectory_csv(std::ostream& out, const TrajectoryBank& bank);

nlohmann::json to_json(const DataDictionary& dict);
DataDictionary dictionary_from_json(const nlohmann::json& j);

}  // namespace dpc
