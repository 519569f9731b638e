#include "dpc/trajdata.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace dpc {
namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, size_t line_no) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": not a number: '" + s + "'");
  return v;
}

long parse_int(const std::string& s, size_t line_no) {
  long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": not an integer: '" + s + "'");
  return v;
}

// Counts consecutive columns named prefix1, prefix2, ... starting at `pos`.
Index count_prefixed(const std::vector<std::string>& header, size_t pos, char prefix) {
  Index count = 0;
  while (pos < header.size() && header[pos] == std::string(1, prefix) + std::to_string(count + 1)) {
    ++count;
    ++pos;
  }
  return count;
}

}  // namespace

TrajectoryBank read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::parse, "empty trajectory csv");
  auto header = split_line(line);
  if (header.size() < 3 || header[0] != "record" || header[1] != "k")
    throw Error(ErrorKind::parse, "trajectory csv header must start with 'record,k'");

  TrajectoryBank bank;
  Index first = 0, second = 0;
  if (header[2] == "u1") {
    bank.setting = Setting::io;
    first = count_prefixed(header, 2, 'u');
    second = count_prefixed(header, 2 + static_cast<size_t>(first), 'y');
    bank.input_dim = first;
    bank.output_dim = second;
  } else if (header[2] == "x1") {
    bank.setting = Setting::state_space;
    first = count_prefixed(header, 2, 'x');
    second = count_prefixed(header, 2 + static_cast<size_t>(first), 'u');
    bank.output_dim = first;
    bank.input_dim = second;
  } else {
    throw Error(ErrorKind::parse, "trajectory csv: third column must be u1 (io) or x1 (state_space)");
  }
  if (static_cast<Index>(header.size()) != 2 + first + second)
    throw Error(ErrorKind::parse, "trajectory csv: unexpected header columns");
  if (bank.setting == Setting::io && second == 0)
    throw Error(ErrorKind::parse, "trajectory csv: io data needs at least one y column");

  // Collect rows per record.
  std::vector<std::vector<std::vector<std::string>>> rows_per_record;
  long current = -1, expected_k = 0;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split_line(line);
    if (cells.size() != header.size())
      throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": wrong number of fields");
    long rec = parse_int(cells[0], line_no);
    long k = parse_int(cells[1], line_no);
    if (rec != current) {
      if (rec != current + 1)
        throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": records must be numbered 0,1,2,...");
      current = rec;
      expected_k = 0;
      rows_per_record.emplace_back();
    }
    if (k != expected_k)
      throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": gap in k (expected " +
                                        std::to_string(expected_k) + ", got " + std::to_string(k) + ")");
    ++expected_k;
    rows_per_record.back().push_back(std::move(cells));
  }

  const Index m = bank.input_dim, q = bank.output_dim;
  for (const auto& rows : rows_per_record) {
    Record r;
    if (bank.setting == Setting::io) {
      const Index t = static_cast<Index>(rows.size());
      r.inputs.resize(m, t);
      r.outputs.resize(q, t);
      for (Index k = 0; k < t; ++k) {
        const auto& c = rows[static_cast<size_t>(k)];
        for (Index i = 0; i < m; ++i) r.inputs(i, k) = parse_double(c[static_cast<size_t>(2 + i)], 0);
        for (Index i = 0; i < q; ++i) r.outputs(i, k) = parse_double(c[static_cast<size_t>(2 + m + i)], 0);
      }
    } else {
      // rows k = 0..T: x(k) then u(k); the final row's inputs are ignored.
      const Index t = static_cast<Index>(rows.size()) - 1;
      if (t < 1) throw Error(ErrorKind::parse, "state_space record needs at least rows k = 0 and k = 1");
      r.initial.resize(q);
      r.inputs.resize(m, t);
      r.outputs.resize(q, t);
      for (Index k = 0; k <= t; ++k) {
        const auto& c = rows[static_cast<size_t>(k)];
        Vector x(q);
        for (Index i = 0; i < q; ++i) x(i) = parse_double(c[static_cast<size_t>(2 + i)], 0);
        if (k == 0) {
          r.initial = x;
        } else {
          r.outputs.col(k - 1) = x;
        }
        if (k < t) {
          for (Index i = 0; i < m; ++i) r.inputs(i, k) = parse_double(c[static_cast<size_t>(2 + q + i)], 0);
        }
      }
    }
    bank.records.push_back(std::move(r));
  }
  bank.validate();
  return bank;
}

TrajectoryBank read_trajectory_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::parse, "cannot open trajectory csv '" + path + "'");
  return read_trajectory_csv(in);
}

void write_trajectory_csv(std::ostream& out, const TrajectoryBank& bank) {
  bank.validate();
  const Index m = bank.input_dim, q = bank.output_dim;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "record,k";
  if (bank.setting == Setting::io) {
    for (Index i = 0; i < m; ++i) out << ",u" << i + 1;
    for (Index i = 0; i < q; ++i) out << ",y" << i + 1;
  } else {
    for (Index i = 0; i < q; ++i) out << ",x" << i + 1;
    for (Index i = 0; i < m; ++i) out << ",u" << i + 1;
  }
  out << '\n';
  for (size_t rec = 0; rec < bank.records.size(); ++rec) {
    const Record& r = bank.records[rec];
    const Index t = r.length();
    if (bank.setting == Setting::io) {
      for (Index k = 0; k < t; ++k) {
        out << rec << ',' << k;
        for (Index i = 0; i < m; ++i) out << ',' << r.inputs(i, k);
        for (Index i = 0; i < q; ++i) out << ',' << r.outputs(i, k);
        out << '\n';
      }
    } else {
      for (Index k = 0; k <= t; ++k) {
        out << rec << ',' << k;
        const Vector x = k == 0 ? r.initial : Vector(r.outputs.col(k - 1));
        for (Index i = 0; i < q; ++i) out << ',' << x(i);
        for (Index i = 0; i < m; ++i) {
          out << ',';
          if (k < t) out << r.inputs(i, k);
        }
        out << '\n';
      }
    }
  }
}

}  // namespace dpc
