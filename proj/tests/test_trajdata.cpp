#include "doctest.h"

#include "dpc/trajdata.hpp"
#include "test_support.hpp"

#include <nlohmann/json.hpp>

#include <sstream>

using namespace dpc;

namespace {

TrajectoryBank io_bank(const std::vector<Index>& lengths, test::Rng& rng, const test::Lti& sys) {
  TrajectoryBank bank;
  bank.setting = Setting::io;
  bank.input_dim = sys.b.cols();
  bank.output_dim = sys.c.rows();
  for (Index t : lengths) {
    Record r;
    r.inputs = rng.gaussian_matrix(bank.input_dim, t);
    r.outputs = sys.simulate(rng.gaussian_vector(sys.a.rows()), r.inputs);
    bank.records.push_back(r);
  }
  return bank;
}

TrajectoryBank quadratic_plant_bank(test::Rng& rng, int count) {
  TrajectoryBank bank;
  bank.setting = Setting::state_space;
  bank.input_dim = 1;
  bank.output_dim = 1;
  for (int i = 0; i < count; ++i) {
    double x0 = rng.uniform(-1, 1), u = rng.uniform(-1, 1);
    Record r;
    r.initial = Vector::Constant(1, x0);
    r.inputs = Matrix::Constant(1, 1, u);
    r.outputs = Matrix::Constant(1, 1, 2 * x0 * x0 + 2 * u * u - 1);
    bank.records.push_back(r);
  }
  return bank;
}

}  // namespace

TEST_CASE("build_dictionary: identity windowing of one record") {
  test::Rng rng(1);
  auto bank = io_bank({4}, rng, test::second_order_siso());
  auto d = build_dictionary(bank, 2, 2, Windowing::one_column_per_record);
  REQUIRE(d.columns() == 1);
  const auto& r = bank.records[0];
  Vector expected(8);
  expected << r.inputs(0, 0), r.inputs(0, 1), r.outputs(0, 0), r.outputs(0, 1), r.inputs(0, 2), r.inputs(0, 3),
      r.outputs(0, 2), r.outputs(0, 3);
  CHECK(d.matrix().col(0) == expected);
  CHECK(d.past_range().size == 4);
  CHECK(d.input_range().size == 2);
  CHECK(d.output_range().size == 2);
}

TEST_CASE("build_dictionary: hankel windows") {
  test::Rng rng(2);
  auto bank = io_bank({6}, rng, test::second_order_siso());
  auto d = build_dictionary(bank, 2, 2, Windowing::hankel_sliding);
  REQUIRE(d.columns() == 3);
  for (Index j = 0; j < 3; ++j) {
    CHECK(d.provenance()[static_cast<size_t>(j)] == ColumnProvenance{0, j});
    CHECK(d.matrix()(0, j) == bank.records[0].inputs(0, j));
    CHECK(d.matrix()(7, j) == bank.records[0].outputs(0, j + 3));
  }
  // Consecutive windows overlap in L-1 samples: the input samples of window
  // j+1 are those of window j shifted by one step.
  auto inputs_of = [&](Index col) {
    Vector u(4);
    u << d.matrix()(0, col), d.matrix()(1, col), d.matrix()(4, col), d.matrix()(5, col);
    return u;
  };
  for (Index j = 0; j + 1 < 3; ++j) CHECK(inputs_of(j).tail(3) == inputs_of(j + 1).head(3));
}

TEST_CASE("build_dictionary: state-space toy data layout") {
  test::Rng rng(3);
  auto bank = quadratic_plant_bank(rng, 20);
  auto d = build_dictionary(bank, 0, 1, Windowing::one_column_per_record);
  CHECK(d.rows() == 3);
  CHECK(d.columns() == 20);
  CHECK(d.z_dim() == 2);
  for (Index j = 0; j < 20; ++j) {
    double x0 = d.matrix()(0, j), u = d.matrix()(1, j);
    CHECK(d.matrix()(2, j) == doctest::Approx(2 * x0 * x0 + 2 * u * u - 1));
  }
  auto gpe = check_gpe(d, 1);
  CHECK(gpe.rank == 3);
  CHECK(gpe.required == 2);
  CHECK_FALSE(gpe.holds);
  CHECK(check_full_row_rank(d));
}

TEST_CASE("build_dictionary: errors") {
  test::Rng rng(4);
  auto bank = io_bank({3}, rng, test::second_order_siso());
  CHECK_THROWS_AS(build_dictionary(bank, 2, 2, Windowing::hankel_sliding), Error);
  CHECK_THROWS_AS(build_dictionary(bank, 2, 2, Windowing::one_column_per_record), Error);
  TrajectoryBank empty;
  CHECK_THROWS_AS(build_dictionary(empty, 1, 1, Windowing::hankel_sliding), Error);
  bank.records[0].outputs = Matrix::Zero(2, 3);
  CHECK_THROWS_AS(build_dictionary(bank, 1, 1, Windowing::hankel_sliding), Error);
}

TEST_CASE("check_gpe on exact LTI data") {
  test::Rng rng(5);
  auto sys = test::second_order_siso();
  std::vector<Index> lengths(30, 4);
  auto d = build_dictionary(io_bank(lengths, rng, sys), 2, 2, Windowing::one_column_per_record, 2);
  auto gpe = check_gpe(d, 2);
  CHECK(gpe.rank == 6);
  CHECK(gpe.required == 6);
  CHECK(gpe.holds);
  CHECK_FALSE(check_full_row_rank(d));

  // Six columns with one zeroed: at most five independent columns remain.
  std::vector<Index> six{0, 1, 2, 3, 4, 5};
  auto small = d.select_columns(six);
  Matrix m = small.matrix();
  m.col(2).setZero();
  DataDictionary broken(small.dims(), m, small.provenance());
  auto gpe2 = check_gpe(broken, 2);
  CHECK(gpe2.rank == 5);
  CHECK_FALSE(gpe2.holds);
}

TEST_CASE("check_full_row_rank examples") {
  test::Rng rng(6);
  DictionaryDims dims{Setting::state_space, 1, 1, 1, 0, 1};
  Matrix m(3, 6);
  m << Matrix::Identity(3, 3), rng.gaussian_matrix(3, 3);
  CHECK(check_full_row_rank(DataDictionary(dims, m, std::vector<ColumnProvenance>(6))));
  m.row(2) = m.row(0);
  CHECK_FALSE(check_full_row_rank(DataDictionary(dims, m, std::vector<ColumnProvenance>(6))));

  DictionaryDims plane{Setting::state_space, 0, 1, 1, 0, 1};
  CHECK(check_full_row_rank(DataDictionary(plane, rng.gaussian_matrix(2, 8), std::vector<ColumnProvenance>(8))));
}

TEST_CASE("extract_regressor") {
  Vector xi = extract_regressor(Matrix::Constant(1, 1, 2.0), Matrix::Constant(1, 1, 3.0), 1);
  CHECK(xi == Vector{{2.0, 3.0}});
  CHECK(extract_regressor(Matrix::Zero(2, 3), Matrix::Zero(1, 3), 3) == Vector::Zero(9));
  CHECK_THROWS_AS(extract_regressor(Matrix::Zero(1, 2), Matrix::Zero(1, 2), 3), Error);

  // Matches the W rows of the corresponding dictionary column.
  test::Rng rng(7);
  auto bank = io_bank({4}, rng, test::second_order_siso());
  auto d = build_dictionary(bank, 2, 2, Windowing::one_column_per_record);
  const auto& r = bank.records[0];
  Vector from_window = extract_regressor(r.inputs.leftCols(2), r.outputs.leftCols(2), 2);
  CHECK(from_window == Vector(d.past_block().col(0)));
}

TEST_CASE("one_column_per_record round trip and row reassembly") {
  test::Rng rng(8);
  auto bank = io_bank({5, 5, 5}, rng, test::Lti{Matrix::Identity(1, 1) * 0.5, Matrix::Ones(1, 2),
                                                 Matrix::Ones(2, 1), Matrix::Zero(2, 2)});
  auto d = build_dictionary(bank, 2, 3, Windowing::one_column_per_record);
  for (Index j = 0; j < 3; ++j) {
    const auto& r = bank.records[static_cast<size_t>(j)];
    // Unstack column j.
    Matrix u(2, 5), y(2, 5);
    for (Index k = 0; k < 2; ++k) {
      u.col(k) = d.matrix().col(j).segment(2 * k, 2);
      y.col(k) = d.matrix().col(j).segment(4 + 2 * k, 2);
    }
    for (Index k = 0; k < 3; ++k) {
      u.col(2 + k) = d.matrix().col(j).segment(8 + 2 * k, 2);
      y.col(2 + k) = d.matrix().col(j).segment(14 + 2 * k, 2);
    }
    CHECK(u == r.inputs);
    CHECK(y == r.outputs);
  }
  Matrix stacked(d.rows(), d.columns());
  stacked << d.past_block(), d.input_block(), d.output_block();
  CHECK(stacked == d.matrix());
}

TEST_CASE("trajectory csv round trip") {
  test::Rng rng(9);
  auto bank = io_bank({4, 6}, rng, test::second_order_siso());
  std::stringstream ss;
  write_trajectory_csv(ss, bank);
  auto back = read_trajectory_csv(ss);
  REQUIRE(back.records.size() == 2);
  CHECK(back.records[1].inputs == bank.records[1].inputs);
  CHECK(back.records[1].outputs == bank.records[1].outputs);

  auto ss_bank = quadratic_plant_bank(rng, 3);
  std::stringstream s2;
  write_trajectory_csv(s2, ss_bank);
  auto back2 = read_trajectory_csv(s2);
  CHECK(back2.setting == Setting::state_space);
  CHECK(back2.records[2].initial == ss_bank.records[2].initial);
  CHECK(back2.records[2].outputs == ss_bank.records[2].outputs);
}

TEST_CASE("trajectory csv rejects gaps and bad headers") {
  std::stringstream gap("record,k,u1,y1\n0,0,1,2\n0,2,1,2\n");
  CHECK_THROWS_AS(read_trajectory_csv(gap), Error);
  std::stringstream header("rec,k,u1,y1\n0,0,1,2\n");
  CHECK_THROWS_AS(read_trajectory_csv(header), Error);
  std::stringstream ok("record,k,x1,u1\n0,0,0.5,0.25\n0,1,-0.375,\n");
  auto bank = read_trajectory_csv(ok);
  CHECK(bank.records[0].outputs(0, 0) == -0.375);
}

TEST_CASE("dictionary json round trip") {
  test::Rng rng(10);
  auto d = build_dictionary(io_bank({7}, rng, test::second_order_siso()), 2, 2, Windowing::hankel_sliding, 2);
  auto j = to_json(d);
  CHECK(j["partitions"]["Y"][0] == 6);
  CHECK(j["dims"]["n"] == 2);
  auto back = dictionary_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.matrix() == d.matrix());
  CHECK(back.provenance() == d.provenance());
  CHECK(back.dims().n == d.dims().n);
}
