#include <algorithm>
#include <cmath>

#include "cdid/dataset.hpp"
#include "cdid/error.hpp"
#include "cdid/random.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cdid;

namespace {

Matrix column_matrix(std::initializer_list<double> values) {
  Matrix m(static_cast<Eigen::Index>(values.size()), 1);
  Eigen::Index i = 0;
  for (double v : values) m(i++, 0) = v;
  return m;
}

template <typename F>
DataErrorKind error_kind(F&& f) {
  try {
    f();
  } catch (const DataError& e) {
    return e.kind();
  }
  FAIL("expected a DataError");
  return DataErrorKind::Io;
}

// Nearest-rank-free linear interpolation quantile written independently
// of the library: position p (n - 1) in the sorted sample.
double oracle_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = p * static_cast<double>(v.size() - 1);
  const double fl = std::floor(h);
  const auto i = static_cast<std::size_t>(fl);
  if (i + 1 >= v.size()) return v.back();
  return v[i] * (1.0 - (h - fl)) + v[i + 1] * (h - fl);
}

}  // namespace

TEST_CASE("panel csv loads in file order") {
  TempDir dir;
  const auto path = dir.write("p.csv",
                              "y_pre,y_post,dose,x1,x2\n"
                              "0,1,0,1,2\n"
                              "1,2,0,3,4\n"
                              "2,4,0.5,5,6\n"
                              "3,7,1.0,7,8\n");
  const PanelDataset d = load_panel_csv(path);
  CHECK(d.size() == 4);
  CHECK(std::count(d.dose().begin(), d.dose().end(), 0.0) == 2);
  CHECK(d.n_covariates() == 2);
  CHECK(d.covariate_names() == std::vector<std::string>{"x1", "x2"});
  CHECK(d.delta_y(3) == 4.0);
  CHECK(d.covariate_row(2)[1] == 6.0);
}

TEST_CASE("panel schema selects columns by name") {
  TempDir dir;
  const auto path = dir.write("p.csv",
                              "w,before,after,treat,z\n"
                              "9,0,1,0,1\n"
                              "9,1,2,0.5,2\n"
                              "9,2,2,0,3\n");
  PanelSchema schema;
  schema.y_pre = "before";
  schema.y_post = "after";
  schema.dose = "treat";
  schema.covariates = {"z"};
  const PanelDataset d = load_panel_csv(path, schema);
  CHECK(d.n_covariates() == 1);
  CHECK(d.covariate_row(1)[0] == 2.0);
}

TEST_CASE("panel loading errors name the column and row") {
  TempDir dir;
  SUBCASE("missing column") {
    const auto path = dir.write("p.csv", "y_pre,dose,x\n0,0,1\n1,1,2\n");
    try {
      load_panel_csv(path);
      FAIL("expected an error");
    } catch (const DataError& e) {
      CHECK(e.kind() == DataErrorKind::MissingColumn);
      CHECK(e.column() == "y_post");
      CHECK(std::string(e.what()).find("y_post") != std::string::npos);
    }
  }
  SUBCASE("negative dose") {
    const auto path = dir.write("p.csv", "y_pre,y_post,dose\n0,1,0\n1,2,0.5\n2,3,-0.1\n");
    try {
      load_panel_csv(path);
      FAIL("expected an error");
    } catch (const DataError& e) {
      CHECK(e.kind() == DataErrorKind::NegativeDose);
      CHECK(e.row() == std::optional<std::size_t>(3));
      CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
  }
  SUBCASE("non-numeric cell") {
    const auto path = dir.write("p.csv", "y_pre,y_post,dose\n0,abc,0\n1,2,0.5\n");
    try {
      load_panel_csv(path);
      FAIL("expected an error");
    } catch (const DataError& e) {
      CHECK(e.kind() == DataErrorKind::NonNumericCell);
      CHECK(e.column() == "y_post");
      CHECK(e.row() == std::optional<std::size_t>(1));
    }
  }
  SUBCASE("missing cell") {
    const auto path = dir.write("p.csv", "y_pre,y_post,dose\n0,,0\n1,2,0.5\n");
    CHECK(error_kind([&] { load_panel_csv(path); }) == DataErrorKind::MissingCell);
  }
  SUBCASE("short row") {
    const auto path = dir.write("p.csv", "y_pre,y_post,dose\n0,1\n1,2,0.5\n");
    CHECK(error_kind([&] { load_panel_csv(path); }) == DataErrorKind::MissingCell);
  }
  SUBCASE("no controls") {
    const auto path = dir.write("p.csv", "y_pre,y_post,dose\n0,1,0.2\n1,2,0.5\n");
    CHECK(error_kind([&] { load_panel_csv(path); }) == DataErrorKind::NoControlRows);
  }
  SUBCASE("no treated") {
    const auto path = dir.write("p.csv", "y_pre,y_post,dose\n0,1,0\n1,2,0\n");
    CHECK(error_kind([&] { load_panel_csv(path); }) == DataErrorKind::NoTreatedRows);
  }
  SUBCASE("non-finite") {
    const auto path = dir.write("p.csv", "y_pre,y_post,dose\n0,inf,0\n1,2,0.5\n");
    CHECK(error_kind([&] { load_panel_csv(path); }) == DataErrorKind::NonFinite);
  }
  SUBCASE("missing file") {
    CHECK(error_kind([&] { load_panel_csv(dir.file("absent.csv")); }) == DataErrorKind::Io);
  }
}

TEST_CASE("panel constructor enforces invariants") {
  CHECK(error_kind([] {
          PanelDataset({0.0, 1.0}, {1.0}, {0.0, 1.0}, column_matrix({1, 2}));
        }) == DataErrorKind::RowCountMismatch);
  CHECK(error_kind([] { PanelDataset({0.0}, {1.0}, {0.0}, column_matrix({1})); }) ==
        DataErrorKind::TooFewRows);
  CHECK_NOTHROW(PanelDataset({0.0, 1.0}, {1.0, 2.0}, {0.0, 1.0}, column_matrix({1, 2})));
}

TEST_CASE("rcs csv loading and period validation") {
  TempDir dir;
  const RcsDataset ok = load_rcs_csv(dir.write("r.csv", "y,period,dose,x\n1,0,0,3\n2,1,0.7,4\n"));
  CHECK(ok.size() == 2);
  CHECK(ok.period()[1] == 1);

  CHECK(error_kind([&] {
          load_rcs_csv(dir.write("r2.csv", "y,period,dose\n1,0,0\n2,2,0.7\n"));
        }) == DataErrorKind::InvalidPeriod);
  try {
    load_rcs_csv(dir.write("r3.csv", "y,period,dose\n1,1,0\n2,1,0.7\n"));
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(e.kind() == DataErrorKind::SinglePeriod);
    CHECK(std::string(e.what()).find("both periods required") != std::string::npos);
  }
}

TEST_CASE("datasets round-trip through csv bit-exactly") {
  TempDir dir;
  Rng rng(17);
  const std::size_t n = 40;
  std::vector<double> a(n), b(n), dose(n);
  std::vector<int> period(n);
  Matrix x(static_cast<Eigen::Index>(n), 3);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = rng.normal() / 3.0;
    b[i] = rng.normal() * 1e-7;
    dose[i] = i % 3 == 0 ? 0.0 : rng.exponential(0.9);
    period[i] = static_cast<int>(i % 2);
    for (Eigen::Index j = 0; j < 3; ++j) x(static_cast<Eigen::Index>(i), j) = rng.normal() * 1e5;
  }
  const PanelDataset panel(a, b, dose, x);
  write_panel_csv(dir.file("p.csv"), panel);
  const PanelDataset p2 = load_panel_csv(dir.file("p.csv"));
  CHECK(std::equal(p2.y_pre().begin(), p2.y_pre().end(), a.begin()));
  CHECK(std::equal(p2.y_post().begin(), p2.y_post().end(), b.begin()));
  CHECK(std::equal(p2.dose().begin(), p2.dose().end(), dose.begin()));
  CHECK(p2.covariates() == x);

  const RcsDataset rcs(a, period, dose, x);
  write_rcs_csv(dir.file("r.csv"), rcs);
  const RcsDataset r2 = load_rcs_csv(dir.file("r.csv"));
  CHECK(std::equal(r2.y().begin(), r2.y().end(), a.begin()));
  CHECK(std::equal(r2.period().begin(), r2.period().end(), period.begin()));
  CHECK(r2.covariates() == x);
}

TEST_CASE("subset keeps row order and invariants") {
  const PanelDataset d({0, 1, 2, 3}, {1, 2, 3, 4}, {0, 0.5, 0, 1.0}, column_matrix({10, 11, 12, 13}));
  const std::vector<std::size_t> rows{3, 0};
  const PanelDataset s = d.subset(rows);
  CHECK(s.size() == 2);
  CHECK(s.dose()[0] == 1.0);
  CHECK(s.covariate_row(1)[0] == 10.0);
  const std::vector<std::size_t> only_controls{0, 2};
  CHECK_THROWS_AS(d.subset(only_controls), DataError);
}

TEST_CASE("dose grid from quantiles") {
  SUBCASE("uniform grid endpoints") {
    std::vector<double> doses{0.0, 0.0};
    for (int i = 0; i <= 100; ++i) doses.push_back(0.5 + i / 100.0);
    const DoseGrid g = make_dose_grid(doses, 3, 0.0);
    REQUIRE(g.size() == 3);
    CHECK(g[0] == doctest::Approx(0.5));
    CHECK(g[1] == doctest::Approx(1.0));
    CHECK(g[2] == doctest::Approx(1.5));
  }
  SUBCASE("trimmed endpoints match an independent quantile") {
    Rng rng(3);
    std::vector<double> doses(1000);
    std::vector<double> positive;
    for (auto& d : doses) {
      d = rng.uniform() < 0.3 ? 0.0 : 0.5 + rng.uniform();
      if (d > 0.0) positive.push_back(d);
    }
    const DoseGrid g = make_dose_grid(doses, 25, 0.05);
    CHECK(g.size() == 25);
    CHECK(g[0] == doctest::Approx(oracle_quantile(positive, 0.05)).epsilon(1e-14));
    CHECK(g[24] == doctest::Approx(oracle_quantile(positive, 0.95)).epsilon(1e-14));
    const auto [mn, mx] = std::minmax_element(positive.begin(), positive.end());
    for (std::size_t j = 0; j < g.size(); ++j) {
      CHECK(g[j] >= *mn);
      CHECK(g[j] <= *mx);
      if (j > 0) CHECK(g[j] > g[j - 1]);
    }
  }
  SUBCASE("invalid requests") {
    const std::vector<double> doses{0.0, 0.5, 1.0, 1.5};
    CHECK_THROWS_AS(make_dose_grid(doses, 1, 0.5), ConfigError);
    CHECK_THROWS_AS(make_dose_grid(doses, 0, 0.1), ConfigError);
    const std::vector<double> single{0.0, 0.7, 0.7};
    CHECK(error_kind([&] { make_dose_grid(single, 5, 0.0); }) == DataErrorKind::InsufficientDoses);
  }
  SUBCASE("single point grid is the midpoint") {
    const std::vector<double> doses{0.0, 1.0, 2.0, 3.0};
    const DoseGrid g = make_dose_grid(doses, 1, 0.0);
    CHECK(g.size() == 1);
    CHECK(g[0] == doctest::Approx(2.0));
  }
}

TEST_CASE("explicit grids must be increasing and inside the support") {
  const std::vector<double> doses{0.0, 0.5, 1.0, 1.5};
  CHECK(make_explicit_grid({0.5, 1.5}, doses).size() == 2);
  CHECK_THROWS_AS(make_explicit_grid({1.6}, doses), ConfigError);
  CHECK_THROWS_AS(make_explicit_grid({1.0, 0.9}, doses), ConfigError);
  CHECK_THROWS_AS(DoseGrid({0.0, 1.0}), ConfigError);
  CHECK_THROWS_AS(DoseGrid(std::vector<double>{}), ConfigError);
}

TEST_CASE("design names") {
  CHECK(design_from_string("panel") == Design::Panel);
  CHECK(design_from_string("rcs") == Design::Rcs);
  CHECK(std::string(to_string(Design::Rcs)) == "rcs");
  CHECK_THROWS_AS(design_from_string("other"), ConfigError);
}
