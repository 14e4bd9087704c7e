#include "doctest.h"

#include "support/oracles.hpp"

#include "parksim/errors.hpp"
#include "parksim/predictor.hpp"

#include <cmath>
#include <sstream>

using namespace parksim;

namespace {
  Eigen::MatrixXd random_matrix(RngStream& rng, int rows, int cols) {
    Eigen::MatrixXd X(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        X(r, c) = rng.uniform01() * 2.0 - 1.0;
      }
    }
    return X;
  }

  Eigen::VectorXd random_vector(RngStream& rng, int n) { return random_matrix(rng, n, 1).col(0); }

  double relative_error(Eigen::VectorXd const& a, Eigen::VectorXd const& b) {
    return (a - b).norm() / std::max(1.0, b.norm());
  }
}  // namespace

TEST_CASE("ridge fits") {
  SUBCASE("perfect fit without shrinkage") {
    Eigen::MatrixXd X(4, 1);
    X << 1, 2, 3, 4;
    Eigen::VectorXd const y = 2.0 * X.col(0);
    auto const m = fit_ridge(X, y, 0.0);
    CHECK(m.beta[0] == doctest::Approx(2.0));
    CHECK(m.intercept == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("heavy shrinkage on centred data") {
    RngStream rng(1);
    Eigen::MatrixXd X = random_matrix(rng, 40, 5);
    X.rowwise() -= X.colwise().mean();
    Eigen::VectorXd const y = random_vector(rng, 40);
    CHECK(fit_ridge(X, y, 1e9).beta.norm() < 1e-3);
  }
  SUBCASE("matches the normal equations") {
    RngStream rng(2);
    for (int trial = 0; trial < 100; ++trial) {
      int const rows = rng.uniform_int(5, 30);
      int const cols = rng.uniform_int(2, 4);
      auto const X = random_matrix(rng, rows, cols);
      auto const y = random_vector(rng, rows);
      double const lambda = trial == 0 ? 1.0 : std::pow(10.0, rng.uniform_int(-3, 2));
      auto const m = fit_ridge(X, y, lambda);
      auto const [beta, b0] = oracle::normal_equations(X, y, lambda);
      CHECK(relative_error(m.beta, beta) < 1e-9);
      CHECK(std::abs(m.intercept - b0) < 1e-9 * std::max(1.0, std::abs(b0)));
    }
  }
  SUBCASE("zero lambda equals least squares") {
    RngStream rng(3);
    auto const X = random_matrix(rng, 20, 3);
    auto const y = random_vector(rng, 20);
    Eigen::MatrixXd A(20, 4);
    A << Eigen::VectorXd::Ones(20), X;
    Eigen::VectorXd const ls = A.colPivHouseholderQr().solve(y);
    auto const m = fit_ridge(X, y, 0.0);
    CHECK(std::abs(m.intercept - ls[0]) < 1e-9);
    CHECK(relative_error(m.beta, ls.tail(3)) < 1e-9);
  }
  SUBCASE("singular design names its rank") {
    Eigen::MatrixXd X(4, 2);
    X << 1, 2, 2, 4, 3, 6, 4, 8;
    Eigen::VectorXd const y = Eigen::VectorXd::LinSpaced(4, 0, 3);
    try {
      (void)fit_ridge(X, y, 0.0);
      FAIL("expected a singular matrix error");
    } catch (SingularMatrixError const& e) {
      CHECK(e.rank() == 1);
    }
    CHECK_NOTHROW((void)fit_ridge(X, y, 0.1));
  }
  SUBCASE("sparse and dense designs agree") {
    RngStream rng(4);
    Eigen::MatrixXd X = random_matrix(rng, 30, 6);
    X = X.unaryExpr([](double v) { return std::abs(v) < 0.5 ? 0.0 : v; });
    auto const y = random_vector(rng, 30);
    SparseDesign const S = X.sparseView();
    for (double lambda : {0.0, 0.01, 3.0}) {
      auto const d = fit_ridge(X, y, lambda);
      auto const s = fit_ridge(S, y, lambda);
      CHECK(relative_error(s.beta, d.beta) < 1e-9);
      CHECK(std::abs(s.intercept - d.intercept) < 1e-9);
    }
    std::vector<double> const grid{1e-3, 1e-2, 0.1, 1, 10, 100};
    CHECK(select_lambda(X, y, grid, 5) == select_lambda(S, y, grid, 5));
  }
}

TEST_CASE("lambda selection") {
  RngStream rng(5);
  auto const X = random_matrix(rng, 25, 3);
  Eigen::VectorXd const y = X * Eigen::Vector3d(1, -2, 0.5) + 0.05 * random_vector(rng, 25);
  CHECK(select_lambda(X, y, {0.7}, 5) == 0.7);
  CHECK(select_lambda(X, y, {5.0, 5.0, 5.0}, 5) == 5.0);
  CHECK(select_lambda(X, y, {1e-3, 100.0}, 5) == 1e-3);
  CHECK_THROWS_AS(select_lambda(X.topRows(3), y.head(3), {1.0}, 5), ConfigError);

  int largest = 0;
  std::vector<double> const grid{1e-3, 1e-2, 0.1, 1, 10, 100};
  for (int rep = 0; rep < 100; ++rep) {
    RngStream noise(1000 + rep);
    auto const Xn = random_matrix(noise, 40, 4);
    auto const yn = random_vector(noise, 40);
    largest += select_lambda(Xn, yn, grid, 5) == 100.0;
  }
  CHECK(largest >= 80);
}

TEST_CASE("availability clamp") {
  CHECK(clamp_availability(0.7) == 0.7);
  CHECK(clamp_availability(-0.3) == kMinAvailability);
  CHECK(clamp_availability(1.8) == 1.0);

  FeatureSchema const schema{4, 0};
  auto model = uniform_prior(schema);
  TrendIndex const trend;
  CHECK(predict_availability(model, 2, 0, trend) == 0.5);
  model.prior = false;
  model.intercept = -0.3;
  CHECK(predict_availability(model, 1, 60, trend) == kMinAvailability);
  model.intercept = 1.8;
  CHECK(predict_availability(model, 1, 60, trend) == 1.0);
  CHECK_THROWS_AS(predict_availability(model, 4, 60, trend), SchemaError);
}

TEST_CASE("features") {
  FeatureSchema const schema{3, 2};
  auto const x = build_features(schema, 1, 1440 + 60, 0.4);
  REQUIRE(x.size() == schema.dimension());
  double const angle = 2.0 * M_PI * 90.0 / 1440.0;
  CHECK(x[0] == doctest::Approx(std::sin(angle)));
  CHECK(x[1] == doctest::Approx(std::cos(angle)));
  // day 1 with day 0 on weekday 2 falls on weekday 3
  CHECK(x[2 + 3] == 1.0);
  CHECK(x.segment(2, 7).sum() == 1.0);
  CHECK(x[9 + 1] == 1.0);
  CHECK(x.segment(9, 3).sum() == 1.0);
  CHECK(x[12] == 0.4);
  CHECK_THROWS_AS(build_features(schema, 3, 0, 0.5), SchemaError);
}

TEST_CASE("history updates") {
  auto corpus = update_history({}, {{0, 0, 4, 3}});
  REQUIRE(corpus.size() == 1);
  CHECK(corpus.records()[0].rho == 0.75);
  CHECK(update_history(corpus, {{1, 0, 0, 0}}).size() == 1);
  CHECK_THROWS_AS(update_history(corpus, {{1, 0, 2, 3}}), ValidationError);

  auto const pooled = update_history(corpus, {{0, 0, 4, 1}});
  REQUIRE(pooled.size() == 1);
  CHECK(pooled.records()[0].rho == 0.5);
  CHECK(pooled.records()[0].attempts == 8);

  std::stringstream buf;
  write_history(buf, update_history(corpus, {{2, 60, 3, 1}, {1, 1500, 7, 7}}));
  auto const back = read_history(buf);
  CHECK(back.size() == 3);
  CHECK(back.latest_bucket() == 1500);
  CHECK(back.trailing_days(1).size() == 1);
  CHECK(back.trailing_days(2).size() == 3);

  std::istringstream empty("");
  CHECK_THROWS_AS(read_history(empty), ParseError);
}

TEST_CASE("trend index") {
  HistoryCorpus const corpus({{0, 0, 0.2, 5}, {0, 60, 0.4, 5}, {0, 120, 0.9, 5}, {1, 0, 1.0, 5}});
  TrendIndex const t(corpus);
  CHECK(t.trend(0, 180) == doctest::Approx(0.5));
  CHECK(t.trend(0, 120) == doctest::Approx(0.3));
  CHECK(t.trend(5, 0) == doctest::Approx(0.625));
  CHECK(TrendIndex().trend(0, 0) == 0.5);
}

TEST_CASE("retraining") {
  FeatureSchema const schema{4, 0};
  RetrainOptions opts;
  opts.schema = schema;
  opts.window_days = 30;

  SUBCASE("empty corpus gives the uniform prior") {
    auto const m = retrain({}, opts);
    CHECK(m.prior);
    CHECK(predict_availability(m, 0, 0, TrendIndex()) == 0.5);
  }
  SUBCASE("single record gives a constant model") {
    HistoryCorpus const one({{2, 600, 0.35, 4}});
    auto const m = retrain(one, opts);
    TrendIndex const t(one);
    for (int cell = 0; cell < 4; ++cell) {
      CHECK(predict_availability(m, cell, 600 + 60 * cell, t) == doctest::Approx(0.35));
    }
  }
  SUBCASE("more days of a stationary field shrink the error") {
    auto truth = [](int cell, long bucket) {
      double const hour = (bucket % 1440) / 60.0;
      return 0.2 + 0.15 * cell + 0.1 * std::sin(2.0 * M_PI * (hour + 0.5) / 24.0);
    };
    // Averaged over replications so that one noisy day cannot flip the order.
    std::vector<double> mse(3, 0.0);
    for (int rep = 0; rep < 20; ++rep) {
      RngStream rng(600 + rep);
      HistoryCorpus corpus;
      for (int day = 0; day < 3; ++day) {
        std::vector<BucketObservation> obs;
        for (int cell = 0; cell < 4; ++cell) {
          for (int h = 0; h < 24; ++h) {
            long const bucket = day * 1440L + h * 60;
            int const attempts = 6;
            int wins = 0;
            for (int a = 0; a < attempts; ++a) {
              wins += rng.uniform01() < truth(cell, bucket);
            }
            obs.push_back({cell, bucket, attempts, wins});
          }
        }
        corpus = update_history(corpus, obs);
        auto const model = retrain(corpus, opts);
        TrendIndex const t(corpus);
        for (int cell = 0; cell < 4; ++cell) {
          for (int h = 0; h < 24; ++h) {
            long const bucket = 3 * 1440L + h * 60;
            mse[static_cast<std::size_t>(day)] += std::pow(predict_availability(model, cell, bucket, t) - truth(cell, bucket), 2) / 96.0;
          }
        }
      }
    }
    CHECK(mse[1] <= mse[0] * 1.1);
    CHECK(mse[2] <= mse[1] * 1.1);
  }
}

TEST_CASE("model files") {
  RngStream rng(7);
  FeatureSchema const schema{2, 1};
  RidgeModel m;
  m.schema = schema;
  m.beta = random_vector(rng, schema.dimension());
  m.intercept = 0.125;
  m.lambda = 0.01;
  std::stringstream buf;
  write_model(buf, m);
  auto const back = read_model(buf);
  CHECK(back.schema == schema);
  CHECK(back.lambda == 0.01);
  CHECK(back.intercept == 0.125);
  CHECK((back.beta - m.beta).norm() == 0.0);

  std::istringstream bad(R"({"schema":{"id":"x","cells":2,"day0_weekday":0,"dimension":12},"lambda":1,"intercept":0,"prior":false,"beta":[1,2]})");
  CHECK_THROWS_AS(read_model(bad), SchemaError);
}
