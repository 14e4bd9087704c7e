#include "parksim/predictor.hpp"

#include "parksim/errors.hpp"
#include "text_util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <set>

namespace parksim {

  namespace {
    bool canonical_less(HistoryRecord const& a, HistoryRecord const& b) {
      return std::tie(a.bucket_start, a.cell) < std::tie(b.bucket_start, b.cell);
    }
  }  // namespace

  HistoryCorpus::HistoryCorpus(std::vector<HistoryRecord> records) : m_records(std::move(records)) {
    std::set<std::pair<int, long>> seen;
    for (auto const& r : m_records) {
      if (!(r.rho >= 0.0 && r.rho <= 1.0)) {
        throw ValidationError("success ratio outside [0,1] in cell " + std::to_string(r.cell));
      }
      if (!seen.emplace(r.cell, r.bucket_start).second) {
        throw ValidationError("duplicate history record for cell " + std::to_string(r.cell) +
                              " bucket " + std::to_string(r.bucket_start));
      }
    }
  }

  long HistoryCorpus::latest_bucket() const {
    long latest = 0;
    for (auto const& r : m_records) {
      latest = std::max(latest, r.bucket_start);
    }
    return latest;
  }

  HistoryCorpus HistoryCorpus::trailing_days(int days) const {
    if (m_records.empty()) {
      return {};
    }
    long const cutoff = latest_bucket() - static_cast<long>(days) * 1440;
    std::vector<HistoryRecord> kept;
    std::copy_if(m_records.begin(), m_records.end(), std::back_inserter(kept),
                 [&](HistoryRecord const& r) { return r.bucket_start > cutoff; });
    return HistoryCorpus(std::move(kept));
  }

  HistoryCorpus update_history(HistoryCorpus corpus, std::vector<BucketObservation> const& observations) {
    auto records = corpus.records();
    std::map<std::pair<int, long>, std::size_t> slot;
    for (std::size_t r = 0; r < records.size(); ++r) {
      slot.emplace(std::pair{records[r].cell, records[r].bucket_start}, r);
    }
    for (auto const& obs : observations) {
      if (obs.attempts < 0 || obs.successes < 0 || obs.successes > obs.attempts) {
        throw ValidationError("invalid observation in cell " + std::to_string(obs.cell) + ": " +
                              std::to_string(obs.successes) + " successes of " +
                              std::to_string(obs.attempts) + " attempts");
      }
      if (obs.attempts == 0) {
        continue;
      }
      auto const [it, fresh] = slot.emplace(std::pair{obs.cell, obs.bucket_start}, records.size());
      if (fresh) {
        records.push_back({obs.cell, obs.bucket_start,
                           static_cast<double>(obs.successes) / static_cast<double>(obs.attempts), obs.attempts});
        continue;
      }
      // a bucket seen twice pools its attempts
      auto& rec = records[it->second];
      double const wins = rec.rho * rec.attempts + obs.successes;
      rec.attempts += obs.attempts;
      rec.rho = rec.attempts > 0 ? wins / rec.attempts : rec.rho;
    }
    return HistoryCorpus(std::move(records));
  }

  void write_history(std::ostream& out, HistoryCorpus const& corpus) {
    out << "k,bucket_start,rho,attempts\n";
    out.precision(17);
    for (auto const& r : corpus.records()) {
      out << r.cell << ',' << r.bucket_start << ',' << r.rho << ',' << r.attempts << '\n';
    }
  }

  HistoryCorpus read_history(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
      throw ParseError("history file is empty; header row required", 1);
    }
    text::Header const header(text::split(line));
    auto const colK = header.require("k");
    auto const colBucket = header.require("bucket_start");
    auto const colRho = header.require("rho");
    auto const colAttempts = header.require("attempts");
    std::vector<HistoryRecord> records;
    std::size_t lineNo = 1;
    while (std::getline(in, line)) {
      ++lineNo;
      if (text::trim(line).empty()) {
        continue;
      }
      auto const f = text::split(line);
      if (f.size() < header.size()) {
        throw ParseError("expected " + std::to_string(header.size()) + " fields", lineNo);
      }
      records.push_back({text::parse_number<int>(f[colK], "k", lineNo),
                         text::parse_number<long>(f[colBucket], "bucket_start", lineNo),
                         text::parse_number<double>(f[colRho], "rho", lineNo),
                         text::parse_number<int>(f[colAttempts], "attempts", lineNo)});
    }
    return HistoryCorpus(std::move(records));
  }

  HistoryCorpus load_history_file(std::string const& path) {
    std::ifstream in(path);
    if (!in) {
      throw IoError("cannot open history file '" + path + "'");
    }
    return read_history(in);
  }

  std::string FeatureSchema::id() const {
    return "tod2+wd7+cell" + std::to_string(cells) + "+trend1/d0=" + std::to_string(day0_weekday);
  }

  TrendIndex::TrendIndex(HistoryCorpus const& corpus) {
    double sum = 0.0;
    for (auto const& r : corpus.records()) {
      m_rho[{r.cell, r.bucket_start}] = r.rho;
      sum += r.rho;
    }
    if (!corpus.empty()) {
      m_fallback = sum / static_cast<double>(corpus.size());
    }
  }

  double TrendIndex::trend(int cell, long bucket_start) const {
    double sum = 0.0;
    int count = 0;
    for (int back = 1; back <= 3; ++back) {
      auto const it = m_rho.find({cell, bucket_start - back * kBucketMinutes});
      if (it != m_rho.end()) {
        sum += it->second;
        ++count;
      }
    }
    return count ? sum / count : m_fallback;
  }

  Eigen::VectorXd build_features(FeatureSchema const& schema, int cell, long bucket_start, double trend) {
    if (cell < 0 || cell >= schema.cells) {
      throw SchemaError("cell " + std::to_string(cell) + " outside feature schema " + schema.id());
    }
    Eigen::VectorXd x = Eigen::VectorXd::Zero(schema.dimension());
    long const minuteOfDay = ((bucket_start % 1440) + 1440) % 1440;
    double const angle = 2.0 * std::numbers::pi * (minuteOfDay + kBucketMinutes / 2.0) / 1440.0;
    x[0] = std::sin(angle);
    x[1] = std::cos(angle);
    long const day = (bucket_start - minuteOfDay) / 1440;
    auto const weekday = static_cast<int>(((day + schema.day0_weekday) % 7 + 7) % 7);
    x[2 + weekday] = 1.0;
    x[9 + cell] = 1.0;
    x[9 + schema.cells] = std::clamp(trend, 0.0, 1.0);
    return x;
  }

  namespace {
    template <typename M>
    Eigen::MatrixXd gram_of(M const& X) {
      if constexpr (std::is_base_of_v<Eigen::SparseMatrixBase<M>, M>) {
        return Eigen::MatrixXd(X.transpose() * X);
      } else {
        return X.transpose() * X;
      }
    }

    /// Sufficient statistics of a least-squares problem.
    struct GramStats {
      Eigen::MatrixXd xtx;
      Eigen::VectorXd xty;
      Eigen::VectorXd xsum;
      double ysum{0.0};
      double rows{0.0};

      template <typename M>
      GramStats(M const& X, Eigen::VectorXd const& y)
          : xtx(gram_of(X)), xty(X.transpose() * y),
            xsum(X.transpose() * Eigen::VectorXd::Ones(X.rows())), ysum(y.sum()),
            rows(static_cast<double>(X.rows())) {}

      GramStats& operator-=(GramStats const& other) {
        xtx -= other.xtx;
        xty -= other.xty;
        xsum -= other.xsum;
        ysum -= other.ysum;
        rows -= other.rows;
        return *this;
      }
    };

    Eigen::MatrixXd take_rows(Eigen::MatrixXd const& X, std::vector<Eigen::Index> const& rows) {
      return X(rows, Eigen::all);
    }

    SparseDesign take_rows(SparseDesign const& X, std::vector<Eigen::Index> const& rows) {
      std::vector<Eigen::Triplet<double>> entries;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        for (SparseDesign::InnerIterator it(X, rows[r]); it; ++it) {
          entries.emplace_back(static_cast<int>(r), static_cast<int>(it.col()), it.value());
        }
      }
      SparseDesign out(static_cast<Eigen::Index>(rows.size()), X.cols());
      out.setFromTriplets(entries.begin(), entries.end());
      return out;
    }

    /// Solves (Xc^T Xc + lambda I) beta = Xc^T yc from uncentred statistics; lambda > 0.
    RidgeModel solve_stats(GramStats const& s, double lambda, bool intercept) {
      Eigen::MatrixXd gram = s.xtx;
      Eigen::VectorXd rhs = s.xty;
      Eigen::VectorXd xMean = Eigen::VectorXd::Zero(s.xtx.cols());
      double yMean = 0.0;
      if (intercept) {
        xMean = s.xsum / s.rows;
        yMean = s.ysum / s.rows;
        gram.noalias() -= s.rows * xMean * xMean.transpose();
        rhs -= s.rows * yMean * xMean;
      }
      gram.diagonal().array() += lambda;
      RidgeModel model;
      model.beta = gram.llt().solve(rhs);
      model.intercept = yMean - xMean.dot(model.beta);
      model.lambda = lambda;
      return model;
    }
  }  // namespace

  RidgeModel fit_ridge(Eigen::MatrixXd const& X, Eigen::VectorXd const& y, double lambda, bool intercept) {
    if (X.rows() != y.size() || X.rows() < 1) {
      throw ContractViolation("fit_ridge needs rows(X) == |y| >= 1");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
      throw ContractViolation("fit_ridge needs a finite lambda >= 0");
    }
    if (lambda > 0.0) {
      return solve_stats(GramStats(X, y), lambda, intercept);
    }
    // Unregularised: least squares by column-pivoting QR, which also reports the rank.
    auto const p = X.cols();
    Eigen::RowVectorXd xMean = Eigen::RowVectorXd::Zero(p);
    double yMean = 0.0;
    if (intercept) {
      xMean = X.colwise().mean();
      yMean = y.mean();
    }
    Eigen::MatrixXd const centred = X.rowwise() - xMean;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(centred);
    if (qr.rank() < p) {
      throw SingularMatrixError("X^T X is singular: rank " + std::to_string(qr.rank()) + " of " +
                                    std::to_string(p) + " with lambda = 0",
                                static_cast<int>(qr.rank()));
    }
    RidgeModel model;
    model.beta = qr.solve((y.array() - yMean).matrix());
    model.intercept = yMean - xMean.dot(model.beta);
    model.lambda = 0.0;
    return model;
  }

  namespace {
    template <typename M>
    double select_lambda_impl(M const& X, Eigen::VectorXd const& y, std::vector<double> const& grid, int folds) {
    if (folds < 2) {
      throw ConfigError("cross-validation needs at least 2 folds");
    }
    if (grid.empty()) {
      throw ConfigError("lambda grid is empty");
    }
    if (X.rows() < folds) {
      throw ConfigError("cross-validation needs at least as many rows as folds (" +
                        std::to_string(X.rows()) + " < " + std::to_string(folds) + ")");
    }
    struct Fold {
      M testX;
      Eigen::VectorXd testY;
      GramStats train;
    };
    GramStats const all(X, y);
    std::vector<Fold> splits;
    splits.reserve(static_cast<std::size_t>(folds));
    for (int f = 0; f < folds; ++f) {
      std::vector<Eigen::Index> test;
      for (Eigen::Index r = f; r < X.rows(); r += folds) {
        test.push_back(r);
      }
      M testX = take_rows(X, test);
      Eigen::VectorXd testY = y(test);
      GramStats train = all;
      train -= GramStats(testX, testY);
      splits.push_back({std::move(testX), std::move(testY), std::move(train)});
    }
    double best = std::numeric_limits<double>::infinity();
    double chosen = grid.front();
    for (double lambda : grid) {
      if (!(lambda > 0.0)) {
        throw ConfigError("cross-validated lambda values must be positive");
      }
      double total = 0.0;
      for (auto const& s : splits) {
        auto const model = solve_stats(s.train, lambda, true);
        Eigen::VectorXd const residual =
            ((s.testX * model.beta).array() + model.intercept - s.testY.array()).matrix();
        total += residual.squaredNorm() / static_cast<double>(residual.size());
      }
      double const mse = total / folds;
      if (mse < best || (mse == best && lambda < chosen)) {
        best = mse;
        chosen = lambda;
      }
    }
    return chosen;
  }
  }  // namespace

  RidgeModel fit_ridge(SparseDesign const& X, Eigen::VectorXd const& y, double lambda, bool intercept) {
    if (X.rows() != y.size() || X.rows() < 1) {
      throw ContractViolation("fit_ridge needs rows(X) == |y| >= 1");
    }
    if (lambda == 0.0) {
      return fit_ridge(Eigen::MatrixXd(X), y, lambda, intercept);
    }
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
      throw ContractViolation("fit_ridge needs a finite lambda >= 0");
    }
    return solve_stats(GramStats(X, y), lambda, intercept);
  }

  double select_lambda(Eigen::MatrixXd const& X, Eigen::VectorXd const& y, std::vector<double> const& grid,
                       int folds) {
    return select_lambda_impl(X, y, grid, folds);
  }

  double select_lambda(SparseDesign const& X, Eigen::VectorXd const& y, std::vector<double> const& grid,
                       int folds) {
    return select_lambda_impl(X, y, grid, folds);
  }

  double clamp_availability(double raw) {
    if (std::isnan(raw)) {
      return kMinAvailability;
    }
    return std::clamp(raw, kMinAvailability, 1.0);
  }

  double predict_availability(RidgeModel const& model, int cell, long bucket_start, TrendIndex const& trend) {
    if (cell < 0 || cell >= model.schema.cells) {
      throw SchemaError("cell " + std::to_string(cell) + " outside model schema " + model.schema.id());
    }
    if (model.prior) {
      return clamp_availability(model.intercept);
    }
    auto const x = build_features(model.schema, cell, bucket_start, trend.trend(cell, bucket_start));
    return clamp_availability(model.raw_predict(x));
  }

  RidgeModel uniform_prior(FeatureSchema const& schema) {
    RidgeModel model;
    model.schema = schema;
    model.beta = Eigen::VectorXd::Zero(schema.dimension());
    model.intercept = 0.5;
    model.lambda = 1.0;
    model.prior = true;
    return model;
  }

  std::pair<Eigen::MatrixXd, Eigen::VectorXd> design_matrix(HistoryCorpus const& corpus,
                                                            FeatureSchema const& schema) {
    auto records = corpus.records();
    std::sort(records.begin(), records.end(), canonical_less);
    TrendIndex const trend(corpus);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(records.size()), schema.dimension());
    Eigen::VectorXd y(static_cast<Eigen::Index>(records.size()));
    for (std::size_t r = 0; r < records.size(); ++r) {
      auto const& rec = records[r];
      X.row(static_cast<Eigen::Index>(r)) =
          build_features(schema, rec.cell, rec.bucket_start, trend.trend(rec.cell, rec.bucket_start));
      y[static_cast<Eigen::Index>(r)] = rec.rho;
    }
    return {std::move(X), std::move(y)};
  }

  std::pair<SparseDesign, Eigen::VectorXd> sparse_design(HistoryCorpus const& corpus,
                                                         FeatureSchema const& schema) {
    auto records = corpus.records();
    std::sort(records.begin(), records.end(), canonical_less);
    TrendIndex const trend(corpus);
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(records.size() * 5);
    Eigen::VectorXd y(static_cast<Eigen::Index>(records.size()));
    for (std::size_t r = 0; r < records.size(); ++r) {
      auto const& rec = records[r];
      auto const x = build_features(schema, rec.cell, rec.bucket_start, trend.trend(rec.cell, rec.bucket_start));
      for (Eigen::Index c = 0; c < x.size(); ++c) {
        if (x[c] != 0.0) {
          entries.emplace_back(static_cast<int>(r), static_cast<int>(c), x[c]);
        }
      }
      y[static_cast<Eigen::Index>(r)] = rec.rho;
    }
    SparseDesign X(static_cast<Eigen::Index>(records.size()), schema.dimension());
    X.setFromTriplets(entries.begin(), entries.end());
    return {std::move(X), std::move(y)};
  }

  RidgeModel retrain(HistoryCorpus const& corpus, RetrainOptions const& options) {
    auto const window = corpus.trailing_days(options.window_days);
    if (window.empty()) {
      return uniform_prior(options.schema);
    }
    auto const [X, y] = sparse_design(window, options.schema);
    double lambda = *std::max_element(options.lambda_grid.begin(), options.lambda_grid.end());
    if (X.rows() >= options.folds) {
      lambda = select_lambda(X, y, options.lambda_grid, options.folds);
    }
    auto model = fit_ridge(X, y, lambda);
    model.schema = options.schema;
    return model;
  }

  void write_model(std::ostream& out, RidgeModel const& model) {
    nlohmann::ordered_json j;
    j["schema"] = {{"id", model.schema.id()},
                   {"cells", model.schema.cells},
                   {"day0_weekday", model.schema.day0_weekday},
                   {"dimension", model.schema.dimension()}};
    j["lambda"] = model.lambda;
    j["intercept"] = model.intercept;
    j["prior"] = model.prior;
    j["beta"] = std::vector<double>(model.beta.data(), model.beta.data() + model.beta.size());
    out << j.dump(2) << '\n';
  }

  RidgeModel read_model(std::istream& in) {
    nlohmann::json j;
    try {
      in >> j;
      RidgeModel model;
      model.schema.cells = j.at("schema").at("cells").get<int>();
      model.schema.day0_weekday = j.at("schema").at("day0_weekday").get<int>();
      model.lambda = j.at("lambda").get<double>();
      model.intercept = j.at("intercept").get<double>();
      model.prior = j.value("prior", false);
      auto const beta = j.at("beta").get<std::vector<double>>();
      if (static_cast<int>(beta.size()) != model.schema.dimension()) {
        throw SchemaError("model beta has " + std::to_string(beta.size()) + " entries, schema needs " +
                          std::to_string(model.schema.dimension()));
      }
      model.beta = Eigen::Map<Eigen::VectorXd const>(beta.data(), static_cast<Eigen::Index>(beta.size()));
      return model;
    } catch (nlohmann::json::exception const& e) {
      throw ParseError(std::string("model file: ") + e.what());
    }
  }

  std::vector<double> AvailabilityPredictor::predict_all(long bucket_start) const {
    std::vector<double> out(static_cast<std::size_t>(m_model->schema.cells));
    for (int k = 0; k < m_model->schema.cells; ++k) {
      out[static_cast<std::size_t>(k)] = predict(k, bucket_start);
    }
    return out;
  }

}  // namespace parksim
