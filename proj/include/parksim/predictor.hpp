#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace parksim {

  /// Success ratios are aggregated per cell over hour-long buckets.
  inline constexpr int kBucketMinutes = 60;
  /// Lower clamp of predicted availability; bounds effective distance at 100 x travel time.
  inline constexpr double kMinAvailability = 0.01;

  /// Observed success ratio of one cell over one bucket.
  struct HistoryRecord {
    int cell{0};
    /// absolute minute at which the bucket starts (day * 1440 + minute of day)
    long bucket_start{0};
    double rho{0.0};
    int attempts{0};

    friend bool operator==(HistoryRecord const&, HistoryRecord const&) = default;
  };

  /// Attempt/success tallies for one (cell, bucket).
  struct BucketObservation {
    int cell{0};
    long bucket_start{0};
    int attempts{0};
    int successes{0};
  };

  /// @brief The historical corpus of (cell, bucket, success ratio) observations.
  class HistoryCorpus {
    std::vector<HistoryRecord> m_records;

  public:
    HistoryCorpus() = default;
    /// @throw ValidationError when a ratio lies outside [0,1] or a (cell, bucket) repeats
    explicit HistoryCorpus(std::vector<HistoryRecord> records);

    std::vector<HistoryRecord> const& records() const noexcept { return m_records; }
    bool empty() const noexcept { return m_records.empty(); }
    std::size_t size() const noexcept { return m_records.size(); }
    long latest_bucket() const;

    /// Copy restricted to buckets that start within `days` days of the latest bucket.
    HistoryCorpus trailing_days(int days) const;
  };

  /// @brief Appends rho = successes / attempts per (cell, bucket); zero-attempt buckets are skipped.
  /// @details An observation for a bucket already in the corpus pools with it by attempts.
  /// @throw ValidationError on negative counts or successes > attempts
  HistoryCorpus update_history(HistoryCorpus corpus, std::vector<BucketObservation> const& observations);

  /// `k,bucket_start,rho,attempts`
  void write_history(std::ostream& out, HistoryCorpus const& corpus);
  HistoryCorpus read_history(std::istream& in);
  HistoryCorpus load_history_file(std::string const& path);

  /// @brief Layout of the predictor's feature vector.
  /// @details [sin tod, cos tod, weekday one-hot (7), cell one-hot (cells), trend].
  struct FeatureSchema {
    int cells{0};
    /// weekday of absolute day 0 (0 = Monday)
    int day0_weekday{0};

    int dimension() const noexcept { return 2 + 7 + cells + 1; }
    std::string id() const;
    friend bool operator==(FeatureSchema const&, FeatureSchema const&) = default;
  };

  /// Trailing-bucket means used for the trend feature.
  class TrendIndex {
    std::map<std::pair<int, long>, double> m_rho;
    double m_fallback{0.5};

  public:
    TrendIndex() = default;
    explicit TrendIndex(HistoryCorpus const& corpus);
    /// Mean rho of `cell` over the three buckets before `bucket_start`; corpus mean if none.
    double trend(int cell, long bucket_start) const;
  };

  /// @throw SchemaError if `cell` lies outside the schema
  Eigen::VectorXd build_features(FeatureSchema const& schema, int cell, long bucket_start, double trend);

  struct RidgeModel {
    FeatureSchema schema;
    Eigen::VectorXd beta;
    double intercept{0.0};
    double lambda{1.0};
    /// true for the uniform fallback used before any history exists
    bool prior{false};

    double raw_predict(Eigen::VectorXd const& features) const { return intercept + beta.dot(features); }
  };

  /// @brief Ridge regression: minimises |y - b0 - X beta|^2 + lambda |beta|^2.
  /// @details With `intercept` the columns and targets are centred first, so the intercept is not
  ///          penalised. lambda > 0 solves the regularised normal equations by Cholesky;
  ///          lambda == 0 falls back to column-pivoting QR least squares.
  /// @throw ContractViolation on shape mismatch or negative lambda
  /// @throw SingularMatrixError when lambda == 0 and X is rank deficient
  RidgeModel fit_ridge(Eigen::MatrixXd const& X, Eigen::VectorXd const& y, double lambda,
                       bool intercept = true);

  /// One-hot feature rows are mostly zeros; this keeps the Gram accumulation linear in the rows.
  using SparseDesign = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  RidgeModel fit_ridge(SparseDesign const& X, Eigen::VectorXd const& y, double lambda, bool intercept = true);

  /// @brief Grid value with the lowest mean K-fold MSE (row r in fold r % folds).
  /// @details Ties resolve to the smallest lambda, duplicates to the first occurrence.
  /// @throw ConfigError when folds < 2, the grid is empty, or there are fewer rows than folds
  double select_lambda(Eigen::MatrixXd const& X, Eigen::VectorXd const& y,
                       std::vector<double> const& grid, int folds);
  double select_lambda(SparseDesign const& X, Eigen::VectorXd const& y, std::vector<double> const& grid, int folds);

  /// Clamps a raw prediction into [kMinAvailability, 1].
  double clamp_availability(double raw);

  /// @throw SchemaError for a cell outside the model's schema
  double predict_availability(RidgeModel const& model, int cell, long bucket_start, TrendIndex const& trend);

  struct RetrainOptions {
    FeatureSchema schema;
    std::vector<double> lambda_grid{1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0};
    int folds{5};
    /// training window in days, counted back from the latest bucket
    int window_days{3};
  };

  /// The uniform p = 0.5 model used when no history exists.
  RidgeModel uniform_prior(FeatureSchema const& schema);

  /// @brief Fits a fresh model on the trailing window of `corpus` with a cross-validated lambda.
  /// @details Records are put in canonical (bucket, cell) order first, so the result does not
  ///          depend on corpus order. An empty corpus yields uniform_prior; too few rows for
  ///          cross-validation use the largest grid value.
  RidgeModel retrain(HistoryCorpus const& corpus, RetrainOptions const& options);

  /// Design matrix and targets for `corpus` in canonical order.
  std::pair<Eigen::MatrixXd, Eigen::VectorXd> design_matrix(HistoryCorpus const& corpus,
                                                            FeatureSchema const& schema);
  /// The same rows as design_matrix, stored sparse.
  std::pair<SparseDesign, Eigen::VectorXd> sparse_design(HistoryCorpus const& corpus, FeatureSchema const& schema);

  void write_model(std::ostream& out, RidgeModel const& model);
  RidgeModel read_model(std::istream& in);

  /// @brief Immutable model snapshot plus the trend index it predicts with.
  /// @details The engine swaps snapshots only between ticks.
  class AvailabilityPredictor {
    std::shared_ptr<RidgeModel const> m_model;
    std::shared_ptr<TrendIndex const> m_trend;

  public:
    AvailabilityPredictor(std::shared_ptr<RidgeModel const> model, std::shared_ptr<TrendIndex const> trend)
        : m_model(std::move(model)), m_trend(std::move(trend)) {}

    RidgeModel const& model() const { return *m_model; }
    std::shared_ptr<RidgeModel const> const& model_ptr() const { return m_model; }
    double predict(int cell, long bucket_start) const {
      return predict_availability(*m_model, cell, bucket_start, *m_trend);
    }
    /// p_hat for every cell of the schema.
    std::vector<double> predict_all(long bucket_start) const;
  };

}  // namespace parksim
