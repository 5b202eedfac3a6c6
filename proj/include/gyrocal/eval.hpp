#pragma once

// RMSE, gamma ratio, per-K comparison table and residual-vs-time curves.

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gyrocal/dataset.hpp"
#include "gyrocal/nn/network.hpp"

namespace gyrocal {

struct RmseResult {
  double pooled = 0.0;            // [mrad/s], over samples and axes
  Vec3 per_axis = Vec3::Zero();   // [mrad/s]
};

// Inputs in rad/s, result in mrad/s.
RmseResult rmse(std::span<const Vec3> predictions, std::span<const Vec3> labels);

// 100 * eps_model / eps_baseline [%].
double gamma_ratio(double eps_model, double eps_baseline);

struct EvalRow {
  int k = 1;
  double window_seconds = 0.0;
  double model_rmse = 0.0;           // [mrad/s]
  double baseline60_rmse = 0.0;      // [mrad/s], full-record averaging vs true bias
  double equal_duration_rmse = 0.0;  // [mrad/s], mean of the same window
  double gamma = 0.0;                // [%]
  std::size_t n_test = 0;
};

struct EvalResult {
  std::vector<EvalRow> rows;      // descending K
  double baseline60_rmse = 0.0;   // [mrad/s]
  double record_seconds = 0.0;
};

using BiasEstimator = std::function<Vec3(const Window&)>;

// Full-record averaging residual against the known true bias of each record.
double full_record_baseline_rmse(std::span<const SignalRecord> records);

// Each K needs an estimator and a dataset; test-split windows are scored.
EvalResult evaluate(const std::map<int, BiasEstimator>& estimators,
                    const std::map<int, const LabeledDataset*>& datasets,
                    std::span<const SignalRecord> full_records, int threads = 1);

EvalResult evaluate(const std::map<int, const nn::Network*>& models,
                    const std::map<int, const LabeledDataset*>& datasets,
                    std::span<const SignalRecord> full_records, int threads = 1);

// Aligned table with 5-decimal RMSE and 2-decimal gamma, plus the K=1 baseline row.
std::string format_table(const EvalResult& result);
// Same rows in CSV with full-precision values.
std::string format_table_csv(const EvalResult& result);

struct ResidualCurve {
  std::vector<double> time;  // [s]
  Window residual;           // cumulative mean minus reference [rad/s]
  Window envelope;           // running std of the cumulative mean [rad/s]
};

// Reference defaults to the record's true bias; InvalidParameterError if neither exists.
ResidualCurve residual_report(const SignalRecord& record, std::optional<Vec3> reference = std::nullopt);
std::string format_residual_csv(const ResidualCurve& curve);

// Baseline running-mean error of one record next to each model's estimate from
// the record's first window of duration T = record / K.
std::string format_model_vs_time_csv(const SignalRecord& record, const Vec3& label,
                                     const std::map<int, const nn::Network*>& models);

}  // namespace gyrocal
