#pragma once

#include <string>
#include <vector>

namespace spotsim {

struct ForecastConfig {
  int history_len = 12;       // H
  int lookahead = 12;         // I
  int capacity = 0;           // upper bound for predictions
  int floor = 0;              // lower bound
  int max_step = 8;           // max predicted change per interval
  int reset_threshold = 10;   // first-step deviation that resets to last value
  int moving_avg_window = 4;
  double exp_smooth_factor = 0.5;
  double steep_decay = 0.7;   // damping for runs of steep same-direction steps
};

struct Forecast {
  std::vector<int> values;  // length I, within [floor, capacity]
};

enum class PredictMethod { arima, moving_avg, exp_smooth, last_value };

PredictMethod parse_predict_method(const std::string& name);
std::string to_string(PredictMethod m);

// Cleans a history window for model fitting: flattens spikes that last
// 1-2 intervals, and when the tail of the series has settled on a new
// plateau after a large level shift, keeps only that suffix (left-padded
// by repetition to the original length).
std::vector<int> preprocess(const std::vector<int>& history, int hop_min_jump = 3,
                            int plateau_tol = 2);

// Rounds, clamps to [floor, capacity], limits per-step change to max_step
// starting from last_observed, damps steep runs, and resets to a flat
// last-value forecast when the first step deviates from last_observed by
// more than reset_threshold.
Forecast postprocess(const std::vector<double>& raw, const ForecastConfig& config,
                     int last_observed);

// Forecasts the next I availability counts from the last H observations.
// Deterministic. The arima method fits a small differenced autoregression
// with a moving-average residual correction by least squares and falls
// back to last_value on degenerate input.
Forecast predict(const std::vector<int>& history, const ForecastConfig& config,
                 PredictMethod method);

// (sum |pred - actual|) / (sum actual). Returns 0 for an exact all-zero
// match and +inf when actual sums to zero but predictions do not.
double eval_l1(const Forecast& predicted, const std::vector<int>& actual);

}  // namespace spotsim
