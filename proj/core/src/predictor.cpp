#include "spotsim/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace spotsim {

PredictMethod parse_predict_method(const std::string& name) {
  if (name == "arima") return PredictMethod::arima;
  if (name == "moving_avg") return PredictMethod::moving_avg;
  if (name == "exp_smooth") return PredictMethod::exp_smooth;
  if (name == "last_value") return PredictMethod::last_value;
  throw std::invalid_argument("unknown predict method: " + name);
}

std::string to_string(PredictMethod m) {
  switch (m) {
    case PredictMethod::arima: return "arima";
    case PredictMethod::moving_avg: return "moving_avg";
    case PredictMethod::exp_smooth: return "exp_smooth";
    case PredictMethod::last_value: return "last_value";
  }
  return "?";
}

std::vector<int> preprocess(const std::vector<int>& history, int hop_min_jump, int plateau_tol) {
  if (history.empty()) throw std::invalid_argument("preprocess: empty history");
  std::vector<int> y = history;
  const size_t n = y.size();

  // Flatten excursions of 1-2 intervals that return to the same plateau.
  for (size_t i = 1; i + 1 < n; ++i) {
    if (y[i] == y[i - 1]) continue;
    for (size_t j = i + 1; j <= std::min(i + 2, n - 1); ++j) {
      if (y[j] == y[i - 1]) {
        for (size_t k = i; k < j; ++k) y[k] = y[i - 1];
        break;
      }
    }
  }

  // After a large level shift whose tail has settled, old levels only
  // mislead the fit: keep the settled suffix, left-padded to full length.
  size_t last_shift = 0;
  for (size_t i = 1; i < n; ++i)
    if (std::abs(y[i] - y[i - 1]) >= hop_min_jump) last_shift = i;
  if (last_shift > 0 && n - last_shift >= 3) {
    auto [mn, mx] = std::minmax_element(y.begin() + last_shift, y.end());
    if (*mx - *mn <= plateau_tol) {
      std::vector<int> padded(n, y[last_shift]);
      std::copy(y.begin() + last_shift, y.end(), padded.begin() + last_shift);
      return padded;
    }
  }

  // Same idea when the series reverses direction: only the leg after the
  // last turn describes where it is heading.
  size_t turn = 0;
  int prev_sign = 0;
  for (size_t i = 1; i < n; ++i) {
    const int d = y[i] - y[i - 1];
    if (d == 0) continue;
    const int sign = d > 0 ? 1 : -1;
    if (prev_sign != 0 && sign != prev_sign) turn = i - 1;  // level where it turned
    prev_sign = sign;
  }
  if (turn > 0 && n - turn >= 3) {
    std::vector<int> padded(n, y[turn]);
    std::copy(y.begin() + turn, y.end(), padded.begin() + turn);
    return padded;
  }
  return y;
}

namespace {

// Solves (A^T A + ridge I) x = A^T b by Gaussian elimination.
bool least_squares(const std::vector<std::vector<double>>& rows, const std::vector<double>& b,
                   std::vector<double>& coeffs) {
  const size_t m = rows.size();
  if (m == 0) return false;
  const size_t p = rows[0].size();
  std::vector<std::vector<double>> ata(p, std::vector<double>(p, 0.0));
  std::vector<double> atb(p, 0.0);
  for (size_t r = 0; r < m; ++r) {
    for (size_t i = 0; i < p; ++i) {
      atb[i] += rows[r][i] * b[r];
      for (size_t j = 0; j < p; ++j) ata[i][j] += rows[r][i] * rows[r][j];
    }
  }
  for (size_t i = 0; i < p; ++i) ata[i][i] += 1e-8;

  for (size_t col = 0; col < p; ++col) {
    size_t pivot = col;
    for (size_t r = col + 1; r < p; ++r)
      if (std::abs(ata[r][col]) > std::abs(ata[pivot][col])) pivot = r;
    if (std::abs(ata[pivot][col]) < 1e-12) return false;
    std::swap(ata[col], ata[pivot]);
    std::swap(atb[col], atb[pivot]);
    for (size_t r = 0; r < p; ++r) {
      if (r == col) continue;
      const double f = ata[r][col] / ata[col][col];
      for (size_t c = col; c < p; ++c) ata[r][c] -= f * ata[col][c];
      atb[r] -= f * atb[col];
    }
  }
  coeffs.assign(p, 0.0);
  for (size_t i = 0; i < p; ++i) {
    coeffs[i] = atb[i] / ata[i][i];
    if (!std::isfinite(coeffs[i])) return false;
  }
  return true;
}

// ARIMA(2,1,2) by two-stage least squares: an AR(2) fit on the differenced
// series supplies residuals, then the full model regresses on lagged values
// and lagged residuals. Forecasts are level cumulative sums with future
// residuals at zero.
bool arima_forecast(const std::vector<int>& history, int lookahead, std::vector<double>& out) {
  const size_t n = history.size();
  if (n < 5) return false;
  std::vector<double> z(n - 1);
  for (size_t i = 1; i < n; ++i) z[i - 1] = static_cast<double>(history[i] - history[i - 1]);
  const size_t m = z.size();
  bool any = false;
  for (double v : z) any |= (v != 0.0);
  if (!any) return false;

  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
  for (size_t t = 2; t < m; ++t) {
    rows.push_back({1.0, z[t - 1], z[t - 2]});
    targets.push_back(z[t]);
  }
  std::vector<double> ar;
  if (!least_squares(rows, targets, ar)) return false;

  std::vector<double> resid(m, 0.0);
  double sse_ar = 0.0;
  for (size_t t = 2; t < m; ++t) {
    resid[t] = z[t] - (ar[0] + ar[1] * z[t - 1] + ar[2] * z[t - 2]);
    sse_ar += resid[t] * resid[t];
  }

  // Residual-correction stage, kept only when it actually fits better;
  // with this few samples the extra parameters can invert the trend.
  std::vector<double> coeffs = {ar[0], ar[1], ar[2], 0.0, 0.0};
  if (rows.size() >= 8) {
    std::vector<std::vector<double>> rows2;
    std::vector<double> targets2;
    for (size_t t = 2; t < m; ++t) {
      rows2.push_back({1.0, z[t - 1], z[t - 2], resid[t - 1], resid[t - 2]});
      targets2.push_back(z[t]);
    }
    std::vector<double> full;
    if (least_squares(rows2, targets2, full)) {
      double sse_full = 0.0;
      for (size_t r = 0; r < rows2.size(); ++r) {
        double pred = 0.0;
        for (size_t c = 0; c < full.size(); ++c) pred += full[c] * rows2[r][c];
        sse_full += (targets2[r] - pred) * (targets2[r] - pred);
      }
      if (sse_full < sse_ar) coeffs = full;
    }
  }

  // Stationarity guard on the differenced process.
  const double spectral = std::abs(coeffs[1]) + std::abs(coeffs[2]);
  if (spectral > 0.95) {
    coeffs[1] *= 0.95 / spectral;
    coeffs[2] *= 0.95 / spectral;
  }
  coeffs[3] = std::clamp(coeffs[3], -0.95, 0.95);
  coeffs[4] = std::clamp(coeffs[4], -0.95, 0.95);

  std::vector<double> zs = z;
  std::vector<double> es = resid;
  out.clear();
  double level = static_cast<double>(history.back());
  double damp = 1.0;
  for (int k = 0; k < lookahead; ++k) {
    const size_t t = zs.size();
    const double zhat = coeffs[0] + coeffs[1] * zs[t - 1] + coeffs[2] * zs[t - 2] +
                        coeffs[3] * es[t - 1] + coeffs[4] * es[t - 2];
    if (!std::isfinite(zhat)) return false;
    zs.push_back(zhat);
    es.push_back(0.0);
    // Flatten increasingly distant extrapolation.
    level += zhat * damp;
    damp *= 0.85;
    out.push_back(level);
  }
  return true;
}

}  // namespace

Forecast postprocess(const std::vector<double>& raw, const ForecastConfig& config,
                     int last_observed) {
  Forecast f;
  f.values.reserve(raw.size());
  const int lo = config.floor;
  const int hi = config.capacity;
  const int anchor = std::clamp(last_observed, lo, hi);

  if (!raw.empty() &&
      std::abs(std::llround(raw.front()) - anchor) > config.reset_threshold) {
    f.values.assign(raw.size(), anchor);
    return f;
  }

  int prev = anchor;
  double prev_raw = static_cast<double>(anchor);
  int steep_run = 0;
  for (double r : raw) {
    double inc = r - prev_raw;
    prev_raw = r;
    // Damp sustained steep runs; a one-off jump is left to the step clamp.
    if (std::abs(inc) > 0.5 * config.max_step) {
      ++steep_run;
      if (steep_run > 1) inc *= std::pow(config.steep_decay, steep_run - 1);
    } else {
      steep_run = 0;
    }
    inc = std::clamp(inc, -static_cast<double>(config.max_step),
                     static_cast<double>(config.max_step));
    int value = static_cast<int>(std::llround(prev + inc));
    value = std::clamp(value, lo, hi);
    value = std::clamp(value, prev - config.max_step, prev + config.max_step);
    f.values.push_back(value);
    prev = value;
  }
  return f;
}

Forecast predict(const std::vector<int>& history, const ForecastConfig& config,
                 PredictMethod method) {
  if (static_cast<int>(history.size()) < config.history_len)
    throw std::invalid_argument("predict: history shorter than history_len");
  if (config.lookahead < 1) throw std::invalid_argument("predict: lookahead must be >= 1");

  std::vector<int> h(history.end() - config.history_len, history.end());
  const int last = h.back();
  std::vector<double> raw;

  switch (method) {
    case PredictMethod::last_value:
      raw.assign(config.lookahead, static_cast<double>(last));
      break;
    case PredictMethod::moving_avg: {
      const int w = std::min<int>(config.moving_avg_window, h.size());
      const double mean = std::accumulate(h.end() - w, h.end(), 0.0) / w;
      raw.assign(config.lookahead, mean);
      break;
    }
    case PredictMethod::exp_smooth: {
      double s = h.front();
      for (size_t i = 1; i < h.size(); ++i)
        s = config.exp_smooth_factor * h[i] + (1.0 - config.exp_smooth_factor) * s;
      raw.assign(config.lookahead, s);
      break;
    }
    case PredictMethod::arima: {
      std::vector<int> cleaned = preprocess(h);
      if (!arima_forecast(cleaned, config.lookahead, raw))
        raw.assign(config.lookahead, static_cast<double>(last));  // degenerate history
      break;
    }
  }
  return postprocess(raw, config, last);
}

double eval_l1(const Forecast& predicted, const std::vector<int>& actual) {
  if (predicted.values.size() != actual.size())
    throw std::invalid_argument("eval_l1: length mismatch");
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < actual.size(); ++i) {
    num += std::abs(static_cast<double>(predicted.values[i]) - actual[i]);
    den += actual[i];
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / den;
}

}  // namespace spotsim
