#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "tamakkon/core.hpp"
#include "tamakkon/statkit.hpp"

namespace tamakkon::learners {

enum class SvrKernelKind { Linear, Rbf, Poly };

inline const char* to_string(SvrKernelKind k) {
  switch (k) {
    case SvrKernelKind::Linear: return "LINEAR";
    case SvrKernelKind::Rbf: return "RBF";
    case SvrKernelKind::Poly: return "POLY";
  }
  return "?";
}

inline SvrKernelKind svr_kernel_from_string(const std::string& s) {
  if (s == "LINEAR") return SvrKernelKind::Linear;
  if (s == "RBF") return SvrKernelKind::Rbf;
  if (s == "POLY") return SvrKernelKind::Poly;
  throw Error(ErrorCode::InvalidArgument, "unknown SVR kernel: " + s);
}

struct SvrKernel {
  SvrKernelKind kind = SvrKernelKind::Linear;
  double gamma = 1.0;   // RBF
  int degree = 2;       // POLY
  double coef0 = 1.0;   // POLY

  double operator()(const std::vector<double>& a, const std::vector<double>& b) const {
    double dot = 0.0;
    switch (kind) {
      case SvrKernelKind::Linear:
        for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
        return dot;
      case SvrKernelKind::Rbf: {
        double d2 = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
          double d = a[i] - b[i];
          d2 += d * d;
        }
        return std::exp(-gamma * d2);
      }
      case SvrKernelKind::Poly:
        for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
        return std::pow(dot + coef0, degree);
    }
    return 0.0;
  }

  friend bool operator==(const SvrKernel&, const SvrKernel&) = default;
};

struct SvrModel {
  SvrKernel kernel;
  double c = 1.0;
  double epsilon = 0.1;
  // Support vectors live in standardized feature space.
  std::vector<std::vector<double>> support;
  std::vector<double> dual_coef;  // beta_i = alpha_i - alpha_i*, in [-c, c]
  double bias = 0.0;
  std::vector<std::string> features;
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;  // 1.0 for constant features

  std::vector<double> standardize(const std::map<std::string, double>& x) const {
    std::vector<double> z(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
      auto it = x.find(features[i]);
      if (it == x.end()) {
        throw Error(ErrorCode::MissingFeature, "SVR: missing feature " + features[i]);
      }
      z[i] = (it->second - feature_mean[i]) / feature_scale[i];
    }
    return z;
  }

  double evaluate(const std::map<std::string, double>& x) const {
    const auto z = standardize(x);
    double y = bias;
    for (std::size_t i = 0; i < support.size(); ++i) y += dual_coef[i] * kernel(support[i], z);
    return y;
  }

  friend bool operator==(const SvrModel&, const SvrModel&) = default;
};

struct SvrConfig {
  std::vector<SvrKernel> kernel_grid = {SvrKernel{SvrKernelKind::Linear},
                                        SvrKernel{SvrKernelKind::Rbf, 0.1},
                                        SvrKernel{SvrKernelKind::Rbf, 1.0}};
  std::vector<double> c_grid = {1.0, 10.0, 100.0};
  std::vector<double> epsilon_grid = {0.01, 0.1};
  double kkt_tol = 1e-3;
  std::size_t max_iter_per_row = 100000;  // iteration cap is this times n
};

namespace detail {

struct SmoProblem {
  const std::vector<std::vector<double>>* x = nullptr;
  const std::vector<double>* y = nullptr;
  SvrKernel kernel;
  double c = 1.0;
  double epsilon = 0.1;
  double tol = 1e-3;
  std::size_t max_iter = 0;
};

struct SmoSolution {
  std::vector<double> beta;
  double bias = 0.0;
};

// Maximal-violating-pair SMO for the epsilon-insensitive dual in the
// beta = alpha - alpha* formulation:
//   max  -1/2 b'Kb + y'b - eps * sum|b_i|   s.t.  sum b_i = 0, |b_i| <= C.
inline SmoSolution solve_smo(const SmoProblem& prob) {
  const auto& x = *prob.x;
  const auto& y = *prob.y;
  const std::size_t n = x.size();
  const double C = prob.c;
  const double eps = prob.epsilon;

  std::vector<std::vector<double>> K(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) K[i][j] = K[j][i] = prob.kernel(x[i], x[j]);
  }

  std::vector<double> beta(n, 0.0);
  std::vector<double> o(n, 0.0);  // o_i = sum_j beta_j K_ij (no bias)
  const double inf = std::numeric_limits<double>::infinity();
  const double at_bound = 1e-10 * std::max(C, 1.0);

  auto bounds_for = [&](std::size_t i, double& lo, double& up) {
    const double g = y[i] - o[i];
    if (beta[i] >= C - at_bound) {
      lo = -inf;
      up = g - eps;
    } else if (beta[i] <= -C + at_bound) {
      lo = g + eps;
      up = inf;
    } else if (beta[i] > at_bound) {
      lo = up = g - eps;
    } else if (beta[i] < -at_bound) {
      lo = up = g + eps;
    } else {
      lo = g - eps;
      up = g + eps;
    }
  };

  double bias = 0.0;
  for (std::size_t iter = 0; iter < prob.max_iter; ++iter) {
    double max_lo = -inf, min_up = inf;
    std::size_t i_lo = 0, i_up = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double lo, up;
      bounds_for(i, lo, up);
      if (lo > max_lo) {
        max_lo = lo;
        i_lo = i;
      }
      if (up < min_up) {
        min_up = up;
        i_up = i;
      }
    }
    if (max_lo - min_up <= prob.tol) {
      bias = std::isfinite(max_lo) && std::isfinite(min_up) ? (max_lo + min_up) / 2.0
                                                            : (std::isfinite(max_lo) ? max_lo
                                                                                     : min_up);
      return SmoSolution{std::move(beta), bias};
    }

    const std::size_t i = i_lo, j = i_up;
    // Optimize the pair along t = beta_i, beta_j = s - t, exactly over the
    // piecewise-quadratic objective (breakpoints at t = 0 and t = s).
    const double s = beta[i] + beta[j];
    const double t0 = beta[i];
    const double eta = K[i][i] + K[j][j] - 2.0 * K[i][j];
    const double gi = y[i] - o[i];
    const double gj = y[j] - o[j];
    const double box_lo = std::max(-C, s - C);
    const double box_hi = std::min(C, s + C);

    auto delta_obj = [&](double t) {
      const double dt = t - t0;
      return (gi - gj) * dt - 0.5 * eta * dt * dt -
             eps * (std::abs(t) + std::abs(s - t) - std::abs(t0) - std::abs(s - t0));
    };

    std::vector<double> candidates = {box_lo, box_hi};
    if (0.0 > box_lo && 0.0 < box_hi) candidates.push_back(0.0);
    if (s > box_lo && s < box_hi) candidates.push_back(s);
    if (eta > 0.0) {
      // Stationary point within each sign region.
      for (double si : {-1.0, 1.0}) {
        for (double sj : {-1.0, 1.0}) {
          double t = t0 + (gi - gj - eps * si + eps * sj) / eta;
          t = std::clamp(t, box_lo, box_hi);
          candidates.push_back(t);
        }
      }
    }
    double best_t = t0, best_gain = 0.0;
    for (double t : candidates) {
      const double gain = delta_obj(t);
      if (gain > best_gain + 1e-15) {
        best_gain = gain;
        best_t = t;
      }
    }
    if (best_gain <= 0.0) {
      // No progress on the violating pair; accept current iterate.
      break;
    }
    const double new_i = best_t;
    const double new_j = s - best_t;
    const double di = new_i - beta[i];
    const double dj = new_j - beta[j];
    beta[i] = new_i;
    beta[j] = new_j;
    for (std::size_t k = 0; k < n; ++k) o[k] += di * K[i][k] + dj * K[j][k];
  }

  // Cap reached (or stalled): derive bias from the tightest feasible interval.
  double max_lo = -inf, min_up = inf;
  for (std::size_t i = 0; i < n; ++i) {
    double lo, up;
    bounds_for(i, lo, up);
    max_lo = std::max(max_lo, lo);
    min_up = std::min(min_up, up);
  }
  if (std::isfinite(max_lo) && std::isfinite(min_up)) bias = (max_lo + min_up) / 2.0;
  else if (std::isfinite(max_lo)) bias = max_lo;
  else if (std::isfinite(min_up)) bias = min_up;
  return SmoSolution{std::move(beta), bias};
}

inline SvrModel fit_svr_fixed(const std::vector<std::vector<double>>& z,
                              const std::vector<double>& y,
                              const std::vector<std::string>& features,
                              const std::vector<double>& mean, const std::vector<double>& scale,
                              const SvrKernel& kernel, double c, double epsilon,
                              double tol, std::size_t max_iter) {
  SmoProblem prob;
  prob.x = &z;
  prob.y = &y;
  prob.kernel = kernel;
  prob.c = c;
  prob.epsilon = epsilon;
  prob.tol = tol;
  prob.max_iter = max_iter;
  auto sol = solve_smo(prob);

  SvrModel m;
  m.kernel = kernel;
  m.c = c;
  m.epsilon = epsilon;
  m.bias = sol.bias;
  m.features = features;
  m.feature_mean = mean;
  m.feature_scale = scale;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (std::abs(sol.beta[i]) > 1e-12) {
      m.support.push_back(z[i]);
      m.dual_coef.push_back(sol.beta[i]);
    }
  }
  return m;
}

}  // namespace detail

inline SvrModel fit_svr(const ProfileDataset& ds, const std::vector<std::string>& features,
                        const SvrConfig& cfg = {}, std::uint64_t seed = 0) {
  if (ds.records.size() < 2) throw Error(ErrorCode::TooFewRows, "fit_svr: need at least 2 rows");
  if (cfg.kernel_grid.empty() || cfg.c_grid.empty() || cfg.epsilon_grid.empty()) {
    throw Error(ErrorCode::EmptyGrid, "fit_svr: empty hyperparameter grid");
  }
  const std::size_t n = ds.records.size();
  const std::size_t p = features.size();

  std::vector<std::vector<double>> raw(n, std::vector<double>(p));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      auto it = ds.records[i].values.find(features[j]);
      if (it == ds.records[i].values.end()) {
        throw Error(ErrorCode::MissingFeature, "fit_svr: missing feature " + features[j]);
      }
      if (!std::isfinite(it->second)) {
        throw Error(ErrorCode::NonFiniteFeature, "fit_svr: non-finite " + features[j]);
      }
      raw[i][j] = it->second;
    }
    y[i] = ds.records[i].response;
  }

  // z-score; constant columns pass through unscaled
  std::vector<double> mean(p, 0.0), scale(p, 1.0);
  for (std::size_t j = 0; j < p; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += raw[i][j];
    mean[j] = s / static_cast<double>(n);
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = raw[i][j] - mean[j];
      v += d * d;
    }
    v /= static_cast<double>(n);
    if (v > 0.0) scale[j] = std::sqrt(v);
    else mean[j] = 0.0;  // constant column passes through unchanged
  }
  std::vector<std::vector<double>> z(n, std::vector<double>(p));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) z[i][j] = (raw[i][j] - mean[j]) / scale[j];
  }

  const std::size_t max_iter = cfg.max_iter_per_row * n;
  const bool single_point = cfg.kernel_grid.size() == 1 && cfg.c_grid.size() == 1 &&
                            cfg.epsilon_grid.size() == 1;

  SvrKernel best_kernel = cfg.kernel_grid.front();
  double best_c = cfg.c_grid.front();
  double best_eps = cfg.epsilon_grid.front();

  if (!single_point && n >= 4) {
    double best_cv = std::numeric_limits<double>::infinity();
    const std::size_t k = std::min<std::size_t>(5, n);
    auto folds = statkit::kfold_split(n, k, seed);
    for (const auto& kernel : cfg.kernel_grid) {
      for (double c : cfg.c_grid) {
        for (double eps : cfg.epsilon_grid) {
          double acc = 0.0;
          std::size_t count = 0;
          for (const auto& fold : folds) {
            std::vector<bool> held(n, false);
            for (auto i : fold) held[i] = true;
            std::vector<std::vector<double>> zt;
            std::vector<double> yt;
            for (std::size_t i = 0; i < n; ++i) {
              if (!held[i]) {
                zt.push_back(z[i]);
                yt.push_back(y[i]);
              }
            }
            if (zt.size() < 2) continue;
            auto m = detail::fit_svr_fixed(zt, yt, features, mean, scale, kernel, c, eps,
                                           cfg.kkt_tol, cfg.max_iter_per_row * zt.size());
            for (auto i : fold) {
              double pred = m.bias;
              for (std::size_t sidx = 0; sidx < m.support.size(); ++sidx) {
                pred += m.dual_coef[sidx] * kernel(m.support[sidx], z[i]);
              }
              double r = pred - y[i];
              acc += r * r;
              ++count;
            }
          }
          const double cv = count ? acc / static_cast<double>(count)
                                  : std::numeric_limits<double>::infinity();
          if (cv < best_cv - 1e-12) {
            best_cv = cv;
            best_kernel = kernel;
            best_c = c;
            best_eps = eps;
          }
        }
      }
    }
  }

  return detail::fit_svr_fixed(z, y, features, mean, scale, best_kernel, best_c, best_eps,
                               cfg.kkt_tol, max_iter);
}

// Max KKT violation of a fitted model over its training data; diagnostic for tests.
inline double svr_kkt_residual(const SvrModel& m, const ProfileDataset& ds) {
  const std::size_t n = ds.records.size();
  double max_lo = -std::numeric_limits<double>::infinity();
  double min_up = std::numeric_limits<double>::infinity();
  const double at_bound = 1e-10 * std::max(m.c, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto zi = m.standardize(ds.records[i].values);
    double o = 0.0;
    for (std::size_t sidx = 0; sidx < m.support.size(); ++sidx) {
      o += m.dual_coef[sidx] * m.kernel(m.support[sidx], zi);
    }
    // Recover this row's beta if it is a support vector (exact coordinate match).
    double beta = 0.0;
    for (std::size_t sidx = 0; sidx < m.support.size(); ++sidx) {
      if (m.support[sidx] == zi) {
        beta = m.dual_coef[sidx];
        break;
      }
    }
    const double g = ds.records[i].response - o;
    double lo, up;
    if (beta >= m.c - at_bound) {
      lo = -std::numeric_limits<double>::infinity();
      up = g - m.epsilon;
    } else if (beta <= -m.c + at_bound) {
      lo = g + m.epsilon;
      up = std::numeric_limits<double>::infinity();
    } else if (beta > at_bound) {
      lo = up = g - m.epsilon;
    } else if (beta < -at_bound) {
      lo = up = g + m.epsilon;
    } else {
      lo = g - m.epsilon;
      up = g + m.epsilon;
    }
    max_lo = std::max(max_lo, lo);
    min_up = std::min(min_up, up);
  }
  return std::max(0.0, max_lo - min_up);
}

}  // namespace tamakkon::learners
