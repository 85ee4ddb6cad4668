#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tamakkon/core.hpp"
#include "tamakkon/statkit.hpp"

namespace tamakkon::learners {

// Multivariate polynomial regression. A term is a monomial over named
// features; the model is intercept + sum(coef * monomial).
struct MprTerm {
  std::vector<std::pair<std::string, int>> powers;  // (feature, exponent), exponent >= 1

  int total_degree() const {
    int d = 0;
    for (const auto& [_, e] : powers) d += e;
    return d;
  }

  friend bool operator==(const MprTerm&, const MprTerm&) = default;
};

struct MprModel {
  std::vector<MprTerm> terms;
  std::vector<double> coefficients;  // one per term
  double intercept = 0.0;
  int degree = 1;
  std::vector<std::string> features;

  double evaluate(const std::map<std::string, double>& x) const {
    double y = intercept;
    for (std::size_t t = 0; t < terms.size(); ++t) {
      double m = 1.0;
      for (const auto& [f, e] : terms[t].powers) {
        auto it = x.find(f);
        if (it == x.end()) throw Error(ErrorCode::MissingFeature, "MPR: missing feature " + f);
        double base = it->second;
        for (int k = 0; k < e; ++k) m *= base;
      }
      y += coefficients[t] * m;
    }
    return y;
  }

  friend bool operator==(const MprModel&, const MprModel&) = default;
};

struct MprConfig {
  int max_degree = 3;
  bool include_interactions = true;
  double ridge_lambda = 1e-6;  // 0 disables the underdetermined fallback
  std::optional<std::vector<MprTerm>> fixed_terms;  // skip degree search, use these
  std::optional<int> fixed_degree;
};

namespace detail {

// Univariate powers up to `degree`, plus pairwise cross terms when requested.
inline std::vector<MprTerm> monomial_basis(const std::vector<std::string>& features, int degree,
                                           bool interactions) {
  std::vector<MprTerm> terms;
  for (const auto& f : features) {
    for (int e = 1; e <= degree; ++e) terms.push_back(MprTerm{{{f, e}}});
  }
  if (interactions) {
    for (std::size_t i = 0; i < features.size(); ++i) {
      for (std::size_t j = i + 1; j < features.size(); ++j) {
        for (int a = 1; a < degree; ++a) {
          for (int b = 1; a + b <= degree; ++b) {
            terms.push_back(MprTerm{{{features[i], a}, {features[j], b}}});
          }
        }
      }
    }
  }
  return terms;
}

inline double eval_term(const MprTerm& term, const std::map<std::string, double>& x) {
  double m = 1.0;
  for (const auto& [f, e] : term.powers) {
    double base = x.at(f);
    for (int k = 0; k < e; ++k) m *= base;
  }
  return m;
}

inline Eigen::MatrixXd design_matrix(const ProfileDataset& ds,
                                     const std::vector<std::size_t>& rows,
                                     const std::vector<MprTerm>& terms) {
  Eigen::MatrixXd X(rows.size(), terms.size() + 1);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    X(r, 0) = 1.0;
    for (std::size_t t = 0; t < terms.size(); ++t) {
      X(r, t + 1) = eval_term(terms[t], ds.records[rows[r]].values);
    }
  }
  return X;
}

struct MprFit {
  Eigen::VectorXd beta;  // [intercept, coefs...]
};

inline MprFit solve_least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  double ridge_lambda) {
  MprFit fit;
  if (X.rows() >= X.cols()) {
    fit.beta = X.colPivHouseholderQr().solve(y);
  } else if (ridge_lambda > 0.0) {
    Eigen::MatrixXd gram = X.transpose() * X;
    gram.diagonal().array() += ridge_lambda;
    fit.beta = gram.ldlt().solve(X.transpose() * y);
  } else {
    throw Error(ErrorCode::TooFewRows, "MPR: fewer rows than terms and ridge disabled");
  }
  return fit;
}

}  // namespace detail

inline MprModel fit_mpr(const ProfileDataset& ds, const std::vector<std::string>& features,
                        const MprConfig& cfg = {}, std::uint64_t seed = 0) {
  if (ds.records.empty()) throw Error(ErrorCode::EmptyDataset, "fit_mpr: empty dataset");
  if (features.empty()) throw Error(ErrorCode::DegenerateDesign, "fit_mpr: no features");

  bool any_varying = false;
  for (const auto& f : features) {
    auto col = ds.column(f);
    if (std::any_of(col.begin(), col.end(), [&](double v) { return v != col.front(); })) {
      any_varying = true;
      break;
    }
  }
  if (!any_varying) {
    // Constant design still admits an intercept-only model; callers that
    // pre-filter constants never hit this, raw fits do.
    bool const_response = true;
    for (const auto& r : ds.records) {
      if (r.response != ds.records.front().response) const_response = false;
    }
    if (!const_response) {
      throw Error(ErrorCode::DegenerateDesign, "fit_mpr: all features constant");
    }
  }

  const std::size_t n = ds.records.size();
  std::vector<std::size_t> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) y(i) = ds.records[i].response;

  auto finish = [&](const std::vector<MprTerm>& terms, int degree) {
    Eigen::MatrixXd X = detail::design_matrix(ds, all_rows, terms);
    auto fit = detail::solve_least_squares(X, y, cfg.ridge_lambda);
    MprModel m;
    m.terms = terms;
    m.intercept = fit.beta(0);
    m.coefficients.assign(fit.beta.data() + 1, fit.beta.data() + fit.beta.size());
    m.degree = degree;
    m.features = features;
    return m;
  };

  if (cfg.fixed_terms) {
    return finish(*cfg.fixed_terms, cfg.fixed_degree.value_or(cfg.max_degree));
  }

  // Degree selection by 5-fold CV MSE; ties prefer the lower degree.
  int best_degree = 1;
  double best_cv = std::numeric_limits<double>::infinity();
  const std::size_t k = std::min<std::size_t>(5, n);
  for (int d = 1; d <= cfg.max_degree; ++d) {
    auto terms = detail::monomial_basis(features, d, cfg.include_interactions);
    double cv_mse;
    if (k < 2) {
      cv_mse = 0.0;  // single row: any degree interpolates, pick the lowest
    } else {
      auto folds = statkit::kfold_split(n, k, seed);
      double acc = 0.0;
      std::size_t count = 0;
      for (const auto& fold : folds) {
        std::vector<std::size_t> train;
        std::vector<bool> held(n, false);
        for (auto i : fold) held[i] = true;
        for (std::size_t i = 0; i < n; ++i) {
          if (!held[i]) train.push_back(i);
        }
        if (train.empty()) continue;
        Eigen::MatrixXd Xt = detail::design_matrix(ds, train, terms);
        Eigen::VectorXd yt(train.size());
        for (std::size_t i = 0; i < train.size(); ++i) yt(i) = ds.records[train[i]].response;
        detail::MprFit fit;
        try {
          fit = detail::solve_least_squares(Xt, yt, cfg.ridge_lambda);
        } catch (const Error&) {
          acc = std::numeric_limits<double>::infinity();
          count = 1;
          break;
        }
        Eigen::MatrixXd Xv = detail::design_matrix(ds, fold, terms);
        Eigen::VectorXd pred = Xv * fit.beta;
        for (std::size_t i = 0; i < fold.size(); ++i) {
          double r = pred(i) - ds.records[fold[i]].response;
          acc += r * r;
          ++count;
        }
      }
      cv_mse = count ? acc / static_cast<double>(count)
                     : std::numeric_limits<double>::infinity();
    }
    if (cv_mse < best_cv - 1e-12) {
      best_cv = cv_mse;
      best_degree = d;
    }
  }
  return finish(detail::monomial_basis(features, best_degree, cfg.include_interactions),
                best_degree);
}

}  // namespace tamakkon::learners
