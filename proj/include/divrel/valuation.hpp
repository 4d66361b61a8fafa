#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "divrel/errors.hpp"
#include "divrel/linalg.hpp"

namespace divrel {

// buyer eigenvalues and the seller's projected variances, same length
struct SpectrumPair {
  Eigen::VectorXd buyer;
  Eigen::VectorXd seller;
};

struct ValuationConfig {
  double component_threshold = 1e-2;
  std::optional<Eigen::VectorXd> weights;  // per buyer component, each in [0,1]
  std::optional<double> alpha;             // blend: alpha*D + (1-alpha)*R
};

struct ValuationReport {
  double diversity = 0.0;
  double relevance = 0.0;
  std::optional<double> combined;
  std::vector<Eigen::Index> selected;  // components used, 0-based
  ValuationConfig config;
};

namespace detail {

// Per-component diversity/relevance factors.
// Conventions: (0,0) contributes (0,1); variances within 1e-12 relative of
// each other count as an exact match so that valuing a dataset against
// itself lands on exactly (0,1) instead of accumulated rounding dust.
inline std::pair<double, double> component_factors(double lam, double lhat) {
  if (lam == 0.0 && lhat == 0.0) return {0.0, 1.0};
  const double mx = std::max(lam, lhat);
  const double mn = std::min(lam, lhat);
  if (mx - mn <= 1e-12 * mx) return {0.0, 1.0};
  return {(mx - mn) / mx, mn / mx};
}

inline void validate_pair(const SpectrumPair& pair) {
  if (pair.buyer.size() != pair.seller.size())
    throw DimensionError("spectrum pair: length mismatch");
  if (pair.buyer.size() < 1) throw InvalidData("spectrum pair: empty");
  if (!pair.buyer.allFinite() || !pair.seller.allFinite())
    throw InvalidData("spectrum pair: non-finite entry");
  if ((pair.buyer.array() < 0).any() || (pair.seller.array() < 0).any())
    throw InvalidData("spectrum pair: negative entry");
}

inline void validate_weights(const Eigen::VectorXd& w, Eigen::Index dim) {
  if (w.size() != dim) throw DimensionError("weights: length mismatch");
  if (!w.allFinite() || (w.array() < 0).any() || (w.array() > 1).any())
    throw InvalidWeight("weights: every entry must lie in [0,1]");
}

inline void validate_subset(const std::vector<Eigen::Index>& subset, Eigen::Index dim) {
  if (subset.empty()) throw EmptySelection("component subset is empty");
  std::vector<bool> seen(static_cast<std::size_t>(dim), false);
  for (const Eigen::Index i : subset) {
    if (i < 0 || i >= dim) throw InvalidData("component subset: index out of range");
    if (seen[static_cast<std::size_t>(i)])
      throw InvalidData("component subset: duplicate index");
    seen[static_cast<std::size_t>(i)] = true;
  }
}

// geometric mean of the chosen factor over a subset; log-space unless a
// factor is exactly zero (then the product is zero and so is the mean)
inline double geometric_mean(const SpectrumPair& pair,
                             const std::vector<Eigen::Index>& subset,
                             const Eigen::VectorXd* weights, bool want_diversity) {
  double log_sum = 0.0;
  for (const Eigen::Index i : subset) {
    auto [fd, fr] = component_factors(pair.buyer[i], pair.seller[i]);
    double f = want_diversity ? fd : fr;
    if (weights) f *= (*weights)[i];
    if (f == 0.0) return 0.0;
    log_sum += std::log(f);
  }
  return std::exp(log_sum / static_cast<double>(subset.size()));
}

inline std::vector<Eigen::Index> all_indices(Eigen::Index d) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) idx[static_cast<std::size_t>(i)] = i;
  return idx;
}

inline void reject_degenerate(const SpectrumPair& pair) {
  for (Eigen::Index i = 0; i < pair.buyer.size(); ++i)
    if (pair.buyer[i] != 0.0 || pair.seller[i] != 0.0) return;
  throw DegenerateSpectrum("all variance pairs are (0,0)");
}

}  // namespace detail

inline double diversity_partial(const SpectrumPair& pair,
                                const std::vector<Eigen::Index>& subset) {
  detail::validate_pair(pair);
  detail::validate_subset(subset, pair.buyer.size());
  return detail::geometric_mean(pair, subset, nullptr, true);
}

inline double relevance_partial(const SpectrumPair& pair,
                                const std::vector<Eigen::Index>& subset) {
  detail::validate_pair(pair);
  detail::validate_subset(subset, pair.buyer.size());
  return detail::geometric_mean(pair, subset, nullptr, false);
}

inline double diversity(const SpectrumPair& pair) {
  detail::validate_pair(pair);
  detail::reject_degenerate(pair);
  return detail::geometric_mean(pair, detail::all_indices(pair.buyer.size()),
                                nullptr, true);
}

inline double relevance(const SpectrumPair& pair) {
  detail::validate_pair(pair);
  detail::reject_degenerate(pair);
  return detail::geometric_mean(pair, detail::all_indices(pair.buyer.size()),
                                nullptr, false);
}

inline double weighted_diversity(const SpectrumPair& pair, const Eigen::VectorXd& weights) {
  detail::validate_pair(pair);
  detail::validate_weights(weights, pair.buyer.size());
  detail::reject_degenerate(pair);
  return detail::geometric_mean(pair, detail::all_indices(pair.buyer.size()),
                                &weights, true);
}

inline double weighted_relevance(const SpectrumPair& pair, const Eigen::VectorXd& weights) {
  detail::validate_pair(pair);
  detail::validate_weights(weights, pair.buyer.size());
  detail::reject_degenerate(pair);
  return detail::geometric_mean(pair, detail::all_indices(pair.buyer.size()),
                                &weights, false);
}

inline double combined_value(double diversity_value, double relevance_value, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw InvalidAlpha("alpha must lie in [0,1]");
  return alpha * diversity_value + (1.0 - alpha) * relevance_value;
}

// indices with lambda strictly above the threshold, ascending; since the
// eigenvalues arrive sorted descending this is always a prefix
inline std::vector<Eigen::Index> select_components(const Eigen::VectorXd& lambdas,
                                                   double threshold) {
  if (!(threshold >= 0.0)) throw InvalidData("threshold must be >= 0");
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < lambdas.size(); ++i)
    if (lambdas[i] > threshold) out.push_back(i);
  if (out.empty())
    throw EmptySelection("no eigenvalue clears the component threshold");
  return out;
}

namespace detail {

// shared tail of valuate() and the broker: estimators over an
// already-selected spectrum pair, weights indexed per component
inline ValuationReport report_for(const SpectrumPair& selected_pair,
                                  const std::vector<Eigen::Index>& selected,
                                  const ValuationConfig& config) {
  validate_pair(selected_pair);
  const Eigen::VectorXd* w = nullptr;
  Eigen::VectorXd w_sel;
  if (config.weights) {
    w_sel.resize(selected_pair.buyer.size());
    for (Eigen::Index k = 0; k < selected_pair.buyer.size(); ++k) {
      const Eigen::Index orig = selected[static_cast<std::size_t>(k)];
      if (orig < 0 || orig >= config.weights->size())
        throw DimensionError("weights: length mismatch");
      w_sel[k] = (*config.weights)[orig];
    }
    validate_weights(w_sel, selected_pair.buyer.size());
    w = &w_sel;
  }
  const auto idx = all_indices(selected_pair.buyer.size());
  ValuationReport report;
  report.diversity = geometric_mean(selected_pair, idx, w, true);
  report.relevance = geometric_mean(selected_pair, idx, w, false);
  if (config.alpha)
    report.combined = combined_value(report.diversity, report.relevance, *config.alpha);
  report.selected = selected;
  report.config = config;
  return report;
}

}  // namespace detail

// the whole pipeline in one call: center, eigendecompose the buyer, project
// the seller onto the selected components, run the estimators
inline ValuationReport valuate(const Eigen::MatrixXd& buyer,
                               const Eigen::MatrixXd& seller,
                               const ValuationConfig& config = {}) {
  if (buyer.cols() != seller.cols())
    throw DimensionError("valuate: buyer and seller feature dimensions differ");
  if (config.weights && config.weights->size() != buyer.cols())
    throw DimensionError("weights: length mismatch");

  const Eigen::MatrixXd cb = covariance(center_columns(buyer));
  const Eigen::MatrixXd cs = covariance(center_columns(seller));
  const Spectrum<double> spec = sym_eig(cb);
  const std::vector<Eigen::Index> selected =
      select_components(spec.eigenvalues, config.component_threshold);

  SpectrumPair pair;
  pair.buyer.resize(static_cast<Eigen::Index>(selected.size()));
  pair.seller.resize(static_cast<Eigen::Index>(selected.size()));
  for (std::size_t k = 0; k < selected.size(); ++k) {
    pair.buyer[static_cast<Eigen::Index>(k)] = spec.eigenvalues[selected[k]];
    pair.seller[static_cast<Eigen::Index>(k)] =
        projected_variance(cs, spec.eigenvectors.col(selected[k]));
  }
  return detail::report_for(pair, selected, config);
}

}  // namespace divrel
