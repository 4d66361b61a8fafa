#include "divrel/protocol.hpp"

#include "divrel/linalg.hpp"
#include "divrel/rng.hpp"

namespace divrel {

std::pair<DirectionQuery, BuyerSecret> buyer_prepare_query(
    const Eigen::MatrixXd& buyer, int k_decoys, const ValuationConfig& config,
    std::uint64_t seed, std::string session_id) {
  if (k_decoys < 0) throw InvalidData("k_decoys must be >= 0");
  if (config.weights && config.weights->size() != buyer.cols())
    throw DimensionError("weights: length mismatch");
  if (session_id.empty()) session_id = "sess-" + std::to_string(seed);

  const Eigen::MatrixXd cb = covariance(center_columns(buyer));
  const Spectrum<double> spec = sym_eig(cb);
  const std::vector<Eigen::Index> selected =
      select_components(spec.eigenvalues, config.component_threshold);

  const Eigen::Index d = cb.rows();
  const auto m = static_cast<Eigen::Index>(selected.size());
  const Eigen::Index total = m + k_decoys;

  Rng rng(seed);
  Eigen::MatrixXd pool(d, total);
  for (Eigen::Index k = 0; k < m; ++k) pool.col(k) = spec.eigenvectors.col(selected[static_cast<std::size_t>(k)]);
  for (Eigen::Index k = m; k < total; ++k) pool.col(k) = rng.unit_vector(d);

  // shuffled placement: slot[i] is the original pool index at query position i
  std::vector<Eigen::Index> slot(static_cast<std::size_t>(total));
  for (Eigen::Index i = 0; i < total; ++i) slot[static_cast<std::size_t>(i)] = i;
  rng.shuffle(slot);

  DirectionQuery query;
  query.session = session_id;
  query.directions.resize(d, total);
  std::vector<Eigen::Index> position_of(static_cast<std::size_t>(total));
  for (Eigen::Index i = 0; i < total; ++i) {
    query.directions.col(i) = pool.col(slot[static_cast<std::size_t>(i)]);
    position_of[static_cast<std::size_t>(slot[static_cast<std::size_t>(i)])] = i;
  }

  BuyerSecret secret;
  secret.session = session_id;
  secret.real_indices.resize(static_cast<std::size_t>(m));
  secret.eigenvalues.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    secret.real_indices[static_cast<std::size_t>(k)] = position_of[static_cast<std::size_t>(k)];
    secret.eigenvalues[k] = spec.eigenvalues[selected[static_cast<std::size_t>(k)]];
  }
  return {std::move(query), std::move(secret)};
}

VarianceResponse seller_respond(const Eigen::MatrixXd& seller,
                                const DirectionQuery& query) {
  if (seller.cols() != query.directions.rows())
    throw DimensionError("seller_respond: feature dimension does not match query");
  const Eigen::MatrixXd cs = covariance(center_columns(seller));
  VarianceResponse response;
  response.session = query.session;
  response.variances.resize(query.directions.cols());
  for (Eigen::Index i = 0; i < query.directions.cols(); ++i)
    response.variances[i] = projected_variance(cs, query.directions.col(i));
  return response;
}

ValuationOutcome broker_valuate(const BuyerSecret& secret,
                                const VarianceResponse& response,
                                const ValuationConfig& config,
                                Eigen::Index expected_len) {
  if (secret.session != response.session)
    throw SessionError("broker_valuate: session ids do not match");
  if (expected_len >= 0 && response.variances.size() != expected_len)
    throw ProtocolViolation("broker_valuate: response length does not match query");
  const auto m = static_cast<Eigen::Index>(secret.real_indices.size());
  if (m < 1 || secret.eigenvalues.size() != m)
    throw ProtocolViolation("broker_valuate: malformed secret");
  if (!response.variances.allFinite() || (response.variances.array() < 0).any())
    throw ProtocolViolation("broker_valuate: variances must be finite and >= 0");

  std::vector<bool> seen(static_cast<std::size_t>(response.variances.size()), false);
  SpectrumPair pair;
  pair.buyer = secret.eigenvalues;
  pair.seller.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::Index pos = secret.real_indices[static_cast<std::size_t>(k)];
    if (pos < 0 || pos >= response.variances.size())
      throw ProtocolViolation("broker_valuate: real index out of bounds");
    if (seen[static_cast<std::size_t>(pos)])
      throw ProtocolViolation("broker_valuate: duplicate real index");
    seen[static_cast<std::size_t>(pos)] = true;
    pair.seller[k] = response.variances[pos];
  }

  // selection happened buyer-side; the selected set is the prefix 0..m-1 of
  // the descending eigenvalue order, which keeps weight indexing aligned
  std::vector<Eigen::Index> selected(static_cast<std::size_t>(m));
  for (Eigen::Index k = 0; k < m; ++k) selected[static_cast<std::size_t>(k)] = k;

  ValuationOutcome outcome;
  outcome.session = secret.session;
  outcome.report = detail::report_for(pair, selected, config);
  return outcome;
}

std::vector<ValuationOutcome> run_session(const Eigen::MatrixXd& buyer,
                                          const std::vector<Eigen::MatrixXd>& sellers,
                                          int k_decoys, const ValuationConfig& config,
                                          std::uint64_t seed) {
  auto [query, secret] = buyer_prepare_query(buyer, k_decoys, config, seed);
  std::vector<ValuationOutcome> outcomes;
  outcomes.reserve(sellers.size());
  for (const auto& seller : sellers) {
    const VarianceResponse response = seller_respond(seller, query);
    outcomes.push_back(
        broker_valuate(secret, response, config, query.directions.cols()));
  }
  return outcomes;
}

}  // namespace divrel
