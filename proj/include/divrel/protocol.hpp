#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "divrel/valuation.hpp"

namespace divrel {

// what the seller sees: directions only, decoys indistinguishable
struct DirectionQuery {
  std::string session;
  Eigen::MatrixXd directions;  // one column per queried direction
};

// what stays with the buyer until the reveal step
struct BuyerSecret {
  std::string session;
  std::vector<Eigen::Index> real_indices;  // positions of true components in the query
  Eigen::VectorXd eigenvalues;             // matching, descending
};

struct VarianceResponse {
  std::string session;
  Eigen::VectorXd variances;  // one per queried direction, query order
};

struct ValuationOutcome {
  std::string session;
  ValuationReport report;
};

// PCA on the buyer's data, threshold selection, decoy injection, shuffle.
// Deterministic for a given seed. Empty session id gets one derived from
// the seed.
std::pair<DirectionQuery, BuyerSecret> buyer_prepare_query(
    const Eigen::MatrixXd& buyer, int k_decoys, const ValuationConfig& config,
    std::uint64_t seed, std::string session_id = "");

// projected variance for every queried direction, decoys included
VarianceResponse seller_respond(const Eigen::MatrixXd& seller,
                                const DirectionQuery& query);

// drop decoys, assemble the spectrum pair, run the estimators.
// expected_len, when >= 0, enforces that the response answered the whole
// query (the wire broker knows the query length; in-process callers pass it).
ValuationOutcome broker_valuate(const BuyerSecret& secret,
                                const VarianceResponse& response,
                                const ValuationConfig& config,
                                Eigen::Index expected_len = -1);

// the whole exchange for many sellers against one buyer, one shared query
std::vector<ValuationOutcome> run_session(const Eigen::MatrixXd& buyer,
                                          const std::vector<Eigen::MatrixXd>& sellers,
                                          int k_decoys, const ValuationConfig& config,
                                          std::uint64_t seed);

}  // namespace divrel
