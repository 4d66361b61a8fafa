#pragma once

#include <string>

#include <json.hpp>

#include "divrel/protocol.hpp"

namespace divrel {

// One JSON object per line. Envelope: {"type": ..., "session": ..., "payload": {...}}
// Types: HELLO, QUERY, VARIANCES, REVEAL, VALUATION, ERROR.
struct WireMessage {
  std::string type;
  std::string session;
  nlohmann::json payload;
};

// serialized line including the trailing newline
std::string encode_message(const WireMessage& msg);
// parses one line; malformed JSON or missing envelope fields -> ProtocolViolation
WireMessage decode_message(const std::string& line);

WireMessage hello_message(const std::string& role, const std::string& session);
WireMessage query_message(const DirectionQuery& query);
WireMessage variances_message(const VarianceResponse& response);
WireMessage reveal_message(const BuyerSecret& secret);
WireMessage valuation_message(const ValuationOutcome& outcome);
WireMessage error_message(const std::string& session, const std::string& code,
                          const std::string& detail);

DirectionQuery parse_query(const WireMessage& msg);
VarianceResponse parse_variances(const WireMessage& msg);
BuyerSecret parse_reveal(const WireMessage& msg);
ValuationOutcome parse_valuation(const WireMessage& msg);

}  // namespace divrel
