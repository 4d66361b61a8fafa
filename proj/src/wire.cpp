#include "divrel/wire.hpp"

#include <cmath>

namespace divrel {

using nlohmann::json;

std::string encode_message(const WireMessage& msg) {
  const json j = {{"type", msg.type}, {"session", msg.session}, {"payload", msg.payload}};
  return j.dump() + "\n";
}

WireMessage decode_message(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ProtocolViolation(std::string("malformed message: ") + e.what());
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string() ||
      !j.contains("session") || !j["session"].is_string() ||
      !j.contains("payload") || !j["payload"].is_object())
    throw ProtocolViolation("message envelope must carry type, session, payload");
  WireMessage msg;
  msg.type = j["type"].get<std::string>();
  msg.session = j["session"].get<std::string>();
  msg.payload = j["payload"];
  return msg;
}

WireMessage hello_message(const std::string& role, const std::string& session) {
  return {"HELLO", session, json{{"role", role}}};
}

WireMessage query_message(const DirectionQuery& query) {
  json dirs = json::array();
  for (Eigen::Index i = 0; i < query.directions.cols(); ++i) {
    json v = json::array();
    for (Eigen::Index k = 0; k < query.directions.rows(); ++k)
      v.push_back(query.directions(k, i));
    dirs.push_back(std::move(v));
  }
  return {"QUERY", query.session,
          json{{"dim", query.directions.rows()}, {"directions", std::move(dirs)}}};
}

WireMessage variances_message(const VarianceResponse& response) {
  json vars = json::array();
  for (Eigen::Index i = 0; i < response.variances.size(); ++i)
    vars.push_back(response.variances[i]);
  return {"VARIANCES", response.session, json{{"variances", std::move(vars)}}};
}

WireMessage reveal_message(const BuyerSecret& secret) {
  json idx = json::array();
  for (const Eigen::Index i : secret.real_indices) idx.push_back(i);
  json vals = json::array();
  for (Eigen::Index i = 0; i < secret.eigenvalues.size(); ++i)
    vals.push_back(secret.eigenvalues[i]);
  return {"REVEAL", secret.session,
          json{{"real_indices", std::move(idx)}, {"eigenvalues", std::move(vals)}}};
}

WireMessage valuation_message(const ValuationOutcome& outcome) {
  json sel = json::array();
  for (const Eigen::Index i : outcome.report.selected) sel.push_back(i);
  json payload = {{"diversity", outcome.report.diversity},
                  {"relevance", outcome.report.relevance},
                  {"selected", std::move(sel)}};
  payload["combined"] =
      outcome.report.combined ? json(*outcome.report.combined) : json(nullptr);
  return {"VALUATION", outcome.session, std::move(payload)};
}

WireMessage error_message(const std::string& session, const std::string& code,
                          const std::string& detail) {
  return {"ERROR", session, json{{"code", code}, {"detail", detail}}};
}

namespace {

void expect_type(const WireMessage& msg, const char* want) {
  if (msg.type != want)
    throw ProtocolViolation(std::string("expected ") + want + ", got " + msg.type);
}

double expect_finite_number(const json& j, const char* what) {
  if (!j.is_number()) throw ProtocolViolation(std::string(what) + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ProtocolViolation(std::string(what) + " must be finite");
  return v;
}

}  // namespace

DirectionQuery parse_query(const WireMessage& msg) {
  expect_type(msg, "QUERY");
  const json& p = msg.payload;
  if (!p.contains("dim") || !p["dim"].is_number_integer() ||
      !p.contains("directions") || !p["directions"].is_array())
    throw ProtocolViolation("QUERY payload needs dim and directions");
  const auto d = p["dim"].get<Eigen::Index>();
  if (d < 1) throw ProtocolViolation("QUERY dim must be >= 1");
  const auto& dirs = p["directions"];
  DirectionQuery query;
  query.session = msg.session;
  query.directions.resize(d, static_cast<Eigen::Index>(dirs.size()));
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    if (!dirs[i].is_array() || static_cast<Eigen::Index>(dirs[i].size()) != d)
      throw ProtocolViolation("QUERY direction has wrong dimension");
    for (Eigen::Index k = 0; k < d; ++k)
      query.directions(k, static_cast<Eigen::Index>(i)) =
          expect_finite_number(dirs[i][static_cast<std::size_t>(k)], "direction entry");
  }
  return query;
}

VarianceResponse parse_variances(const WireMessage& msg) {
  expect_type(msg, "VARIANCES");
  const json& p = msg.payload;
  if (!p.contains("variances") || !p["variances"].is_array())
    throw ProtocolViolation("VARIANCES payload needs variances");
  const auto& vars = p["variances"];
  VarianceResponse response;
  response.session = msg.session;
  response.variances.resize(static_cast<Eigen::Index>(vars.size()));
  for (std::size_t i = 0; i < vars.size(); ++i)
    response.variances[static_cast<Eigen::Index>(i)] =
        expect_finite_number(vars[i], "variance");
  return response;
}

BuyerSecret parse_reveal(const WireMessage& msg) {
  expect_type(msg, "REVEAL");
  const json& p = msg.payload;
  if (!p.contains("real_indices") || !p["real_indices"].is_array() ||
      !p.contains("eigenvalues") || !p["eigenvalues"].is_array())
    throw ProtocolViolation("REVEAL payload needs real_indices and eigenvalues");
  const auto& idx = p["real_indices"];
  const auto& vals = p["eigenvalues"];
  if (idx.size() != vals.size() || idx.empty())
    throw ProtocolViolation("REVEAL index/eigenvalue lists must match and be non-empty");
  BuyerSecret secret;
  secret.session = msg.session;
  secret.real_indices.reserve(idx.size());
  secret.eigenvalues.resize(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (!idx[i].is_number_integer())
      throw ProtocolViolation("real index must be an integer");
    secret.real_indices.push_back(idx[i].get<Eigen::Index>());
    secret.eigenvalues[static_cast<Eigen::Index>(i)] =
        expect_finite_number(vals[i], "eigenvalue");
  }
  return secret;
}

ValuationOutcome parse_valuation(const WireMessage& msg) {
  expect_type(msg, "VALUATION");
  const json& p = msg.payload;
  if (!p.contains("diversity") || !p.contains("relevance") ||
      !p.contains("combined") || !p.contains("selected") || !p["selected"].is_array())
    throw ProtocolViolation("VALUATION payload incomplete");
  ValuationOutcome outcome;
  outcome.session = msg.session;
  outcome.report.diversity = expect_finite_number(p["diversity"], "diversity");
  outcome.report.relevance = expect_finite_number(p["relevance"], "relevance");
  if (!p["combined"].is_null())
    outcome.report.combined = expect_finite_number(p["combined"], "combined");
  for (const auto& s : p["selected"]) {
    if (!s.is_number_integer())
      throw ProtocolViolation("selected index must be an integer");
    outcome.report.selected.push_back(s.get<Eigen::Index>());
  }
  return outcome;
}

}  // namespace divrel
