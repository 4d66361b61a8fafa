#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "divrel/gaussian.hpp"
#include "divrel/net.hpp"
#include "divrel/protocol.hpp"
#include "divrel/table.hpp"
#include "divrel/valuation.hpp"
#include "divrel/wire.hpp"

namespace {

using divrel::ValuationConfig;
using divrel::ValuationOutcome;
using nlohmann::json;

std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop.store(true); }

// report values always carry a decimal point: 0 -> "0.0", 1 -> "1.0"
std::string fmt_report(double v) {
  std::string s = divrel::format_double(v);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw divrel::ParseError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw divrel::ParseError("'" + path + "': " + e.what());
  }
}

// covariance spec: {"dim": d, "cov": [[...], ...]}
Eigen::MatrixXd load_covariance_spec(const std::string& path) {
  const json j = load_json_file(path);
  if (!j.is_object() || !j.contains("dim") || !j["dim"].is_number_integer() ||
      !j.contains("cov") || !j["cov"].is_array())
    throw divrel::ParseError("'" + path + "': spec needs integer dim and cov matrix");
  const auto d = j["dim"].get<Eigen::Index>();
  if (d < 1) throw divrel::ParseError("'" + path + "': dim must be >= 1");
  const auto& cov = j["cov"];
  if (static_cast<Eigen::Index>(cov.size()) != d)
    throw divrel::ParseError("'" + path + "': cov must have dim rows");
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto& row = cov[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != d)
      throw divrel::ParseError("'" + path + "': cov row has wrong length");
    for (Eigen::Index k = 0; k < d; ++k) {
      const auto& cell = row[static_cast<std::size_t>(k)];
      if (!cell.is_number())
        throw divrel::ParseError("'" + path + "': cov entries must be numbers");
      m(i, k) = cell.get<double>();
    }
  }
  return m;
}

Eigen::VectorXd load_weights_file(const std::string& path) {
  const json j = load_json_file(path);
  if (!j.is_array())
    throw divrel::ParseError("'" + path + "': weights file must hold a JSON array");
  Eigen::VectorXd w(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number())
      throw divrel::ParseError("'" + path + "': weights must be numbers");
    w[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return w;
}

Eigen::MatrixXd load_matrix_csv(const std::string& path) {
  return divrel::matrix_from_table(divrel::load_csv(path));
}

std::string seller_id(const std::string& seller_path, const std::string& buyer_path) {
  if (seller_path == buyer_path) return "self";
  return std::filesystem::path(seller_path).stem().string();
}

void write_text(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw divrel::ParseError("cannot write '" + out_path + "'");
  out << text;
  if (!out) throw divrel::ParseError("write failed for '" + out_path + "'");
}

std::string report_csv(const std::vector<std::string>& ids,
                       const std::vector<ValuationOutcome>& outcomes) {
  std::string text = "seller_id,diversity,relevance,combined\n";
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& r = outcomes[i].report;
    text += ids[i] + ',' + fmt_report(r.diversity) + ',' + fmt_report(r.relevance) + ',';
    if (r.combined) text += fmt_report(*r.combined);
    text += '\n';
  }
  return text;
}

std::string outcome_json_line(const ValuationOutcome& outcome) {
  json j = divrel::valuation_message(outcome).payload;
  j["session"] = outcome.session;
  return j.dump();
}

std::pair<std::string, std::uint16_t> split_host_port(const std::string& addr) {
  const std::size_t colon = addr.rfind(':');
  if (colon == std::string::npos || colon + 1 >= addr.size())
    throw divrel::TransportError("address must look like HOST:PORT, got '" + addr + "'");
  const int port = std::stoi(addr.substr(colon + 1));
  if (port < 0 || port > 65535)
    throw divrel::TransportError("port out of range in '" + addr + "'");
  return {addr.substr(0, colon), static_cast<std::uint16_t>(port)};
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const divrel::DimensionError*>(&e)) return 3;
  if (dynamic_cast<const divrel::EmptySelection*>(&e)) return 4;
  if (dynamic_cast<const divrel::TransportError*>(&e)) return 5;
  if (dynamic_cast<const divrel::ProtocolViolation*>(&e)) return 6;
  if (dynamic_cast<const divrel::SessionError*>(&e)) return 6;
  return 2;
}

struct ValueArgs {
  std::string buyer_path;
  std::vector<std::string> seller_paths;
  double threshold = 1e-2;
  int decoys = 0;
  double alpha = -1.0;  // <0 means unset
  std::string weights_path;
  std::uint64_t seed = 0;
  std::string out_path;
  int timeout = 30;
};

void add_value_flags(CLI::App* cmd, ValueArgs& args) {
  cmd->add_option("buyer", args.buyer_path, "buyer feature CSV")->required();
  cmd->add_option("sellers", args.seller_paths, "seller feature CSVs")->required();
  cmd->add_option("--threshold", args.threshold, "component selection threshold");
  cmd->add_option("--decoys", args.decoys, "decoy directions mixed into the query");
  cmd->add_option("--alpha", args.alpha, "blend: alpha*D + (1-alpha)*R");
  cmd->add_option("--weights", args.weights_path, "JSON array of per-component weights");
  cmd->add_option("--seed", args.seed, "rng seed for decoys and shuffling");
  cmd->add_option("--out", args.out_path, "write the report here instead of stdout");
}

ValuationConfig config_from(const ValueArgs& args) {
  ValuationConfig config;
  config.component_threshold = args.threshold;
  if (!args.weights_path.empty()) config.weights = load_weights_file(args.weights_path);
  if (args.alpha >= 0.0) config.alpha = args.alpha;
  return config;
}

int cmd_value(const ValueArgs& args, bool over_wire) {
  const Eigen::MatrixXd buyer = load_matrix_csv(args.buyer_path);
  std::vector<Eigen::MatrixXd> sellers;
  std::vector<std::string> ids;
  for (const auto& path : args.seller_paths) {
    sellers.push_back(load_matrix_csv(path));
    ids.push_back(seller_id(path, args.buyer_path));
  }
  const ValuationConfig config = config_from(args);
  const std::vector<ValuationOutcome> outcomes =
      over_wire
          ? divrel::run_wire_session(buyer, sellers, args.decoys, config,
                                     args.seed, args.timeout)
          : divrel::run_session(buyer, sellers, args.decoys, config, args.seed);
  write_text(report_csv(ids, outcomes), args.out_path);
  return 0;
}

int cmd_synth(const std::string& spec_path, Eigen::Index n, std::uint64_t seed,
              const std::string& out_path) {
  divrel::GaussianSpec spec;
  spec.covariance = load_covariance_spec(spec_path);
  spec.n = n;
  spec.seed = seed;
  const Eigen::MatrixXd samples = divrel::sample_gaussian(spec);
  const std::string text = divrel::write_csv(divrel::table_from_matrix(samples));
  write_text(text, out_path);
  return 0;
}

int cmd_serve(const std::string& listen_addr, const ValueArgs& args) {
  const auto [host, port] = split_host_port(listen_addr);
  divrel::BrokerServer server(config_from(args), args.timeout,
                              [](const ValuationOutcome& outcome) {
                                std::cout << outcome_json_line(outcome) << "\n"
                                          << std::flush;
                              });
  server.start(host, port);
  std::cerr << "listening on " << host << ":" << server.port() << "\n" << std::flush;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop.load())
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  server.stop();
  return 0;
}

int cmd_client(const std::string& role, const std::string& connect_addr,
               const std::string& data_path, const std::string& session,
               const ValueArgs& args) {
  const auto [host, port] = split_host_port(connect_addr);
  const Eigen::MatrixXd data = load_matrix_csv(data_path);
  if (role == "buyer") {
    divrel::wire_buyer_session(host, port, data, args.decoys, config_from(args),
                               args.seed, session, args.timeout);
    return 0;
  }
  const ValuationOutcome outcome =
      divrel::wire_seller_session(host, port, data, session, args.timeout);
  std::cout << outcome_json_line(outcome) << "\n" << std::flush;
  return 0;
}

int cmd_report(const std::string& report_path, const std::string& out_path) {
  const divrel::Table table = divrel::load_csv(report_path);
  const std::vector<std::string> want = {"seller_id", "diversity", "relevance",
                                         "combined"};
  if (table.columns != want)
    throw divrel::ParseError("'" + report_path +
                             "': expected header seller_id,diversity,relevance,combined");
  std::string text = "relevance,diversity\n";
  for (const auto& row : table.rows) {
    const auto d = divrel::parse_double(row[1]);
    const auto r = divrel::parse_double(row[2]);
    if (!d || !r || *d < 0.0 || *d > 1.0 || *r < 0.0 || *r > 1.0)
      throw divrel::ParseError("'" + report_path + "': value outside [0,1] for '" +
                               row[0] + "'");
    if (!row[3].empty()) {
      const auto c = divrel::parse_double(row[3]);
      if (!c || *c < 0.0 || *c > 1.0)
        throw divrel::ParseError("'" + report_path + "': combined outside [0,1] for '" +
                                 row[0] + "'");
    }
    text += fmt_report(*r) + ',' + fmt_report(*d) + '\n';
  }
  write_text(text, out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"second-moment data valuation: diversity and relevance of seller "
               "datasets along buyer principal components"};
  app.require_subcommand(1);

  // synth
  std::string spec_path, synth_out;
  Eigen::Index synth_n = 1000;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "sample a Gaussian dataset from a covariance spec");
  synth->add_option("spec", spec_path, "covariance spec JSON")->required();
  synth->add_option("--n", synth_n, "sample count");
  synth->add_option("--seed", synth_seed, "rng seed");
  synth->add_option("--out", synth_out, "output CSV path (default stdout)");

  // value / simulate
  ValueArgs value_args, sim_args;
  auto* value = app.add_subcommand("value", "value sellers against a buyer in-process");
  add_value_flags(value, value_args);
  auto* simulate = app.add_subcommand("simulate", "same as value, but through a loopback broker");
  add_value_flags(simulate, sim_args);
  simulate->add_option("--timeout", sim_args.timeout, "per-step timeout, seconds");

  // serve
  ValueArgs serve_args;
  std::string listen_addr = "127.0.0.1:7878";
  auto* serve = app.add_subcommand("serve", "run a broker; prints one JSON line per valuation");
  serve->add_option("--listen", listen_addr, "HOST:PORT (port 0 picks one)");
  serve->add_option("--threshold", serve_args.threshold, "component selection threshold");
  serve->add_option("--alpha", serve_args.alpha, "blend: alpha*D + (1-alpha)*R");
  serve->add_option("--weights", serve_args.weights_path, "JSON array of per-component weights");
  serve->add_option("--timeout", serve_args.timeout, "per-step timeout, seconds");

  // client
  ValueArgs client_args;
  std::string client_role, connect_addr, client_data, client_session = "default";
  auto* client = app.add_subcommand("client", "one protocol role against a remote broker");
  client->add_option("role", client_role, "buyer or seller")
      ->required()
      ->check(CLI::IsMember({"buyer", "seller"}));
  client->add_option("data", client_data, "feature CSV for this party")->required();
  client->add_option("--connect", connect_addr, "broker HOST:PORT")->required();
  client->add_option("--session", client_session, "session id shared by the parties");
  client->add_option("--decoys", client_args.decoys, "decoy directions (buyer role)");
  client->add_option("--threshold", client_args.threshold, "component selection threshold (buyer role)");
  client->add_option("--seed", client_args.seed, "rng seed (buyer role)");
  client->add_option("--timeout", client_args.timeout, "per-step timeout, seconds");

  // report
  std::string report_path, report_out;
  auto* report = app.add_subcommand("report", "turn a valuation report into scatter data");
  report->add_option("report", report_path, "valuation report CSV")->required();
  report->add_option("--out", report_out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // keep --help at 0, fold CLI11's codes into 2
  }

  try {
    if (*synth) return cmd_synth(spec_path, synth_n, synth_seed, synth_out);
    if (*value) return cmd_value(value_args, false);
    if (*simulate) return cmd_value(sim_args, true);
    if (*serve) return cmd_serve(listen_addr, serve_args);
    if (*client) return cmd_client(client_role, connect_addr, client_data,
                                   client_session, client_args);
    if (*report) return cmd_report(report_path, report_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}
