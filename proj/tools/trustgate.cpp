// trustgate: operator CLI.
//
//   trustgate scan --path DIR [--path FILE ...] [--min-level LEVEL] [--format table|json]
//   trustgate policy check FILE
//   trustgate replay AUDIT.jsonl [--format table|json]
//   trustgate simulate [--sessions N] [--seed S] [--requests N] [--mix a,b,c,d]
//   trustgate serve [--host H] [--port P]
//
// Every subcommand accepts --config FILE; without it TRUSTGATE_CONFIG is
// consulted, then built-in defaults apply.

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "trustgate/admin.hpp"
#include "trustgate/server.hpp"

using namespace trustgate;

namespace {

Config resolve_config(const std::string& flag) {
  std::string path = flag;
  if (path.empty()) {
    if (const char* env = std::getenv("TRUSTGATE_CONFIG")) path = env;
  }
  return path.empty() ? default_config() : load_config(path);
}

HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int run_scan(const std::vector<std::string>& paths, const std::string& min_level,
             const std::string& format, const Config& cfg) {
  auto level = level_from_string(min_level);
  if (!level) {
    std::cerr << "unknown level: " << min_level << '\n';
    return admin::kExitIoError;
  }
  auto report = admin::scan_paths(paths, make_engine(cfg), *level);
  if (format == "json")
    std::cout << admin::to_json(report).dump(2) << '\n';
  else
    std::cout << admin::format_table(report);
  return report.exit_code;
}

int run_policy_check(const std::string& file, const Config& cfg) {
  auto r = admin::policy_check(file, cfg.attribute_schema);
  for (const auto& m : r.messages) std::cout << file << ": " << m << '\n';
  if (r.exit_code == admin::kExitClean) std::cout << file << ": ok\n";
  return r.exit_code;
}

int run_replay(const std::string& file, const std::string& format) {
  admin::ReplaySummary s;
  try {
    s = admin::replay(file);
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return admin::kExitIoError;
  }
  if (format == "json")
    std::cout << admin::to_json(s).dump(2) << '\n';
  else
    std::cout << admin::format_summary(s);
  return admin::kExitClean;
}

int run_serve(Config cfg, const std::string& host, int port) {
  if (!host.empty()) cfg.host = host;
  if (port >= 0) cfg.port = port;
  Gateway gw(cfg);
  HttpServer server(gw);
  int bound = server.bind(cfg.host, cfg.port);
  if (bound < 0) {
    std::cerr << "cannot bind " << cfg.host << ':' << cfg.port << '\n';
    return admin::kExitIoError;
  }
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "listening on " << cfg.host << ':' << bound << '\n';
  server.listen();
  g_server = nullptr;
  return admin::kExitClean;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trust-aware LLM gateway tools"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "gateway configuration file");

  auto* scan = app.add_subcommand("scan", "scan files for sensitive entities");
  std::vector<std::string> scan_paths;
  std::string min_level = "internal", scan_format = "table";
  scan->add_option("--path", scan_paths, "file or directory to scan")->required();
  scan->add_option("--min-level", min_level, "lowest level that counts as a finding")
      ->check(CLI::IsMember({"public", "internal", "confidential", "secret"}));
  scan->add_option("--format", scan_format)->check(CLI::IsMember({"table", "json"}));
  scan->add_option("--config", config_path);

  auto* policy = app.add_subcommand("policy", "policy tools");
  policy->require_subcommand(1);
  auto* check = policy->add_subcommand("check", "parse and lint a policy file");
  std::string policy_file;
  check->add_option("file", policy_file)->required();
  check->add_option("--config", config_path);

  auto* replay = app.add_subcommand("replay", "summarize an audit log");
  std::string audit_file, replay_format = "table";
  replay->add_option("file", audit_file)->required();
  replay->add_option("--format", replay_format)->check(CLI::IsMember({"table", "json"}));

  auto* sim = app.add_subcommand("simulate", "run seeded synthetic sessions");
  admin::SimulationSpec spec;
  std::vector<double> mix;
  sim->add_option("--sessions", spec.sessions)->check(CLI::PositiveNumber);
  sim->add_option("--seed", spec.seed);
  sim->add_option("--requests", spec.requests_per_session)->check(CLI::PositiveNumber);
  sim->add_option("--mix", mix, "tier proportions for tiers 0..3")->delimiter(',')->expected(4);
  sim->add_option("--config", config_path);

  auto* serve = app.add_subcommand("serve", "run the HTTP gateway");
  std::string host;
  int port = -1;
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--config", config_path);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*replay) return run_replay(audit_file, replay_format);
    Config cfg = resolve_config(config_path);
    if (*scan) return run_scan(scan_paths, min_level, scan_format, cfg);
    if (*check) return run_policy_check(policy_file, cfg);
    if (*sim) {
      if (!mix.empty()) std::copy(mix.begin(), mix.end(), spec.tier_mix.begin());
      std::cout << admin::to_json(admin::simulate(spec, cfg)).dump(2) << '\n';
      return admin::kExitClean;
    }
    if (*serve) return run_serve(cfg, host, port);
  } catch (const ConfigError& e) {
    std::cerr << "config error at " << e.key() << ": " << e.what() << '\n';
    return admin::kExitIoError;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return admin::kExitIoError;
  }
  return admin::kExitClean;
}
