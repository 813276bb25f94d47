// Sends the same fixture prompts as four callers of increasing trust and
// prints what each one receives.
//
//   trustgate-demo [config/trustgate.json]

#include <filesystem>
#include <iostream>

#include "trustgate/gateway.hpp"

using namespace trustgate;

namespace {

struct Caller {
  const char* label;
  ChatRequest base;
};

}  // namespace

int main(int argc, char** argv) {
  std::string path = argc > 1 ? argv[1] : "config/trustgate.json";
  Config cfg;
  try {
    cfg = load_config(path);
  } catch (const ConfigError& e) {
    std::cerr << path << ": " << e.key() << ": " << e.what() << '\n';
    return 1;
  }
  auto audit = std::filesystem::temp_directory_path() / "trustgate-demo-audit.jsonl";
  std::filesystem::remove(audit);
  cfg.audit_path = audit.string();
  cfg.noise_seed = 7;
  Gateway gw(cfg);

  const Caller callers[] = {
      {"guest, public network, password",
       {"gus", "general", "", NetworkZone::Public, DevicePosture::Unknown, AuthStrength::Password}},
      {"analyst, public network, password",
       {"sam", "billing", "", NetworkZone::Public, DevicePosture::Unmanaged, AuthStrength::Password}},
      {"nurse, vpn, managed device, mfa",
       {"nina", "treatment", "", NetworkZone::Vpn, DevicePosture::Managed, AuthStrength::Mfa}},
      {"clinician, trusted network, mfa",
       {"alice", "diagnosis", "", NetworkZone::Trusted, DevicePosture::Managed, AuthStrength::Mfa}},
  };

  for (const char* prompt : {"discharge summary", "billing record", "ward status"}) {
    std::cout << "=== prompt: " << prompt << " ===\n";
    for (const auto& c : callers) {
      ChatRequest req = c.base;
      req.prompt = prompt;
      auto res = gw.handle_completion(req);
      std::cout << "-- " << c.label << '\n';
      if (!res.response) {
        std::cout << "   HTTP " << res.status << ": " << res.error << '\n';
        continue;
      }
      const auto& r = *res.response;
      std::cout << "   tier " << r.trust_tier << ", level " << to_string(r.sensitivity_level)
                << ", actions";
      for (const auto& a : r.actions) std::cout << ' ' << a;
      std::cout << "\n   " << r.text << '\n';
    }
    std::cout << '\n';
  }
  std::cout << "audit records written to " << audit.string() << '\n';
  return 0;
}
