#pragma once

#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>

#include <httplib.h>
// httplib drags in <resolv.h>, whose _res macro breaks Eigen parameter names
#ifdef _res
#undef _res
#endif
#include <json.hpp>

#include "qmra/errors.hpp"
#include "qmra/solvers.hpp"

namespace qmra {

/// Remote annealer-style job endpoint. The URL and token default to the
/// QMRA_ANNEALER_URL / QMRA_ANNEALER_TOKEN environment variables.
struct RemoteConfig {
  std::string url;
  std::string token;
  int reads = 100;
  int max_retries = 3;
  int backoff_initial_ms = 100;
  int timeout_s = 30;
};

inline RemoteConfig remote_config_from_env() {
  RemoteConfig cfg;
  if (const char* url = std::getenv("QMRA_ANNEALER_URL")) cfg.url = url;
  if (const char* token = std::getenv("QMRA_ANNEALER_TOKEN")) cfg.token = token;
  return cfg;
}

/// Submits the QUBO to POST <url>/solve and ingests the returned samples.
/// Server energies are recomputed locally; disagreements beyond 1e-6 are
/// counted into *energy_mismatches and the local value wins.
inline SampleSet solve_remote(const BinaryQubo& qubo, const RemoteConfig& cfg,
                              int* energy_mismatches = nullptr) {
  if (cfg.url.empty()) {
    throw CredentialError("solve_remote: no endpoint URL configured "
                          "(set QMRA_ANNEALER_URL)");
  }

  nlohmann::json payload = qubo_to_json(qubo);
  payload["num_reads"] = cfg.reads;
  const std::string body = payload.dump();

  httplib::Client client(cfg.url);
  client.set_connection_timeout(cfg.timeout_s, 0);
  client.set_read_timeout(cfg.timeout_s, 0);
  httplib::Headers headers;
  if (!cfg.token.empty()) {
    headers.emplace("Authorization", "Bearer " + cfg.token);
  }

  httplib::Result res;
  int backoff = cfg.backoff_initial_ms;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
      backoff *= 2;
    }
    res = client.Post("/solve", headers, body, "application/json");
    if (res) break;
  }
  if (!res) {
    throw TransportError("solve_remote: " + cfg.url +
                         " unreachable after " +
                         std::to_string(cfg.max_retries) + " retries");
  }
  if (res->status == 401 || res->status == 403) {
    throw CredentialError("solve_remote: endpoint rejected credentials (HTTP " +
                          std::to_string(res->status) + ")");
  }
  if (res->status != 200) {
    throw ProtocolError("solve_remote: unexpected HTTP status " +
                        std::to_string(res->status));
  }

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error& err) {
    throw ProtocolError(std::string("solve_remote: response is not JSON: ") +
                        err.what());
  }
  if (!doc.contains("samples") || !doc["samples"].is_array() ||
      doc["samples"].empty()) {
    throw ProtocolError("solve_remote: response lacks a 'samples' array");
  }

  int mismatches = 0;
  std::vector<std::pair<std::vector<std::uint8_t>, long>> raw;
  for (const auto& js : doc["samples"]) {
    if (!js.is_object() || !js.contains("bits") || !js.contains("energy")) {
      throw ProtocolError("solve_remote: sample entries need bits and energy");
    }
    const std::string bitstring = js["bits"].get<std::string>();
    if (static_cast<int>(bitstring.size()) != qubo.dim()) {
      throw ProtocolError("solve_remote: sample bit length " +
                          std::to_string(bitstring.size()) +
                          " != problem dimension " +
                          std::to_string(qubo.dim()));
    }
    std::vector<std::uint8_t> bits(qubo.dim());
    for (int i = 0; i < qubo.dim(); ++i) {
      if (bitstring[i] != '0' && bitstring[i] != '1') {
        throw ProtocolError("solve_remote: non-binary character in bits");
      }
      bits[i] = bitstring[i] == '1';
    }
    const long count = js.contains("count") ? js["count"].get<long>() : 1;
    if (std::abs(js["energy"].get<double>() - energy(qubo, bits)) > 1e-6) {
      ++mismatches;
    }
    raw.emplace_back(std::move(bits), count);
  }
  if (energy_mismatches) *energy_mismatches += mismatches;
  return ingest_samples(qubo, std::move(raw));
}

inline Sampler make_remote_sampler(RemoteConfig cfg,
                                   int* energy_mismatches = nullptr) {
  return [cfg, energy_mismatches](const BinaryQubo& qubo, std::uint64_t) {
    return solve_remote(qubo, cfg, energy_mismatches);
  };
}

}  // namespace qmra
