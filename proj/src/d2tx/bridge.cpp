// Copyright 2026 The d2tx Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "d2tx/bridge.hpp"

#include <cmath>

#include "d2tx/error.hpp"
#include "d2tx/text.hpp"

namespace d2tx::bridge {

void validate_embedding(const EmbeddingView& view, std::size_t expected_tokens) {
  const std::size_t n = view.tokens.size();
  if (n != expected_tokens) {
    throw ProtocolError("embedding covers " + std::to_string(n) + " tokens, expected " +
                        std::to_string(expected_tokens));
  }
  if (n == 0) throw ProtocolError("embedding has no tokens");
  if (view.vectors.rows() != n) throw ProtocolError("vector rows do not match token count");
  if (view.vectors.cols() == 0) throw ProtocolError("embedding dimension is zero");
  if (view.attention.rows() != n || view.attention.cols() != n) {
    throw ProtocolError("attention matrix is not n x n");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (double v : view.vectors.row(i)) {
      if (!std::isfinite(v)) throw ProtocolError("non-finite embedding value");
    }
    double sum = 0.0;
    for (double a : view.attention.row(i)) {
      if (!std::isfinite(a) || a < 0.0) throw ProtocolError("invalid attention weight");
      sum += a;
    }
    if (std::abs(sum - 1.0) > 1e-4) {
      throw ProtocolError("attention row " + std::to_string(i) + " sums to " +
                          std::to_string(sum));
    }
  }
}

void parse_bridge_spec(std::string_view spec, BridgeConfig& config) {
  if (spec == "mock") {
    config.transport = Transport::kMock;
    config.endpoint.clear();
  } else if (text::starts_with(spec, "stdio:")) {
    config.transport = Transport::kSubprocess;
    config.endpoint = std::string(spec.substr(6));
  } else if (text::starts_with(spec, "tcp:")) {
    config.transport = Transport::kTcp;
    config.endpoint = std::string(spec.substr(4));
  } else {
    throw InvalidArgument("bridge must be 'mock', 'stdio:<command>' or 'tcp:<host>:<port>'");
  }
  if (config.transport != Transport::kMock && config.endpoint.empty()) {
    throw InvalidArgument("bridge endpoint is empty");
  }
}

namespace protocol {

Json candidates_request(std::uint64_t id, const std::vector<std::string>& tokens,
                        std::size_t target_index, double dropout,
                        corpus::Language language) {
  Json j;
  j["id"] = id;
  j["task"] = "candidates";
  j["tokens"] = tokens;
  j["target_index"] = target_index;
  j["dropout"] = dropout;
  j["language"] = std::string(corpus::to_string(language));
  return j;
}

Json embed_request(std::uint64_t id, const std::vector<std::string>& tokens,
                   corpus::Language language) {
  Json j;
  j["id"] = id;
  j["task"] = "embed";
  j["tokens"] = tokens;
  j["language"] = std::string(corpus::to_string(language));
  return j;
}

Json translate_request(std::uint64_t id, std::string_view prompt) {
  Json j;
  j["id"] = id;
  j["task"] = "translate";
  j["prompt"] = std::string(prompt);
  return j;
}

namespace {

const Json& checked_result(const Json& reply, std::uint64_t id) {
  if (!reply.is_object()) throw ProtocolError("reply is not a JSON object");
  if (!reply.contains("id") || !reply["id"].is_number_unsigned()) {
    throw ProtocolError("reply has no unsigned 'id'");
  }
  if (reply["id"].get<std::uint64_t>() != id) {
    throw ProtocolError("reply id " + std::to_string(reply["id"].get<std::uint64_t>()) +
                        " does not match request id " + std::to_string(id));
  }
  if (!reply.contains("ok") || !reply["ok"].is_boolean()) {
    throw ProtocolError("reply has no boolean 'ok'");
  }
  if (!reply["ok"].get<bool>()) {
    if (!reply.contains("error") || !reply["error"].is_string()) {
      throw ProtocolError("failed reply has no 'error' string");
    }
    throw BridgeError("adapter error: " + reply["error"].get<std::string>());
  }
  if (!reply.contains("result")) throw ProtocolError("reply has no 'result'");
  return reply["result"];
}

Matrix read_matrix(const Json& j, std::string_view name) {
  if (!j.is_array() || j.empty()) {
    throw ProtocolError(std::string(name) + " must be a non-empty array");
  }
  std::size_t cols = 0;
  for (const auto& row : j) {
    if (!row.is_array()) throw ProtocolError(std::string(name) + " row is not an array");
    if (cols == 0) cols = row.size();
    if (row.size() != cols || cols == 0) {
      throw ProtocolError(std::string(name) + " rows have inconsistent length");
    }
  }
  Matrix m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw ProtocolError(std::string(name) + " value is not a number");
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

}  // namespace

std::vector<RawCandidate> read_candidates(const Json& reply, std::uint64_t id) {
  const auto& result = checked_result(reply, id);
  if (!result.is_array()) throw ProtocolError("candidates result must be an array");
  std::vector<RawCandidate> out;
  for (const auto& c : result) {
    if (!c.is_object() || !c.contains("token") || !c["token"].is_string() ||
        !c.contains("score") || !c["score"].is_number()) {
      throw ProtocolError("candidate must be {\"token\": str, \"score\": num}");
    }
    auto token = c["token"].get<std::string>();
    if (token.empty()) throw ProtocolError("candidate token is empty");
    double score = c["score"].get<double>();
    if (!std::isfinite(score)) throw ProtocolError("candidate score is not finite");
    out.push_back({std::move(token), score});
  }
  return out;
}

EmbeddingView read_embedding(const Json& reply, std::uint64_t id,
                             std::size_t expected_tokens) {
  const auto& result = checked_result(reply, id);
  if (!result.is_object() || !result.contains("tokens") || !result.contains("vectors") ||
      !result.contains("attention")) {
    throw ProtocolError("embed result must have tokens, vectors and attention");
  }
  EmbeddingView view;
  if (!result["tokens"].is_array()) throw ProtocolError("embed tokens must be an array");
  for (const auto& t : result["tokens"]) {
    if (!t.is_string()) throw ProtocolError("embed token is not a string");
    view.tokens.push_back(t.get<std::string>());
  }
  view.vectors = read_matrix(result["vectors"], "vectors");
  view.attention = read_matrix(result["attention"], "attention");
  validate_embedding(view, expected_tokens);
  return view;
}

std::string read_translation(const Json& reply, std::uint64_t id) {
  const auto& result = checked_result(reply, id);
  if (!result.is_object() || !result.contains("text") || !result["text"].is_string()) {
    throw ProtocolError("translate result must be {\"text\": str}");
  }
  return text::trim(result["text"].get<std::string>());
}

void validate_reply(const Json& request, const Json& reply) {
  if (!request.is_object() || !request.contains("id") || !request.contains("task")) {
    throw ProtocolError("request must carry id and task");
  }
  auto id = request["id"].get<std::uint64_t>();
  auto task = request["task"].get<std::string>();
  if (reply.is_object() && reply.contains("ok") && reply["ok"].is_boolean() &&
      !reply["ok"].get<bool>()) {
    try {
      checked_result(reply, id);
    } catch (const BridgeError&) {
      return;  // a well-formed error reply is schema-valid
    }
  }
  if (task == "candidates") {
    read_candidates(reply, id);
  } else if (task == "embed") {
    read_embedding(reply, id, request.at("tokens").size());
  } else if (task == "translate") {
    read_translation(reply, id);
  } else {
    throw ProtocolError("unknown task '" + task + "'");
  }
}

}  // namespace protocol

BridgeClient::BridgeClient(std::unique_ptr<Channel> channel, BridgeConfig config)
    : channel_(std::move(channel)), config_(std::move(config)) {}

Json BridgeClient::exchange(const Json& request) {
  auto timeout = std::chrono::milliseconds(
      static_cast<long long>(std::max(0.001, config_.timeout_seconds) * 1000.0));
  std::string line = channel_->roundtrip(request.dump(), timeout);
  try {
    return Json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("reply is not valid JSON: ") + e.what());
  }
}

std::vector<RawCandidate> BridgeClient::request_candidates(
    const std::vector<std::string>& tokens, std::size_t target_index) {
  if (target_index >= tokens.size()) {
    throw InvalidArgument("target index " + std::to_string(target_index) +
                          " out of range for " + std::to_string(tokens.size()) + " tokens");
  }
  auto id = next_id_++;
  auto reply = exchange(protocol::candidates_request(id, tokens, target_index,
                                                     config_.dropout, config_.language));
  return protocol::read_candidates(reply, id);
}

EmbeddingView BridgeClient::request_embedding(const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw InvalidArgument("cannot embed an empty token list");
  auto id = next_id_++;
  auto reply = exchange(protocol::embed_request(id, tokens, config_.language));
  return protocol::read_embedding(reply, id, tokens.size());
}

std::string BridgeClient::request_translation(std::string_view prompt) {
  if (prompt.empty()) throw InvalidArgument("empty prompt");
  auto id = next_id_++;
  auto reply = exchange(protocol::translate_request(id, prompt));
  return protocol::read_translation(reply, id);
}

std::unique_ptr<BridgeClient> connect(const BridgeConfig& config) {
  std::unique_ptr<Channel> channel;
  switch (config.transport) {
    case Transport::kMock:
      channel = open_mock_channel(config);
      break;
    case Transport::kSubprocess:
      channel = open_subprocess_channel(config.endpoint);
      break;
    case Transport::kTcp:
      channel = open_tcp_channel(config.endpoint);
      break;
  }
  return std::make_unique<BridgeClient>(std::move(channel), config);
}

BridgeFactory make_factory(const BridgeConfig& config) {
  return [config] { return connect(config); };
}

}  // namespace d2tx::bridge
