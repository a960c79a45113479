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

#ifndef D2TX_BRIDGE_HPP_
#define D2TX_BRIDGE_HPP_

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "d2tx/corpus.hpp"
#include "d2tx/json.hpp"

// Client side of the model adapter protocol: newline-delimited JSON, one
// request in flight per connection.
//
// Requests:
//   {"id": u64, "task": "candidates", "tokens": [...], "target_index": k,
//    "dropout": p, "language": "en"|"nl"}
//   {"id": u64, "task": "embed", "tokens": [...], "language": "en"|"nl"}
//   {"id": u64, "task": "translate", "prompt": "..."}
// Replies:
//   {"id": u64, "ok": true, "result": ...}
//   {"id": u64, "ok": false, "error": "..."}
// with result shapes
//   candidates: [{"token": str, "score": num}, ...]
//   embed:      {"tokens": [...], "vectors": [[num]*d]*n, "attention": [[num]*n]*n}
//   translate:  {"text": str}
namespace d2tx::bridge {

// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Per-token contextual vectors plus the head/layer-averaged self-attention
// profile; attention(i, t) is the attention from token i to token t.
struct EmbeddingView {
  std::vector<std::string> tokens;
  Matrix vectors;    // n x d
  Matrix attention;  // n x n, rows sum to 1
};

// Throws ProtocolError when any invariant does not hold.
void validate_embedding(const EmbeddingView& view, std::size_t expected_tokens);

struct RawCandidate {
  std::string token;
  double provider_score = 0.0;
  friend bool operator==(const RawCandidate&, const RawCandidate&) = default;
};

enum class Transport { kMock, kSubprocess, kTcp };

struct BridgeConfig {
  Transport transport = Transport::kMock;
  // Command line for kSubprocess, "host:port" for kTcp.
  std::string endpoint;
  double timeout_seconds = 30.0;
  double dropout = 0.2;
  corpus::Language language = corpus::Language::kEn;
  // Mock only: hash seed for embeddings and an optional JSON fixture with
  // extra "lexicon" and "translations" entries.
  std::uint64_t mock_seed = 0;
  std::string mock_fixture;
};

// Parses "mock", "stdio:<command>" or "tcp:<host>:<port>" into `config`.
void parse_bridge_spec(std::string_view spec, BridgeConfig& config);

// A line-oriented connection to an adapter.
class Channel {
 public:
  virtual ~Channel() = default;
  // Sends one line (without the newline) and returns the reply line. Throws
  // BridgeError on timeout, EOF or I/O failure.
  virtual std::string roundtrip(const std::string& line,
                                std::chrono::milliseconds timeout) = 0;
};

std::unique_ptr<Channel> open_subprocess_channel(const std::string& command);
std::unique_ptr<Channel> open_tcp_channel(const std::string& host_port);
std::unique_ptr<Channel> open_mock_channel(const BridgeConfig& config);

// Protocol encoding and reply validation, shared with tests and golden
// transcripts.
namespace protocol {
Json candidates_request(std::uint64_t id, const std::vector<std::string>& tokens,
                        std::size_t target_index, double dropout,
                        corpus::Language language);
Json embed_request(std::uint64_t id, const std::vector<std::string>& tokens,
                   corpus::Language language);
Json translate_request(std::uint64_t id, std::string_view prompt);

// Each throws ProtocolError for schema violations and BridgeError for a
// well-formed {"ok": false} reply.
std::vector<RawCandidate> read_candidates(const Json& reply, std::uint64_t id);
EmbeddingView read_embedding(const Json& reply, std::uint64_t id,
                             std::size_t expected_tokens);
std::string read_translation(const Json& reply, std::uint64_t id);

// Validates `reply` against the request that produced it.
void validate_reply(const Json& request, const Json& reply);
}  // namespace protocol

// Not thread-safe; use one client per worker.
class BridgeClient {
 public:
  BridgeClient(std::unique_ptr<Channel> channel, BridgeConfig config);

  std::vector<RawCandidate> request_candidates(const std::vector<std::string>& tokens,
                                               std::size_t target_index);
  EmbeddingView request_embedding(const std::vector<std::string>& tokens);
  std::string request_translation(std::string_view prompt);

  const BridgeConfig& config() const { return config_; }

 private:
  Json exchange(const Json& request);

  std::unique_ptr<Channel> channel_;
  BridgeConfig config_;
  std::uint64_t next_id_ = 1;
};

std::unique_ptr<BridgeClient> connect(const BridgeConfig& config);

using BridgeFactory = std::function<std::unique_ptr<BridgeClient>()>;
BridgeFactory make_factory(const BridgeConfig& config);

}  // namespace d2tx::bridge

#endif  // D2TX_BRIDGE_HPP_
