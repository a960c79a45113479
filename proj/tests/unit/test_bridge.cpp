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


#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <thread>

#include "d2tx/bridge.hpp"
#include "d2tx/corpus_io.hpp"
#include "d2tx/error.hpp"
#include "d2tx/mock_adapter.hpp"
#include "d2tx/text.hpp"

using namespace d2tx;
using namespace d2tx::bridge;

namespace {

const std::filesystem::path kData = D2TX_TEST_DATA;

std::unique_ptr<BridgeClient> mock_client(std::uint64_t seed = 0) {
  BridgeConfig c;
  c.mock_seed = seed;
  return connect(c);
}

// Replies with a fixed line, whatever the request.
class CannedChannel : public Channel {
 public:
  explicit CannedChannel(std::string reply) : reply_(std::move(reply)) {}
  std::string roundtrip(const std::string&, std::chrono::milliseconds) override { return reply_; }

 private:
  std::string reply_;
};

BridgeClient canned(const std::string& reply) {
  return BridgeClient(std::make_unique<CannedChannel>(reply), BridgeConfig{});
}

TEST(BridgeSpec, Parses) {
  BridgeConfig c;
  parse_bridge_spec("stdio:python3 adapter.py", c);
  EXPECT_EQ(c.transport, Transport::kSubprocess);
  EXPECT_EQ(c.endpoint, "python3 adapter.py");
  parse_bridge_spec("tcp:127.0.0.1:9000", c);
  EXPECT_EQ(c.transport, Transport::kTcp);
  EXPECT_THROW(parse_bridge_spec("http://x", c), InvalidArgument);
  EXPECT_THROW(parse_bridge_spec("tcp:", c), InvalidArgument);
  EXPECT_DOUBLE_EQ(BridgeConfig{}.dropout, 0.2);
}

TEST(Mock, WeatherCandidates) {
  auto c = mock_client();
  auto cands = c->request_candidates({"the", "weather", "is", "mild"}, 1);
  ASSERT_GE(cands.size(), 2u);
  EXPECT_EQ(cands[0].token, "air");
  EXPECT_EQ(cands[1].token, "climate");
  EXPECT_TRUE(c->request_candidates({"zzz"}, 0).empty());
  EXPECT_THROW(c->request_candidates({"a"}, 1), InvalidArgument);
}

TEST(Mock, EmbeddingInvariants) {
  auto c = mock_client();
  auto v = c->request_embedding({"a", "b", "c"});
  ASSERT_EQ(v.vectors.rows(), 3u);
  EXPECT_EQ(v.vectors.cols(), MockAdapter::kDimension);
  for (std::size_t i = 0; i < 3; ++i) {
    double norm = 0, row = 0;
    for (double x : v.vectors.row(i)) norm += x * x;
    for (std::size_t t = 0; t < 3; ++t) {
      EXPECT_DOUBLE_EQ(v.attention(i, t), 1.0 / 3.0);
      row += v.attention(i, t);
    }
    EXPECT_NEAR(std::sqrt(norm), 1.0, 1e-12);
    EXPECT_NEAR(row, 1.0, 1e-12);
  }
  auto one = c->request_embedding({"x"});
  EXPECT_DOUBLE_EQ(one.attention(0, 0), 1.0);
  EXPECT_THROW(c->request_embedding({}), InvalidArgument);
}

TEST(Mock, SeedChangesVectorsOnly) {
  MockAdapter a(0), b(0), c(7);
  EXPECT_EQ(a.token_vector("pub"), b.token_vector("pub"));
  EXPECT_NE(a.token_vector("pub"), c.token_vector("pub"));
}

TEST(Mock, DeterministicReplies) {
  MockAdapter a(3), b(3);
  std::string req = R"({"id":5,"task":"embed","tokens":["It","rains","."],"language":"en"})";
  EXPECT_EQ(a.handle_line(req), b.handle_line(req));
  EXPECT_EQ(a.handle_line(req), a.handle_line(req));
}

TEST(Mock, Translations) {
  auto c = mock_client();
  EXPECT_EQ(c->request_translation("translate English to Data: It rains."),
            "weatherType @SEP@ rain");
  EXPECT_EQ(c->request_translation("Verbalize: a @SEP@ b"), "The a is b.");
  EXPECT_THROW(c->request_translation(""), InvalidArgument);
}

TEST(Mock, FixtureOverridesLexicon) {
  BridgeConfig cfg;
  cfg.mock_fixture = (kData / "mock_fixture.json").string();
  auto c = connect(cfg);
  auto cands = c->request_candidates({"Preston"}, 0);
  ASSERT_EQ(cands.size(), 2u);
  EXPECT_EQ(cands[1].token, "Leeds");
  EXPECT_EQ(c->request_translation("translate English to Data: Wildwood is a pub."),
            "name @SEP@ Wildwood @EOF@ eatType @SEP@ pub");
}

TEST(Protocol, GoldenTranscript) {
  auto lines = text::split(corpus::read_file(kData / "protocol_golden.jsonl"), "\n");
  MockAdapter adapter(0);
  std::size_t pairs = 0;
  for (std::size_t i = 0; i + 1 < lines.size(); i += 2) {
    if (lines[i].empty()) break;
    EXPECT_EQ(adapter.handle_line(lines[i]), lines[i + 1]) << lines[i];
    auto req = Json::parse(lines[i]);
    auto reply = Json::parse(lines[i + 1]);
    EXPECT_NO_THROW(protocol::validate_reply(req, reply));
    ++pairs;
  }
  EXPECT_GE(pairs, 5u);
}

TEST(Protocol, RequestShapes) {
  auto r = protocol::candidates_request(3, {"a", "b"}, 1, 0.2, corpus::Language::kNl);
  EXPECT_EQ(r.dump(),
            R"({"id":3,"task":"candidates","tokens":["a","b"],"target_index":1,"dropout":0.2,"language":"nl"})");
  EXPECT_EQ(protocol::translate_request(1, "p").dump(), R"({"id":1,"task":"translate","prompt":"p"})");
}

TEST(Protocol, MalformedRepliesAreRejected) {
  auto req = protocol::embed_request(1, {"a", "b"}, corpus::Language::kEn);
  auto bad = [&](const char* s) {
    EXPECT_THROW(protocol::validate_reply(req, Json::parse(s)), ProtocolError) << s;
  };
  bad(R"({"id":2,"ok":true,"result":{}})");
  bad(R"({"id":1,"result":{}})");
  bad(R"({"id":1,"ok":true})");
  bad(R"({"id":1,"ok":false})");
  bad(R"({"id":1,"ok":true,"result":{"tokens":["a","b"],"vectors":[[1],[1]],"attention":[[0.5,0.5]]}})");
  bad(R"({"id":1,"ok":true,"result":{"tokens":["a","b"],"vectors":[[1],[1]],"attention":[[0.5,0.6],[0.5,0.5]]}})");
  bad(R"({"id":1,"ok":true,"result":{"tokens":["a"],"vectors":[[1]],"attention":[[1]]}})");
  bad(R"({"id":1,"ok":true,"result":{"tokens":["a","b"],"vectors":[[1],[1,2]],"attention":[[0.5,0.5],[0.5,0.5]]}})");
  EXPECT_NO_THROW(protocol::validate_reply(req, Json::parse(R"({"id":1,"ok":false,"error":"busy"})")));
  EXPECT_NO_THROW(protocol::validate_reply(
      req, Json::parse(R"({"id":1,"ok":true,"result":{"tokens":["a","b"],"vectors":[[1],[1]],"attention":[[0.5,0.5],[0.25,0.75]]}})")));
  auto creq = protocol::candidates_request(4, {"a"}, 0, 0.2, corpus::Language::kEn);
  EXPECT_THROW(protocol::validate_reply(creq, Json::parse(R"({"id":4,"ok":true,"result":[{"token":""}]})")),
               ProtocolError);
  EXPECT_NO_THROW(protocol::validate_reply(creq, Json::parse(R"({"id":4,"ok":true,"result":[]})")));
}

TEST(Client, ErrorReplyBecomesBridgeError) {
  auto c = canned(R"({"id":1,"ok":false,"error":"model not loaded"})");
  EXPECT_THROW(c.request_translation("x"), BridgeError);
}

TEST(Client, NonJsonReplyIsProtocolError) {
  auto c = canned("hello");
  EXPECT_THROW(c.request_translation("x"), ProtocolError);
}

TEST(Client, TranslationIsTrimmed) {
  auto c = canned(R"({"id":1,"ok":true,"result":{"text":"  a @SEP@ b \n"}})");
  EXPECT_EQ(c.request_translation("x"), "a @SEP@ b");
}

TEST(Transport, SubprocessAdapter) {
  BridgeConfig cfg;
  cfg.transport = Transport::kSubprocess;
  cfg.endpoint = std::string(D2TX_MOCK_ADAPTER_BIN) + " --seed 0";
  auto c = connect(cfg);
  auto direct = mock_client();
  auto a = c->request_embedding({"The", "weather", "."});
  auto b = direct->request_embedding({"The", "weather", "."});
  EXPECT_EQ(a.vectors, b.vectors);
  EXPECT_EQ(c->request_candidates({"weather"}, 0), direct->request_candidates({"weather"}, 0));
  EXPECT_EQ(c->request_translation("translate English to Data: It rains."),
            "weatherType @SEP@ rain");
}

TEST(Transport, SubprocessTimeout) {
  BridgeConfig cfg;
  cfg.transport = Transport::kSubprocess;
  cfg.endpoint = "sleep 5";
  cfg.timeout_seconds = 0.2;
  auto c = connect(cfg);
  auto t0 = std::chrono::steady_clock::now();
  EXPECT_THROW(c->request_translation("x"), BridgeError);
  EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(3));
}

TEST(Transport, SubprocessExitIsBridgeError) {
  BridgeConfig cfg;
  cfg.transport = Transport::kSubprocess;
  cfg.endpoint = "true";
  auto c = connect(cfg);
  EXPECT_THROW(c->request_translation("x"), BridgeError);
}

class LineServer {
 public:
  LineServer() {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    ::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    ::listen(fd_, 1);
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    thread_ = std::thread([this] { serve(); });
  }
  ~LineServer() {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    thread_.join();
  }
  int port() const { return port_; }

 private:
  void serve() {
    int conn = ::accept(fd_, nullptr, nullptr);
    if (conn < 0) return;
    MockAdapter adapter(0);
    std::string buf;
    char chunk[4096];
    while (true) {
      ssize_t n = ::read(conn, chunk, sizeof chunk);
      if (n <= 0) break;
      buf.append(chunk, static_cast<std::size_t>(n));
      std::size_t nl;
      while ((nl = buf.find('\n')) != std::string::npos) {
        auto reply = adapter.handle_line(buf.substr(0, nl)) + "\n";
        buf.erase(0, nl + 1);
        if (::write(conn, reply.data(), reply.size()) < 0) break;
      }
    }
    ::close(conn);
  }

  int fd_ = -1;
  int port_ = 0;
  std::thread thread_;
};

TEST(Transport, TcpAdapter) {
  LineServer server;
  BridgeConfig cfg;
  cfg.transport = Transport::kTcp;
  cfg.endpoint = "127.0.0.1:" + std::to_string(server.port());
  {
    auto c = connect(cfg);
    EXPECT_EQ(c->request_translation("Verbalize: food @SEP@ Thai"), "The food is Thai.");
    EXPECT_EQ(c->request_candidates({"the", "weather"}, 1)[0].token, "air");
  }
}

TEST(Transport, TcpRefused) {
  BridgeConfig cfg;
  cfg.transport = Transport::kTcp;
  cfg.endpoint = "127.0.0.1:1";
  EXPECT_THROW(connect(cfg), BridgeError);
}

}  // namespace
