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

// Serves the deterministic mock adapter over stdin/stdout, one JSON request
// per line, for exercising the subprocess transport.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "d2tx/mock_adapter.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Mock model adapter speaking the d2tx line protocol"};
  std::uint64_t seed = 0;
  std::string fixture;
  app.add_option("--seed", seed, "Embedding hash seed");
  app.add_option("--fixture", fixture, "JSON fixture with extra lexicon and translations")
      ->check(CLI::ExistingFile);
  CLI11_PARSE(app, argc, argv);

  d2tx::bridge::MockAdapter adapter(seed);
  try {
    if (!fixture.empty()) adapter.load_fixture(fixture);
  } catch (const std::exception& e) {
    std::cout << R"({"id":null,"ok":false,"error":{"code":"load","message":")" << e.what()
              << "\"}}" << std::endl;
    return 2;
  }
  std::ios::sync_with_stdio(false);
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    std::cout << adapter.handle_line(line) << '\n' << std::flush;
  }
  return 0;
}
