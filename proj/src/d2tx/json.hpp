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

#ifndef D2TX_JSON_HPP_
#define D2TX_JSON_HPP_

#include <json.hpp>

namespace d2tx {

// Insertion-ordered so that serialized files are byte-stable and readable.
using Json = nlohmann::ordered_json;

}  // namespace d2tx

#endif  // D2TX_JSON_HPP_
