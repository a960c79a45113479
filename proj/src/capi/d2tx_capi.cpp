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

#include "d2tx/d2tx.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "d2tx/corpus.hpp"
#include "d2tx/corpus_io.hpp"
#include "d2tx/datalang.hpp"
#include "d2tx/error.hpp"
#include "d2tx/pipeline.hpp"
#include "d2tx/quality.hpp"
#include "d2tx/stats.hpp"

struct d2tx_config {
  d2tx::pipeline::Config config;
};

struct d2tx_result {
  std::string output;
  std::vector<std::string> warnings;
  std::vector<std::string> files;
};

struct d2tx_mr {
  d2tx::corpus::MR mr;
};

struct d2tx_corpus {
  d2tx::corpus::Corpus corpus;
};

namespace {

thread_local std::string g_last_error;

d2tx_status status_of(d2tx::ErrorCode code) {
  switch (code) {
    case d2tx::ErrorCode::kInvalidArgument: return D2TX_E_INVALID_ARGUMENT;
    case d2tx::ErrorCode::kParse: return D2TX_E_PARSE;
    case d2tx::ErrorCode::kIo: return D2TX_E_IO;
    case d2tx::ErrorCode::kBridge: return D2TX_E_BRIDGE;
    case d2tx::ErrorCode::kProtocol: return D2TX_E_PROTOCOL;
    case d2tx::ErrorCode::kNotFound: return D2TX_E_NOT_FOUND;
    case d2tx::ErrorCode::kValidation: return D2TX_E_VALIDATION;
    case d2tx::ErrorCode::kRuntime: return D2TX_E_RUNTIME;
  }
  return D2TX_E_INTERNAL;
}

d2tx_status fail(d2tx_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <class F>
d2tx_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return D2TX_OK;
  } catch (const d2tx::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(D2TX_E_INTERNAL, "out of memory");
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(D2TX_E_IO, e.what());
  } catch (const std::exception& e) {
    return fail(D2TX_E_INTERNAL, e.what());
  } catch (...) {
    return fail(D2TX_E_INTERNAL, "unknown error");
  }
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void require(bool condition, const char* message) {
  if (!condition) throw d2tx::InvalidArgument(message);
}

// Enum names passed as arguments are caller errors, not malformed data.
template <class F>
auto argument(F&& parse) {
  try {
    return parse();
  } catch (const d2tx::ParseError& e) {
    throw d2tx::InvalidArgument(e.what());
  }
}

}  // namespace

extern "C" {

const char* d2tx_last_error(void) { return g_last_error.c_str(); }

const char* d2tx_status_name(d2tx_status status) {
  switch (status) {
    case D2TX_OK: return "ok";
    case D2TX_E_INVALID_ARGUMENT: return "invalid argument";
    case D2TX_E_PARSE: return "parse error";
    case D2TX_E_IO: return "i/o error";
    case D2TX_E_BRIDGE: return "bridge error";
    case D2TX_E_PROTOCOL: return "protocol error";
    case D2TX_E_NOT_FOUND: return "not found";
    case D2TX_E_VALIDATION: return "validation error";
    case D2TX_E_RUNTIME: return "runtime error";
    case D2TX_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

int d2tx_exit_code(d2tx_status status) {
  switch (status) {
    case D2TX_OK: return 0;
    case D2TX_E_INVALID_ARGUMENT:
    case D2TX_E_PARSE:
    case D2TX_E_NOT_FOUND:
    case D2TX_E_VALIDATION: return 1;
    default: return 2;
  }
}

const char* d2tx_version(void) { return "0.1.0"; }

void d2tx_string_free(char* s) { std::free(s); }

d2tx_status d2tx_config_new(d2tx_config** out) {
  return guarded([&] {
    require(out != nullptr, "out is NULL");
    *out = new d2tx_config();
  });
}

void d2tx_config_free(d2tx_config* config) { delete config; }

d2tx_status d2tx_config_load_file(d2tx_config* config, const char* path) {
  return guarded([&] {
    require(config && path, "config and path are required");
    config->config.load_file(path);
  });
}

d2tx_status d2tx_config_set(d2tx_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config && key && value, "config, key and value are required");
    config->config.set(key, value);
  });
}

d2tx_status d2tx_config_get(const d2tx_config* config, const char* key, char** out) {
  return guarded([&] {
    require(config && key && out, "config, key and out are required");
    auto v = config->config.get(key);
    if (!v) throw d2tx::NotFoundError(std::string("setting '") + key + "' is not set");
    *out = duplicate(*v);
  });
}

int d2tx_config_is_known_key(const char* key) {
  return key && d2tx::pipeline::Config::is_known_key(key) ? 1 : 0;
}

d2tx_status d2tx_run(const char* command, const d2tx_config* config, d2tx_result** out) {
  return guarded([&] {
    require(command && config && out, "command, config and out are required");
    auto r = d2tx::pipeline::run_command(command, config->config);
    auto res = std::make_unique<d2tx_result>();
    res->output = std::move(r.output);
    res->warnings = std::move(r.warnings);
    for (const auto& f : r.written) res->files.push_back(f.string());
    *out = res.release();
  });
}

const char* d2tx_result_output(const d2tx_result* result) {
  return result ? result->output.c_str() : "";
}

size_t d2tx_result_warning_count(const d2tx_result* result) {
  return result ? result->warnings.size() : 0;
}

const char* d2tx_result_warning(const d2tx_result* result, size_t index) {
  if (!result || index >= result->warnings.size()) return nullptr;
  return result->warnings[index].c_str();
}

size_t d2tx_result_file_count(const d2tx_result* result) {
  return result ? result->files.size() : 0;
}

const char* d2tx_result_file(const d2tx_result* result, size_t index) {
  if (!result || index >= result->files.size()) return nullptr;
  return result->files[index].c_str();
}

void d2tx_result_free(d2tx_result* result) { delete result; }

d2tx_status d2tx_mr_parse_datalang(const char* datastring, const char* shape, d2tx_mr** out,
                                   size_t* warnings) {
  return guarded([&] {
    require(datastring && shape && out, "datastring, shape and out are required");
    auto report = d2tx::datalang::parse_datalang(
        datastring, argument([&] { return d2tx::corpus::parse_shape(shape); }));
    if (warnings) *warnings = report.warnings.size();
    *out = new d2tx_mr{std::move(report.mr)};
  });
}

d2tx_status d2tx_mr_serialize(const d2tx_mr* mr, char** out) {
  return guarded([&] {
    require(mr && out, "mr and out are required");
    *out = duplicate(d2tx::datalang::serialize_mr(mr->mr));
  });
}

size_t d2tx_mr_size(const d2tx_mr* mr) { return mr ? mr->mr.size() : 0; }

d2tx_status d2tx_mr_component(const d2tx_mr* mr, size_t field, size_t component, char** out) {
  return guarded([&] {
    require(mr && out, "mr and out are required");
    require(field < mr->mr.size(), "field index out of range");
    auto comps = mr->mr.components(field);
    require(component < comps.size(), "component index out of range");
    *out = duplicate(comps[component]);
  });
}

void d2tx_mr_free(d2tx_mr* mr) { delete mr; }

d2tx_status d2tx_labeling_prompt(const char* language, const char* text, char** out) {
  return guarded([&] {
    require(language && text && out, "language, text and out are required");
    *out = duplicate(
        d2tx::datalang::make_labeling_prompt(
            argument([&] { return d2tx::corpus::parse_language(language); }), text));
  });
}

d2tx_status d2tx_corpus_load(const char* path, d2tx_corpus** out) {
  return guarded([&] {
    require(path && out, "path and out are required");
    *out = new d2tx_corpus{d2tx::corpus::read_canonical(path)};
  });
}

d2tx_status d2tx_corpus_load_native(const char* path, const char* format, const char* split,
                                    d2tx_corpus** out) {
  return guarded([&] {
    require(path && format && out, "path, format and out are required");
    auto fmt = d2tx::corpus::parse_native_format(format);
    if (fmt == d2tx::corpus::NativeFormat::kCanonical) {
      *out = new d2tx_corpus{d2tx::corpus::read_canonical(path)};
      return;
    }
    d2tx::corpus::NativeOptions opts;
    if (split) opts.split = argument([&] { return d2tx::corpus::parse_split(split); });
    auto load = d2tx::corpus::read_native(path, fmt, opts);
    if (!load.issues.empty()) {
      const auto& first = load.issues.front();
      throw d2tx::ParseError(std::to_string(load.issues.size()) + " record(s) failed; line " +
                             std::to_string(first.line) + ": " + first.message);
    }
    *out = new d2tx_corpus{std::move(load.corpus)};
  });
}

d2tx_status d2tx_corpus_save(const d2tx_corpus* corpus, const char* path) {
  return guarded([&] {
    require(corpus && path, "corpus and path are required");
    d2tx::corpus::write_canonical(corpus->corpus, path);
  });
}

size_t d2tx_corpus_size(const d2tx_corpus* corpus) {
  return corpus ? corpus->corpus.instances.size() : 0;
}

d2tx_status d2tx_corpus_text(const d2tx_corpus* corpus, size_t index, char** out) {
  return guarded([&] {
    require(corpus && out, "corpus and out are required");
    require(index < corpus->corpus.instances.size(), "instance index out of range");
    *out = duplicate(corpus->corpus.instances[index].text);
  });
}

d2tx_status d2tx_corpus_mr(const d2tx_corpus* corpus, size_t index, d2tx_mr** out) {
  return guarded([&] {
    require(corpus && out, "corpus and out are required");
    require(index < corpus->corpus.instances.size(), "instance index out of range");
    *out = new d2tx_mr{corpus->corpus.instances[index].mr};
  });
}

d2tx_status d2tx_corpus_stats(const d2tx_corpus* corpus, int include_dev, size_t* instances,
                              size_t* unique_mrs, size_t* tokens) {
  return guarded([&] {
    require(corpus != nullptr, "corpus is NULL");
    auto s = d2tx::corpus::corpus_stats(corpus->corpus, include_dev != 0);
    if (instances) *instances = s.instances;
    if (unique_mrs) *unique_mrs = s.unique_mrs;
    if (tokens) *tokens = s.tokens;
  });
}

void d2tx_corpus_free(d2tx_corpus* corpus) { delete corpus; }

d2tx_status d2tx_chi_square_sf(double x, int df, double* p) {
  return guarded([&] {
    require(p != nullptr, "p is NULL");
    *p = d2tx::stats::chi_square_sf(x, df);
  });
}

d2tx_status d2tx_multi_kappa(const char* const* labels, size_t raters, size_t items, double* out) {
  return guarded([&] {
    require(labels && out, "labels and out are required");
    d2tx::stats::RatingMatrix m(raters, std::vector<std::string>(items));
    for (size_t r = 0; r < raters; ++r) {
      for (size_t i = 0; i < items; ++i) {
        const char* l = labels[r * items + i];
        require(l != nullptr, "NULL label");
        m[r][i] = l;
      }
    }
    *out = d2tx::stats::multi_kappa(m);
  });
}

d2tx_status d2tx_bleu(const char* const* candidates, const char* const* references, size_t count,
                      double* out) {
  return guarded([&] {
    require(candidates && references && out, "candidates, references and out are required");
    std::vector<d2tx::quality::EvalPair> pairs;
    for (size_t i = 0; i < count; ++i) {
      require(candidates[i] && references[i], "NULL text");
      pairs.push_back({d2tx::corpus::tokenize(candidates[i]),
                       {d2tx::corpus::tokenize(references[i])}});
    }
    *out = d2tx::quality::bleu(pairs);
  });
}

}  // extern "C"
