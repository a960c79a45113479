/* Copyright 2026 The d2tx Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef D2TX_D2TX_H_
#define D2TX_D2TX_H_

#include <stddef.h>

#if defined(D2TX_BUILDING_LIBRARY)
#define D2TX_API __attribute__((visibility("default")))
#else
#define D2TX_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum d2tx_status {
  D2TX_OK = 0,
  D2TX_E_INVALID_ARGUMENT = 1,
  D2TX_E_PARSE = 2,
  D2TX_E_IO = 3,
  D2TX_E_BRIDGE = 4,
  D2TX_E_PROTOCOL = 5,
  D2TX_E_NOT_FOUND = 6,
  D2TX_E_VALIDATION = 7,
  D2TX_E_RUNTIME = 8,
  D2TX_E_INTERNAL = 9
} d2tx_status;

/* Message of the last failed call on this thread; never NULL. */
D2TX_API const char* d2tx_last_error(void);
D2TX_API const char* d2tx_status_name(d2tx_status status);
/* 0 for success, 1 for validation-type errors, 2 for runtime errors. */
D2TX_API int d2tx_exit_code(d2tx_status status);
D2TX_API const char* d2tx_version(void);
/* Frees strings returned through char** out-parameters. */
D2TX_API void d2tx_string_free(char* s);

/* Configuration: flat key/value settings. */
typedef struct d2tx_config d2tx_config;
D2TX_API d2tx_status d2tx_config_new(d2tx_config** out);
D2TX_API void d2tx_config_free(d2tx_config* config);
D2TX_API d2tx_status d2tx_config_load_file(d2tx_config* config, const char* path);
/* Values set here take precedence over values loaded from a file. */
D2TX_API d2tx_status d2tx_config_set(d2tx_config* config, const char* key, const char* value);
/* D2TX_E_NOT_FOUND when the key is unset. */
D2TX_API d2tx_status d2tx_config_get(const d2tx_config* config, const char* key, char** out);
D2TX_API int d2tx_config_is_known_key(const char* key);

/* Pipeline commands: convert, extend, eval, stats, report. */
typedef struct d2tx_result d2tx_result;
D2TX_API d2tx_status d2tx_run(const char* command, const d2tx_config* config, d2tx_result** out);
D2TX_API const char* d2tx_result_output(const d2tx_result* result);
D2TX_API size_t d2tx_result_warning_count(const d2tx_result* result);
D2TX_API const char* d2tx_result_warning(const d2tx_result* result, size_t index);
D2TX_API size_t d2tx_result_file_count(const d2tx_result* result);
D2TX_API const char* d2tx_result_file(const d2tx_result* result, size_t index);
D2TX_API void d2tx_result_free(d2tx_result* result);

/* Meaning representations and the data language. */
typedef struct d2tx_mr d2tx_mr;
/* shape is "kv" or "triples"; warnings may be NULL. */
D2TX_API d2tx_status d2tx_mr_parse_datalang(const char* datastring, const char* shape,
                                            d2tx_mr** out, size_t* warnings);
D2TX_API d2tx_status d2tx_mr_serialize(const d2tx_mr* mr, char** out);
D2TX_API size_t d2tx_mr_size(const d2tx_mr* mr);
D2TX_API d2tx_status d2tx_mr_component(const d2tx_mr* mr, size_t field, size_t component,
                                       char** out);
D2TX_API void d2tx_mr_free(d2tx_mr* mr);
/* language is "en" or "nl". */
D2TX_API d2tx_status d2tx_labeling_prompt(const char* language, const char* text, char** out);

/* Corpora. */
typedef struct d2tx_corpus d2tx_corpus;
D2TX_API d2tx_status d2tx_corpus_load(const char* path, d2tx_corpus** out);
/* format: e2e, webnlg, enriched or canonical; split: train, dev or test. */
D2TX_API d2tx_status d2tx_corpus_load_native(const char* path, const char* format,
                                             const char* split, d2tx_corpus** out);
D2TX_API d2tx_status d2tx_corpus_save(const d2tx_corpus* corpus, const char* path);
D2TX_API size_t d2tx_corpus_size(const d2tx_corpus* corpus);
D2TX_API d2tx_status d2tx_corpus_text(const d2tx_corpus* corpus, size_t index, char** out);
D2TX_API d2tx_status d2tx_corpus_mr(const d2tx_corpus* corpus, size_t index, d2tx_mr** out);
D2TX_API d2tx_status d2tx_corpus_stats(const d2tx_corpus* corpus, int include_dev,
                                       size_t* instances, size_t* unique_mrs, size_t* tokens);
D2TX_API void d2tx_corpus_free(d2tx_corpus* corpus);

/* Statistics and metrics. */
D2TX_API d2tx_status d2tx_chi_square_sf(double x, int df, double* p);
/* labels is row-major: raters rows of items labels each. */
D2TX_API d2tx_status d2tx_multi_kappa(const char* const* labels, size_t raters, size_t items,
                                      double* out);
/* Corpus BLEU (0-100) with one reference per candidate. */
D2TX_API d2tx_status d2tx_bleu(const char* const* candidates, const char* const* references,
                               size_t count, double* out);

#ifdef __cplusplus
}
#endif

#endif /* D2TX_D2TX_H_ */
