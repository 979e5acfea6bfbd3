/* Copyright 2026 the mglmm authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the mglmm library: marginal GLMM fitting with Gaussian
 * random intercepts, Tweedie power-index selection, Gaussian graphical
 * model search over the predicted random components, separation queries,
 * simulation, and residual diagnostics.
 *
 * Conventions:
 *  - every function returns MGLMM_OK (0), MGLMM_ERR_INPUT (2) or
 *    MGLMM_ERR_NUMERIC (3); on failure mglmm_last_error() describes the
 *    problem for the calling thread;
 *  - objects are opaque handles freed with the matching _free function;
 *  - strings returned through char** are heap-allocated and must be
 *    released with mglmm_string_free;
 *  - structured inputs and outputs are JSON documents (schemas carry a
 *    formatVersion field and are validated strictly).
 */

#ifndef MGLMM_H_
#define MGLMM_H_

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define MGLMM_OK 0
#define MGLMM_ERR_INPUT 2
#define MGLMM_ERR_NUMERIC 3

typedef struct mglmm_table mglmm_table;
typedef struct mglmm_fit mglmm_fit;
typedef struct mglmm_graph_result mglmm_graph_result;

/* Message for the most recent failure on this thread; empty string if none.
 * The pointer stays valid until the next failing call on the same thread. */
const char* mglmm_last_error(void);

void mglmm_string_free(char* s);

/* config_json: {"formatVersion":1,"schema":[{"name":...,"family":{...}},...],
 * optional "powerGrid", "modelClass", "seed", "workerCount"}. The schema
 * lists the response columns with their families (gamma, binomial with
 * "size", compoundPoisson with "power"). */
int mglmm_table_read(const char* csv_path, const char* config_json, mglmm_table** out);
int mglmm_table_free(mglmm_table* table);

/* Fits every response in the config schema: power-index grid search for
 * compound-Poisson responses, then a Laplace GLMM fit per response, then
 * assembly of the groups x responses prediction matrix. */
int mglmm_fit_run(const mglmm_table* table, const char* config_json, mglmm_fit** out);
int mglmm_fit_to_json(const mglmm_fit* fit, char** out_json);
int mglmm_fit_from_json(const char* json, mglmm_fit** out);
int mglmm_fit_free(mglmm_fit* fit);

/* model_class: "forest" or "decomposable"; standardize: nonzero rescales
 * prediction columns to unit variance before the search. */
int mglmm_graph_search(const mglmm_fit* fit, const char* model_class, int standardize,
                       mglmm_graph_result** out);
int mglmm_graph_result_to_json(const mglmm_graph_result* result, char** out_json);
/* targets_csv: comma-separated vertex labels (may be empty); vertices are
 * classed target / blanket / peripheral in the DOT output. */
int mglmm_graph_result_to_dot(const mglmm_graph_result* result, const char* targets_csv,
                              char** out_dot);
int mglmm_graph_result_free(mglmm_graph_result* result);

/* graph_json accepts either a standalone graph document or a search-result
 * document. separated receives 0 or 1; statement receives the
 * induced-separation sentence for the targets' Markov blanket. */
int mglmm_separate(const char* graph_json, const char* targets_csv, const char* given_csv,
                   int* separated, char** statement);
int mglmm_markov_blanket(const char* graph_json, const char* targets_csv, char** blanket_csv,
                         char** statement);

/* spec_json: simulation spec document; outputs the observation CSV and a
 * ground-truth JSON (drawn random components plus the spec echo). */
int mglmm_simulate(const char* spec_json, uint64_t seed, char** csv_out, char** truth_json_out);

/* Residual report (Pearson residuals, randomized PIT, KS test) for one
 * response of an already fitted model against a table. */
int mglmm_diagnose(const mglmm_fit* fit, const mglmm_table* table, const char* response,
                   uint64_t seed, char** report_json, char** residual_csv);

/* Runs only the power-index grid selection for a compound-Poisson response;
 * returns the grid, distances and chosen index as JSON. */
int mglmm_power_index(const mglmm_table* table, const char* config_json, const char* response,
                      char** result_json);

#ifdef __cplusplus
}
#endif

#endif /* MGLMM_H_ */
