/* Verifies that the public header is consumable from plain C. */
#include <stdio.h>
#include <string.h>

#include "heatflow/heatflow.h"

int main(void) {
  if (strlen(hf_version()) == 0) return 1;

  hf_field* field = NULL;
  if (hf_field_create(3, 3, 7.0, &field) != HF_OK) return 1;
  double value = 0.0;
  if (hf_field_get(field, 1, 1, &value) != HF_OK || value != 7.0) return 1;
  hf_field_free(field);

  double edges[4] = {1.0, 2.0, 3.0, 4.0};
  hf_field* problem = NULL;
  if (hf_problem_create(8, edges, &problem) != HF_OK) return 1;

  hf_field* solution = NULL;
  hf_solve_stats stats;
  if (hf_fd_solve(problem, HF_METHOD_JACOBI, 1e-6, 10000, NULL, &solution,
                  &stats) != HF_OK) {
    return 1;
  }
  if (!stats.converged) return 1;

  hf_field_free(solution);
  hf_field_free(problem);
  printf("c header check ok\n");
  return 0;
}
