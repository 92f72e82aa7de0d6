#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "ckvlab.h"

#define CHECK(call)                                                           \
  do {                                                                        \
    CkvStatus s_ = (call);                                                    \
    if (s_ != CKV_STATUS_OK) {                                                \
      fprintf(stderr, "%s failed (%d): %s\n", #call, (int)s_,                 \
              ckv_last_error() ? ckv_last_error() : "?");                     \
      return 1;                                                               \
    }                                                                         \
  } while (0)

int main(void) {
  CkvMetric *flat = NULL;
  CHECK(ckv_metric_new("flat", 3, &flat));

  CkvSolverConfig cfg = ckv_solver_config_default();
  CkvReport *conformal = NULL;
  CHECK(ckv_count(flat, &cfg, &conformal));
  cfg.mode = CKV_MODE_KILLING;
  CkvReport *killing = NULL;
  CHECK(ckv_count(flat, &cfg, &killing));
  printf("conformal %zu killing %zu\n", ckv_report_nullity(conformal),
         ckv_report_nullity(killing));

  size_t total = 0;
  CHECK(ckv_report_singular_values(conformal, NULL, 0, &total));
  double *sigma = malloc(total * sizeof(double));
  CHECK(ckv_report_singular_values(conformal, sigma, total, &total));
  printf("sigma_max %.3f of %zu\n", sigma[0], total);
  free(sigma);

  char *json = NULL;
  CHECK(ckv_report_to_json(conformal, &json));
  if (strstr(json, "\"nullity\":10") == NULL) {
    fprintf(stderr, "unexpected json %s\n", json);
    return 1;
  }
  ckv_string_free(json);

  bool holds = false;
  CHECK(ckv_jet_sard_holds(3, 4, &holds));
  printf("holds(3,4) %d\n", holds);

  CkvMetric *bad = NULL;
  CkvStatus s = ckv_metric_new("torus", 3, &bad);
  printf("torus status %d: %s\n", (int)s, ckv_last_error());

  ckv_report_free(conformal);
  ckv_report_free(killing);
  ckv_metric_free(flat);
  return 0;
}
