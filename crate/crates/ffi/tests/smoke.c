#include <math.h>
#include <stdio.h>
#include <string.h>

#include "qmzi.h"

#define CHECK(cond)                                             \
    do {                                                        \
        if (!(cond)) {                                          \
            fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
            return 1;                                           \
        }                                                       \
    } while (0)

int main(void) {
    QmziConfig *cfg = qmzi_config_new();
    CHECK(qmzi_config_set(cfg, "squeeze_db", 10.0) == QMZI_STATUS_OK);
    CHECK(qmzi_config_set(cfg, "loss_a", 0.7) == QMZI_STATUS_OK);

    QmziReport r;
    CHECK(qmzi_sensitivity(cfg, &r) == QMZI_STATUS_OK);
    CHECK(r.method == QMZI_METHOD_CLOSED_FORM);
    CHECK(fabs(r.db_vs_sql + 1.03) < 0.01);

    QmziAllocation a;
    CHECK(qmzi_optimize(cfg, &a) == QMZI_STATUS_OK);
    CHECK(fabs(a.improvement_db - 1.58) < 0.01);

    CHECK(qmzi_config_set(cfg, "r1", 1.0) == QMZI_STATUS_OK);
    CHECK(qmzi_sensitivity(cfg, &r) == QMZI_STATUS_DIVERGENT);
    CHECK(strstr(qmzi_last_error(), "r1") != NULL);
    qmzi_config_free(cfg);

    QmziConfig *preset = NULL;
    char *csv = NULL;
    CHECK(qmzi_config_preset("gain_vs_loss", &preset) == QMZI_STATUS_OK);
    CHECK(qmzi_sweep_csv(preset, 2, &csv) == QMZI_STATUS_OK);
    CHECK(strncmp(csv, "series,axis,", 12) == 0);
    qmzi_string_free(csv);
    qmzi_config_free(preset);

    printf("ok %s\n", qmzi_version());
    return 0;
}
