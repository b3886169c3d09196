#include <math.h>
#include <stdio.h>
#include <string.h>

#include "diagform.h"

#define CHECK(cond)                                                    \
    do {                                                               \
        if (!(cond)) {                                                 \
            fprintf(stderr, "line %d: %s\n", __LINE__, #cond);         \
            return 1;                                                  \
        }                                                              \
    } while (0)

int main(void) {
    CHECK(strlen(df_version()) > 0);

    double alpha[2] = {1.0, 1.0};
    DfForm *form = NULL;
    CHECK(df_form_new(2, alpha, 2, &form) == DF_STATUS_OK);
    double c = 0.0;
    CHECK(df_form_normalization_constant(form, &c) == DF_STATUS_OK);
    CHECK(fabs(c - 3.14159265358979323846 / 4.0) < 1e-14);

    DfSequence *seq = NULL;
    CHECK(df_sequence_generate(form, 1000, 0.15, &seq) == DF_STATUS_OK);
    const double *values = NULL;
    size_t len = 0;
    CHECK(df_sequence_values(seq, &values, &len) == DF_STATUS_OK);
    CHECK(len == 1000 && df_sequence_len(seq) == 1000);

    double lo[1] = {0.0}, hi[1] = {1.0};
    uint64_t raw = 0;
    double stat = 0.0;
    CHECK(df_ell_correlation(values, len, len, 2, lo, hi, &raw, &stat) == DF_STATUS_OK);
    CHECK(fabs(stat - (double)raw / 1000.0) < 1e-12);

    int64_t a[2] = {1, -1};
    uint64_t n = 0;
    CHECK(df_count_inequality(a, 2, 2, 10, 0.0, &n) == DF_STATUS_OK);
    CHECK(n == 11);

    double bad[2] = {1.0, -1.0};
    DfForm *none = NULL;
    CHECK(df_form_new(2, bad, 2, &none) == DF_STATUS_INVALID_ARGUMENT);
    CHECK(none == NULL);
    CHECK(df_last_error_message() != NULL);

    df_sequence_free(seq);
    df_form_free(form);
    printf("ok\n");
    return 0;
}
