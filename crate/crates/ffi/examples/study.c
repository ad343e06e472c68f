/* Build: cargo build -p quadmini-ffi --release
 *        cc study.c -I../include -L../../../target/release -l:libquadmini_ffi.a -lm -lpthread -ldl */
#include <stdio.h>
#include "quadmini.h"

int main(void) {
    uint32_t rank = 0;
    if (qm_macro_rank(QM_BUBBLE_CORNER, &rank) != QM_STATUS_OK) {
        fprintf(stderr, "%s\n", qm_last_error());
        return 1;
    }
    printf("corner rank %u\n", rank);

    QmStudy *study = NULL;
    QmStatus st = qm_study_run(1, QM_BUBBLE_CORNER, 3, 0.0, &study);
    if (st != QM_STATUS_OK) {
        fprintf(stderr, "study failed (%d): %s\n", (int)st, qm_last_error());
        return 1;
    }
    for (size_t i = 0; i < qm_study_levels(study); ++i) {
        QmLevelErrors row;
        qm_study_row(study, i, &row);
        printf("%u %u %.5e %.5e %.5e\n", row.level, row.elements, row.h1_u, row.l2_u, row.l2_p);
    }
    qm_study_free(study);

    st = qm_study_run(1, QM_BUBBLE_STANDARD, 1, 0.0, &study);
    printf("standard: status %d (%s)\n", (int)st, qm_last_error());
    return st == QM_STATUS_SINGULAR ? 0 : 1;
}
