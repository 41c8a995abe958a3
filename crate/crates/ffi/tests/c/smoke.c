/* Streams a tone through the separator and checks lengths and statuses. */
#include <stdio.h>
#include <math.h>

#include "binsep.h"

#define N 2500

static int fail(const char *what) {
    const char *msg = binsep_last_error();
    fprintf(stderr, "%s: %s\n", what, msg ? msg : "(no message)");
    return 1;
}

int main(void) {
    static double left[N], right[N], out_l[N], out_r[N];
    for (int i = 0; i < N; i++) {
        left[i] = 0.3 * (double)((i * 37) % 101 - 50) / 50.0;
        right[i] = 0.5 * left[i];
    }

    BinsepWeights *w = NULL;
    if (binsep_weights_generate(BINSEP_PRESET_TINY, 3, &w) != BINSEP_STATUS_OK) return fail("generate");

    BinsepOptions opts = binsep_options_default();
    opts.doa_chunk_frames = 4;
    BinsepSeparator *sep = NULL;
    if (binsep_separator_new(w, &opts, &sep) != BINSEP_STATUS_OK) return fail("new");
    binsep_weights_free(w);

    size_t total = 0;
    for (size_t at = 0; at < N; at += 300) {
        size_t n = N - at < 300 ? N - at : 300;
        if (binsep_separator_push(sep, left + at, right + at, n) != BINSEP_STATUS_OK) return fail("push");
    }
    if (binsep_separator_finish(sep) != BINSEP_STATUS_OK) return fail("finish");
    for (size_t spk = 0; spk < 2; spk++) {
        size_t got = 0;
        if (binsep_separator_read(sep, spk, out_l, out_r, N, &got) != BINSEP_STATUS_OK) return fail("read");
        total += got;
    }
    if (total != 2 * N) {
        fprintf(stderr, "read %zu samples, expected %d\n", total, 2 * N);
        return 1;
    }

    size_t len = 0;
    if (binsep_separator_doa_track(sep, 0, NULL, 0, &len) != BINSEP_STATUS_OK) return fail("doa");
    if (binsep_separator_push(sep, left, right, 1) != BINSEP_STATUS_INVALID_ARGUMENT) return 1;
    if (binsep_last_error() == NULL) return 1;
    binsep_separator_free(sep);

    double db = 0.0;
    if (binsep_snr_db(left, left, N, &db) != BINSEP_STATUS_OK || fabs(db - 120.0) > 1e-9) {
        fprintf(stderr, "snr %f\n", db);
        return 1;
    }
    printf("ok %s doa_windows=%zu\n", binsep_version(), len);
    return 0;
}
