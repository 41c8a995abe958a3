#ifndef BINSEP_H
#define BINSEP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

#define BINSEP_PRESET_DEFAULT 0

#define BINSEP_PRESET_TINY 1

#define BINSEP_PROFILE_CENTROID 0

#define BINSEP_PROFILE_ORACLE 1

// Status codes; values 3 to 10 equal the command-line exit codes.
typedef enum BinsepStatus {
  BINSEP_STATUS_OK = 0,
  BINSEP_STATUS_CONFIG = 3,
  BINSEP_STATUS_IO = 4,
  BINSEP_STATUS_WAV = 5,
  BINSEP_STATUS_CONTAINER = 6,
  BINSEP_STATUS_SHAPE = 7,
  BINSEP_STATUS_INVALID_ARGUMENT = 8,
  BINSEP_STATUS_EVALUATION = 9,
  BINSEP_STATUS_MISSING_ASSET = 10,
  BINSEP_STATUS_NULL_POINTER = 11,
  BINSEP_STATUS_PANIC = 12,
} BinsepStatus;

// One separation stream. After `binsep_separator_finish` no more input is
// accepted, but unread output and the DOA tracks stay readable.
typedef struct BinsepSeparator BinsepSeparator;

// Loaded weights plus the network built from them.
typedef struct BinsepWeights BinsepWeights;

// Separator settings; start from `binsep_options_default`.
typedef struct BinsepOptions {
  // `BINSEP_PROFILE_CENTROID` or `BINSEP_PROFILE_ORACLE`.
  uint32_t profile_mode;
  // Frames per DOA vote.
  size_t doa_chunk_frames;
  // L2-normalize slot embeddings before clustering.
  bool kmeans_normalize;
  // Update-weight floor for the centroids; 0 keeps the running mean.
  double kmeans_decay;
  // Oracle embedding container; required in oracle mode, else NULL.
  const char *oracle_path;
} BinsepOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL after a success.
// The pointer stays valid until the next call on the same thread.
const char *binsep_last_error(void);

// Library version as a static NUL-terminated string.
const char *binsep_version(void);

// Seeded weights for a preset architecture.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum BinsepStatus binsep_weights_generate(uint32_t preset,
                                          uint64_t seed,
                                          struct BinsepWeights **out);

// # Safety
// `path` must be a NUL-terminated string; `out` as for
// [`binsep_weights_generate`].
enum BinsepStatus binsep_weights_load(const char *path, struct BinsepWeights **out);

// # Safety
// `weights` must come from this library and not be freed; `path` must be a
// NUL-terminated string.
enum BinsepStatus binsep_weights_save(const struct BinsepWeights *weights, const char *path);

// Samples per frame; pushes of this many samples produce one output frame.
//
// # Safety
// `weights` must be a live handle; `out` must be writable.
enum BinsepStatus binsep_weights_hop(const struct BinsepWeights *weights, size_t *out);

// # Safety
// `weights` must be a live handle; `out` must be writable.
enum BinsepStatus binsep_weights_num_speakers(const struct BinsepWeights *weights, size_t *out);

// NULL is ignored.
//
// # Safety
// `weights` must be NULL or a handle not yet freed. Separators created
// from it keep their own reference and stay usable.
void binsep_weights_free(struct BinsepWeights *weights);

struct BinsepOptions binsep_options_default(void);

// New stream over `weights`. `options` may be NULL for the defaults.
//
// # Safety
// `weights` must be a live handle, `options` NULL or valid, `out` writable.
enum BinsepStatus binsep_separator_new(const struct BinsepWeights *weights,
                                       const struct BinsepOptions *options,
                                       struct BinsepSeparator **out);

// Appends `n` samples per channel at 16 kHz. Any `n` works; output appears
// frame by frame.
//
// # Safety
// `sep` must be a live handle; `left` and `right` must each hold `n`
// readable samples (they may be NULL when `n` is 0).
enum BinsepStatus binsep_separator_push(struct BinsepSeparator *sep,
                                        const double *left,
                                        const double *right,
                                        size_t n);

// Unread samples of `speaker`.
//
// # Safety
// `sep` must be a live handle; `out` must be writable.
enum BinsepStatus binsep_separator_available(const struct BinsepSeparator *sep,
                                             size_t speaker,
                                             size_t *out);

// Copies up to `cap` unread samples of `speaker` into `left`/`right` and
// stores the count in `written`.
//
// # Safety
// `sep` must be a live handle; `left` and `right` must each have room for
// `cap` samples; `written` must be writable.
enum BinsepStatus binsep_separator_read(struct BinsepSeparator *sep,
                                        size_t speaker,
                                        double *left,
                                        double *right,
                                        size_t cap,
                                        size_t *written);

// Flushes the final partial frame. Output length then equals input length.
//
// # Safety
// `sep` must be a live handle.
enum BinsepStatus binsep_separator_finish(struct BinsepSeparator *sep);

// Voted azimuths of `speaker` in degrees, one per DOA chunk, available
// after finish. Writes up to `cap` values and stores the full track length
// in `len`; call with `cap` 0 to size the buffer.
//
// # Safety
// `sep` must be a live handle; `out` must have room for `cap` values;
// `len` must be writable.
enum BinsepStatus binsep_separator_doa_track(const struct BinsepSeparator *sep,
                                             size_t speaker,
                                             double *out,
                                             size_t cap,
                                             size_t *len);

// NULL is ignored.
//
// # Safety
// `sep` must be NULL or a handle not yet freed.
void binsep_separator_free(struct BinsepSeparator *sep);

// Signal-to-noise ratio of `estimate` against `reference`, clamped to
// ±120 dB.
//
// # Safety
// Both arrays must hold `n` samples; `out` must be writable.
enum BinsepStatus binsep_snr_db(const double *reference,
                                const double *estimate,
                                size_t n,
                                double *out);

// Speaker swaps between `speakers` stereo outputs and references of `n`
// samples each, over `segments` equal segments.
//
// # Safety
// Each of the four pointer arrays must hold `speakers` pointers to `n`
// samples; `swaps` must be writable.
enum BinsepStatus binsep_count_swaps(const double *const *outputs_left,
                                     const double *const *outputs_right,
                                     const double *const *references_left,
                                     const double *const *references_right,
                                     size_t speakers,
                                     size_t n,
                                     size_t segments,
                                     size_t *swaps);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BINSEP_H */
