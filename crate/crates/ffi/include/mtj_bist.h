#ifndef MTJ_BIST_H
#define MTJ_BIST_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum MtjBistStatus {
  MTJ_BIST_STATUS_OK = 0,
  MTJ_BIST_STATUS_NULL_POINTER = 1,
  MTJ_BIST_STATUS_INVALID_ARGUMENT = 2,
  MTJ_BIST_STATUS_WIDTH_MISMATCH = 3,
  MTJ_BIST_STATUS_PENDING_TRANSITION = 4,
  MTJ_BIST_STATUS_INDEX_OUT_OF_RANGE = 5,
  MTJ_BIST_STATUS_BUFFER_TOO_SMALL = 6,
  MTJ_BIST_STATUS_INTERNAL = 7,
} MtjBistStatus;

// Array of MTJ cells, one per message bit.
typedef struct MtjBistArray MtjBistArray;

// CRC codec configuration.
typedef struct MtjBistCrc MtjBistCrc;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static description of a status code. Never null.
const char *mtj_bist_status_message(enum MtjBistStatus status);

// CRC with generator `poly` (coefficients below the leading term) of degree
// `width` over `data_width`-bit patterns.
enum MtjBistStatus mtj_bist_crc_new(uint64_t poly,
                                    size_t width,
                                    size_t data_width,
                                    struct MtjBistCrc **out);

void mtj_bist_crc_free(struct MtjBistCrc *crc);

// Data plus check bits; the array size a BIST round expects.
enum MtjBistStatus mtj_bist_crc_message_width(const struct MtjBistCrc *crc, size_t *out);

enum MtjBistStatus mtj_bist_crc_encode(const struct MtjBistCrc *crc,
                                       uint64_t data,
                                       uint64_t *out_check);

// Writes the decoder error flag: `true` when `data`/`check` is not a
// codeword.
enum MtjBistStatus mtj_bist_crc_verify(const struct MtjBistCrc *crc,
                                       uint64_t data,
                                       uint64_t check,
                                       bool *out_error);

// `len` nominal cells holding logic 0.
enum MtjBistStatus mtj_bist_array_new(size_t len, struct MtjBistArray **out);

void mtj_bist_array_free(struct MtjBistArray *array);

enum MtjBistStatus mtj_bist_array_len(const struct MtjBistArray *array, size_t *out);

// Scales the free-layer thickness of cell `index` by `multiplier`.
enum MtjBistStatus mtj_bist_array_inject(struct MtjBistArray *array,
                                         size_t index,
                                         double multiplier);

enum MtjBistStatus mtj_bist_array_thickness(const struct MtjBistArray *array,
                                            size_t index,
                                            double *out);

// One BIST round of `pattern` at half period `half_period_ns` with the
// default delay model. The array itself is not modified. Faulted cell
// indices go to `faulted` (capacity `faulted_cap`, may be null when zero);
// their count always goes to `out_n_faulted`.
enum MtjBistStatus mtj_bist_run(const struct MtjBistArray *array,
                                const struct MtjBistCrc *crc,
                                double half_period_ns,
                                uint64_t pattern,
                                bool *out_error,
                                size_t *faulted,
                                size_t faulted_cap,
                                size_t *out_n_faulted);

// KATAN-32 with the 80-bit key split as `key_hi:key_lo` (16 + 64 bits).
enum MtjBistStatus mtj_bist_katan_encrypt(uint32_t plaintext,
                                          uint64_t key_lo,
                                          uint16_t key_hi,
                                          uint32_t *out);

enum MtjBistStatus mtj_bist_katan_decrypt(uint32_t ciphertext,
                                          uint64_t key_lo,
                                          uint16_t key_hi,
                                          uint32_t *out);

// Peak absolute cross-correlation of two traces of `len` samples.
enum MtjBistStatus mtj_bist_relational_detector(const double *a,
                                                const double *b,
                                                size_t len,
                                                double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MTJ_BIST_H */
