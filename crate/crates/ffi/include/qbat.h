#ifndef QBAT_H
#define QBAT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result of every fallible call.
typedef enum QbatStatus {
  QBAT_STATUS_OK = 0,
  QBAT_STATUS_NULL_POINTER = 1,
  QBAT_STATUS_INVALID_ARGUMENT = 2,
  QBAT_STATUS_CONFIG = 3,
  QBAT_STATUS_NUMERICAL = 4,
  QBAT_STATUS_CAPACITY = 5,
  QBAT_STATUS_IO = 6,
  // A sweep point failed; results for the other points were written.
  QBAT_STATUS_PARTIAL_SWEEP = 7,
  QBAT_STATUS_PANIC = 8,
} QbatStatus;

// Column selector for [`qbat_series_copy`] and [`qbat_series_max`].
typedef enum QbatColumn {
  QBAT_COLUMN_TIME = 0,
  QBAT_COLUMN_STORED_ENERGY = 1,
  QBAT_COLUMN_POWER = 2,
} QbatColumn;

// A resolved experiment configuration.
typedef struct QbatConfig QbatConfig;

// A battery/charger protocol.
typedef struct QbatProtocol QbatProtocol;

// `ΔE(t)` and `P(t)` sampled on a grid.
typedef struct QbatSeries QbatSeries;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static nul-terminated string.
const char *qbat_version(void);

// Message of the last failed call on this thread, or null. Free the result
// with [`qbat_string_free`].
char *qbat_last_error_message(void);

// # Safety
// `s` must be null or a pointer returned by this library.
void qbat_string_free(char *s);

// ATA interaction range `K` for a ring of `n` sites.
//
// # Safety
// `out` must be a valid pointer.
enum QbatStatus qbat_interaction_range(size_t n, size_t *out);

// Creates a protocol. `*_strength` is `h` for `FieldZ` and `J` otherwise;
// `*_gamma` is read only for the XY families.
//
// # Safety
// String arguments must be valid nul-terminated strings; `out` must be valid.
enum QbatStatus qbat_protocol_new(const char *battery_family,
                                  double battery_strength,
                                  double battery_gamma,
                                  const char *charger_family,
                                  double charger_strength,
                                  double charger_gamma,
                                  size_t n,
                                  double lambda,
                                  bool extended_lambda,
                                  bool literal_ata_sum,
                                  struct QbatProtocol **out);

// # Safety
// `p` must be null or a handle from [`qbat_protocol_new`], not yet freed.
void qbat_protocol_free(struct QbatProtocol *p);

// Evolves the protocol from the battery ground state on `[0, end]` with
// the dense backend.
//
// # Safety
// `p` must be a live protocol handle and `out` a valid pointer.
enum QbatStatus qbat_stored_energy_series(const struct QbatProtocol *p,
                                          double end,
                                          double step,
                                          size_t refinement,
                                          struct QbatSeries **out);

// Number of samples, or 0 for a null handle.
//
// # Safety
// `s` must be null or a live series handle.
size_t qbat_series_len(const struct QbatSeries *s);

// Copies one [`QbatColumn`] into `buf`, which must hold at least
// [`qbat_series_len`] values.
//
// # Safety
// `s` must be a live series handle; `buf` must be writable for `capacity` doubles.
enum QbatStatus qbat_series_copy(const struct QbatSeries *s,
                                 uint32_t column,
                                 double *buf,
                                 size_t capacity);

// Grid maximum of the stored-energy or power column.
//
// # Safety
// `s` must be a live series handle; `t` and `value` valid pointers.
enum QbatStatus qbat_series_max(const struct QbatSeries *s,
                                uint32_t column,
                                double *t,
                                double *value);

// # Safety
// `s` must be null or a live series handle.
void qbat_series_free(struct QbatSeries *s);

// Parses a TOML configuration document.
//
// # Safety
// `text` must be a valid nul-terminated string; `out` a valid pointer.
enum QbatStatus qbat_config_parse(const char *text, struct QbatConfig **out);

// Loads the configuration bound to a named preset.
//
// # Safety
// `name` must be a valid nul-terminated string; `out` a valid pointer.
enum QbatStatus qbat_config_preset(const char *name, struct QbatConfig **out);

// Number of built-in presets.
size_t qbat_preset_count(void);

// Name of preset `index` as a static string, or null when out of range.
const char *qbat_preset_name(size_t index);

// Redirects where [`qbat_config_run`] writes.
//
// # Safety
// `cfg` must be a live config handle; `dir` a valid nul-terminated string.
enum QbatStatus qbat_config_set_output_dir(struct QbatConfig *cfg, const char *dir);

// Runs the experiment and writes its CSV and JSON files. `boundary_max`,
// if non-null, receives whether a maximum sat on the last grid time.
//
// # Safety
// `cfg` must be a live config handle; `boundary_max` null or valid.
enum QbatStatus qbat_config_run(const struct QbatConfig *cfg, bool *boundary_max);

// # Safety
// `cfg` must be null or a live config handle.
void qbat_config_free(struct QbatConfig *cfg);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QBAT_H */
