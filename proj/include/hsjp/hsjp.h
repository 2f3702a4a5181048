/* C API for the HSJP toolkit: self-supervised jigsaw-heatmap pretraining and
 * heatmap keypoint finetuning on synthetic desk-scale corpora.
 *
 * Every function returns HSJP_OK (0) on success or a negative error code;
 * hsjp_last_error() describes the most recent failure on the calling thread.
 * Handles are opaque and must be released with their _free function.
 */
#ifndef HSJP_H
#define HSJP_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum hsjp_status {
    HSJP_OK = 0,
    HSJP_E_ARG = -1,     /* bad argument / violated precondition */
    HSJP_E_IO = -2,      /* filesystem failure */
    HSJP_E_PARSE = -3,   /* malformed file or stream */
    HSJP_E_CONFIG = -4,  /* invalid configuration */
    HSJP_E_SHAPE = -5,   /* tensor/checkpoint shape mismatch */
    HSJP_E_INTERNAL = -6
};

const char* hsjp_version(void);

/* Message for the last failing call on this thread; empty string if none. */
const char* hsjp_last_error(void);

/* ------------------------------------------------------------- config */

typedef struct hsjp_config hsjp_config;

hsjp_config* hsjp_config_new(void);

/* The paper-scale preset (224 input, N=6, batch 256, 240 epochs with lr
 * drops at 190/220). Orders of magnitude slower than the desk defaults. */
hsjp_config* hsjp_config_new_paper_preset(void);

void hsjp_config_free(hsjp_config* cfg);

/* Merges a key=value config file into cfg. Unknown or duplicate keys fail. */
int hsjp_config_load(hsjp_config* cfg, const char* path);

int hsjp_config_set(hsjp_config* cfg, const char* key, const char* value);

/* Writes the value of one key into buf (NUL-terminated, capacity cap). */
int hsjp_config_get(const hsjp_config* cfg, const char* key, char* buf, size_t cap);

/* Validates all invariants; returns HSJP_E_CONFIG with a message naming the
 * offending key otherwise. */
int hsjp_config_validate(const hsjp_config* cfg);

/* ------------------------------------------------------------- corpora */

/* kind is "pretext" (textured images) or "keypoints" (annotated stick
 * figures). Writes PNGs plus corpus.txt / annotations.txt into out_dir. */
int hsjp_synth(const char* kind, int count, int size, uint64_t seed, const char* out_dir);

/* ------------------------------------------------------------ training */

/* Pretrains on the corpus in data_dir, writing the selected checkpoint to
 * out_ckpt and a per-epoch metrics log to "<out_ckpt>.log". Optional outputs
 * (may be NULL): held-out jigsaw precision / per-patch accuracy of the saved
 * model. */
int hsjp_pretrain(const hsjp_config* cfg, const char* data_dir, const char* out_ckpt,
                  double* holdout_precision, double* holdout_patch_accuracy);

/* Finetunes on a keypoint corpus. init_ckpt may be NULL to train from
 * scratch. Writes out_ckpt and "<out_ckpt>.log". */
int hsjp_finetune(const hsjp_config* cfg, const char* data_dir, const char* init_ckpt,
                  const char* out_ckpt);

/* ---------------------------------------------------------- evaluation */

/* Jigsaw evaluation of a checkpoint over a corpus; no augmentation. Writes a
 * "metric\tvalue" report to report_path when non-NULL. Outputs may be NULL. */
int hsjp_eval_hsjp(const hsjp_config* cfg, const char* ckpt, const char* data_dir,
                   const char* report_path, double* precision, double* patch_accuracy);

/* OKS-mAP over a keypoint corpus. aps10, when non-NULL, receives the ten
 * per-threshold APs (0.50 : 0.05 : 0.95). */
int hsjp_eval_pose(const hsjp_config* cfg, const char* ckpt, const char* data_dir,
                   const char* report_path, double* map, double* aps10);

/* Writes a side-by-side predicted/target heatmap mosaic PNG for one image
 * of the corpus. */
int hsjp_viz(const hsjp_config* cfg, const char* ckpt, const char* data_dir, int index,
             const char* out_png);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* HSJP_H */
