/* C interface to libspecden. All handles are opaque; every call that can
 * fail returns a specden_status and leaves a thread-local message readable
 * through specden_last_error(). Strings returned through char** are owned by
 * the caller and released with specden_string_free(). */
#ifndef SPECDEN_H
#define SPECDEN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum specden_status {
    SPECDEN_OK = 0,
    SPECDEN_ERR_INPUT = 2,        /* malformed model, bad argument, assumption refused */
    SPECDEN_ERR_NUMERIC = 3,      /* non-convergence or numerical-domain failure */
    SPECDEN_ERR_PRECONDITION = 4, /* operation refused by its precondition */
    SPECDEN_ERR_INTERNAL = 5
} specden_status;

typedef struct specden_model specden_model;
typedef struct specden_solution specden_solution;
typedef struct specden_density specden_density;
typedef struct specden_support specden_support;
typedef struct specden_channel specden_channel;

typedef struct specden_solver_options {
    double tol;
    int32_t max_iter;
    double damping;
    int32_t anderson_depth;
} specden_solver_options;

typedef struct specden_bounds {
    double min_ratio;
    double max_ratio;
    double min_trace_ratio;
    double max_corr_norm;
    double max_mean_norm;
} specden_bounds;

const char* specden_version(void);
const char* specden_last_error(void);
void specden_string_free(char* s);

void specden_set_threads(int32_t threads);
int32_t specden_threads(void);

specden_solver_options specden_solver_options_default(void);
specden_bounds specden_bounds_default(void);

/* Models ---------------------------------------------------------------- */

specden_status specden_model_load_file(const char* path, specden_model** out);
specden_status specden_model_load_json(const char* text, specden_model** out);
/* name: marchenko-pastur, fig2, fig3, fig4, fig5; p or n <= 0 selects the default. */
specden_status specden_model_preset(const char* name, uint64_t seed, int64_t p, int64_t n, specden_model** out);
void specden_model_free(specden_model* model);
int64_t specden_model_p(const specden_model* model);
int64_t specden_model_n(const specden_model* model);
/* Estimate of the spectral edge of Sigma Sigma^H, padded 20%: a default grid end. */
double specden_model_spectral_bound(const specden_model* model);
specden_status specden_model_to_json(const specden_model* model, int explicit_form, char** out);
/* *ok is 1 when no assumption is violated; bounds may be NULL. */
specden_status specden_model_validate(const specden_model* model, const specden_bounds* bounds, char** report_json,
                                      int* ok);

/* Fixed point ----------------------------------------------------------- */

/* opts may be NULL. */
specden_status specden_solve(const specden_model* model, double re, double im, const specden_solver_options* opts,
                             specden_solution** out);
void specden_solution_free(specden_solution* sol);
void specden_solution_m_n(const specden_solution* sol, double* re, double* im);
int32_t specden_solution_iterations(const specden_solution* sol);
double specden_solution_residual(const specden_solution* sol);
int64_t specden_solution_n(const specden_solution* sol);
/* re/im arrays of length n */
void specden_solution_delta(const specden_solution* sol, double* re, double* im);
void specden_solution_delta_tilde(const specden_solution* sol, double* re, double* im);
/* (1/p) Tr(C Theta) with C given row-major as separate re/im arrays of length p*p. */
specden_status specden_solution_trace(const specden_solution* sol, const double* c_re, const double* c_im, double* re,
                                      double* im);
specden_status specden_solution_to_json(const specden_solution* sol, int include_vectors, char** out);

/* Spectrum -------------------------------------------------------------- */

specden_status specden_density_compute(const specden_model* model, const double* grid, size_t count, double v,
                                       int include_measures, const specden_solver_options* opts, specden_density** out);
void specden_density_free(specden_density* d);
size_t specden_density_size(const specden_density* d);
void specden_density_lsd(const specden_density* d, double* out);
/* columns: 0-based measure indices to include (may be NULL when count is 0). */
specden_status specden_density_to_csv(const specden_density* d, const int64_t* columns, size_t count, char** out);
specden_status specden_density_summary(const specden_density* d, char** out_json);
/* Mean KS distance between F^n (from d) and the ESD of `trials` draws. */
specden_status specden_density_ks(const specden_model* model, const specden_density* d, const char* distribution,
                                  int32_t trials, uint64_t seed, double* mean_ks, double* max_ks);

/* Detects the support of d and refines its edges at height v_refine (<= 0 skips refinement). */
specden_status specden_support_detect(const specden_model* model, const specden_density* d, double threshold,
                                      double v_refine, const specden_solver_options* opts, specden_support** out);
void specden_support_free(specden_support* s);
size_t specden_support_count(const specden_support* s);
void specden_support_interval(const specden_support* s, size_t k, double* a, double* b);
double specden_support_right_endpoint(const specden_support* s);
/* Widest gap between consecutive intervals; *found = 0 when there is none. */
void specden_support_largest_gap(const specden_support* s, int include_origin, double* a, double* b, int* found);
specden_status specden_support_to_json(const specden_support* s, char** out);
specden_status specden_support_inclusion(const specden_density* d, const specden_support* s, double threshold,
                                         char** report_json, int* ok);
specden_status specden_edge_gap(const specden_model* model, const specden_support* s, double a, double b,
                                int64_t points, const specden_solver_options* opts, char** report_json, double* minimum);

/* Monte Carlo ----------------------------------------------------------- */

/* distribution: complex-gaussian, uniform-symmetric, uniform-real,
 * rademacher-complex, student-t(dof). Eigenvalues descending, length p. */
specden_status specden_sample_eigenvalues(const specden_model* model, const char* distribution, uint64_t seed,
                                          uint32_t trial, double* out);
/* Certifies [a, b] (outside the support, edge-gap condition over points
 * nodes) and counts escapes; with check = 0 the certification is skipped. */
specden_status specden_noeig(const specden_model* model, const specden_support* s, const char* distribution, double a,
                             double b, int32_t trials, uint64_t seed, int check, int64_t points,
                             const specden_solver_options* opts, char** report_json, int32_t* escapes);
specden_status specden_largest_eigenvalue(const specden_model* model, const char* distribution, int32_t trials,
                                          uint64_t seed, double right_endpoint, char** report_json, double* max_eig);
/* functional: "trace" (C = I) or "bilinear" (u = v = e_1). */
specden_status specden_resolvent_trial(const specden_model* model, const char* distribution, double re, double im,
                                       const char* functional, int32_t trials, uint64_t seed,
                                       const specden_solver_options* opts, char** report_json, double* z_score);

/* MIMO ------------------------------------------------------------------ */

specden_status specden_channel_fig5(int64_t p, int64_t n, double tau, specden_channel** out);
void specden_channel_free(specden_channel* chan);
specden_status specden_sinr_asymptotic(const specden_channel* chan, double sigma2, const specden_solver_options* opts,
                                       double* out);
/* csv: snr_db,asymptotic,mc_mean,mc_se; the report adds z-scores and the
 * monotonicity of the asymptotic SINR in the noise level. Either may be NULL. */
specden_status specden_sinr_sweep(const specden_channel* chan, const double* snr_db, size_t count, int32_t trials,
                                  uint64_t seed, const specden_solver_options* opts, char** csv, char** report_json);
/* correlation: "identity" or "exponential" (q used); p must be below n. */
specden_status specden_zf_check(int64_t p, int64_t n, const char* correlation, double q, const char* distribution,
                                int32_t trials, uint64_t seed, const specden_solver_options* opts, char** report_json,
                                double* min_eig);

#ifdef __cplusplus
}
#endif

#endif
