#include "specden/specden.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include <json.hpp>

#include "specden/error.hpp"
#include "specden/fixedpoint.hpp"
#include "specden/mimo.hpp"
#include "specden/model_io.hpp"
#include "specden/montecarlo.hpp"
#include "specden/parallel.hpp"
#include "specden/report_io.hpp"
#include "specden/spectrum.hpp"

using namespace specden;
using ojson = nlohmann::ordered_json;

struct specden_model {
    std::unique_ptr<ModelSpec> spec;
    std::unique_ptr<FixedPointSystem> system;

    explicit specden_model(ModelSpec m)
        : spec(std::make_unique<ModelSpec>(std::move(m))), system(std::make_unique<FixedPointSystem>(*spec)) {}
};

struct specden_solution {
    Solution sol;
};

struct specden_density {
    DensityProfile profile;
};

struct specden_support {
    SupportSet set;
};

struct specden_channel {
    RicianChannelSpec chan;
};

namespace {

thread_local std::string last_error;

specden_status status_of(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Structural:
    case ErrorKind::InvalidArgument: return SPECDEN_ERR_INPUT;
    case ErrorKind::NonConvergence:
    case ErrorKind::NumericalDomain: return SPECDEN_ERR_NUMERIC;
    case ErrorKind::Precondition: return SPECDEN_ERR_PRECONDITION;
    }
    return SPECDEN_ERR_INTERNAL;
}

template <typename F>
specden_status guarded(F&& body) {
    try {
        last_error.clear();
        body();
        return SPECDEN_OK;
    } catch (const Error& e) {
        last_error = e.what();
        return status_of(e.kind());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return SPECDEN_ERR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return SPECDEN_ERR_INTERNAL;
    } catch (...) {
        last_error = "unknown failure";
        return SPECDEN_ERR_INTERNAL;
    }
}

void require(const void* ptr, const char* what) {
    if (!ptr) throw InvalidArgument(std::string(what) + " must not be null");
}

char* dup(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void emit(char** out, const std::string& s) {
    if (out) *out = dup(s);
}

SolverOptions options(const specden_solver_options* o) {
    SolverOptions opts;
    if (o) {
        opts.tol = o->tol;
        opts.max_iter = o->max_iter;
        opts.damping = o->damping;
        opts.anderson_depth = o->anderson_depth;
    }
    opts.check();
    return opts;
}

ElementDistribution distribution(const char* name) {
    return ElementDistribution::parse(name ? name : "complex-gaussian");
}

ojson parsed(const std::string& s) { return ojson::parse(s); }

} // namespace

extern "C" {

const char* specden_version(void) { return "0.1.0"; }

const char* specden_last_error(void) { return last_error.c_str(); }

void specden_string_free(char* s) { std::free(s); }

void specden_set_threads(int32_t threads) { set_thread_count(threads < 1 ? 1 : threads); }

int32_t specden_threads(void) { return thread_count(); }

specden_solver_options specden_solver_options_default(void) {
    const SolverOptions d;
    return {d.tol, d.max_iter, d.damping, d.anderson_depth};
}

specden_bounds specden_bounds_default(void) {
    const AdmissibleRanges r;
    return {r.min_ratio, r.max_ratio, r.min_trace_ratio, r.max_corr_norm, r.max_mean_norm};
}

specden_status specden_model_load_file(const char* path, specden_model** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new specden_model(load_model(path));
    });
}

specden_status specden_model_load_json(const char* text, specden_model** out) {
    return guarded([&] {
        require(text, "text");
        require(out, "out");
        *out = new specden_model(parse_model(text));
    });
}

specden_status specden_model_preset(const char* name, uint64_t seed, int64_t p, int64_t n, specden_model** out) {
    return guarded([&] {
        require(name, "name");
        require(out, "out");
        std::map<std::string, double> params;
        if (p > 0) params["p"] = static_cast<double>(p);
        if (n > 0) params["n"] = static_cast<double>(n);
        *out = new specden_model(build_constructor(name, params, seed));
    });
}

void specden_model_free(specden_model* model) { delete model; }

int64_t specden_model_p(const specden_model* model) { return model ? model->spec->p() : 0; }

int64_t specden_model_n(const specden_model* model) { return model ? model->spec->n() : 0; }

double specden_model_spectral_bound(const specden_model* model) {
    if (!model) return 0.0;
    const ModelSpec& m = *model->spec;
    const CorrelationSet& cs = m.correlations();
    const double n = static_cast<double>(m.n());
    double row = 0.0;
    if (cs.is_jointly_diagonal()) {
        row = cs.spectra().rowwise().mean().maxCoeff();
    } else {
        MatrixXcd avg = MatrixXcd::Zero(m.p(), m.p());
        for (Index j = 0; j < m.n(); ++j) avg += cs.matrix(j);
        row = Eigen::SelfAdjointEigenSolver<MatrixXcd>(avg / n, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    }
    double column = 0.0;
    for (Index j = 0; j < m.n(); ++j) column = std::max(column, cs.trace(j) / n);
    const double a = m.mean().size() ? Eigen::JacobiSVD<MatrixXcd>(m.mean()).singularValues()(0) : 0.0;
    const double edge = a + std::sqrt(std::max(row, 0.0)) + std::sqrt(column);
    return 1.2 * edge * edge;
}

specden_status specden_model_to_json(const specden_model* model, int explicit_form, char** out) {
    return guarded([&] {
        require(model, "model");
        emit(out, model_to_json(*model->spec, explicit_form != 0) + "\n");
    });
}

specden_status specden_model_validate(const specden_model* model, const specden_bounds* bounds, char** report_json,
                                      int* ok) {
    return guarded([&] {
        require(model, "model");
        AdmissibleRanges r;
        if (bounds) r = {bounds->min_ratio, bounds->max_ratio, bounds->min_trace_ratio, bounds->max_corr_norm,
                         bounds->max_mean_norm};
        const AssumptionReport rep = validate(*model->spec, r);
        emit(report_json, assumption_report_json(rep));
        if (ok) *ok = rep.ok() ? 1 : 0;
    });
}

specden_status specden_solve(const specden_model* model, double re, double im, const specden_solver_options* opts,
                             specden_solution** out) {
    return guarded([&] {
        require(model, "model");
        require(out, "out");
        auto sol = std::make_unique<specden_solution>();
        sol->sol = model->system->solve(SpectralPoint(re, im), options(opts));
        *out = sol.release();
    });
}

void specden_solution_free(specden_solution* sol) { delete sol; }

void specden_solution_m_n(const specden_solution* sol, double* re, double* im) {
    if (!sol) return;
    if (re) *re = sol->sol.m_n.real();
    if (im) *im = sol->sol.m_n.imag();
}

int32_t specden_solution_iterations(const specden_solution* sol) { return sol ? sol->sol.iterations : 0; }

double specden_solution_residual(const specden_solution* sol) { return sol ? sol->sol.residual : 0.0; }

int64_t specden_solution_n(const specden_solution* sol) { return sol ? sol->sol.delta.size() : 0; }

void specden_solution_delta(const specden_solution* sol, double* re, double* im) {
    if (!sol) return;
    for (Index j = 0; j < sol->sol.delta.size(); ++j) {
        if (re) re[j] = sol->sol.delta(j).real();
        if (im) im[j] = sol->sol.delta(j).imag();
    }
}

void specden_solution_delta_tilde(const specden_solution* sol, double* re, double* im) {
    if (!sol) return;
    for (Index j = 0; j < sol->sol.delta_tilde.size(); ++j) {
        if (re) re[j] = sol->sol.delta_tilde(j).real();
        if (im) im[j] = sol->sol.delta_tilde(j).imag();
    }
}

specden_status specden_solution_trace(const specden_solution* sol, const double* c_re, const double* c_im, double* re,
                                      double* im) {
    return guarded([&] {
        require(sol, "solution");
        require(c_re, "c_re");
        const Index p = sol->sol.theta.rows();
        MatrixXcd c(p, p);
        for (Index r = 0; r < p; ++r)
            for (Index k = 0; k < p; ++k) c(r, k) = cplx(c_re[r * p + k], c_im ? c_im[r * p + k] : 0.0);
        const cplx t = trace_functional(sol->sol, c);
        if (re) *re = t.real();
        if (im) *im = t.imag();
    });
}

specden_status specden_solution_to_json(const specden_solution* sol, int include_vectors, char** out) {
    return guarded([&] {
        require(sol, "solution");
        emit(out, solution_json(sol->sol, include_vectors != 0));
    });
}

specden_status specden_density_compute(const specden_model* model, const double* grid, size_t count, double v,
                                       int include_measures, const specden_solver_options* opts, specden_density** out) {
    return guarded([&] {
        require(model, "model");
        require(grid, "grid");
        require(out, "out");
        auto d = std::make_unique<specden_density>();
        d->profile = density(*model->system, std::span<const double>(grid, count), v, include_measures != 0,
                             options(opts));
        *out = d.release();
    });
}

void specden_density_free(specden_density* d) { delete d; }

size_t specden_density_size(const specden_density* d) { return d ? static_cast<size_t>(d->profile.size()) : 0; }

void specden_density_lsd(const specden_density* d, double* out) {
    if (!d || !out) return;
    for (Index k = 0; k < d->profile.size(); ++k) out[k] = d->profile.lsd(k);
}

specden_status specden_density_to_csv(const specden_density* d, const int64_t* columns, size_t count, char** out) {
    return guarded([&] {
        require(d, "density");
        std::vector<Index> cols;
        for (size_t k = 0; k < count; ++k) cols.push_back(static_cast<Index>(columns[k]));
        emit(out, density_csv(d->profile, cols));
    });
}

specden_status specden_density_summary(const specden_density* d, char** out_json) {
    return guarded([&] {
        require(d, "density");
        emit(out_json, density_summary_json(d->profile));
    });
}

specden_status specden_density_ks(const specden_model* model, const specden_density* d, const char* dist,
                                  int32_t trials, uint64_t seed, double* mean_ks, double* max_ks) {
    return guarded([&] {
        require(model, "model");
        require(d, "density");
        if (trials < 1) throw InvalidArgument("at least one trial is required");
        const Sampler sampler(*model->spec);
        const ElementDistribution law = distribution(dist);
        const VectorXd cdf = lsd_cdf(d->profile);
        std::vector<double> ks(static_cast<std::size_t>(trials));
        parallel_for(ks.size(), [&](std::size_t t) {
            const VectorXd eig = gram_eigenvalues(sampler.draw_sigma(law, seed, static_cast<std::uint32_t>(t)));
            ks[t] = ks_distance(eig, d->profile, cdf);
        });
        double sum = 0.0;
        double worst = 0.0;
        for (double k : ks) {
            sum += k;
            worst = std::max(worst, k);
        }
        if (mean_ks) *mean_ks = sum / static_cast<double>(trials);
        if (max_ks) *max_ks = worst;
    });
}

specden_status specden_support_detect(const specden_model* model, const specden_density* d, double threshold,
                                      double v_refine, const specden_solver_options* opts, specden_support** out) {
    return guarded([&] {
        require(model, "model");
        require(d, "density");
        require(out, "out");
        auto s = std::make_unique<specden_support>();
        s->set = detect_support(d->profile, threshold);
        if (v_refine > 0.0) s->set = refine_support_edges(*model->system, d->profile, s->set, v_refine, options(opts));
        *out = s.release();
    });
}

void specden_support_free(specden_support* s) { delete s; }

size_t specden_support_count(const specden_support* s) { return s ? s->set.intervals.size() : 0; }

void specden_support_interval(const specden_support* s, size_t k, double* a, double* b) {
    if (!s || k >= s->set.intervals.size()) return;
    if (a) *a = s->set.intervals[k].a;
    if (b) *b = s->set.intervals[k].b;
}

double specden_support_right_endpoint(const specden_support* s) { return s ? s->set.right_endpoint : 0.0; }

void specden_support_largest_gap(const specden_support* s, int include_origin, double* a, double* b, int* found) {
    if (found) *found = 0;
    if (!s) return;
    const auto& iv = s->set.intervals;
    double best = -1.0;
    Interval pick{};
    auto consider = [&](Interval g) {
        if (g.b - g.a > best) {
            best = g.b - g.a;
            pick = g;
        }
    };
    if (include_origin && !iv.empty() && iv.front().a > 0.0) consider({0.0, iv.front().a});
    for (std::size_t k = 1; k < iv.size(); ++k) consider({iv[k - 1].b, iv[k].a});
    if (best < 0.0) return;
    if (a) *a = pick.a;
    if (b) *b = pick.b;
    if (found) *found = 1;
}

specden_status specden_support_to_json(const specden_support* s, char** out) {
    return guarded([&] {
        require(s, "support");
        emit(out, support_json(s->set));
    });
}

specden_status specden_support_inclusion(const specden_density* d, const specden_support* s, double threshold,
                                         char** report_json, int* ok) {
    return guarded([&] {
        require(d, "density");
        require(s, "support");
        const InclusionReport rep = check_support_inclusion(d->profile, s->set, threshold);
        emit(report_json, inclusion_json(rep));
        if (ok) *ok = rep.ok() ? 1 : 0;
    });
}

specden_status specden_edge_gap(const specden_model* model, const specden_support* s, double a, double b,
                                int64_t points, const specden_solver_options* opts, char** report_json,
                                double* minimum) {
    return guarded([&] {
        require(model, "model");
        require(s, "support");
        const EdgeGapReport rep = edge_gap_condition(*model->system, {a, b}, static_cast<Index>(points), s->set,
                                                     options(opts));
        emit(report_json, edge_gap_json(rep));
        if (minimum) *minimum = rep.minimum();
    });
}

specden_status specden_sample_eigenvalues(const specden_model* model, const char* dist, uint64_t seed, uint32_t trial,
                                          double* out) {
    return guarded([&] {
        require(model, "model");
        require(out, "out");
        const EnsembleSample s = sample(*model->spec, distribution(dist), seed, trial);
        for (Index i = 0; i < s.eigenvalues.size(); ++i) out[i] = s.eigenvalues(i);
    });
}

specden_status specden_noeig(const specden_model* model, const specden_support* s, const char* dist, double a,
                             double b, int32_t trials, uint64_t seed, int check, int64_t points,
                             const specden_solver_options* opts, char** report_json, int32_t* escapes) {
    return guarded([&] {
        require(model, "model");
        const ElementDistribution law = distribution(dist);
        const Interval probe{a, b};
        ojson doc;
        doc["distribution"] = law.name();
        doc["certified"] = check != 0;
        TrialReport rep;
        if (check) {
            require(s, "support");
            if (s->set.overlaps(probe))
                throw PreconditionError("probe interval [" + format_double(a) + ", " + format_double(b) +
                                        "] overlaps the detected support");
            const EdgeGapReport gap =
                edge_gap_condition(*model->system, probe, static_cast<Index>(points), s->set, options(opts));
            doc["edge_gap"] = parsed(edge_gap_json(gap));
            rep = no_eigenvalue_trial(*model->spec, law, probe, trials, seed, s->set, gap);
        } else {
            rep = count_escapes(*model->spec, law, probe, trials, seed);
        }
        doc["trial"] = parsed(trial_report_json(rep));
        emit(report_json, doc.dump(2) + "\n");
        if (escapes) *escapes = rep.escapes;
    });
}

specden_status specden_largest_eigenvalue(const specden_model* model, const char* dist, int32_t trials, uint64_t seed,
                                          double right_endpoint, char** report_json, double* max_eig) {
    return guarded([&] {
        require(model, "model");
        const auto sum = largest_eigenvalue_stat(*model->spec, distribution(dist), trials, seed, right_endpoint);
        emit(report_json, largest_eigenvalue_json(sum));
        if (max_eig) *max_eig = sum.max;
    });
}

specden_status specden_resolvent_trial(const specden_model* model, const char* dist, double re, double im,
                                       const char* functional, int32_t trials, uint64_t seed,
                                       const specden_solver_options* opts, char** report_json, double* z_score) {
    return guarded([&] {
        require(model, "model");
        require(functional, "functional");
        const Index p = model->spec->p();
        ResolventFunctional f;
        const std::string kind = functional;
        if (kind == "trace") {
            f = ResolventFunctional::trace(MatrixXcd::Identity(p, p));
        } else if (kind == "bilinear") {
            VectorXcd e1 = VectorXcd::Zero(p);
            e1(0) = 1.0;
            f = ResolventFunctional::bilinear(e1, e1);
        } else {
            throw InvalidArgument("unknown functional '" + kind + "' (expected trace or bilinear)");
        }
        const auto r =
            resolvent_convergence_trial(*model->spec, distribution(dist), SpectralPoint(re, im), f, trials, seed,
                                        options(opts));
        emit(report_json, resolvent_trial_json(r));
        if (z_score) *z_score = r.z_score;
    });
}

specden_status specden_channel_fig5(int64_t p, int64_t n, double tau, specden_channel** out) {
    return guarded([&] {
        require(out, "out");
        auto c = std::make_unique<specden_channel>();
        c->chan = make_fig5_channel(p > 0 ? p : 64, n > 0 ? n : 32, tau);
        *out = c.release();
    });
}

void specden_channel_free(specden_channel* chan) { delete chan; }

specden_status specden_sinr_asymptotic(const specden_channel* chan, double sigma2, const specden_solver_options* opts,
                                       double* out) {
    return guarded([&] {
        require(chan, "channel");
        require(out, "out");
        *out = sinr_lmmse_asymptotic(chan->chan, sigma2, options(opts));
    });
}

specden_status specden_sinr_sweep(const specden_channel* chan, const double* snr_db, size_t count, int32_t trials,
                                  uint64_t seed, const specden_solver_options* opts, char** csv, char** report_json) {
    return guarded([&] {
        require(chan, "channel");
        require(snr_db, "snr_db");
        const std::vector<double> snr(snr_db, snr_db + count);
        const auto pts = sinr_sweep(chan->chan, snr, trials, seed, options(opts));
        ojson doc;
        doc["trials"] = trials;
        doc["tau"] = chan->chan.tau;
        doc["p"] = chan->chan.p;
        doc["n"] = chan->chan.interferers();
        ojson arr = ojson::array();
        double max_z = 0.0;
        for (const auto& pt : pts) {
            const double z = pt.mc_se > 0.0 ? std::abs(pt.asymptotic - pt.mc_mean) / pt.mc_se : 0.0;
            max_z = std::max(max_z, z);
            arr.push_back({{"snr_db", pt.snr_db},
                           {"sigma2", db_to_sigma2(pt.snr_db)},
                           {"asymptotic", pt.asymptotic},
                           {"mc_mean", pt.mc_mean},
                           {"mc_se", pt.mc_se},
                           {"z_score", z}});
        }
        // SINR against sigma2: sort by noise level and require a strict decrease.
        std::vector<SinrPoint> by_noise = pts;
        std::sort(by_noise.begin(), by_noise.end(),
                  [](const SinrPoint& l, const SinrPoint& r) { return l.snr_db > r.snr_db; });
        bool monotone = true;
        for (std::size_t k = 1; k < by_noise.size(); ++k)
            if (!(by_noise[k].asymptotic < by_noise[k - 1].asymptotic)) monotone = false;
        doc["points"] = arr;
        doc["max_z_score"] = max_z;
        doc["monotone_in_sigma2"] = monotone;
        emit(csv, sinr_csv(pts));
        emit(report_json, doc.dump(2) + "\n");
    });
}

specden_status specden_zf_check(int64_t p, int64_t n, const char* correlation, double q, const char* dist,
                                int32_t trials, uint64_t seed, const specden_solver_options* opts, char** report_json,
                                double* min_eig) {
    return guarded([&] {
        require(correlation, "correlation");
        if (p < 1 || n < 1) throw InvalidArgument("zf check needs p, n >= 1");
        const std::string kind = correlation;
        RayleighChannelSpec chan;
        chan.p = p;
        for (int64_t j = 1; j <= n; ++j) {
            if (kind == "identity")
                chan.c.push_back(MatrixXcd::Identity(p, p));
            else if (kind == "exponential")
                chan.c.push_back(exponential_correlation(p, q));
            else if (kind == "exponential-graded")
                chan.c.push_back(exponential_correlation(p, q + 0.2 * static_cast<double>(j) / static_cast<double>(n)));
            else
                throw InvalidArgument("unknown correlation '" + kind + "'");
        }
        const ZfReport rep = zf_min_eig_check(chan, distribution(dist), trials, seed, options(opts));
        emit(report_json, zf_report_json(rep));
        if (min_eig) *min_eig = rep.min_over_trials;
    });
}

} // extern "C"
