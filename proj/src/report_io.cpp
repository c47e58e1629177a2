#include "specden/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "specden/error.hpp"

namespace specden {

namespace {

using ojson = nlohmann::ordered_json;

ojson num(double x) {
    if (!std::isfinite(x)) return nullptr;
    return x;
}

ojson complex_json(cplx z) { return {{"re", num(z.real())}, {"im", num(z.imag())}}; }

ojson complex_vector(const VectorXcd& v) {
    ojson re = ojson::array();
    ojson im = ojson::array();
    for (Index i = 0; i < v.size(); ++i) {
        re.push_back(num(v(i).real()));
        im.push_back(num(v(i).imag()));
    }
    return {{"re", re}, {"im", im}};
}

ojson real_vector(const std::vector<double>& v) {
    ojson out = ojson::array();
    for (double x : v) out.push_back(num(x));
    return out;
}

ojson intervals_json(const std::vector<Interval>& ivs) {
    ojson out = ojson::array();
    for (const auto& iv : ivs) out.push_back(ojson::array({num(iv.a), num(iv.b)}));
    return out;
}

std::string finish(const ojson& doc) { return doc.dump(2) + "\n"; }

} // namespace

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string density_csv(const DensityProfile& profile, const std::vector<Index>& columns) {
    if (!columns.empty() && !profile.has_measures())
        throw InvalidArgument("per-measure columns requested from a profile without measures");
    for (Index j : columns)
        if (j < 0 || j >= profile.mu->rows()) throw InvalidArgument("measure column out of range");
    std::ostringstream os;
    os << "x,lsd";
    for (Index j : columns) os << ",mu_" << j + 1 << ",mu_tilde_" << j + 1;
    os << "\n";
    for (Index k = 0; k < profile.size(); ++k) {
        os << format_double(profile.grid(k)) << ',' << format_double(profile.lsd(k));
        for (Index j : columns)
            os << ',' << format_double((*profile.mu)(j, k)) << ',' << format_double((*profile.mu_tilde)(j, k));
        os << "\n";
    }
    return os.str();
}

std::string eigenvalues_csv(const std::vector<VectorXd>& per_trial) {
    std::ostringstream os;
    os << "trial,index,value\n";
    for (std::size_t t = 0; t < per_trial.size(); ++t)
        for (Index i = 0; i < per_trial[t].size(); ++i)
            os << t << ',' << i + 1 << ',' << format_double(per_trial[t](i)) << "\n";
    return os.str();
}

std::string sinr_csv(const std::vector<SinrPoint>& points) {
    std::ostringstream os;
    os << "snr_db,asymptotic,mc_mean,mc_se\n";
    for (const auto& pt : points)
        os << format_double(pt.snr_db) << ',' << format_double(pt.asymptotic) << ',' << format_double(pt.mc_mean)
           << ',' << format_double(pt.mc_se) << "\n";
    return os.str();
}

std::string solution_json(const Solution& sol, bool include_vectors) {
    ojson doc;
    doc["z"] = complex_json(sol.z);
    doc["m_n"] = complex_json(sol.m_n);
    doc["iterations"] = sol.iterations;
    doc["residual"] = num(sol.residual);
    doc["n"] = sol.delta.size();
    if (include_vectors) {
        doc["delta"] = complex_vector(sol.delta);
        doc["delta_tilde"] = complex_vector(sol.delta_tilde);
    }
    return finish(doc);
}

std::string assumption_report_json(const AssumptionReport& report) {
    ojson doc;
    doc["ok"] = report.ok();
    doc["ratio_p_n"] = num(report.ratio_p_n);
    doc["min_trace_ratio"] = num(report.min_trace_ratio);
    doc["max_corr_norm"] = num(report.max_corr_norm);
    doc["mean_norm"] = num(report.mean_norm);
    ojson v = ojson::array();
    for (const auto& x : report.violations)
        v.push_back({{"assumption", x.assumption}, {"label", x.label}, {"value", num(x.value)}, {"bound", num(x.bound)}});
    doc["violations"] = v;
    return finish(doc);
}

std::string support_json(const SupportSet& support) {
    ojson doc;
    doc["intervals"] = intervals_json(support.intervals);
    doc["right_endpoint"] = num(support.right_endpoint);
    doc["threshold"] = num(support.threshold);
    doc["v"] = num(support.v);
    doc["gaps"] = intervals_json(support.gaps());
    return finish(doc);
}

std::string inclusion_json(const InclusionReport& report) {
    ojson doc;
    doc["ok"] = report.ok();
    doc["threshold"] = num(report.threshold);
    doc["checked"] = report.checked;
    ojson v = ojson::array();
    for (const auto& x : report.violations)
        v.push_back({{"measure", x.measure}, {"column", x.column + 1}, {"x", num(x.x)}, {"value", num(x.value)}});
    doc["violations"] = v;
    return finish(doc);
}

std::string edge_gap_json(const EdgeGapReport& report) {
    ojson doc;
    doc["interval"] = ojson::array({num(report.interval.a), num(report.interval.b)});
    doc["points"] = report.points;
    doc["min_abs_delta_tilde"] = num(report.min_abs_delta_tilde);
    doc["argmin_delta_tilde"] = num(report.argmin_delta_tilde);
    doc["min_abs_one_plus_delta"] = num(report.min_abs_one_plus_delta);
    doc["argmin_one_plus_delta"] = num(report.argmin_one_plus_delta);
    doc["conclusive"] = report.conclusive();
    doc["inconclusive"] = real_vector(report.inconclusive);
    return finish(doc);
}

std::string trial_report_json(const TrialReport& report) {
    ojson doc;
    doc["interval"] = ojson::array({num(report.interval.a), num(report.interval.b)});
    doc["trials"] = report.trials;
    doc["escapes"] = report.escapes;
    doc["escape_counts"] = report.escape_counts;
    doc["max_eig"] = real_vector(report.max_eig);
    doc["min_eig"] = real_vector(report.min_eig);
    doc["ks_distance"] = report.ks_distance ? num(*report.ks_distance) : ojson(nullptr);
    return finish(doc);
}

std::string largest_eigenvalue_json(const LargestEigenvalueSummary& summary) {
    ojson doc;
    doc["trials"] = summary.trials;
    doc["max"] = num(summary.max);
    doc["mean"] = num(summary.mean);
    doc["right_endpoint"] = num(summary.right_endpoint);
    doc["per_trial"] = real_vector(summary.per_trial);
    return finish(doc);
}

std::string resolvent_trial_json(const ResolventTrialResult& result) {
    ojson doc;
    doc["trials"] = result.trials;
    doc["mc_mean"] = complex_json(result.mc_mean);
    doc["mc_se"] = num(result.mc_se);
    doc["deterministic_value"] = complex_json(result.deterministic_value);
    doc["z_score"] = num(result.z_score);
    doc["mean_abs_gap"] = num(result.mean_abs_gap);
    return finish(doc);
}

std::string zf_report_json(const ZfReport& report) {
    ojson doc;
    doc["trials"] = report.trials;
    doc["min_over_trials"] = num(report.min_over_trials);
    doc["mean_min_eig"] = num(report.mean_min_eig);
    doc["analytic_floor_estimate"] = num(report.analytic_floor_estimate);
    doc["per_trial"] = real_vector(report.per_trial);
    return finish(doc);
}

std::string density_summary_json(const DensityProfile& profile) {
    ojson doc;
    doc["points"] = profile.size();
    doc["lo"] = profile.size() ? num(profile.grid(0)) : ojson(nullptr);
    doc["hi"] = profile.size() ? num(profile.grid(profile.size() - 1)) : ojson(nullptr);
    doc["v"] = num(profile.v);
    doc["lsd_atom"] = num(profile.lsd_atom);
    const VectorXd cdf = lsd_cdf(profile);
    doc["mass"] = cdf.size() ? num(cdf(cdf.size() - 1)) : ojson(0.0);
    if (profile.has_measures()) {
        std::vector<double> mu_mass;
        std::vector<double> mut_mass;
        for (Index j = 0; j < profile.mu->rows(); ++j) {
            double a = profile.mu_atom(j);
            double b = profile.mu_tilde_atom(j);
            for (Index k = 0; k + 1 < profile.size(); ++k) {
                const double h = profile.grid(k + 1) - profile.grid(k);
                a += 0.5 * h * ((*profile.mu)(j, k) + (*profile.mu)(j, k + 1));
                b += 0.5 * h * ((*profile.mu_tilde)(j, k) + (*profile.mu_tilde)(j, k + 1));
            }
            mu_mass.push_back(a);
            mut_mass.push_back(b);
        }
        doc["mu_mass"] = real_vector(mu_mass);
        doc["mu_tilde_mass"] = real_vector(mut_mass);
    }
    return finish(doc);
}

} // namespace specden
