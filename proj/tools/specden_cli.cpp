#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "specden/specden.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kInternal = 1, kInput = 2, kNumeric = 3 };

struct Failure {
    int code;
    std::string message;
};

[[noreturn]] void input_error(const std::string& msg) { throw Failure{kInput, msg}; }

void check(specden_status s) {
    if (s == SPECDEN_OK) return;
    const int code = (s == SPECDEN_ERR_NUMERIC) ? kNumeric
                     : (s == SPECDEN_ERR_INPUT || s == SPECDEN_ERR_PRECONDITION) ? kInput
                                                                                  : kInternal;
    throw Failure{code, specden_last_error()};
}

struct CString {
    char* p = nullptr;
    ~CString() { specden_string_free(p); }
    std::string str() const { return p ? std::string(p) : std::string(); }
};

template <typename T, void (*Free)(T*)>
struct Handle {
    T* p = nullptr;
    ~Handle() { Free(p); }
};

using Model = Handle<specden_model, specden_model_free>;
using Density = Handle<specden_density, specden_density_free>;
using Support = Handle<specden_support, specden_support_free>;
using Solution = Handle<specden_solution, specden_solution_free>;
using Channel = Handle<specden_channel, specden_channel_free>;

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Every option is a named setting: readable from a config file, echoed to the
// manifest, and overridable only by the command line.
class Settings {
public:
    template <typename T>
    CLI::Option* add(CLI::App* app, const std::string& key, T& target, const std::string& help) {
        CLI::Option* opt = app->add_option("--" + key, target, help)->capture_default_str();
        register_setting(key, opt, target);
        return opt;
    }

    CLI::Option* flag(CLI::App* app, const std::string& key, bool& target, const std::string& help) {
        CLI::Option* opt =
            app->add_flag("--" + key + ",!--no-" + key, target, help + (target ? " (default: on)" : " (default: off)"));
        register_setting(key, opt, target);
        return opt;
    }

    bool given(const std::string& key) const {
        const auto it = items_.find(key);
        return it != items_.end() && (it->second.opt->count() > 0 || it->second.from_config);
    }

    template <typename T>
    void fallback(const std::string& key, T& target, T value) {
        if (!given(key)) target = value;
    }

    void load(const json& doc, const std::string& origin) {
        for (const auto& [key, value] : doc.items()) {
            auto it = items_.find(key);
            if (it == items_.end()) input_error(origin + ": unknown config key '" + key + "'");
            if (it->second.opt->count() > 0) continue;
            try {
                it->second.load(value);
            } catch (const json::exception&) {
                input_error(origin + ": config key '" + key + "' has the wrong type");
            }
            it->second.from_config = true;
        }
    }

    json resolved() const {
        json out = json::object();
        for (const auto& key : order_) out[key] = items_.at(key).dump();
        return out;
    }

private:
    struct Item {
        CLI::Option* opt;
        std::function<void(const json&)> load;
        std::function<json()> dump;
        bool from_config = false;
    };

    template <typename T>
    void register_setting(const std::string& key, CLI::Option* opt, T& target) {
        items_[key] = Item{opt, [&target](const json& v) { target = v.get<T>(); }, [&target] { return json(target); }};
        order_.push_back(key);
    }

    std::map<std::string, Item> items_;
    std::vector<std::string> order_;
};

struct Common {
    std::string preset;
    std::string model;
    json model_document;
    std::uint64_t seed = 0;
    std::int64_t p = 0;
    std::int64_t n = 0;
    int threads = 0;
    std::string out_dir = ".";
    std::string config;
    double tol = 0;
    int max_iter = 0;
    double damping = 0;
    int anderson_depth = 0;

    specden_solver_options options() const { return {tol, max_iter, damping, anderson_depth}; }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) input_error("cannot read '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json read_json(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        input_error(path + ": malformed JSON (byte " + std::to_string(e.byte) + ")");
    }
}

// Collects artifacts in memory and publishes them together; nothing is left
// behind when a run fails.
class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

    void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& f : files_) out.push_back(f.first);
        return out;
    }

    void publish() {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) input_error("cannot create output directory '" + dir_.string() + "'");
        std::vector<fs::path> staged;
        try {
            for (const auto& [name, content] : files_) {
                const fs::path tmp = dir_ / (name + ".partial");
                std::ofstream out(tmp, std::ios::binary);
                staged.push_back(tmp);
                if (!(out << content) || !out.flush()) throw Failure{kInternal, "cannot write " + tmp.string()};
            }
            for (std::size_t k = 0; k < files_.size(); ++k) fs::rename(staged[k], dir_ / files_[k].first);
        } catch (...) {
            for (const auto& f : staged) fs::remove(f, ec);
            for (const auto& f : files_) fs::remove(dir_ / f.first, ec);
            throw;
        }
        for (const auto& f : files_) std::cout << "wrote " << (dir_ / f.first).string() << "\n";
    }

private:
    fs::path dir_;
    std::vector<std::pair<std::string, std::string>> files_;
};

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

const std::vector<std::string> kPresets = {"marchenko-pastur", "fig2", "fig3", "fig4", "fig5"};

// A manifest carries the model document it ran on; any model flag given on
// the command line rebuilds the model instead.
void open_model(Common& c, Model& m, bool cli_model, bool cli_override) {
    if (cli_model) {
        check(specden_model_load_file(c.model.c_str(), &m.p));
    } else if (!cli_override && !c.model_document.is_null()) {
        const std::string doc = c.model_document.dump();
        check(specden_model_load_json(doc.c_str(), &m.p));
    } else if (!c.model.empty()) {
        check(specden_model_load_file(c.model.c_str(), &m.p));
    } else {
        if (c.preset.empty()) input_error("a model is required: pass --model FILE or --preset NAME");
        check(specden_model_preset(c.preset.c_str(), c.seed, c.p, c.n, &m.p));
    }
    CString doc;
    check(specden_model_to_json(m.p, 0, &doc.p));
    c.model_document = json::parse(doc.str());
}

std::vector<double> parse_snr(const std::string& spec) {
    std::vector<double> out;
    auto number = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::logic_error&) {
            input_error("--snr: cannot parse '" + s + "'");
        }
    };
    if (spec.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(spec);
        for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
        if (parts.size() != 3) input_error("--snr expects start:step:stop");
        const double a = number(parts[0]), step = number(parts[1]), b = number(parts[2]);
        if (!(step > 0) || b < a) input_error("--snr needs a positive step and start <= stop");
        const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9)) + 1;
        for (long k = 0; k < count; ++k) out.push_back(a + static_cast<double>(k) * step);
    } else {
        std::stringstream ss(spec);
        for (std::string item; std::getline(ss, item, ',');) out.push_back(number(item));
    }
    if (out.empty()) input_error("--snr is empty");
    return out;
}

std::vector<double> grid(double lo, double hi, std::int64_t points) {
    if (points < 2) input_error("--points must be at least 2");
    if (!(hi > lo)) input_error("--hi must exceed --lo");
    std::vector<double> g(static_cast<std::size_t>(points));
    for (std::int64_t k = 0; k < points; ++k)
        g[static_cast<std::size_t>(k)] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
    return g;
}

struct GridSettings {
    double lo = 0.0;
    double hi = 0.0;
    std::int64_t points = 2000;
    double v = 1e-4;

    void add(Settings& s, CLI::App* app) {
        s.add(app, "lo", lo, "left end of the evaluation grid");
        s.add(app, "hi", hi, "right end of the grid (default: spectral bound of the model)");
        s.add(app, "points", points, "grid points");
        s.add(app, "v", v, "imaginary part used for Stieltjes inversion");
    }

    void resolve(Settings& s, const Model& m) {
        if (!s.given("hi")) hi = specden_model_spectral_bound(m.p);
    }
};

struct Run {
    std::string command;
    Settings settings;
    Common common;
    std::function<void(Run&, Outputs&)> body;
    bool cli_model = false;
    bool cli_preset = false;
    bool cli_override = false;
};

void add_common(Run& r, CLI::App* app, bool with_model) {
    Common& c = r.common;
    const specden_solver_options d = specden_solver_options_default();
    c.tol = d.tol;
    c.max_iter = d.max_iter;
    c.damping = d.damping;
    c.anderson_depth = d.anderson_depth;
    Settings& s = r.settings;
    app->add_option("--config", c.config, "replay a manifest or load a JSON config");
    if (with_model) {
        s.add(app, "preset", c.preset, "named model: marchenko-pastur, fig2, fig3, fig4, fig5")
            ->check(CLI::IsMember(kPresets));
        s.add(app, "model", c.model, "model JSON file");
        s.add(app, "p", c.p, "preset rows (0 keeps the preset value)");
        s.add(app, "n", c.n, "preset columns (0 keeps the preset value)");
    }
    s.add(app, "seed", c.seed, "seed for model construction and Monte Carlo streams");
    s.add(app, "threads", c.threads, "worker threads (fallback: SPECDEN_THREADS)");
    s.add(app, "out-dir", c.out_dir, "directory receiving artifacts and manifest.json");
    s.add(app, "tol", c.tol, "fixed-point tolerance");
    s.add(app, "max-iter", c.max_iter, "fixed-point iteration budget");
    s.add(app, "damping", c.damping, "fixed-point damping in (0, 1]");
    s.add(app, "anderson-depth", c.anderson_depth, "Anderson mixing depth (0 disables)");
}

void resolve_threads(Run& r) {
    Common& c = r.common;
    if (!r.settings.given("threads")) {
        c.threads = 0;
        if (const char* env = std::getenv("SPECDEN_THREADS")) {
            try {
                c.threads = std::stoi(env);
            } catch (const std::logic_error&) {
                input_error("SPECDEN_THREADS is not an integer");
            }
        }
        if (c.threads <= 0) c.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    }
    if (c.threads < 1) input_error("--threads must be at least 1");
    specden_set_threads(c.threads);
}

json parse_report(const CString& s) { return json::parse(s.str()); }

// ---------------------------------------------------------------------------

void cmd_solve(CLI::App& root, std::vector<std::unique_ptr<Run>>& runs) {
    auto run = std::make_unique<Run>();
    Run& r = *run;
    r.command = "solve";
    CLI::App* app = root.add_subcommand("solve", "solve the fixed-point system at one spectral point");
    add_common(r, app, true);
    static double re = -1.0, im = 0.0;
    static bool vectors = false;
    r.settings.add(app, "z-re", re, "real part of z");
    r.settings.add(app, "z-im", im, "imaginary part of z");
    r.settings.flag(app, "vectors", vectors, "include delta and delta_tilde");
    r.body = [](Run& r, Outputs& out) {
        Model m;
        open_model(r.common, m, r.cli_model, r.cli_override);
        const specden_solver_options opts = r.common.options();
        Solution sol;
        check(specden_solve(m.p, re, im, &opts, &sol.p));
        CString js;
        check(specden_solution_to_json(sol.p, vectors ? 1 : 0, &js.p));
        out.add("solve.json", js.str());
    };
    runs.push_back(std::move(run));
}

void cmd_density(CLI::App& root, std::vector<std::unique_ptr<Run>>& runs) {
    auto run = std::make_unique<Run>();
    Run& r = *run;
    r.command = "density";
    CLI::App* app = root.add_subcommand("density", "limiting spectral density on a grid");
    add_common(r, app, true);
    static GridSettings g;
    static std::vector<std::int64_t> measures;
    static std::int64_t esd_draws = 0;
    static std::string distribution;
    g.add(r.settings, app);
    r.settings.add(app, "measures", measures, "1-based columns whose mu_j and mu_tilde_j are written")->delimiter(',');
    r.settings.add(app, "esd-draws", esd_draws, "Monte Carlo draws written to eigenvalues.csv");
    r.settings.add(app, "distribution", distribution, "entry law for the draws");
    r.body = [](Run& r, Outputs& out) {
        Model m;
        open_model(r.common, m, r.cli_model, r.cli_override);
        g.resolve(r.settings, m);
        r.settings.fallback("distribution", distribution,
                            std::string(r.common.preset == "fig4" ? "uniform-real" : "complex-gaussian"));
        const auto xs = grid(g.lo, g.hi, g.points);
        std::vector<std::int64_t> cols;
        for (auto j : measures) {
            if (j < 1 || j > specden_model_n(m.p)) input_error("--measures: column " + std::to_string(j) + " out of range");
            cols.push_back(j - 1);
        }
        const specden_solver_options opts = r.common.options();
        Density d;
        check(specden_density_compute(m.p, xs.data(), xs.size(), g.v, cols.empty() ? 0 : 1, &opts, &d.p));
        CString csv, summary;
        check(specden_density_to_csv(d.p, cols.data(), cols.size(), &csv.p));
        check(specden_density_summary(d.p, &summary.p));
        json report = parse_report(summary);
        if (esd_draws > 0) {
            const auto p = static_cast<std::size_t>(specden_model_p(m.p));
            std::vector<double> eig(p);
            std::string ecsv = "trial,index,value\n";
            for (std::int64_t t = 0; t < esd_draws; ++t) {
                check(specden_sample_eigenvalues(m.p, distribution.c_str(), r.common.seed, static_cast<uint32_t>(t),
                                                 eig.data()));
                for (std::size_t i = 0; i < p; ++i)
                    ecsv += std::to_string(t) + "," + std::to_string(i + 1) + "," + fmt(eig[i]) + "\n";
            }
            double mean_ks = 0, max_ks = 0;
            check(specden_density_ks(m.p, d.p, distribution.c_str(), static_cast<int32_t>(esd_draws), r.common.seed,
                                     &mean_ks, &max_ks));
            report["esd_draws"] = esd_draws;
            report["mean_ks"] = mean_ks;
            report["max_ks"] = max_ks;
            out.add("eigenvalues.csv", ecsv);
        }
        out.add("density.csv", csv.str());
        out.add("density.json", report.dump(2) + "\n");
    };
    runs.push_back(std::move(run));
}

struct SupportSettings {
    double threshold = 1e-3;
    double v_refine = 1e-5;

    void add(Settings& s, CLI::App* app) {
        s.add(app, "threshold", threshold, "density level defining the support");
        s.add(app, "v-refine", v_refine, "height for edge refinement (<= 0 skips it)");
    }
};

void detect(const Run& r, const Model& m, const GridSettings& g, const SupportSettings& ss, bool measures, Density& d,
            Support& s) {
    const auto xs = grid(g.lo, g.hi, g.points);
    const specden_solver_options opts = r.common.options();
    check(specden_density_compute(m.p, xs.data(), xs.size(), g.v, measures ? 1 : 0, &opts, &d.p));
    check(specden_support_detect(m.p, d.p, ss.threshold, ss.v_refine, &opts, &s.p));
}

void cmd_support(CLI::App& root, std::vector<std::unique_ptr<Run>>& runs) {
    auto run = std::make_unique<Run>();
    Run& r = *run;
    r.command = "support";
    CLI::App* app = root.add_subcommand("support", "support intervals of the limiting spectral distribution");
    add_common(r, app, true);
    static GridSettings g;
    static SupportSettings ss;
    static bool inclusion = false;
    g.add(r.settings, app);
    ss.add(r.settings, app);
    r.settings.flag(app, "inclusion", inclusion, "check that every mu_j and mu_tilde_j lives inside the support");
    r.body = [](Run& r, Outputs& out) {
        Model m;
        open_model(r.common, m, r.cli_model, r.cli_override);
        g.resolve(r.settings, m);
        Density d;
        Support s;
        detect(r, m, g, ss, inclusion, d, s);
        CString js;
        check(specden_support_to_json(s.p, &js.p));
        out.add("support.json", js.str());
        if (inclusion) {
            CString rep;
            int ok = 0;
            check(specden_support_inclusion(d.p, s.p, ss.threshold, &rep.p, &ok));
            out.add("inclusion.json", rep.str());
        }
    };
    runs.push_back(std::move(run));
}

void cmd_noeig(CLI::App& root, std::vector<std::unique_ptr<Run>>& runs) {
    auto run = std::make_unique<Run>();
    Run& r = *run;
    r.command = "noeig";
    CLI::App* app = root.add_subcommand("noeig", "count eigenvalues falling in an interval outside the support");
    add_common(r, app, true);
    static GridSettings g;
    static SupportSettings ss;
    static std::vector<double> interval;
    static double shrink = 0.1;
    static bool include_origin = false;
    static bool certify = true;
    static std::int64_t trials = 100;
    static std::int64_t edge_points = 100;
    static std::string distribution;
    g.add(r.settings, app);
    ss.add(r.settings, app);
    r.settings.add(app, "interval", interval, "probe a,b (default: largest support gap, shrunk)")
        ->delimiter(',')
        ->expected(0, 2);
    r.settings.add(app, "shrink", shrink, "fraction of the gap removed on each side");
    r.settings.flag(app, "include-origin", include_origin, "let the gap (0, a_1) compete for the largest gap");
    r.settings.flag(app, "certify", certify, "require the edge-gap condition before sampling");
    r.settings.add(app, "trials", trials, "Monte Carlo trials");
    r.settings.add(app, "edge-points", edge_points, "nodes for the edge-gap condition");
    r.settings.add(app, "distribution", distribution, "entry law");
    r.body = [](Run& r, Outputs& out) {
        Model m;
        open_model(r.common, m, r.cli_model, r.cli_override);
        g.resolve(r.settings, m);
        r.settings.fallback("distribution", distribution,
                            std::string(r.common.preset == "fig4" ? "uniform-real" : "complex-gaussian"));
        if (!(shrink >= 0.0 && shrink < 0.5)) input_error("--shrink must lie in [0, 0.5)");
        if (trials < 1) input_error("--trials must be positive");
        if (!interval.empty() && interval.size() != 2) input_error("--interval expects a,b");
        json report;
        Density d;
        Support s;
        detect(r, m, g, ss, false, d, s);
        CString sj;
        check(specden_support_to_json(s.p, &sj.p));
        report["support"] = parse_report(sj);
        if (interval.empty()) {
            double a = 0, b = 0;
            int found = 0;
            specden_support_largest_gap(s.p, include_origin ? 1 : 0, &a, &b, &found);
            if (!found) input_error("the support has no gap; pass --interval");
            report["gap"] = {a, b};
            const double w = b - a;
            interval = {a + shrink * w, b - shrink * w};
        }
        const specden_solver_options opts = r.common.options();
        CString rep;
        int32_t escapes = 0;
        check(specden_noeig(m.p, s.p, distribution.c_str(), interval[0], interval[1], static_cast<int32_t>(trials),
                            r.common.seed, certify ? 1 : 0, edge_points, &opts, &rep.p, &escapes));
        json nr = parse_report(rep);
        for (auto& [k, v] : nr.items()) report[k] = v;
        report["escapes"] = escapes;
        out.add("noeig.json", report.dump(2) + "\n");
    };
    runs.push_back(std::move(run));
}

void cmd_sinr(CLI::App& root, std::vector<std::unique_ptr<Run>>& runs) {
    auto run = std::make_unique<Run>();
    Run& r = *run;
    r.command = "sinr";
    CLI::App* app = root.add_subcommand("sinr", "LMMSE SINR of the Rician uplink: deterministic equivalent vs simulation");
    add_common(r, app, false);
    static std::string preset = "fig5";
    static std::int64_t p = 0, n = 0;
    static double tau = 1.0;
    static std::string snr = "0:4:20";
    static std::int64_t trials = 1000;
    r.settings.add(app, "preset", preset, "channel preset")->check(CLI::IsMember({"fig5"}));
    r.settings.add(app, "p", p, "antennas (0 keeps the preset value)");
    r.settings.add(app, "n", n, "interferers (0 keeps the preset value)");
    r.settings.add(app, "tau", tau, "Rician factor");
    r.settings.add(app, "snr", snr, "SNR list in dB: start:step:stop or comma separated");
    r.settings.add(app, "trials", trials, "Monte Carlo trials per SNR point");
    r.body = [](Run& r, Outputs& out) {
        const auto points = parse_snr(snr);
        if (trials < 2) input_error("--trials must be at least 2");
        if (!(tau >= 0.0)) input_error("--tau must be non-negative");
        Channel ch;
        check(specden_channel_fig5(p, n, tau, &ch.p));
        const specden_solver_options opts = r.common.options();
        CString csv, rep;
        check(specden_sinr_sweep(ch.p, points.data(), points.size(), static_cast<int32_t>(trials), r.common.seed, &opts,
                                 &csv.p, &rep.p));
        out.add("sinr.csv", csv.str());
        out.add("sinr.json", rep.str());
    };
    runs.push_back(std::move(run));
}

void cmd_zf(CLI::App& root, std::vector<std::unique_ptr<Run>>& runs) {
    auto run = std::make_unique<Run>();
    Run& r = *run;
    r.command = "zf";
    CLI::App* app = root.add_subcommand("zf", "smallest eigenvalue of H H^H for Rayleigh channels (ZF invertibility)");
    add_common(r, app, false);
    static std::int64_t p = 100, n = 200;
    static std::string correlation = "identity";
    static double q = 0.5;
    static std::int64_t trials = 100;
    static std::string distribution = "complex-gaussian";
    r.settings.add(app, "p", p, "length of each channel vector h_j (rows of H)");
    r.settings.add(app, "n", n, "number of channel vectors (columns of H), above p");
    r.settings.add(app, "correlation", correlation, "identity, exponential or exponential-graded")
        ->check(CLI::IsMember({"identity", "exponential", "exponential-graded"}));
    r.settings.add(app, "q", q, "exponential correlation coefficient");
    r.settings.add(app, "trials", trials, "Monte Carlo trials");
    r.settings.add(app, "distribution", distribution, "entry law");
    r.body = [](Run& r, Outputs& out) {
        const specden_solver_options opts = r.common.options();
        CString rep;
        double min_eig = 0;
        check(specden_zf_check(p, n, correlation.c_str(), q, distribution.c_str(), static_cast<int32_t>(trials),
                               r.common.seed, &opts, &rep.p, &min_eig));
        out.add("zf.json", rep.str());
    };
    runs.push_back(std::move(run));
}

void cmd_validate(CLI::App& root, std::vector<std::unique_ptr<Run>>& runs, int& validate_status) {
    auto run = std::make_unique<Run>();
    Run& r = *run;
    r.command = "validate";
    CLI::App* app = root.add_subcommand("validate", "check a model against the admissible ranges");
    add_common(r, app, true);
    r.body = [&validate_status](Run& r, Outputs& out) {
        Model m;
        open_model(r.common, m, r.cli_model, r.cli_override);
        CString rep;
        int ok = 0;
        check(specden_model_validate(m.p, nullptr, &rep.p, &ok));
        out.add("validate.json", rep.str());
        if (!ok) {
            validate_status = kInput;
            std::cerr << "model violates its assumptions; see validate.json\n";
        }
    };
    runs.push_back(std::move(run));
}

int execute(Run& r) {
    Common& c = r.common;
    if (!c.config.empty()) {
        json doc = read_json(c.config);
        if (!doc.is_object()) input_error(c.config + ": expected a JSON object");
        if (doc.contains("config")) {
            for (const auto& [k, v] : doc.items())
                if (k != "command" && k != "version" && k != "timestamp" && k != "outputs" && k != "config" &&
                    k != "model_document")
                    input_error(c.config + ": unknown manifest key '" + k + "'");
            if (doc.contains("command") && doc["command"] != r.command)
                input_error(c.config + ": manifest is for '" + doc["command"].get<std::string>() + "', not '" +
                            r.command + "'");
            if (doc.contains("model_document")) c.model_document = doc["model_document"];
            doc = doc["config"];
            if (!doc.is_object()) input_error(c.config + ": 'config' must be an object");
        }
        r.settings.load(doc, c.config);
    }
    if (r.cli_model && r.cli_preset) input_error("--model and --preset are mutually exclusive");
    resolve_threads(r);

    Outputs out{fs::path(c.out_dir)};
    r.body(r, out);

    json manifest;
    manifest["command"] = r.command;
    manifest["version"] = specden_version();
    manifest["timestamp"] = utc_timestamp();
    manifest["config"] = r.settings.resolved();
    if (!c.model_document.is_null()) manifest["model_document"] = c.model_document;
    auto names = out.names();
    names.push_back("manifest.json");
    manifest["outputs"] = names;
    out.add("manifest.json", manifest.dump(2) + "\n");
    out.publish();
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App root{"Deterministic equivalents and spectral densities of noncentral correlated sample covariances"};
    root.require_subcommand(1);
    root.set_version_flag("--version", specden_version());
    std::vector<std::unique_ptr<Run>> runs;
    int validate_status = kOk;
    cmd_solve(root, runs);
    cmd_density(root, runs);
    cmd_support(root, runs);
    cmd_noeig(root, runs);
    cmd_sinr(root, runs);
    cmd_zf(root, runs);
    cmd_validate(root, runs, validate_status);

    try {
        root.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = root.exit(e);
        return code == 0 ? kOk : kInput;
    }

    for (auto& run : runs) {
        CLI::App* app = root.get_subcommand(run->command);
        if (!app->parsed()) continue;
        if (auto* o = app->get_option_no_throw("--model")) run->cli_model = o->count() > 0;
        if (auto* o = app->get_option_no_throw("--preset")) run->cli_preset = o->count() > 0;
        for (const char* name : {"--model", "--preset", "--p", "--n", "--seed"})
            if (auto* o = app->get_option_no_throw(name)) run->cli_override = run->cli_override || o->count() > 0;
        try {
            const int code = execute(*run);
            return code == kOk ? validate_status : code;
        } catch (const Failure& f) {
            std::cerr << "specden " << run->command << ": " << f.message << "\n";
            return f.code;
        } catch (const std::exception& e) {
            std::cerr << "specden " << run->command << ": " << e.what() << "\n";
            return kInternal;
        }
    }
    return kInput;
}
