#include "specden/model_io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "specden/error.hpp"
#include "specden/mimo.hpp"

namespace specden {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw StructuralError(path + ": " + what);
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key)) fail(path.empty() ? key : path + "." + key, "unknown field");
    }
}

Index read_count(const json& v, const std::string& path) {
    if (!v.is_number_integer() && !v.is_number_unsigned()) fail(path, "expected a positive integer");
    const auto x = v.get<std::int64_t>();
    if (x < 1) fail(path, "expected a positive integer");
    return static_cast<Index>(x);
}

double read_real(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(path, "expected a finite number");
    return x;
}

cplx read_complex(const json& v, const std::string& path) {
    if (v.is_number()) return {read_real(v, path), 0.0};
    if (!v.is_array() || v.size() != 2) fail(path, "expected [re, im]");
    return {read_real(v[0], path + "[0]"), read_real(v[1], path + "[1]")};
}

MatrixXcd read_matrix(const json& v, Index rows, std::optional<Index> cols, const std::string& path) {
    if (!v.is_array() || static_cast<Index>(v.size()) != rows)
        fail(path, "expected " + std::to_string(rows) + " rows");
    Index width = cols.value_or(-1);
    MatrixXcd m;
    for (Index r = 0; r < rows; ++r) {
        const auto rp = path + "[" + std::to_string(r) + "]";
        const json& row = v[static_cast<std::size_t>(r)];
        if (!row.is_array()) fail(rp, "expected an array");
        if (width < 0) width = static_cast<Index>(row.size());
        if (width < 1 || static_cast<Index>(row.size()) != width)
            fail(rp, "expected " + std::to_string(std::max<Index>(width, 1)) + " entries");
        if (m.size() == 0) m.resize(rows, width);
        for (Index c = 0; c < width; ++c)
            m(r, c) = read_complex(row[static_cast<std::size_t>(c)], rp + "[" + std::to_string(c) + "]");
    }
    return m;
}

ojson write_complex(cplx z) { return ojson::array({z.real(), z.imag()}); }

ojson write_matrix(const MatrixXcd& m) {
    ojson rows = ojson::array();
    for (Index r = 0; r < m.rows(); ++r) {
        ojson row = ojson::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(write_complex(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

const std::set<std::string> kConstructors = {"marchenko-pastur", "fig2", "fig3", "fig4", "fig5"};

Index integral_param(const std::map<std::string, double>& params, const std::string& key, std::optional<Index> fallback,
                     const std::string& ctor) {
    const auto it = params.find(key);
    if (it == params.end()) {
        if (!fallback) throw StructuralError("constructor." + ctor + ": missing parameter '" + key + "'");
        return *fallback;
    }
    const double v = it->second;
    if (!(v >= 1.0) || v != std::floor(v) || v > 1e9)
        throw StructuralError("constructor." + ctor + ": parameter '" + key + "' must be a positive integer");
    return static_cast<Index>(v);
}

ModelSpec parse_document(const json& doc) {
    if (!doc.is_object()) fail("$", "expected a JSON object");
    std::optional<std::uint64_t> seed;
    if (doc.contains("seed")) {
        const json& s = doc["seed"];
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
            fail("seed", "expected a non-negative integer");
        seed = s.get<std::uint64_t>();
    }

    if (doc.contains("constructor")) {
        check_keys(doc, "", {"constructor", "seed"});
        const json& c = doc["constructor"];
        if (!c.is_object()) fail("constructor", "expected an object");
        check_keys(c, "constructor", {"name", "params"});
        if (!c.contains("name") || !c["name"].is_string()) fail("constructor.name", "expected a string");
        std::map<std::string, double> params;
        if (c.contains("params")) {
            if (!c["params"].is_object()) fail("constructor.params", "expected an object");
            for (const auto& [k, v] : c["params"].items()) params[k] = read_real(v, "constructor.params." + k);
        }
        return build_constructor(c["name"].get<std::string>(), params, seed);
    }

    check_keys(doc, "", {"p", "n", "d", "mean", "correlations", "factors", "seed"});
    if (!doc.contains("p")) fail("p", "missing field");
    if (!doc.contains("n")) fail("n", "missing field");
    if (!doc.contains("correlations")) fail("correlations", "missing field");
    const Index p = read_count(doc["p"], "p");
    const Index n = read_count(doc["n"], "n");

    MatrixXcd mean = MatrixXcd::Zero(p, n);
    if (doc.contains("mean")) mean = read_matrix(doc["mean"], p, n, "mean");

    const json& cj = doc["correlations"];
    std::optional<CorrelationSet> corr;
    if (cj.is_object()) {
        check_keys(cj, "correlations", {"diagonal", "basis"});
        if (!cj.contains("diagonal")) fail("correlations.diagonal", "missing field");
        const json& dj = cj["diagonal"];
        if (!dj.is_array() || static_cast<Index>(dj.size()) != n)
            fail("correlations.diagonal", "expected " + std::to_string(n) + " spectra");
        MatrixXd spectra(p, n);
        for (Index j = 0; j < n; ++j) {
            const auto path = "correlations.diagonal[" + std::to_string(j) + "]";
            const json& col = dj[static_cast<std::size_t>(j)];
            if (!col.is_array() || static_cast<Index>(col.size()) != p)
                fail(path, "expected " + std::to_string(p) + " eigenvalues");
            for (Index i = 0; i < p; ++i)
                spectra(i, j) = read_real(col[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]");
        }
        std::optional<MatrixXcd> basis;
        if (cj.contains("basis")) basis = read_matrix(cj["basis"], p, p, "correlations.basis");
        try {
            corr = CorrelationSet::jointly_diagonal(std::move(spectra), std::move(basis));
        } catch (const StructuralError& e) {
            fail("correlations", e.what());
        }
    } else if (cj.is_array()) {
        if (static_cast<Index>(cj.size()) != n) fail("correlations", "expected " + std::to_string(n) + " matrices");
        std::vector<MatrixXcd> mats;
        for (Index j = 0; j < n; ++j)
            mats.push_back(read_matrix(cj[static_cast<std::size_t>(j)], p, p, "correlations[" + std::to_string(j) + "]"));
        try {
            corr = CorrelationSet::general(std::move(mats));
        } catch (const StructuralError& e) {
            fail("correlations", e.what());
        }
    } else {
        fail("correlations", "expected an array of matrices or {diagonal, basis}");
    }

    std::optional<std::vector<MatrixXcd>> factors;
    if (doc.contains("factors")) {
        const json& fj = doc["factors"];
        if (!fj.is_array() || static_cast<Index>(fj.size()) != n)
            fail("factors", "expected " + std::to_string(n) + " matrices");
        factors.emplace();
        for (Index j = 0; j < n; ++j)
            factors->push_back(
                read_matrix(fj[static_cast<std::size_t>(j)], p, std::nullopt, "factors[" + std::to_string(j) + "]"));
    }
    if (doc.contains("d")) {
        const json& dj = doc["d"];
        if (!dj.is_array() || static_cast<Index>(dj.size()) != n) fail("d", "expected " + std::to_string(n) + " entries");
        for (Index j = 0; j < n; ++j) {
            const auto path = "d[" + std::to_string(j) + "]";
            const Index dval = read_count(dj[static_cast<std::size_t>(j)], path);
            const Index expected = factors ? (*factors)[static_cast<std::size_t>(j)].cols() : p;
            if (dval != expected) fail(path, "does not match the factor width " + std::to_string(expected));
        }
    }

    std::optional<Provenance> prov;
    if (seed) prov = Provenance{"", {}, seed};
    return ModelSpec(std::move(mean), std::move(*corr), std::move(factors), std::move(prov));
}

} // namespace

ModelSpec build_constructor(const std::string& name, const std::map<std::string, double>& params,
                            std::optional<std::uint64_t> seed) {
    auto only = [&](const std::set<std::string>& allowed) {
        for (const auto& [k, v] : params) {
            (void)v;
            if (!allowed.count(k)) throw StructuralError("constructor." + name + ": unknown parameter '" + k + "'");
        }
    };
    if (name == "marchenko-pastur") {
        only({"p", "n"});
        return make_marchenko_pastur(integral_param(params, "p", std::nullopt, name),
                                     integral_param(params, "n", std::nullopt, name));
    }
    if (name == "fig2" || name == "fig3" || name == "fig4") {
        only({"p", "n"});
        const FigureSetup which = parse_figure_setup(name);
        const FigureDims def = default_dims(which);
        const FigureDims dims{integral_param(params, "p", def.p, name), integral_param(params, "n", def.n, name)};
        return make_figure_setup(which, seed.value_or(0), dims);
    }
    if (name == "fig5") {
        only({"p", "n", "tau"});
        const Index p = integral_param(params, "p", Index{64}, name);
        const Index n = integral_param(params, "n", Index{32}, name);
        const auto it = params.find("tau");
        const double tau = it == params.end() ? 1.0 : it->second;
        ModelSpec m = interference_model(make_fig5_channel(p, n, tau));
        return m.with_provenance(Provenance{
            "fig5", {{"p", static_cast<double>(p)}, {"n", static_cast<double>(n)}, {"tau", tau}}, std::nullopt});
    }
    throw StructuralError("constructor.name: unknown constructor '" + name + "'");
}

ModelSpec parse_model(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        std::size_t col = 1;
        const std::size_t stop = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < stop; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream msg;
        msg << "line " << line << ", column " << col << ": malformed JSON";
        throw StructuralError(msg.str());
    }
    return parse_document(doc);
}

ModelSpec load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StructuralError("cannot open model file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_model(buf.str());
    } catch (const StructuralError& e) {
        throw StructuralError(path + ": " + e.what());
    }
}

std::string model_to_json(const ModelSpec& model, bool explicit_form) {
    ojson doc;
    const auto& prov = model.provenance();
    if (!explicit_form && prov && kConstructors.count(prov->constructor)) {
        ojson params = ojson::object();
        for (const auto& [k, v] : prov->params) {
            if (v == std::floor(v) && std::abs(v) < 1e15)
                params[k] = static_cast<std::int64_t>(v);
            else
                params[k] = v;
        }
        doc["constructor"] = {{"name", prov->constructor}, {"params", params}};
        if (prov->seed) doc["seed"] = *prov->seed;
        return doc.dump(2);
    }
    const Index p = model.p();
    const Index n = model.n();
    doc["p"] = p;
    doc["n"] = n;
    ojson d = ojson::array();
    for (Index dj : model.inner_dims()) d.push_back(dj);
    doc["d"] = d;
    doc["mean"] = write_matrix(model.mean());
    const auto& corr = model.correlations();
    if (corr.is_jointly_diagonal()) {
        ojson spectra = ojson::array();
        for (Index j = 0; j < n; ++j) {
            ojson col = ojson::array();
            for (Index i = 0; i < p; ++i) col.push_back(corr.spectra()(i, j));
            spectra.push_back(std::move(col));
        }
        ojson c;
        c["diagonal"] = std::move(spectra);
        if (corr.basis()) c["basis"] = write_matrix(*corr.basis());
        doc["correlations"] = std::move(c);
    } else {
        ojson mats = ojson::array();
        for (const auto& m : corr.matrices()) mats.push_back(write_matrix(m));
        doc["correlations"] = std::move(mats);
    }
    if (model.factors()) {
        ojson fs = ojson::array();
        for (const auto& b : *model.factors()) fs.push_back(write_matrix(b));
        doc["factors"] = std::move(fs);
    }
    if (prov && prov->seed) doc["seed"] = *prov->seed;
    return doc.dump(2);
}

} // namespace specden
