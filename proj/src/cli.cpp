#include "nqm/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <boost/version.hpp>
#include <nlohmann/json.hpp>

#include "nqm/criteria.hpp"
#include "nqm/error.hpp"
#include "nqm/filter.hpp"
#include "nqm/homodyne.hpp"
#include "nqm/moments.hpp"
#include "nqm/nqp.hpp"
#include "nqm/plot.hpp"

namespace nqm {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Command command) {
    switch (command) {
        case Command::FilterCoeffs: return "filter-coeffs";
        case Command::Convert: return "convert";
        case Command::Expect: return "expect";
        case Command::Nqp: return "nqp";
        case Command::Criteria: return "criteria";
        case Command::Figure: return "figure";
        case Command::Simulate: return "simulate";
        case Command::Estimate: return "estimate";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// State grammar

namespace {

[[noreturn]] void parse_fail(std::size_t pos, const std::string& what) {
    throw ValidationError("state", "at position " + std::to_string(pos) + ": " + what);
}

std::string_view trim(std::string_view s, std::size_t& offset) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
        ++offset;
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

double parse_real(std::string_view s, std::size_t pos) {
    std::string_view body = s;
    if (!body.empty() && body.front() == '+') body.remove_prefix(1);
    double v = 0.0;
    const auto [end, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
    if (body.empty() || ec != std::errc() || end != body.data() + body.size())
        parse_fail(pos, "expected a number, got '" + std::string(s) + "'");
    return v;
}

// 1.5, 0.5i, -i, 1-2i, 2e-3+1e-2j
cplx parse_complex(std::string_view s, std::size_t pos) {
    if (s.empty()) parse_fail(pos, "expected a complex number");
    if (s.back() != 'i' && s.back() != 'j') return {parse_real(s, pos), 0.0};
    const std::string_view body = s.substr(0, s.size() - 1);
    std::size_t split = std::string_view::npos;
    for (std::size_t k = body.size(); k-- > 1;)
        if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
            split = k;
            break;
        }
    const auto imag_of = [&](std::string_view t, std::size_t at) {
        if (t.empty() || t == "+") return 1.0;
        if (t == "-") return -1.0;
        return parse_real(t, at);
    };
    if (split == std::string_view::npos) return {0.0, imag_of(body, pos)};
    return {parse_real(body.substr(0, split), pos), imag_of(body.substr(split), pos + split)};
}

int parse_count(std::string_view s, std::size_t pos) {
    int v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || end != s.data() + s.size())
        parse_fail(pos, "expected an integer, got '" + std::string(s) + "'");
    return v;
}

struct Param {
    std::string_view text;
    std::size_t pos;
};

// Factory range errors keep their field; the message gains the position.
template <class F>
StateSpec located(std::size_t pos, F&& make) {
    try {
        return make();
    } catch (const ValidationError& e) {
        throw ValidationError(e.field(), std::string(e.what()) + " (parameter at position " + std::to_string(pos) + ")");
    }
}

}  // namespace

StateSpec parse_state(std::string_view text) {
    std::size_t offset = 0;
    const std::string_view s = trim(text, offset);
    if (s.empty()) throw ValidationError("state", "empty state specification");
    if (s.front() == '{') {
        json j;
        try {
            j = json::parse(s);
        } catch (const json::parse_error& e) {
            parse_fail(offset + (e.byte > 0 ? e.byte - 1 : 0), std::string("invalid JSON: ") + e.what());
        }
        try {
            return state_from_json(j);
        } catch (const json::exception& e) {
            throw ValidationError("state", std::string("malformed state JSON: ") + e.what());
        }
    }

    const std::size_t colon = s.find(':');
    const std::string kind(s.substr(0, colon));
    std::vector<Param> params;
    if (colon != std::string_view::npos) {
        std::size_t start = colon + 1;
        while (true) {
            const std::size_t comma = s.find(',', start);
            const std::size_t stop = comma == std::string_view::npos ? s.size() : comma;
            std::size_t at = offset + start;
            const std::string_view p = trim(s.substr(start, stop - start), at);
            if (p.empty()) parse_fail(at, "empty parameter");
            params.push_back({p, at});
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
    }
    const auto expect_count = [&](std::size_t lo, std::size_t hi, const std::string& usage) {
        if (params.size() < lo || params.size() > hi) {
            const std::size_t at = params.empty() ? offset + s.size() : params.back().pos;
            parse_fail(at, "'" + kind + "' expects " + usage);
        }
    };

    if (kind == "vacuum") {
        expect_count(0, 0, "no parameters");
        return StateSpec::vacuum();
    }
    if (kind == "coherent") {
        expect_count(1, 1, "one complex amplitude, e.g. coherent:1.0+0.5i");
        const cplx alpha = parse_complex(params[0].text, params[0].pos);
        return located(params[0].pos, [&] { return StateSpec::coherent(alpha); });
    }
    if (kind == "thermal" || kind == "spats") {
        expect_count(1, 1, "one mean photon number, e.g. " + kind + ":0.5");
        const double nbar = parse_real(params[0].text, params[0].pos);
        return located(params[0].pos,
                       [&] { return kind == "thermal" ? StateSpec::thermal(nbar) : StateSpec::spats(nbar); });
    }
    if (kind == "fock") {
        expect_count(1, 1, "one photon number, e.g. fock:1");
        const int n = parse_count(params[0].text, params[0].pos);
        return located(params[0].pos, [&] { return StateSpec::fock(n); });
    }
    if (kind == "squeezed") {
        expect_count(1, 2, "a variance and an optional phase, e.g. squeezed:0.5,0");
        const double v = parse_real(params[0].text, params[0].pos);
        const double phi = params.size() > 1 ? parse_real(params[1].text, params[1].pos) : 0.0;
        return located(params[0].pos, [&] { return StateSpec::squeezed_vacuum(v, phi); });
    }
    if (kind == "fock_vector") {
        expect_count(1, std::numeric_limits<std::size_t>::max(), "one or more complex amplitudes");
        std::vector<cplx> amplitudes;
        for (const auto& p : params) amplitudes.push_back(parse_complex(p.text, p.pos));
        return located(params[0].pos, [&] { return StateSpec::fock_vector(std::move(amplitudes)); });
    }
    parse_fail(offset, "unknown state kind '" + kind +
                           "' (expected vacuum, coherent, thermal, fock, spats, squeezed or fock_vector)");
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void check(bool ok, const std::string& field, const std::string& message) {
    if (!ok) throw ValidationError(field, message);
}

void need_width(const RunConfig& c) {
    check(c.w.has_value(), "w", to_string(c.command) + " needs --w");
    check(*c.w > 0.0 && std::isfinite(*c.w), "w", "filter width must be > 0");
}

void need_grid(const RunConfig& c) {
    check(c.extent > 0.0 && std::isfinite(c.extent), "extent", "grid extent must be > 0");
    check(c.resolution >= 3 && c.resolution % 2 == 1, "resolution", "grid resolution must be odd and >= 3");
}

}  // namespace

void validate(const RunConfig& c) {
    if (c.w) check(*c.w > 0.0 && std::isfinite(*c.w), "w", "filter width must be > 0");
    switch (c.command) {
        case Command::FilterCoeffs:
            check(c.order >= 0 && c.order <= FilterModel::kMaxOrder, "order",
                  "order must be in [0, " + std::to_string(FilterModel::kMaxOrder) + "]");
            break;
        case Command::Convert:
            check(c.table.has_value(), "table", "convert needs --table");
            break;
        case Command::Expect:
            check(c.observable.has_value(), "observable", "expect needs --observable");
            check(c.table.has_value() != c.state.has_value(), "state", "expect needs exactly one of --table, --state");
            break;
        case Command::Nqp:
            check(c.state.has_value(), "state", "nqp needs --state");
            need_width(c);
            need_grid(c);
            break;
        case Command::Criteria:
            check(c.table.has_value() != c.state.has_value(), "state", "criteria needs exactly one of --table, --state");
            if (c.state) need_width(c);
            break;
        case Command::Figure:
            check(c.figure >= 1 && c.figure <= 3, "figure", "figure must be 1, 2 or 3");
            check(c.nbars.empty() || c.figure == 1, "nbar", "--nbar applies to figure 1 only");
            for (double n : c.nbars) check(n >= 0.0 && std::isfinite(n), "nbar", "nbar must be >= 0");
            break;
        case Command::Simulate:
            check(c.state.has_value(), "state", "simulate needs --state");
            check(c.output.has_value(), "out", "simulate needs --out");
            check(c.phases >= 1, "phases", "phase count must be >= 1");
            check(c.per_phase >= 2, "per_phase", "samples per phase must be >= 2");
            break;
        case Command::Estimate:
            check(c.input.has_value(), "in", "estimate needs --in");
            need_width(c);
            check(c.bootstrap >= 0, "bootstrap", "resample count must be >= 0");
            if (c.nqp) {
                need_grid(c);
            } else {
                check(c.order >= 1 && c.order <= 2, "order", "estimated moments support order 1 or 2");
            }
            break;
    }
    if (c.svg) check(c.command == Command::Figure, "svg", "--svg applies to figure only");
}

// ---------------------------------------------------------------------------
// Running

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv(const std::vector<std::string>& columns, const std::vector<std::vector<double>>& rows) {
    std::string out;
    for (std::size_t c = 0; c < columns.size(); ++c) out += (c ? "," : "") + columns[c];
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            out += fmt17(row[c]);
        }
        out += '\n';
    }
    return out;
}

json read_json(const fs::path& path, const std::string& field) {
    std::ifstream is(path);
    if (!is) throw IoError(path.string(), "cannot open for reading");
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw ValidationError(field, path.string() + " is not valid JSON: " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError(path.string(), "cannot open for writing");
    os << text;
    if (!os) throw IoError(path.string(), "write failed");
}

fs::path sidecar_path(const fs::path& artifact) { return fs::path(artifact.string() + ".meta.json"); }

json tolerances(Command command) {
    switch (command) {
        case Command::FilterCoeffs:
            return {{"cross_check_orders_1_6", FilterModel::cross_check_tolerance(1)},
                    {"cross_check_orders_7_8", FilterModel::cross_check_tolerance(7)}};
        case Command::Nqp:
            return {{"truncation_tail", 1e-12}, {"imaginary_residue", 1e-8}, {"normalization", 1e-4}};
        case Command::Convert:
        case Command::Expect:
        case Command::Criteria: return {{"table_hermiticity", 1e-9}, {"table_m00", 1e-9}};
        case Command::Estimate:
            return {{"max_amplification", kMaxAmplification}, {"stencil_step", MomentEstimateOptions{}.step}};
        case Command::Figure:
        case Command::Simulate: return json::object();
    }
    return json::object();
}

class Runner {
public:
    Runner(const RunConfig& config, std::ostream& out) : c_(config), out_(out) {
        inputs_ = json::object();
        if (c_.state) inputs_["state"] = to_json(*c_.state);
        if (c_.w) inputs_["w"] = *c_.w;
    }

    void run() {
        switch (c_.command) {
            case Command::FilterCoeffs: filter_coeffs(); break;
            case Command::Convert: convert(); break;
            case Command::Expect: expect(); break;
            case Command::Nqp: nqp(); break;
            case Command::Criteria: criteria(); break;
            case Command::Figure: figure_table(); break;
            case Command::Simulate: simulate(); break;
            case Command::Estimate: estimate(); break;
        }
    }

private:
    // Writes the artifact to --out (plus its sidecar) or to the stream.
    void emit(const std::string& text, const std::string& format, const json& extra = json::object()) {
        if (!c_.output) {
            out_ << text;
            return;
        }
        write_text(*c_.output, text);
        write_sidecar(*c_.output, format, extra);
    }

    void write_sidecar(const fs::path& artifact, const std::string& format, const json& extra) {
        json libraries;
        libraries["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                             std::to_string(EIGEN_MINOR_VERSION);
        libraries["boost"] = BOOST_LIB_VERSION;
        libraries["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                     std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                     std::to_string(NLOHMANN_JSON_VERSION_PATCH);
        json meta;
        meta["tool"] = "nqm";
        meta["version"] = kVersion;
        meta["command"] = to_string(c_.command);
        meta["arguments"] = c_.arguments;
        meta["artifact"] = artifact.filename().string();
        meta["format"] = format;
        meta["inputs"] = inputs_;
        meta["seed"] = c_.seed;
        meta["tolerances"] = tolerances(c_.command);
        meta["libraries"] = libraries;
        for (auto it = extra.begin(); it != extra.end(); ++it) meta[it.key()] = it.value();
        write_text(sidecar_path(artifact), meta.dump(2) + "\n");
    }

    MomentTable load_table() {
        const json j = read_json(*c_.table, "table");
        inputs_["table"] = j;
        try {
            return moment_table_from_json(j);
        } catch (const json::exception& e) {
            throw ValidationError("table", std::string("malformed moment table: ") + e.what());
        }
    }

    void filter_coeffs() {
        const auto& model = FilterModel::shipped();
        const auto f = model.taylor_coeffs(c_.order);
        const auto g = model.reciprocal_coeffs(c_.order);
        const auto table = model.coeff_table(1.0, c_.order);
        inputs_["order"] = c_.order;
        std::vector<std::vector<double>> rows;
        double factorial = 1.0;
        for (int i = 0; i <= c_.order; ++i) {
            if (i > 0) factorial *= i;
            rows.push_back({double(i), f[i], g[i], factorial * factorial * f[i], table.cbar(i, i)});
        }
        const std::vector<std::string> columns{"i", "f_i", "g_i", "Cprime_ii", "Cbar_ii_w1"};
        if (c_.format == OutputFormat::Json) {
            emit(json{{"columns", columns}, {"rows", rows}}.dump(2) + "\n", "json");
        } else {
            emit(csv(columns, rows), "csv");
        }
    }

    void convert() {
        const MomentTable table = load_table();
        MomentTable result = table;
        if (table.kind() == MomentKind::Normal) {
            if (!c_.w) throw ValidationError("w", "converting a normal table needs --w");
            result = to_nonclassicality(table, *c_.w);
        } else {
            if (c_.w && std::abs(*c_.w - *table.width()) > 1e-12 * *table.width())
                throw ValidationError("w", "--w differs from the width stored in the table");
            result = to_normal(table);
        }
        const double width = table.width() ? *table.width() : *c_.w;
        const auto cond = conversion_conditioning(width, table.order());
        emit(to_json(result).dump(2) + "\n", "json",
             {{"conditioning", {{"condition_number", cond.condition_number}, {"max_cbar", cond.max_cbar}}}});
    }

    void expect() {
        const json oj = read_json(*c_.observable, "observable");
        inputs_["observable"] = oj;
        ObservablePoly obs = [&] {
            try {
                return observable_from_json(oj);
            } catch (const json::exception& e) {
                throw ValidationError("observable", std::string("malformed observable: ") + e.what());
            }
        }();
        const MomentTable table = c_.table ? load_table() : normal_moments(*c_.state, obs.order());
        const cplx v = expectation(obs, table);
        json result{{"value", {v.real(), v.imag()}}, {"hermitian", obs.is_hermitian()}};
        emit(result.dump(2) + "\n", "json");
    }

    void nqp() {
        inputs_["extent"] = c_.extent;
        inputs_["resolution"] = c_.resolution;
        const NqpGrid grid = reconstruct(*c_.state, *c_.w, c_.extent, c_.resolution);
        std::string text = "alpha_re,alpha_im,value\n";
        for (int ix = 0; ix < grid.resolution; ++ix)
            for (int iy = 0; iy < grid.resolution; ++iy)
                text += fmt17(grid.coordinate(ix)) + "," + fmt17(grid.coordinate(iy)) + "," +
                        fmt17(grid.values(ix, iy)) + "\n";
        const NqpMinimum minimum = min_value(grid);
        emit(text, "csv",
             {{"w", grid.w},
              {"extent", grid.extent},
              {"resolution", grid.resolution},
              {"R_xi", grid.truncation_radius},
              {"normalization_residual", grid.normalization() - 1.0},
              {"imaginary_residue", grid.imaginary_residue},
              {"minimum", {{"alpha", {minimum.alpha.real(), minimum.alpha.imag()}}, {"value", minimum.value}}}});
    }

    void criteria() {
        std::vector<CriterionResult> results;
        if (c_.state) {
            results = evaluate_criteria(*c_.state, *c_.w);
        } else {
            const MomentTable table = load_table();
            if (table.kind() == MomentKind::Normal && c_.w) {
                results = evaluate_criteria(to_nonclassicality(table, *c_.w));
                for (auto& r : evaluate_criteria(table)) results.push_back(std::move(r));
            } else {
                if (c_.w && table.width() && std::abs(*c_.w - *table.width()) > 1e-12 * *table.width())
                    throw ValidationError("w", "--w differs from the width stored in the table");
                results = evaluate_criteria(table);
            }
        }
        json array = json::array();
        for (const auto& r : results) array.push_back(to_json(r));
        emit(array.dump(2) + "\n", "json");
    }

    void figure_table() {
        inputs_["figure"] = c_.figure;
        const FigureTable t = c_.figure == 1 && !c_.nbars.empty() ? figure1(c_.nbars) : figure(c_.figure);
        if (!c_.nbars.empty()) inputs_["nbar"] = c_.nbars;
        if (c_.format == OutputFormat::Json) {
            emit(json{{"columns", t.columns}, {"rows", t.rows}, {"metadata", t.metadata}}.dump(2) + "\n", "json",
                 {{"figure_metadata", t.metadata}});
        } else {
            emit(csv(t.columns, t.rows), "csv", {{"figure_metadata", t.metadata}});
        }
        if (c_.svg) {
            static const char* titles[] = {"", "Filtered Mandel Q of the photon-added thermal state",
                                           "Minimal width for negative filtered Q", "Minimal width for filtered squeezing"};
            static const char* y_labels[] = {"", "Q_Omega", "w0", "w_min"};
            LinePlot plot{titles[c_.figure], t.columns[0], y_labels[c_.figure], t.columns, t.rows};
            write_text(*c_.svg, render_svg(plot));
            write_sidecar(*c_.svg, "svg", {{"figure_metadata", t.metadata}});
        }
    }

    void simulate() {
        inputs_["phases"] = c_.phases;
        inputs_["per_phase"] = c_.per_phase;
        const QuadratureDataset ds = sample(*c_.state, c_.phases, c_.per_phase, c_.seed);
        write_dataset(*c_.output, ds);
        write_sidecar(*c_.output, "nqmhd1", {{"count", ds.size()}});
    }

    void estimate() {
        const QuadratureDataset ds = read_dataset(*c_.input);
        inputs_["dataset"] = {{"path", c_.input->string()},
                              {"state", to_json(ds.state())},
                              {"seed", ds.seed()},
                              {"n_phases", ds.n_phases()},
                              {"n_per_phase", ds.n_per_phase()}};
        inputs_["bootstrap"] = c_.bootstrap;
        if (c_.nqp) {
            estimate_grid(ds);
            return;
        }
        inputs_["order"] = c_.order;
        MomentEstimateOptions options;
        options.bootstrap = c_.bootstrap;
        options.seed = c_.seed;
        const MomentEstimate est = estimate_ncl_moments(ds, *c_.w, c_.order, options);
        json errors = json::array(), flagged = json::array();
        for (int n = 0; n <= c_.order; ++n)
            for (int m = 0; m <= c_.order; ++m) {
                errors.push_back({n, m, est.std_error(n, m)});
                if (est.flagged(n, m)) flagged.push_back({n, m});
            }
        json result{{"moments", to_json(est.table)},
                    {"std_error", errors},
                    {"flagged", flagged},
                    {"method", est.method == ErrorMethod::Bootstrap ? "bootstrap" : "propagated"},
                    {"resamples", est.resamples}};
        if (c_.order >= 2) {
            const int resamples = c_.bootstrap > 1 ? c_.bootstrap : 200;
            const EstimateWithError q = estimate_mandel_q_omega(ds, *c_.w, resamples, c_.seed);
            result["mandel_q_omega"] = {{"value", q.value.real()}, {"std_error", q.std_error}, {"resamples", q.resamples}};
        }
        emit(result.dump(2) + "\n", "json");
    }

    void estimate_grid(const QuadratureDataset& ds) {
        inputs_["extent"] = c_.extent;
        inputs_["resolution"] = c_.resolution;
        const int resamples = c_.bootstrap > 1 ? c_.bootstrap : 200;
        const NqpEstimate est = estimate_nqp(ds, *c_.w, c_.extent, c_.resolution, resamples, c_.seed);
        const NqpGrid& grid = est.grid;
        std::string text = "alpha_re,alpha_im,value,std_error\n";
        for (int ix = 0; ix < grid.resolution; ++ix)
            for (int iy = 0; iy < grid.resolution; ++iy)
                text += fmt17(grid.coordinate(ix)) + "," + fmt17(grid.coordinate(iy)) + "," +
                        fmt17(grid.values(ix, iy)) + "," + fmt17(est.std_error(ix, iy)) + "\n";
        emit(text, "csv",
             {{"w", grid.w},
              {"extent", grid.extent},
              {"resolution", grid.resolution},
              {"R_xi", grid.truncation_radius},
              {"normalization", grid.normalization()},
              {"normalization_error", est.normalization_error},
              {"amplification", est.amplification},
              {"resamples", est.resamples}});
    }

    const RunConfig& c_;
    std::ostream& out_;
    json inputs_;
};

std::string kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Validation: return "validation";
        case ErrorKind::Numeric: return "numeric";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

int report(std::ostream& err, int code, const std::string& kind, const std::string& field, const std::string& message) {
    err << json{{"error", {{"kind", kind}, {"field", field}, {"message", message}}}}.dump() << "\n";
    return code;
}

}  // namespace

void run(const RunConfig& config, std::ostream& out) {
    validate(config);
    Runner(config, out).run();
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Nonclassicality quasiprobabilities, moments and criteria", "nqm"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string state_text, format = "csv";
    std::optional<double> w;
    std::optional<std::string> table, observable, input, output, svg;
    RunConfig c;

    const auto add_state = [&](CLI::App* sub, bool required) {
        auto* opt = sub->add_option("--state", state_text, "state, e.g. thermal:0.5, coherent:1+0.5i or JSON");
        if (required) opt->required();
    };
    const auto add_out = [&](CLI::App* sub) { sub->add_option("--out,-o", output, "output file (stdout if absent)"); };
    const auto add_grid = [&](CLI::App* sub) {
        sub->add_option("--extent", c.extent, "grid half-width in Re/Im alpha")->capture_default_str();
        sub->add_option("--resolution", c.resolution, "grid points per axis (odd)")->capture_default_str();
    };

    auto* filter_cmd = app.add_subcommand("filter-coeffs", "Taylor coefficients of the filter and its reciprocal");
    filter_cmd->add_option("--order,-K", c.order, "highest order")->capture_default_str();
    filter_cmd->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    add_out(filter_cmd);

    auto* convert_cmd = app.add_subcommand("convert", "normal <-> nonclassicality moment tables");
    convert_cmd->add_option("--table", table, "moment table JSON")->required();
    convert_cmd->add_option("--w", w, "filter width (normal -> nonclassicality)");
    add_out(convert_cmd);

    auto* expect_cmd = app.add_subcommand("expect", "expectation of a normally ordered polynomial");
    expect_cmd->add_option("--observable", observable, "observable JSON")->required();
    expect_cmd->add_option("--table", table, "moment table JSON");
    add_state(expect_cmd, false);
    add_out(expect_cmd);

    auto* nqp_cmd = app.add_subcommand("nqp", "nonclassicality quasiprobability on a grid");
    add_state(nqp_cmd, true);
    nqp_cmd->add_option("--w", w, "filter width")->required();
    add_grid(nqp_cmd);
    add_out(nqp_cmd);

    auto* criteria_cmd = app.add_subcommand("criteria", "nonclassicality criteria");
    add_state(criteria_cmd, false);
    criteria_cmd->add_option("--table", table, "moment table JSON");
    criteria_cmd->add_option("--w", w, "filter width");
    add_out(criteria_cmd);

    auto* figure_cmd = app.add_subcommand("figure", "data behind the figures");
    figure_cmd->add_option("number", c.figure, "1, 2 or 3")->required();
    figure_cmd->add_option("--nbar", c.nbars, "figure 1 curve set");
    figure_cmd->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    figure_cmd->add_option("--svg", svg, "also write an SVG line plot");
    add_out(figure_cmd);

    auto* simulate_cmd = app.add_subcommand("simulate", "synthetic homodyne data");
    add_state(simulate_cmd, true);
    simulate_cmd->add_option("--phases", c.phases, "number of phases")->capture_default_str();
    simulate_cmd->add_option("--per-phase", c.per_phase, "samples per phase")->capture_default_str();
    simulate_cmd->add_option("--seed", c.seed)->capture_default_str();
    simulate_cmd->add_option("--out,-o", output, "dataset file")->required();

    auto* estimate_cmd = app.add_subcommand("estimate", "moments, Q_Omega or the NQP from homodyne data");
    estimate_cmd->add_option("--in", input, "dataset file")->required();
    estimate_cmd->add_option("--w", w, "filter width")->required();
    estimate_cmd->add_option("--order,-K", c.order, "moment order (1 or 2)");
    estimate_cmd->add_option("--bootstrap", c.bootstrap, "resamples (0: propagated errors)")->capture_default_str();
    estimate_cmd->add_option("--seed", c.seed)->capture_default_str();
    estimate_cmd->add_flag("--nqp", c.nqp, "estimate the NQP grid instead of moments");
    add_grid(estimate_cmd);
    add_out(estimate_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        return report(err, int(ErrorKind::Validation), "validation", "arguments", e.what());
    }

    try {
        for (int i = 1; i < argc; ++i) c.arguments.emplace_back(argv[i]);
        const CLI::App* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        for (Command cmd : {Command::FilterCoeffs, Command::Convert, Command::Expect, Command::Nqp, Command::Criteria,
                            Command::Figure, Command::Simulate, Command::Estimate})
            if (to_string(cmd) == name) c.command = cmd;
        if (sub == estimate_cmd && sub->count("--order") == 0) c.order = 2;
        if (!state_text.empty()) c.state = parse_state(state_text);
        c.w = w;
        if (table) c.table = *table;
        if (observable) c.observable = *observable;
        if (input) c.input = *input;
        if (output) c.output = *output;
        if (svg) c.svg = *svg;
        c.format = format == "json" ? OutputFormat::Json : OutputFormat::Csv;
        run(c, out);
        return 0;
    } catch (const Error& e) {
        return report(err, int(e.kind()), kind_name(e.kind()), e.field(), e.what());
    } catch (const std::exception& e) {
        return report(err, 1, "internal", "", e.what());
    }
}

}  // namespace nqm
