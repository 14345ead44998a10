#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nqm/cli.hpp"
#include "nqm/criteria.hpp"
#include "nqm/error.hpp"
#include "nqm/moments.hpp"

using namespace nqm;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result cli(std::vector<std::string> args) {
    args.insert(args.begin(), "nqm");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(int(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

Csv parse_csv(const std::string& text) {
    Csv csv;
    std::istringstream is(text);
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (first) {
            csv.header = cells;
            first = false;
        } else {
            std::vector<double> row;
            for (const auto& c : cells) row.push_back(std::stod(c));
            csv.rows.push_back(row);
        }
    }
    return csv;
}

void check_against_golden(const std::string& produced, const std::string& golden_name) {
    const Csv got = parse_csv(produced);
    const Csv want = parse_csv(slurp(fs::path(NQM_GOLDEN_DIR) / golden_name));
    INFO(golden_name);
    REQUIRE(got.header == want.header);
    REQUIRE(got.rows.size() == want.rows.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < got.rows.size(); ++i) {
        REQUIRE(got.rows[i].size() == want.rows[i].size());
        for (std::size_t c = 0; c < got.rows[i].size(); ++c)
            worst = std::max(worst, std::abs(got.rows[i][c] - want.rows[i][c]) / std::max(1.0, std::abs(want.rows[i][c])));
    }
    CHECK(worst <= 1e-10);
}

json error_json(const Result& r) { return json::parse(r.err).at("error"); }

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "nqm_cli_test";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("state grammar") {
    CHECK(to_json(parse_state("thermal:0.5")) == to_json(StateSpec::thermal(0.5)));
    CHECK(to_json(parse_state("coherent:1.0+0.5i")) == to_json(StateSpec::coherent({1.0, 0.5})));
    CHECK(to_json(parse_state("coherent:-i")) == to_json(StateSpec::coherent({0.0, -1.0})));
    CHECK(to_json(parse_state("coherent:2e-3-1e-2i")) == to_json(StateSpec::coherent({2e-3, -1e-2})));
    CHECK(to_json(parse_state("coherent:0.75")) == to_json(StateSpec::coherent(0.75)));
    CHECK(to_json(parse_state("  fock:1 ")) == to_json(StateSpec::fock(1)));
    CHECK(to_json(parse_state("spats:0.3")) == to_json(StateSpec::spats(0.3)));
    CHECK(to_json(parse_state("squeezed:0.5, 0.3")) == to_json(StateSpec::squeezed_vacuum(0.5, 0.3)));
    CHECK(to_json(parse_state("squeezed:0.5")) == to_json(StateSpec::squeezed_vacuum(0.5, 0.0)));
    CHECK(to_json(parse_state("vacuum")) == to_json(StateSpec::vacuum()));
    CHECK(to_json(parse_state("fock_vector:0.6,0.8i")) == to_json(StateSpec::fock_vector({{0.6, 0}, {0, 0.8}})));
    CHECK(to_json(parse_state(R"({"kind":"thermal","nbar":0.5})")) == to_json(StateSpec::thermal(0.5)));
}

TEST_CASE("state grammar errors name the field and position") {
    const auto error_of = [](const std::string& text) {
        try {
            (void)parse_state(text);
        } catch (const ValidationError& e) {
            return std::make_pair(e.field(), std::string(e.what()));
        }
        return std::make_pair(std::string("none"), std::string());
    };
    auto [field, message] = error_of("spats:-1");
    CHECK(field == "nbar");
    CHECK(message.find("nbar >= 0") != std::string::npos);
    CHECK(message.find("position 6") != std::string::npos);

    std::tie(field, message) = error_of("thermal:abc");
    CHECK(field == "state");
    CHECK(message.find("position 8") != std::string::npos);

    std::tie(field, message) = error_of("laser:1");
    CHECK(field == "state");
    CHECK(message.find("unknown state kind 'laser'") != std::string::npos);

    CHECK(error_of("fock:1.5").first == "state");
    CHECK(error_of("thermal").first == "state");
    CHECK(error_of("thermal:0.1,0.2").first == "state");
    CHECK(error_of("squeezed:0.5,").first == "state");
    CHECK(error_of("").first == "state");
    CHECK(error_of("{\"kind\":").first == "state");
    CHECK(error_of("squeezed:-0.5").first == "variance");
}

TEST_CASE("figure subcommands reproduce the golden tables") {
    for (int k = 1; k <= 3; ++k) {
        const auto r = cli({"figure", std::to_string(k)});
        REQUIRE(r.code == 0);
        check_against_golden(r.out, "figure" + std::to_string(k) + ".csv");
    }
    const auto f2 = cli({"figure", "2"});
    CHECK(f2.out.rfind("nbar,w0\n", 0) == 0);
    CHECK(parse_csv(f2.out).rows.size() == 71);
}

TEST_CASE("filter coefficients reproduce the golden table") {
    const auto r = cli({"filter-coeffs"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("i,f_i,g_i,Cprime_ii,Cbar_ii_w1\n", 0) == 0);
    check_against_golden(r.out, "filter_coeffs.csv");
    const auto rows = parse_csv(r.out).rows;
    CHECK(rows[1][1] == doctest::Approx(-std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-14));
    CHECK(rows[2][1] == doctest::Approx(7.0 / 16.0).epsilon(1e-14));
    CHECK(rows[2][4] == doctest::Approx(8.0 / std::numbers::pi - 7.0 / 4.0).epsilon(1e-12));
    const auto j = cli({"filter-coeffs", "--order", "2", "--format", "json"});
    CHECK(json::parse(j.out)["rows"].size() == 3);
}

TEST_CASE("criteria subcommand") {
    const auto r = cli({"criteria", "--state", "spats:0.6", "--w", "3.0"});
    REQUIRE(r.code == 0);
    const json out = json::parse(r.out);
    REQUIRE(out.is_array());
    bool found = false;
    for (const auto& c : out)
        if (c["name"] == "mandel_q_omega") {
            found = true;
            CHECK(c["value"].get<double>() > 0.0);
            CHECK(c["nonclassical"] == false);
        }
    CHECK(found);

    const auto table = scratch("spats_normal.json");
    std::ofstream(table) << to_json(normal_moments(StateSpec::spats(0.6), 4)).dump();
    const auto t = cli({"criteria", "--table", table.string(), "--w", "3.0"});
    REQUIRE(t.code == 0);
    CHECK(json::parse(t.out)[0]["value"].get<double>() == doctest::Approx(mandel_q_spats(0.6, 3.0)).epsilon(1e-10));

    const auto missing = cli({"criteria", "--state", "spats:0.6"});
    CHECK(missing.code == 2);
    CHECK(error_json(missing)["field"] == "w");
}

TEST_CASE("convert roundtrip through files") {
    const auto normal_path = scratch("normal.json"), ncl_path = scratch("ncl.json"), back_path = scratch("back.json");
    const auto original = normal_moments(StateSpec::coherent({0.6, -0.2}), 4);
    std::ofstream(normal_path) << to_json(original).dump(2);
    REQUIRE(cli({"convert", "--table", normal_path.string(), "--w", "2.0", "-o", ncl_path.string()}).code == 0);
    REQUIRE(cli({"convert", "--table", ncl_path.string(), "-o", back_path.string()}).code == 0);
    const auto ncl = moment_table_from_json(json::parse(slurp(ncl_path)));
    CHECK(ncl.kind() == MomentKind::Nonclassicality);
    const auto back = moment_table_from_json(json::parse(slurp(back_path)));
    CHECK((back.entries() - original.entries()).cwiseAbs().maxCoeff() <= 1e-10);
    // running the same conversion twice is byte-stable
    const auto again = scratch("back2.json");
    REQUIRE(cli({"convert", "--table", ncl_path.string(), "-o", again.string()}).code == 0);
    CHECK(slurp(again) == slurp(back_path));
    const json meta = json::parse(slurp(ncl_path.string() + ".meta.json"));
    CHECK(meta["command"] == "convert");
    CHECK(meta["version"] == kVersion);
    CHECK(meta["inputs"]["w"] == 2.0);
    CHECK(meta["inputs"]["table"]["kind"] == "normal");
    CHECK(meta.contains("tolerances"));

    const auto no_w = cli({"convert", "--table", normal_path.string()});
    CHECK(no_w.code == 2);
    CHECK(error_json(no_w)["field"] == "w");
}

TEST_CASE("expect subcommand") {
    const auto obs = scratch("number.json");
    std::ofstream(obs) << R"({"terms":[[1,1,1,0]]})";
    const auto r = cli({"expect", "--observable", obs.string(), "--state", "thermal:0.7"});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["value"][0].get<double>() == doctest::Approx(0.7));
    CHECK(cli({"expect", "--observable", obs.string()}).code == 2);
}

TEST_CASE("nqp subcommand writes the grid and its sidecar") {
    const auto out = scratch("fock1.csv");
    const auto r = cli({"nqp", "--state", "fock:1", "--w", "1.5", "--extent", "4", "--resolution", "41", "-o", out.string()});
    REQUIRE(r.code == 0);
    const Csv grid = parse_csv(slurp(out));
    CHECK(grid.header == std::vector<std::string>{"alpha_re", "alpha_im", "value"});
    CHECK(grid.rows.size() == 41 * 41);
    double min = 1e300;
    for (const auto& row : grid.rows) min = std::min(min, row[2]);
    CHECK(min < 0.0);
    const json meta = json::parse(slurp(out.string() + ".meta.json"));
    for (const char* key : {"w", "extent", "resolution", "R_xi", "normalization_residual"}) CHECK(meta.contains(key));
    CHECK(std::abs(meta["normalization_residual"].get<double>()) < 1e-4);
}

TEST_CASE("simulate and estimate are reproducible") {
    const auto a = scratch("a.bin"), b = scratch("b.bin");
    REQUIRE(cli({"simulate", "--state", "vacuum", "--phases", "6", "--per-phase", "2000", "--seed", "5", "-o", a.string()}).code == 0);
    REQUIRE(cli({"simulate", "--state", "vacuum", "--phases", "6", "--per-phase", "2000", "--seed", "5", "-o", b.string()}).code == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(json::parse(slurp(a.string() + ".meta.json"))["seed"] == 5);

    const auto r = cli({"estimate", "--in", a.string(), "--w", "1.5", "--bootstrap", "50", "--seed", "1"});
    REQUIRE(r.code == 0);
    const json est = json::parse(r.out);
    CHECK(est["method"] == "bootstrap");
    CHECK(est["moments"]["kind"] == "nonclassicality");
    CHECK(est.contains("mandel_q_omega"));
    CHECK(cli({"estimate", "--in", a.string(), "--w", "1.5", "--bootstrap", "50", "--seed", "1"}).out == r.out);

    const auto g = cli({"estimate", "--in", a.string(), "--w", "1.5", "--nqp", "--extent", "3", "--resolution", "21",
                        "--bootstrap", "20"});
    REQUIRE(g.code == 0);
    CHECK(parse_csv(g.out).header.back() == "std_error");
}

TEST_CASE("figure SVG output") {
    const auto csv = scratch("fig3.csv"), svg = scratch("fig3.svg");
    REQUIRE(cli({"figure", "3", "-o", csv.string(), "--svg", svg.string()}).code == 0);
    const std::string text = slurp(svg);
    CHECK(text.rfind("<svg", 0) == 0);
    CHECK(text.find("<polyline") != std::string::npos);
    CHECK(fs::exists(svg.string() + ".meta.json"));
    CHECK(fs::exists(csv.string() + ".meta.json"));
}

TEST_CASE("exit codes and error JSON") {
    const auto bad_state = cli({"nqp", "--state", "spats:-1", "--w", "2"});
    CHECK(bad_state.code == 2);
    CHECK(error_json(bad_state)["kind"] == "validation");
    CHECK(error_json(bad_state)["field"] == "nbar");

    const auto io = cli({"estimate", "--in", scratch("does_not_exist.bin").string(), "--w", "1"});
    CHECK(io.code == 4);
    CHECK(error_json(io)["kind"] == "io");

    const auto numeric = cli({"nqp", "--state", "thermal:2", "--w", "2", "--extent", "0.5", "--resolution", "11"});
    CHECK(numeric.code == 3);
    CHECK(error_json(numeric)["kind"] == "numeric");

    CHECK(cli({"figure", "7"}).code == 2);
    CHECK(cli({"frobnicate"}).code == 2);
    CHECK(cli({"nqp", "--state", "fock:1", "--w", "abc"}).code == 2);
    const auto help = cli({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("figure") != std::string::npos);
}
