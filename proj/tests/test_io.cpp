#include "wgsf/io.hpp"

#include <catch_amalgamated.hpp>

using namespace wgsf;

namespace {

std::size_t error_line(const std::string& text) {
    try {
        io::parse_config(text);
    } catch (const ValidationError& e) {
        return e.line();
    }
    FAIL("configuration was accepted");
    return 0;
}

}  // namespace

TEST_CASE("config round trip", "[io]") {
    SimulationConfig c;
    c.n_spins = 37;
    c.gamma_1d = 0.1 + 0.2;
    c.v_bar = 1.0 / 3.0;
    c.seed = 18446744073709551557ull;
    c.model_mode = ModelMode::static_blur;
    c.tau_blur = 0.019;
    const auto text = io::dump(io::to_json(c));
    const auto d = io::parse_config(text);
    CHECK(d.n_spins == 37);
    CHECK(d.gamma_1d == c.gamma_1d);
    CHECK(d.v_bar == c.v_bar);
    CHECK(d.seed == c.seed);
    CHECK(d.model_mode == ModelMode::static_blur);
    CHECK(d.tau_blur == c.tau_blur);
    CHECK_FALSE(d.beta_minus_override);
    CHECK(io::dump(io::to_json(d)) == text);
}

TEST_CASE("config errors carry line numbers", "[io]") {
    CHECK(error_line("{\n  \"n_spins\": 10,\n  \"bogus\": 1\n}") == 3);
    CHECK(error_line("{\n  \"n_spins\": 10,\n\n  \"dt\": \"small\"\n}") == 4);
    CHECK(error_line("{\n  \"n_spins\": 0\n}") == 2);
    CHECK(error_line("{\n  \"n_spins\": 10,\n  \"dt\": 1e-3,,\n}") == 3);
    CHECK(error_line("{\n \"model_mode\": \"sideways\"\n}") == 2);
    CHECK(error_line("{\n \"model_mode\": \"static_blur\"\n}") >= 1);
    CHECK(error_line("[1, 2]") == 1);
    try {
        io::parse_config("{\"n_spins\": 10, \"seed\": -4}");
        FAIL("negative seed accepted");
    } catch (const ValidationError& e) {
        CHECK(e.exit_code() == 2);
    }
}

TEST_CASE("sweep specification parsing", "[io]") {
    const std::string text = R"({
  "base": {"gamma_1d": 1.0, "n_traj": 50, "model_mode": "dynamic_motion"},
  "axis_n": [10, 20, 40],
  "axis_sigma_v": [0, 1.5, 3],
  "replicate_seeds": [1, 2]
})";
    const auto s = io::parse_sweep(text);
    CHECK(s.axis_n == std::vector<int>{10, 20, 40});
    CHECK(s.axis_sigma_v.size() == 3);
    CHECK(s.replicate_seeds == std::vector<std::uint64_t>{1, 2});
    CHECK(s.base.n_traj == 50);
    CHECK(s.static_tau == StaticTau::constant);

    CHECK_THROWS_AS(io::parse_sweep(R"({"axis_n": [], "axis_sigma_v": [1]})"), ValidationError);
    CHECK_THROWS_AS(io::parse_sweep(R"({"axis_n": [0], "axis_sigma_v": [1]})"), ValidationError);
    CHECK_THROWS_AS(io::parse_sweep(R"({"axis_n": [5], "axis_sigma_v": [1], "static_tau": "odd"})"), ValidationError);
    try {
        io::parse_sweep("{\n\"axis_n\": [5],\n\"axis_sigma_v\": [1],\n\"base\": {\"dt\": -1}\n}");
        FAIL("invalid base accepted");
    } catch (const ValidationError& e) {
        CHECK(e.line() == 4);
    }
}

TEST_CASE("csv output and parsing", "[io]") {
    ObservableSeries s;
    s.time_grid = {0.0, 0.1};
    s.mean_i_plus = {1.0 / 3.0, 2.0};
    s.mean_i_minus = {0.5, 0.25};
    s.sz_mean = {1.0, -0.125};
    const auto text = io::series_csv(s);
    CHECK(text.rfind("t,i_plus,i_minus,sz\n", 0) == 0);
    const auto t = io::parse_csv(text);
    CHECK(t.column("i_plus")[0] == 1.0 / 3.0);
    CHECK(t.column("sz")[1] == -0.125);
    CHECK_THROWS_AS(t.column("nope"), ValidationError);

    try {
        io::parse_csv("a,b\n1,2\n3\n");
        FAIL("ragged CSV accepted");
    } catch (const ValidationError& e) {
        CHECK(e.line() == 3);
    }
    try {
        io::parse_csv("a,b\n1,x\n");
        FAIL("text field accepted");
    } catch (const ValidationError& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(io::parse_csv(""), ValidationError);

    G2Grid g{{0.0, 1.0}, Eigen::MatrixXd::Constant(2, 2, 2.0), Eigen::Matrix<bool, -1, -1>::Constant(2, 2, true)};
    g.valid(0, 1) = false;
    const auto gt = io::g2_csv(g);
    CHECK(gt.find("0,1,nan") != std::string::npos);
    CHECK(gt.rfind("t1,t2,g2\n", 0) == 0);
}

TEST_CASE("floats print with seventeen significant digits", "[io]") {
    CHECK(io::fmt(0.1) == "0.10000000000000001");
    CHECK(std::stod(io::fmt(1.0 / 3.0)) == 1.0 / 3.0);
}
