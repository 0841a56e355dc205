#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "swc/config.hpp"

namespace {

swc::json minimal_linear() {
  return swc::json::parse(R"({
    "kind": "linear_cascade",
    "modes": [
      {"A": [[-1.0, 0.5], [0.0, -2.0]],
       "B": [[0.0, 0.0], [1.0, -1.0]],
       "F": [[-3.0, 0.0], [1.0, -1.5]],
       "G": [[1.0, 0.0], [0.0, 1.0]]}
    ]
  })");
}

}  // namespace

TEST_CASE("comparison functions round-trip through JSON") {
  auto check_roundtrip = [](const swc::ComparisonFunction& f) {
    swc::ComparisonFunction g = swc::kfun_from_json(swc::kfun_to_json(f), "f");
    for (double s : {0.0, 0.3, 1.0, 7.5})
      REQUIRE_THAT(g.eval(s), Catch::Matchers::WithinRel(f.eval(s), 1e-15) ||
                                  Catch::Matchers::WithinAbs(0.0, 0.0));
  };
  check_roundtrip(swc::ComparisonFunction::power_law(2.5, 2.0));
  check_roundtrip(swc::ComparisonFunction::linear(3.0));
  check_roundtrip(swc::ComparisonFunction::constant(0.7));

  swc::ComparisonFunction tree = swc::ComparisonFunction::pointwise_min(
      {swc::ComparisonFunction::linear(1.0), swc::ComparisonFunction::power_law(1.0, 2.0)});
  REQUIRE_THROWS_AS(swc::kfun_to_json(tree), swc::ConfigError);

  REQUIRE_THROWS_AS(swc::kfun_from_json(swc::json::parse(R"({"kind":"exp","a":1})"), "f"),
                    swc::ConfigError);
  REQUIRE_THROWS_AS(
      swc::kfun_from_json(swc::json::parse(R"({"kind":"linear","a":1,"k":2})"), "f"),
      swc::ConfigError);
}

TEST_CASE("matrix parsing is strict") {
  Eigen::MatrixXd m = swc::parse_matrix(swc::json::parse("[[1,2,3],[4,5,6]]"), "m");
  REQUIRE(m.rows() == 2);
  REQUIRE(m.cols() == 3);
  REQUIRE(m(1, 2) == 6.0);

  Eigen::MatrixXd back = swc::parse_matrix(swc::matrix_to_json(m), "m");
  REQUIRE((back - m).norm() == 0.0);

  REQUIRE_THROWS_AS(swc::parse_matrix(swc::json::parse("[[1,2],[3]]"), "m"), swc::ConfigError);
  REQUIRE_THROWS_AS(swc::parse_matrix(swc::json::parse("[]"), "m"), swc::ConfigError);
  REQUIRE_THROWS_AS(swc::parse_matrix(swc::json::parse(R"([["x"]])"), "m"), swc::ConfigError);
}

TEST_CASE("linear cascade scenario parses with defaults") {
  swc::json j = minimal_linear();
  j["adt"] = {{"tau_a", 2.5}, {"N0", 3.0}};
  j["sim"] = {{"dt_base", 5e-4}, {"seed", 99}};
  j["output"] = {{"dir", "run_out"}, {"formats", {"csv", "json"}}};

  swc::ScenarioConfig cfg = swc::parse_scenario(j);
  REQUIRE(cfg.kind == swc::ScenarioKind::linear_cascade);
  REQUIRE(cfg.modes.size() == 1);
  REQUIRE(cfg.modes[0].A(0, 1) == 0.5);
  REQUIRE(cfg.certificate.type == "auto_linear");
  // Q defaults to the identity of matching size.
  REQUIRE((cfg.Q_c[0] - Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);
  REQUIRE((cfg.Q_o[0] - Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);
  REQUIRE(cfg.adt.tau_a == 2.5);
  REQUIRE(cfg.adt.N0 == 3.0);
  REQUIRE(cfg.sim.dt_base == 5e-4);
  REQUIRE(cfg.sim.event_tol == 1e-9);  // untouched default
  REQUIRE(cfg.sim.seed == 99);
  REQUIRE(cfg.output.dir == "run_out");
  REQUIRE(cfg.output.formats.size() == 2);
}

TEST_CASE("strict validation rejects malformed scenarios") {
  SECTION("empty config lacks a kind") {
    REQUIRE_THROWS_AS(swc::parse_scenario(swc::json::object()), swc::ConfigError);
  }
  SECTION("unknown top-level key") {
    swc::json j = minimal_linear();
    j["simulation"] = swc::json::object();
    REQUIRE_THROWS_WITH(swc::parse_scenario(j),
                        Catch::Matchers::ContainsSubstring("simulation"));
  }
  SECTION("unknown nested key") {
    swc::json j = minimal_linear();
    j["sim"] = {{"dt", 1e-3}};
    REQUIRE_THROWS_WITH(swc::parse_scenario(j), Catch::Matchers::ContainsSubstring("dt"));
  }
  SECTION("modes on the wrong kind") {
    swc::json j = minimal_linear();
    j["kind"] = "scalar_cascade";
    REQUIRE_THROWS_AS(swc::parse_scenario(j), swc::ConfigError);
  }
  SECTION("linear cascade without modes") {
    REQUIRE_THROWS_AS(swc::parse_scenario(swc::json::parse(R"({"kind":"linear_cascade"})")),
                      swc::ConfigError);
  }
  SECTION("hand-written certificates are refused") {
    swc::json j = minimal_linear();
    j["certificate"] = {{"type", "custom"}};
    REQUIRE_THROWS_AS(swc::parse_scenario(j), swc::ConfigError);
    j["certificate"] = {{"type", "builtin"}};
    REQUIRE_THROWS_AS(swc::parse_scenario(j), swc::ConfigError);
    j["certificate"] = {{"type", "auto_linear"}, {"alpha", {{"kind", "linear"}, {"a", 1.0}}}};
    REQUIRE_THROWS_AS(swc::parse_scenario(j), swc::ConfigError);
  }
  SECTION("observer settings only apply to the observer loop") {
    swc::json j = minimal_linear();
    j["observer"] = {{"epsilon", 0.2}};
    REQUIRE_THROWS_AS(swc::parse_scenario(j), swc::ConfigError);
  }
  SECTION("observer parameter ranges") {
    swc::json j = swc::json::parse(R"({"kind":"observer_loop","observer":{"epsilon":0.5}})");
    REQUIRE_THROWS_AS(swc::parse_scenario(j), swc::ConfigError);
    j["observer"]["epsilon"] = 0.2;
    j["observer"]["eta0"] = -1.0;
    REQUIRE_THROWS_AS(swc::parse_scenario(j), swc::ConfigError);
    j["observer"]["eta0"] = 2.0;
    swc::ScenarioConfig cfg = swc::parse_scenario(j);
    REQUIRE(cfg.observer.eta0 == 2.0);
    REQUIRE(cfg.certificate.type == "builtin");
  }
  SECTION("shape mismatches") {
    swc::json j = minimal_linear();
    j["modes"][0]["B"] = swc::json::parse("[[1.0],[0.0]]");  // wrong column count
    REQUIRE_THROWS_AS(swc::parse_scenario(j), swc::ConfigError);
  }
  SECTION("bad adt values") {
    swc::json j = minimal_linear();
    j["adt"] = {{"tau_a", -1.0}};
    REQUIRE_THROWS_AS(swc::parse_scenario(j), swc::ConfigError);
    j["adt"] = {{"N0", 0.5}};
    REQUIRE_THROWS_AS(swc::parse_scenario(j), swc::ConfigError);
  }
  SECTION("bad output format") {
    swc::json j = minimal_linear();
    j["output"] = {{"formats", {"yaml"}}};
    REQUIRE_THROWS_AS(swc::parse_scenario(j), swc::ConfigError);
  }
}

TEST_CASE("scenario files load from disk") {
  const std::string good = "/tmp/swc_test_scenario.json";
  {
    std::ofstream out(good);
    out << minimal_linear().dump(2);
  }
  swc::ScenarioConfig cfg = swc::load_scenario(good);
  REQUIRE(cfg.modes.size() == 1);
  std::remove(good.c_str());

  REQUIRE_THROWS_AS(swc::load_scenario("/tmp/swc_no_such_file.json"), swc::ConfigError);

  const std::string bad = "/tmp/swc_test_bad.json";
  {
    std::ofstream out(bad);
    out << "{ not json";
  }
  REQUIRE_THROWS_AS(swc::load_scenario(bad), swc::ConfigError);
  std::remove(bad.c_str());
}

TEST_CASE("CSV writer emits exact doubles") {
  const std::string path = "/tmp/swc_test_trace.csv";
  {
    swc::CsvWriter w(path, {"t", "x"});
    w.row({0.0, 0.1});
    w.row({1e-3, 1.0 / 3.0});
    REQUIRE_THROWS_AS(w.row({1.0}), swc::ConfigError);
  }
  std::ifstream in(path);
  std::string header, l1, l2;
  std::getline(in, header);
  std::getline(in, l1);
  std::getline(in, l2);
  REQUIRE(header == "t,x");

  auto second_field = [](const std::string& line) {
    return std::stod(line.substr(line.find(',') + 1));
  };
  REQUIRE(second_field(l1) == 0.1);        // bit-exact round trip
  REQUIRE(second_field(l2) == 1.0 / 3.0);
  std::remove(path.c_str());
}
