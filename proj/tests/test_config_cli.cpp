#include "levylt/cli.hpp"
#include "levylt/config.hpp"
#include "levylt/error.hpp"
#include "levylt/text.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace levylt;

namespace {

const Sections kBrownian{{"model", {{"family", "zero"}, {"b", "1"}, {"c", "1"}}}};

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("levylt_test_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string write_ini(const std::string& name, const std::string& text) {
  const std::string path = temp_path(name);
  std::ofstream(path) << text;
  return path;
}

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(Invocation inv) {
  std::ostringstream out, err;
  const int code = run(inv, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("Defaults fill everything except the model") {
    const RunConfig cfg = parse_config(kBrownian, {});
    CHECK(cfg.numeric.dx == 0.01);
    CHECK(cfg.numeric.paths == 10000);
    CHECK(cfg.numeric.seed == 0);
    CHECK(cfg.numeric.step == 1e-3);
    CHECK(cfg.model.b == 1.0);
    CHECK_THROWS_AS(parse_config({}, {}), UsageError);
  }

  TEST_CASE("Validation and overrides") {
    try {
      parse_config(kBrownian, {{"run.zeta", "-1"}});
      FAIL("negative zeta accepted");
    } catch (const UsageError& e) {
      CHECK(std::string(e.what()).find("run.zeta") != std::string::npos);
    }
    try {
      parse_config(kBrownian, {{"numeric.colour", "blue"}});
      FAIL("unknown key accepted");
    } catch (const UsageError& e) {
      CHECK(std::string(e.what()).find("numeric.colour") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config(kBrownian, {{"model.c", "0"}}), ParameterError);
    CHECK_THROWS_AS(parse_config(kBrownian, {{"zeta", "1"}}), UsageError);

    const RunConfig two = parse_config(kBrownian, {{"run.mu", "delta:0:1.0,delta:0.5:2.0"}});
    REQUIRE(two.mu.atoms.size() == 2);
    CHECK(two.mu.atoms[1].location == 0.5);
    CHECK(two.mu.atoms[1].mass == 2.0);

    const RunConfig later = parse_config(kBrownian, {{"numeric.n", "50"}, {"numeric.n", "70"}});
    CHECK(later.numeric.n == 70);
  }

  TEST_CASE("Seed fallback from the environment") {
    CHECK(parse_config(kBrownian, {}, "42").numeric.seed == 42);
    CHECK(parse_config(kBrownian, {{"numeric.seed", "7"}}, "42").numeric.seed == 7);
    CHECK_THROWS_AS(parse_config(kBrownian, {}, "-3"), UsageError);
  }

  TEST_CASE("INI parsing") {
    const Sections s = parse_ini("# comment\n[model]\nfamily = exponential ; trailing\nrate=2\nmean = 0.5\nc = 1\n\n[run]\nzeta = 3\n");
    CHECK(s.at("model").at("rate") == "2");
    CHECK(s.at("run").at("zeta") == "3");
    CHECK_THROWS_AS(parse_ini("[model\nc = 1\n"), UsageError);
    CHECK_THROWS_AS(parse_ini("c = 1\n"), UsageError);
    CHECK_THROWS_AS(parse_ini("[model]\njust words\n"), UsageError);
    CHECK(dx_key_for("scale") == "numeric.step");
    CHECK(dx_key_for("volterra") == "numeric.step");
    CHECK(dx_key_for("approx") == "numeric.delta");
    CHECK(dx_key_for("simulate") == "numeric.dx");
  }

  TEST_CASE("Scale command reproduces the Brownian closed form") {
    const std::string cfg = write_ini("brownian.ini", "[model]\nfamily = zero\nb = 1\nc = 1\n");
    const Outcome o = invoke(Invocation{"scale", "", cfg, {{"numeric.horizon", "5"}}, "", ""});
    REQUIRE(o.code == kExitPass);
    std::istringstream lines(o.out);
    std::string line;
    bool body = false;
    int rows = 0;
    double worst = 0.0;
    while (std::getline(lines, line)) {
      if (line.rfind("x,", 0) == 0) {
        body = true;
        continue;
      }
      if (!body || line.empty()) continue;
      const auto cols = split(line, ',');
      const double x = parse_number(cols[0], "x"), wp = parse_number(cols[2], "Wp");
      worst = std::max(worst, std::abs(wp - std::exp(-x)));
      ++rows;
    }
    CHECK(rows == 5001);
    CHECK(worst <= 1e-6);
    CHECK(o.err.find("wall time") != std::string::npos);
  }

  TEST_CASE("Output headers reproduce the run") {
    const std::string cfg = write_ini("exp.ini", "[model]\nfamily = exponential\nrate = 1\nmean = 1\nb = 0.5\nc = 1\n");
    const std::string first = temp_path("first.csv"), second = temp_path("second.csv");
    const Invocation inv{"simulate", "", cfg,
                         {{"numeric.paths", "30"}, {"numeric.xmax", "1"}, {"numeric.n", "40"}, {"numeric.seed", "5"},
                          {"numeric.threads", "1"}},
                         first, ""};
    REQUIRE(invoke(inv).code == kExitPass);

    // Same command with more workers, and the header of the first output used as the config.
    Invocation again = inv;
    again.overrides.back() = {"numeric.threads", "3"};
    again.out = second;
    REQUIRE(invoke(again).code == kExitPass);
    CHECK(slurp(first) == slurp(second));

    Invocation replay{"simulate", "", first, {}, temp_path("third.csv"), ""};
    REQUIRE(invoke(replay).code == kExitPass);
    CHECK(slurp(first) == slurp(replay.out));

    const RunConfig back = parse_config(read_config_file(first), {});
    const RunConfig orig = parse_config(read_config_file(cfg), inv.overrides);
    CHECK(back.echo() == orig.echo());
  }

  TEST_CASE("Exit codes") {
    const std::string cfg = write_ini("cmp.ini", "[model]\nfamily = exponential\nrate = 1\nmean = 1\nc = 1\n");
    const Outcome ok = invoke(Invocation{"verify", "compare", cfg,
                                         {{"numeric.paths", "50"}, {"numeric.xmax", "1"}, {"numeric.n", "50"},
                                          {"run.b1", "1"}, {"run.b2", "0"}},
                                         "", ""});
    CHECK(ok.code == kExitPass);
    CHECK(ok.err.find("PASS") != std::string::npos);

    CHECK(invoke(Invocation{"verify", "compare", cfg, {{"run.b1", "0"}, {"run.b2", "1"}}, "", ""}).code == kExitError);
    CHECK(invoke(Invocation{"frobnicate", "", cfg, {}, "", ""}).code == kExitError);
    CHECK(invoke(Invocation{"scale", "", temp_path("missing.ini"), {}, "", ""}).code == kExitError);
    const Outcome bad = invoke(Invocation{"scale", "", cfg, {{"run.zeta", "-1"}}, "", ""});
    CHECK(bad.code == kExitError);
    CHECK(bad.err.find("run.zeta") != std::string::npos);

    // n = 2 is far from the limit: the CMJ estimate sits about 30 SE away from the prediction.
    const Outcome fail = invoke(Invocation{"verify", "laplace", cfg,
                                           {{"model.b", "0.5"}, {"numeric.n", "2"}, {"numeric.paths", "20000"},
                                            {"numeric.dx", "0.1"}, {"numeric.xmax", "1"}, {"run.x", "1"}},
                                           "", ""});
    CHECK(fail.code == kExitFail);
    CHECK(fail.err.find("FAIL") != std::string::npos);
  }
}
