#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "splitleap/errors.hpp"
#include "splitleap/network_io.hpp"
#include "splitleap/pipelines.hpp"

using namespace splitleap;

namespace {

SimulateConfig small_config(const std::string& scheme) {
  SimulateConfig c;
  c.network_label = "iso";
  c.x0 = State{80, 20};
  c.scheme = parse_scheme(scheme);
  c.tau = 0.1;
  c.t_final = 1.0;
  c.samples = 400;
  c.seed = 17;
  c.grid_points = 5;
  return c;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

std::map<std::string, std::string> comment_fields(const std::string& line) {
  std::map<std::string, std::string> f;
  std::istringstream is(line);
  for (std::string tok; is >> tok;) {
    const auto eq = tok.find('=');
    if (eq != std::string::npos) f[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return f;
}

}  // namespace

TEST_CASE("uniform grid") {
  const auto g = uniform_grid(0.01, 10);
  REQUIRE(g.size() == 11);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 0.01);
  CHECK(g[5] == doctest::Approx(0.005).epsilon(1e-15));
  CHECK_THROWS_AS(uniform_grid(0.0, 10), InvalidArgument);
  CHECK_THROWS_AS(uniform_grid(1.0, 0), InvalidArgument);
}

TEST_CASE("csv table") {
  CsvTable t("splitleap test a=1", {"x", "y"});
  t.add_row(std::vector<double>{0.1, 3.0});
  t.add_row(std::vector<std::string>{"a", "b"});
  CHECK(t.str() == "# splitleap test a=1\nx,y\n0.1,3\na,b\n");
  CHECK_THROWS_AS(t.add_row(std::vector<std::string>{"only"}), InvalidArgument);
  CHECK(format_number(1e-5) == "1e-05");
  CHECK(std::stod(format_number(0.1 + 0.2)) == 0.1 + 0.2);
  CHECK(config_comment("run", {{"a", "1"}, {"b", "x;y"}}) == "splitleap run a=1 b=x;y");
}

TEST_CASE("trapezoidal alias gives byte-identical output") {
  const auto iso = isomerization_network(2.0, 3.0);
  const auto a = simulate(iso, small_config("trapezoidal")).files;
  const auto b = simulate(iso, small_config("theta:0.5")).files;
  REQUIRE(!a.empty());
  CHECK(a == b);
}

TEST_CASE("same config and seed are reproducible, other seeds are not") {
  const auto iso = isomerization_network(2.0, 3.0);
  for (const char* scheme : {"ssa", "explicit", "split-step:0.3", "slow-scale"}) {
    INFO(scheme);
    auto c = small_config(scheme);
    const auto a = simulate(iso, c).files;
    c.workers = 3;
    CHECK(simulate(iso, c).files == a);
    c.seed = 18;
    CHECK(simulate(iso, c).files != a);
  }
}

TEST_CASE("every csv has a config comment and a header") {
  const auto iso = isomerization_network(2.0, 3.0);
  const auto c = small_config("slow-scale");
  const auto r = simulate(iso, c);
  CHECK(r.files.count("moments.csv") == 1);
  CHECK(r.files.count("parameters.csv") == 1);
  CHECK(r.files.count("hist_S1_1.csv") == 1);
  CHECK(r.files.count("hist_S2_1.csv") == 1);
  REQUIRE(r.trajectory);
  for (const auto& [name, text] : r.files) {
    INFO(name);
    const auto ls = lines(text);
    REQUIRE(ls.size() >= 3);
    CHECK(ls[0].rfind("# splitleap simulate ", 0) == 0);
    const auto f = comment_fields(ls[0]);
    CHECK(f.at("seed") == "17");
    CHECK(f.at("scheme") == "slow-scale");
    CHECK(f.at("x0") == "80;20");
    CHECK(std::stod(f.at("tau")) == c.tau);
    CHECK(std::stoul(f.at("samples")) == c.samples);
    CHECK(f.at("network") == "iso");
    CHECK(f.count("alpha1") == 1);
    CHECK(ls[1].find('#') == std::string::npos);
  }
  const auto ls = lines(r.files.at("moments.csv"));
  CHECK(ls[1] == "time,mean_S1,mean_S2,se_S1,se_S2,cov_S1_S1,cov_S1_S2,cov_S2_S2");
  CHECK(ls.size() == 2 + 6);
  CHECK(lines(r.files.at("parameters.csv")).size() == 2 + r.trajectory->steps.size());

  // Histogram counts add up to the ensemble size.
  std::size_t total = 0;
  const auto h = lines(r.files.at("hist_S1_1.csv"));
  CHECK(h[1] == "value,count");
  for (std::size_t k = 2; k < h.size(); ++k) total += std::stoul(h[k].substr(h[k].find(',') + 1));
  CHECK(total == c.samples);
}

TEST_CASE("written bundle round-trips") {
  const auto iso = isomerization_network(2.0, 3.0);
  const auto files = simulate(iso, small_config("implicit")).files;
  const auto dir = std::filesystem::temp_directory_path() / "splitleap_bundle_test";
  std::filesystem::remove_all(dir);
  write_bundle(files, dir);
  for (const auto& [name, text] : files) {
    std::ifstream in(dir / name, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == text);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("moments and estimate pipelines") {
  const auto iso = isomerization_network(2.0, 3.0);
  auto c = small_config("theta:0.5");
  const auto m = moments_pipeline(iso, c);
  REQUIRE(m.count("reference_moments.csv") == 1);
  REQUIRE(m.count("scheme_moments.csv") == 1);
  // 11 steps of 0.1 including t = 0, header and comment.
  CHECK(lines(m.at("reference_moments.csv")).size() == 2 + 11);
  const auto last = lines(m.at("scheme_moments.csv")).back();
  CHECK(last.rfind("1,", 0) == 0);
  // Trapezoidal mean contracts by 0.6 per step towards 60.
  const double mean_s1 = std::stod(last.substr(2, last.find(',', 2) - 2));
  CHECK(mean_s1 == doctest::Approx(60.0 + 20.0 * std::pow(0.6, 10)).epsilon(1e-12));

  c.scheme = parse_scheme("ssa");
  CHECK(moments_pipeline(iso, c).size() == 1);
  c.scheme = parse_scheme("slow-scale");
  CHECK(moments_pipeline(iso, c).count("parameters.csv") == 1);

  const auto e = estimate_pipeline(iso, c);
  REQUIRE(e.size() == 1);
  const auto ls = lines(e.at("parameters.csv"));
  CHECK(ls[0].rfind("# splitleap estimate ", 0) == 0);
  CHECK(ls[1] ==
        "t,tau,objective,mean_error,cov_error,converged,tau_reductions,theta_1,theta_2,eta1_1,eta1_2,eta2_1,eta2_2");
  CHECK(ls.size() == 2 + 10);

  c.tau = 0.0;
  CHECK_THROWS_AS(moments_pipeline(iso, c), InvalidArgument);
  c = small_config("explicit");
  c.x0 = State{1, 2, 3};
  CHECK_THROWS_AS(simulate(iso, c), InvalidArgument);
}

TEST_CASE("stability table") {
  const auto t = stability_table("splitleap stability-table", {0.0, 0.5}, {0.0, 1.0}, {1.0}, {1.0, 2.0});
  CHECK(t.rows() == 8);
  const auto ls = lines(t.str());
  CHECK(ls[1] == "theta,eta1,eta2,z,P,A,stable,theta_P,theta_A,theta_stable");
  // theta = 0, eta1 = 0, eta2 = 1, z = 2: explicit Euler at the stability edge.
  CHECK(ls[3] == "0,0,1,2,nan,nan,0,-1,inf,0");
  // theta = 1/2 with eta = (1, 1) at z = 1: P = 1 / (1 + 1 + 1/4).
  CHECK(ls.back().rfind("0.5,1,1,2,", 0) == 0);
  const auto row = lines(t.str())[8];
  CHECK(row.rfind("0.5,1,1,1,0.4444444444444444,", 0) == 0);
}

TEST_CASE("example1 network and outputs") {
  const auto chain = monomolecular_chain({1e4, 1e4, 1e2, 1e2, 1e5, 1e5});
  Matrix nu(4, 6);
  nu << -1, 1, 0, 0, 0, 0,  //
      1, -1, -1, 1, 0, 0,   //
      0, 0, 1, -1, -1, 1,   //
      0, 0, 0, 0, 1, -1;
  CHECK(chain.stoichiometry() == nu);

  Example1Config c;
  c.samples = 300;
  c.x_T = 50;
  const auto a = example1(c);
  for (const char* f : {"exact_moments.csv", "exact_marginals.csv", "errors.csv", "parameters.csv",
                        "implicit/moments.csv", "trapezoidal/moments.csv", "slow-scale/moments.csv",
                        "slow-scale/hist_S3_10.csv"})
    CHECK(a.files.count(f) == 1);
  CHECK(lines(a.files.at("exact_marginals.csv")).size() == 2 + 51);
  CHECK(lines(a.files.at("errors.csv")).size() == 2 + 3);
  for (const auto& [name, st] : a.stats) {
    INFO(name);
    CHECK(st.mean.back().sum() == doctest::Approx(50.0).epsilon(1e-12));
  }
  c.workers = 4;
  CHECK(example1(c).files == a.files);

  c.rates = {0.0, 1, 1, 1, 1, 1};
  CHECK_THROWS_AS(example1(c), InvalidArgument);
}

TEST_CASE("example2 outputs") {
  Example2Config c;
  c.samples = 100;
  c.ssa_samples = 4;
  const auto r = example2(c);
  for (const char* f : {"summary.csv", "parameters.csv", "ssa/moments.csv", "implicit/moments.csv",
                        "trapezoidal/hist_S1_0.01.csv", "slow-scale/hist_S3_0.01.csv"})
    CHECK(r.files.count(f) == 1);
  CHECK(lines(r.files.at("summary.csv")).size() == 2 + 4 * 3);
  CHECK(r.trajectory.steps.size() == 10);
  const auto f = comment_fields(lines(r.files.at("summary.csv"))[0]);
  CHECK(f.at("rates") == "1000;1000;1e-05;10;1;1e+06");
  CHECK(f.at("x0") == "1000;1000;1000000");
}
