#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "sievesmm/io.hpp"

using namespace sievesmm;
namespace fs = std::filesystem;

namespace {

class IoTest : public ::testing::Test {
protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("sievesmm_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string write(const std::string& name, const std::string& text) const {
    const auto p = (dir / name).string();
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir;
};

} // namespace

TEST_F(IoTest, LogGrowthTransform) {
  const auto p = write("c.csv", "date,level\n1,100\n2,101\n3,99.5\n");
  const auto g = load_series_csv(p, "level", SeriesTransform::log_growth_x100);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_NEAR(g[0], 0.9950330853168092, 1e-12);
  EXPECT_NEAR(g[1], 100.0 * std::log(99.5 / 101.0), 1e-12);
  const auto raw = load_series_csv(p, "level");
  EXPECT_EQ(raw, (std::vector<double>{100.0, 101.0, 99.5}));
}

TEST_F(IoTest, MissingColumnListsAvailable) {
  const auto p = write("c.csv", "date,level\n1,100\n");
  try {
    (void)load_series_csv(p, "growth");
    FAIL();
  } catch (const validation_error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("growth"), std::string::npos);
    EXPECT_NE(msg.find("date"), std::string::npos);
    EXPECT_NE(msg.find("level"), std::string::npos);
  }
}

TEST_F(IoTest, BadCellsNameTheRow) {
  const auto p = write("c.csv", "y\n1.0\n2.0\nabc\n");
  try {
    (void)load_series_csv(p, "y");
    FAIL();
  } catch (const validation_error& e) {
    EXPECT_NE(std::string(e.what()).find('3'), std::string::npos);
  }
  const auto q = write("d.csv", "y\n1.0\n-2.0\n");
  EXPECT_THROW((void)load_series_csv(q, "y", SeriesTransform::log_growth_x100), validation_error);
  EXPECT_THROW((void)series_transform_from_string("log"), validation_error);
}

TEST_F(IoTest, SeriesAndPanelRoundTrip) {
  const std::vector<double> y{0.25, -1.5, 3.125};
  const auto p = (dir / "s.csv").string();
  write_series_csv(p, "y", y);
  EXPECT_EQ(load_series_csv(p, "y"), y);

  Dataset d;
  d.units = 2;
  d.T = 3;
  d.y = {0.0, 1.0, 2.0, 3.0, 0.0, 5.0};
  d.x = {1.5, 2.5, 3.5, 4.5, 5.5, 6.5};
  const auto q = (dir / "p.csv").string();
  write_panel_csv(q, d);
  const auto e = load_panel_csv(q, "unit", "t", "y", "x");
  EXPECT_EQ(e.units, 2u);
  EXPECT_EQ(e.T, 3u);
  EXPECT_EQ(e.y, d.y);
  EXPECT_EQ(e.x, d.x);

  const auto u = write("u.csv", "unit,t,y,x\na,1,0,1\na,2,0,1\nb,1,0,1\n");
  EXPECT_THROW((void)load_panel_csv(u, "unit", "t", "y", "x"), validation_error);
}

TEST_F(IoTest, TomlAndJsonConfigsAgree) {
  const auto t = write("c.toml", R"(schema_version = 1
[model]
kind = "sv_linear"
n = 300
S = 2
[model.parameters.rho_sigma]
value = 0.6
lower = 0.0
upper = 0.99
[model.parameters]
mu_c = 0.1
[mixture]
k = 3
[grid]
m = 50
seed = 4
[optimizer]
max_evals = 10
[simulation]
seed = 9
)");
  const auto j = write("c.json", R"({"schema_version": 1, "model": {"kind": "sv_linear", "n": 300, "S": 2,
  "parameters": {"rho_sigma": {"value": 0.6, "lower": 0.0, "upper": 0.99}, "mu_c": 0.1}},
  "mixture": {"k": 3}, "grid": {"m": 50, "seed": 4}, "optimizer": {"max_evals": 10}, "simulation": {"seed": 9}})");
  const auto a = estimation_config_from_json(read_config(t));
  const auto b = estimation_config_from_json(read_config(j));
  EXPECT_EQ(to_json(a), to_json(b));
  EXPECT_EQ(a.model.kind, ModelKind::sv_linear);
  EXPECT_EQ(a.model.value("rho_sigma"), 0.6);
  EXPECT_EQ(a.model.value("mu_c"), 0.1);
  EXPECT_EQ(a.mixture.k, 3u);
  EXPECT_EQ(a.grid.m, 50u);
  EXPECT_EQ(a.sim_seed, 9u);
  EXPECT_EQ(a.model.burn_in, default_burn_in(300));
}

TEST_F(IoTest, ConfigErrors) {
  EXPECT_THROW((void)read_config(write("a.toml", "[model]\nkind = \"ar1\"\n")), validation_error);
  EXPECT_THROW((void)read_config(write("b.toml", "schema_version = 2\n")), validation_error);
  EXPECT_THROW((void)read_config(write("c.toml", "schema_version = \n")), validation_error);
  EXPECT_THROW((void)read_config(write("d.json", "{\"schema_version\": 1")), validation_error);
  EXPECT_THROW((void)read_config((dir / "missing.toml").string()), validation_error);
  const auto bad = read_config(write("e.toml", "schema_version = 1\n[model]\nkind = \"arma\"\n"));
  EXPECT_THROW((void)estimation_config_from_json(bad), validation_error);
  const auto typ = read_config(write("f.toml", "schema_version = 1\n[grid]\nm = \"many\"\n"));
  EXPECT_THROW((void)estimation_config_from_json(typ), validation_error);
  const auto par = read_config(write("g.toml", "schema_version = 1\n[model.parameters]\nbeta = 1.0\n"));
  EXPECT_THROW((void)estimation_config_from_json(par, 100), validation_error);
}
