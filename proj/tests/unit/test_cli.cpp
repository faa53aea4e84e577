#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cli/app.hpp"
#include "cli/report.hpp"
#include "cli/run_config.hpp"
#include "swarmloc/error.hpp"

using namespace swarmloc;
using namespace swarmloc::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("swarmloc_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::vector<std::string>& args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  std::vector<const char*> argv{"swarmloc"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

std::string config_error(const nlohmann::json& doc) {
  RunConfig cfg;
  try {
    apply_json(cfg, doc);
    cfg.validate();
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfig);
    return e.what();
  }
  return {};
}

SweepResult sample_rows() {
  SweepResult r;
  r.rows.push_back({"mds-map", "retention", 0.5, 7, 12.25, std::nullopt, std::nullopt, "ok"});
  r.rows.push_back({"proposed", "retention", 0.5, 7, 0.000123456789, std::nullopt, std::nullopt, "ok"});
  r.rows.push_back({"proposed", "retention", 0.5, 18446744073709551615ull, std::nullopt, std::nullopt, std::nullopt,
                    "disconnected"});
  r.rows.push_back({"proposed", "data_to_pilot_db", -10, 3, 1.5, 0.0625, 0.25, "ok"});
  r.rows.push_back({"odd,name", "say \"hi\"", 1e-12, 0, 3.0, std::nullopt, std::nullopt, "ok"});
  return r;
}

}  // namespace

TEST_CASE("config defaults") {
  const RunConfig cfg;
  CHECK(cfg.seed == 1);
  CHECK(cfg.trials == 20);
  CHECK(cfg.swarm_size == 50);
  CHECK(cfg.methods.size() == 4);
  CHECK(cfg.retention_ratios == std::vector<double>{0.5, 0.6, 0.7, 0.8, 0.9, 1.0});
  CHECK(cfg.power_ratios_db.size() == 11);
  CHECK(cfg.pipeline.completion_margin == 1.2);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("JSON keys override only what they name") {
  RunConfig cfg;
  apply_json(cfg, nlohmann::json::parse(R"({"seed": 42, "measurement": {"noise_sigma": 0.5}})"));
  CHECK(cfg.seed == 42);
  CHECK(cfg.measurement.noise_sigma == 0.5);
  CHECK(cfg.measurement.retention_ratio == 1.0);
  CHECK(cfg.trials == 20);
}

TEST_CASE("echoed configuration parses back to the same document") {
  RunConfig cfg;
  cfg.seed = 9;
  cfg.retention_ratios = {0.3};
  cfg.methods = {Method::kMdsMap};
  const nlohmann::json doc = to_json(cfg);
  RunConfig back;
  apply_json(back, doc);
  CHECK(to_json(back) == doc);
}

TEST_CASE("invalid configuration names the offending key") {
  CHECK(config_error(nlohmann::json::parse(R"({"measurement": {"retention": 1.5}})")).find("measurement.retention") !=
        std::string::npos);
  CHECK(config_error(nlohmann::json::parse(R"({"swarm": {"colour": 1}})")).find("swarm.colour") != std::string::npos);
  CHECK(config_error(nlohmann::json::parse(R"({"trials": "many"})")).find("trials") != std::string::npos);
  CHECK_FALSE(config_error(nlohmann::json::parse(R"({"methods": ["gps"]})")).empty());
}

TEST_CASE("command line flags win over the file") {
  TempDir dir("flags");
  {
    std::ofstream f(dir.path / "c.json");
    f << R"({"seed": 5, "trials": 3})";
  }
  std::string out;
  REQUIRE(run({"sweep-retention", "--config", (dir.path / "c.json").string(), "--seed", "8", "--print-config"}, &out) ==
          0);
  const auto doc = nlohmann::json::parse(out);
  CHECK(doc["seed"] == 8);
  CHECK(doc["trials"] == 3);
  CHECK(doc["scenario"] == "sweep-retention");
}

TEST_CASE("exit codes for bad input") {
  std::string err;
  CHECK(run({"locate", "--retention", "1.5", "--print-config"}, nullptr, &err) == 2);
  CHECK(err.find("retention") != std::string::npos);
  CHECK(run({"teleport", "--print-config"}, nullptr, &err) == 2);
  CHECK(run({"locate", "--config", "/nonexistent/config.json"}, nullptr, &err) == 3);
  CHECK(run({"--bogus"}) != 0);
}

TEST_CASE("a sweep writes results, plots and a manifest") {
  TempDir dir("sweep");
  const std::vector<std::string> args{"sweep-retention", "--methods", "proposed,mds-map,mds-map-p", "--ratios",
                                      "0.8,0.9",         "--trials",  "5",
                                      "--size",          "20",        "--seed",
                                      "11",              "-q",        "--out",
                                      dir.path.string()};
  REQUIRE(run(args) == 0);
  const std::string csv = slurp(dir.path / "results.csv");
  const SweepResult parsed = parse_csv(csv);
  CHECK(parsed.size() == 30);
  for (const SweepRow& r : parsed.rows) CHECK(r.ok());
  CHECK(fs::exists(dir.path / "plots" / "rmse_m.svg"));
  CHECK_FALSE(fs::exists(dir.path / "plots" / "ber.svg"));
  const auto m = nlohmann::json::parse(slurp(dir.path / "manifest.json"));
  CHECK(m["rows"] == 30);
  CHECK(m["base_seed"] == 11);
  CHECK(m["trial_seeds"].size() == 5);

  REQUIRE(run(args) == 0);
  CHECK(slurp(dir.path / "results.csv") == csv);
}

TEST_CASE("an unwritable output leaves no results behind") {
  TempDir dir("blocked");
  {
    std::ofstream f(dir.path / "file");
    f << "x";
  }
  const fs::path out = dir.path / "file" / "sub";
  std::string err;
  CHECK(run({"locate", "--size", "12", "-q", "--out", out.string()}, nullptr, &err) == 3);
  CHECK_FALSE(fs::exists(out / "results.csv"));
  CHECK_FALSE(err.empty());
}

TEST_CASE("locate prints one line per method") {
  TempDir dir("locate");
  std::string out;
  REQUIRE(run({"locate", "--size", "20", "--retention", "0.9", "--out", dir.path.string()}, &out) == 0);
  for (const char* m : {"proposed ", "proposed-fix", "mds-map ", "mds-map-p"}) CHECK(out.find(m) != std::string::npos);
  CHECK(parse_csv(slurp(dir.path / "results.csv")).size() == 4);
}

TEST_CASE("CSV of an empty result is the header alone") {
  const std::string text = format_csv(SweepResult{});
  CHECK(text == std::string(kCsvHeader) + "\n");
  CHECK(parse_csv(text).empty());
  CHECK_THROWS_AS(parse_csv(""), Error);
  CHECK_THROWS_AS(parse_csv("a,b\n"), Error);
}

TEST_CASE("CSV round trip") {
  SweepResult one;
  one.rows.push_back(sample_rows().rows[1]);
  CHECK(parse_csv(format_csv(one)) == one);

  const SweepResult rows = sample_rows();
  const SweepResult back = parse_csv(format_csv(rows));
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back.rows[i].method == rows.rows[i].method);
    CHECK(back.rows[i].param_name == rows.rows[i].param_name);
    CHECK(back.rows[i].seed == rows.rows[i].seed);
    CHECK(back.rows[i].status == rows.rows[i].status);
    CHECK(back.rows[i].rmse_m.has_value() == rows.rows[i].rmse_m.has_value());
    if (rows.rows[i].rmse_m) CHECK(*back.rows[i].rmse_m == doctest::Approx(*rows.rows[i].rmse_m).epsilon(1e-8));
  }
  CHECK(format_csv(back) == format_csv(rows));
  CHECK_THROWS_AS(parse_csv(std::string(kCsvHeader) + "\na,b,1,2,3,,,ok,extra\n"), Error);
  CHECK_THROWS_AS(parse_csv(std::string(kCsvHeader) + "\na,b,x,2,3,,,ok\n"), Error);
}

TEST_CASE("CSV matches the golden file") {
  const std::string golden = slurp(fs::path(SWARMLOC_TEST_DATA_DIR) / "golden.csv");
  REQUIRE_FALSE(golden.empty());
  CHECK(format_csv(sample_rows()) == golden);
}

TEST_CASE("SVG output is well formed") {
  const std::string svg = render_svg(sample_rows(), "rmse_m");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("odd,name (say &quot;hi&quot;)") != std::string::npos);
  CHECK(render_svg(SweepResult{}, "ber").find("</svg>") != std::string::npos);
}

TEST_CASE("atomic writes replace the target") {
  TempDir dir("atomic");
  write_atomic(dir.path / "a.txt", "one");
  write_atomic(dir.path / "a.txt", "two");
  CHECK(slurp(dir.path / "a.txt") == "two");
  CHECK_FALSE(fs::exists(dir.path / "a.txt.tmp"));
  CHECK_THROWS_AS(write_atomic(dir.path / "missing" / "a.txt", "x"), Error);
}
