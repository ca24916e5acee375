#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "harness/commands.hpp"
#include "harness/config.hpp"
#include "harness/csv.hpp"
#include "leibenson/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kConfigs = LAB_CONFIG_DIR;

json minimal() {
  return json::parse(R"({
    "manifold": {"type": "euclidean", "dimension": 1},
    "equation": {"p": 2, "q": 2},
    "domain": {"radius": 1.0, "cells": 100},
    "time": {"dt": 1e-3, "t_end": 0.01},
    "initial": {"profile": "bump", "width": 0.5}
  })");
}

std::string config_error(const json& doc) {
  try {
    harness::parse_config(doc);
  } catch (const leibenson::ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("leibenson_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "leibenson-lab");
  std::vector<char*> argv;
  for (std::string& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = harness::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str() + err.str();
  return code;
}

fs::path write_config(const fs::path& dir, const json& doc) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << doc.dump(2);
  return p;
}

// Parses a CSV written by the harness (no quoted fields expected here).
std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST(Config, MinimalDocumentParses) {
  const harness::RunConfig c = harness::parse_config(minimal());
  EXPECT_EQ(c.equation.p, 2.0);
  EXPECT_EQ(c.domain.cells, 100);
  EXPECT_TRUE(c.dt_given);
}

TEST(Config, MissingFieldsNameTheirPath) {
  for (const std::string& path : {"equation.p", "domain.cells", "time.t_end", "initial.profile"}) {
    json doc = minimal();
    const auto dot = path.find('.');
    doc[path.substr(0, dot)].erase(path.substr(dot + 1));
    EXPECT_NE(config_error(doc).find("missing required field '" + path + "'"), std::string::npos)
        << config_error(doc);
  }
  json doc = minimal();
  doc["initial"].erase("width");
  EXPECT_NE(config_error(doc).find("initial.width"), std::string::npos);
}

TEST(Config, UnknownKeysAreRejected) {
  json doc = minimal();
  doc["equation"]["r"] = 3;
  EXPECT_NE(config_error(doc).find("unknown key 'equation.r'"), std::string::npos);
  doc = minimal();
  doc["extras"] = json::object();
  EXPECT_NE(config_error(doc).find("extras"), std::string::npos);
}

TEST(Config, InvalidValuesAreRejected) {
  json doc = minimal();
  doc["equation"]["p"] = 1.0;
  EXPECT_FALSE(config_error(doc).empty());
  doc = minimal();
  doc["domain"]["cells"] = 8;
  EXPECT_FALSE(config_error(doc).empty());
  doc = minimal();
  doc["seed"] = -4;
  EXPECT_FALSE(config_error(doc).empty());
  doc = minimal();
  doc["manifold"]["type"] = "torus";
  EXPECT_FALSE(config_error(doc).empty());
}

TEST(Config, ResolvedDocumentRoundTrips) {
  for (const char* name : {"porous_medium_verify.json", "plaplace_verify.json", "rate_sweep.json",
                           "dead_core.json", "hyperbolic.json", "barenblatt_pme.json"}) {
    const harness::RunConfig a = harness::load_config(kConfigs / name);
    const json ja = harness::to_json(a);
    const harness::RunConfig b = harness::parse_config(ja, a.base_dir);
    EXPECT_EQ(harness::to_json(b), ja) << name;
  }
}

TEST(Config, CommentsAreAllowed) {
  const fs::path dir = scratch("comments");
  std::ofstream(dir / "c.json") << "// header\n" << minimal().dump() << "\n/* trailer */\n";
  EXPECT_NO_THROW(harness::load_config(dir / "c.json"));
}

TEST(Csv, EscapesPerRfc4180) {
  EXPECT_EQ(harness::csv_escape("plain"), "plain");
  EXPECT_EQ(harness::csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(harness::csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(harness::csv_escape("two\nlines"), "\"two\nlines\"");
}

TEST(Csv, CrlfRowsAndRoundTripNumbers) {
  harness::CsvTable t({"x", "label"});
  t.row().add(0.1).add("a,b");
  t.row().add(1.0 / 3.0).add(true);
  const std::string s = t.str();
  EXPECT_EQ(s.substr(0, 9), "x,label\r\n");
  EXPECT_NE(s.find("0.10000000000000001,\"a,b\"\r\n"), std::string::npos);
  EXPECT_EQ(std::stod(harness::format_number(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_EQ(t.rows(), 2u);
}

TEST(Csv, AtomicWriteReplacesTheTarget) {
  const fs::path dir = scratch("atomic");
  harness::write_atomic(dir / "f.txt", "one");
  harness::write_atomic(dir / "f.txt", "two");
  EXPECT_EQ(slurp(dir / "f.txt"), "two");
  EXPECT_EQ(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}), 1);
}

TEST(ParallelFor, RethrowsTheFirstFailure) {
  std::vector<int> hit(16, 0);
  harness::parallel_for(16, 4, [&](int i) { hit[i] = 1; });
  for (int h : hit) EXPECT_EQ(h, 1);
  try {
    harness::parallel_for(8, 3, [](int i) {
      if (i == 2 || i == 6) throw std::runtime_error(std::to_string(i));
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "2");
  }
}

TEST(Cli, MissingFieldExitsWithConfigError) {
  const fs::path dir = scratch("missing");
  json doc = minimal();
  doc["equation"].erase("q");
  std::string text;
  EXPECT_EQ(cli({"solve", "--config", write_config(dir, doc).string(), "--out", dir.string()}, &text),
            harness::kConfigError);
  EXPECT_NE(text.find("equation.q"), std::string::npos);
  EXPECT_EQ(cli({"solve", "--config", (dir / "absent.json").string()}), harness::kConfigError);
  EXPECT_EQ(cli({"frobnicate"}), harness::kConfigError);
}

TEST(Cli, FastDiffusionRateFitIsAPreconditionError) {
  const fs::path dir = scratch("fast_rate");
  json doc = minimal();
  doc["equation"]["q"] = 0.5;
  std::string text;
  EXPECT_EQ(cli({"fit-rate", "--config", write_config(dir, doc).string(), "--out", dir.string()}, &text),
            harness::kConfigError);
  EXPECT_NE(text.find("delta"), std::string::npos);
}

TEST(Cli, ZeroDataStaysZero) {
  const fs::path dir = scratch("zero");
  ASSERT_EQ(cli({"solve", "--config", (kConfigs / "zero_data.json").string(), "--out", dir.string()}),
            harness::kOk);
  const auto rows = read_csv(dir / "trajectory.csv");
  ASSERT_GT(rows.size(), 1u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"time", "r", "u"}));
  for (std::size_t k = 1; k < rows.size(); ++k) EXPECT_EQ(std::stod(rows[k][2]), 0.0);
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  EXPECT_EQ(cli({"verify", "--config", (kConfigs / "zero_data.json").string(), "--out", dir.string()}),
            harness::kOk);
}

TEST(Cli, FlippedFluxIsCaught) {
  const fs::path dir = scratch("mutation");
  std::string text;
  EXPECT_EQ(cli({"verify", "--config", (kConfigs / "flip_flux_mutation.json").string(), "--out",
                 dir.string()},
                &text),
            harness::kPropertyFailure);
  EXPECT_NE(text.find("comparison: fail"), std::string::npos) << text;
}

TEST(Cli, RunsAreBitReproducible) {
  const fs::path a = scratch("repro_a"), b = scratch("repro_b");
  for (const fs::path& d : {a, b})
    ASSERT_EQ(cli({"verify", "--config", (kConfigs / "porous_medium_verify.json").string(), "--out",
                   d.string(), "--seed", "3"}),
              harness::kOk);
  for (const char* f : {"verify.csv", "ladder.csv"}) {
    EXPECT_FALSE(slurp(a / f).empty()) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  json ma = json::parse(slurp(a / "manifest.json")), mb = json::parse(slurp(b / "manifest.json"));
  ma["config"]["output"].erase("directory");
  mb["config"]["output"].erase("directory");
  EXPECT_EQ(ma, mb);
}

TEST(Cli, PorousMediumNormsNeverGrow) {
  const fs::path dir = scratch("norms");
  ASSERT_EQ(cli({"solve", "--config", (kConfigs / "porous_medium_verify.json").string(), "--out",
                 dir.string(), "--snapshot-every", "20"}),
            harness::kOk);
  const auto rows = read_csv(dir / "norms.csv");
  ASSERT_GT(rows.size(), 3u);
  for (std::size_t col = 1; col < rows[0].size(); ++col)
    for (std::size_t k = 2; k < rows.size(); ++k)
      EXPECT_LE(std::stod(rows[k][col]), std::stod(rows[k - 1][col]) * (1.0 + 1e-12))
          << rows[0][col] << " row " << k;
  const json manifest = json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["config"]["output"]["snapshot_every"], 20);
  EXPECT_TRUE(manifest["config"]["time"].contains("dt"));
}

TEST(Cli, RateFitForPorousMediumAndPLaplace) {
  const fs::path dir = scratch("rate");
  harness::RunConfig cfg = harness::load_config(kConfigs / "rate_sweep.json");
  cfg.sweep.exponents = {{2.0, 2.0}, {3.0, 1.0}};
  cfg.output.directory = dir.string();
  cfg.output.plots = false;
  std::ostringstream log;
  EXPECT_EQ(harness::cmd_fit_rate(cfg, 2, log), harness::kOk) << log.str();
  const auto rows = read_csv(dir / "rate_fit.csv");
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    EXPECT_LE(std::stod(rows[k][6]), 0.05) << rows[k][0] << "," << rows[k][1];
    EXPECT_LE(std::stod(rows[k][10]), 0.02);
  }
}
