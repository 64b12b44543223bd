#include "ermu/csv.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

using namespace ermu;
namespace fs = std::filesystem;

namespace {
TrialResult sample_trial(const std::string& fam, int trial) {
  TrialResult t;
  t.family = fam;
  t.n = 200;
  t.p = 150;
  t.trial = trial;
  t.seed = 0xfedcba9876543210ULL;
  t.x_arm = {0.1 + trial, {0.2, 0.003}, {0.25, 0.004}, 17, kFlagNone};
  t.g_arm = {1.0 / 3.0, {0.5, 0.006}, {std::numeric_limits<double>::infinity(), 0.0}, 5000, kFlagMaxIters};
  return t;
}
}  // namespace

TEST_CASE("doubles are written with full precision") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("RFC-4180 quoting") {
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  const auto f = split_csv_line("x,\"a,b\",\"q\"\"q\",");
  REQUIRE(f.size() == 4);
  CHECK(f[1] == "a,b");
  CHECK(f[2] == "q\"q");
  CHECK(f[3].empty());
}

TEST_CASE("trials round-trip through CSV") {
  const std::vector<TrialResult> in = {sample_trial("lin", 0), sample_trial("rf, odd", 1)};
  const std::string text = trials_to_csv(in);
  CHECK(text.rfind(std::string(kTrialCsvHeader) + "\r\n", 0) == 0);
  CsvDiagnostics diag;
  const auto out = parse_trials_csv(text, "t.csv", diag);
  CHECK(diag.ok());
  REQUIRE(out.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(out[i].family == in[i].family);
    CHECK(out[i].seed == in[i].seed);
    CHECK(out[i].x_arm.train_opt == in[i].x_arm.train_opt);
    CHECK(out[i].g_arm.train_opt == in[i].g_arm.train_opt);
    CHECK(out[i].x_arm.test_g.se == in[i].x_arm.test_g.se);
    CHECK(std::isinf(out[i].g_arm.test_g.value));
    CHECK(out[i].g_arm.flags == kFlagMaxIters);
    CHECK(out[i].g_arm.iterations == 5000);
  }
  CHECK(trials_to_csv(out) == text);
}

TEST_CASE("malformed rows produce per-line diagnostics") {
  std::string text = trials_to_csv(std::vector<TrialResult>{sample_trial("lin", 0), sample_trial("lin", 1)});
  text += "lin:x,200,150,2,1,not-a-number,0,0,0,0,1,\r\n";
  text += "lin:x,200,150,3,1,0.5,0,0,0,0,1,\r\n";  // no matching g row
  CsvDiagnostics diag;
  const auto out = parse_trials_csv(text, "trials.csv", diag);
  CHECK(out.size() == 2);
  REQUIRE(diag.messages.size() >= 2);
  CHECK(diag.messages[0].find("trials.csv:6") != std::string::npos);
  CsvDiagnostics d2;
  parse_trials_csv("wrong,header\r\n", "x.csv", d2);
  CHECK_FALSE(d2.ok());
}

TEST_CASE("atomic write leaves no temporary behind") {
  const fs::path dir = fs::temp_directory_path() / "ermu-test-csv";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_file_atomic(dir / "a.csv", "one\r\n");
  write_file_atomic(dir / "a.csv", "two\r\n");
  std::ifstream in(dir / "a.csv", std::ios::binary);
  std::string s((std::istreambuf_iterator<char>(in)), {});
  CHECK(s == "two\r\n");
  CHECK(std::distance(fs::directory_iterator(dir), fs::directory_iterator()) == 1);
  CHECK_THROWS(write_file_atomic(dir / "missing" / "b.csv", "x"));
}
