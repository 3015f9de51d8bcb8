#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "dds/dataset_io.hpp"
#include "dds/run_config.hpp"

using namespace dds;
namespace fs = std::filesystem;

namespace {

struct WorkDir {
  fs::path path;
  WorkDir() {
    path = fs::absolute("cli_test_work");
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~WorkDir() { fs::remove_all(path); }
  std::string operator/(const std::string& sub) const { return (path / sub).string(); }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DDS_CLI_PATH) + " " + args + " 2>/dev/null >/dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("simulate writes a loadable dataset with truth and config") {
  WorkDir work;
  const std::string out = work / "sim";
  REQUIRE(run_cli("simulate --out " + out + " --days 30 --width 6 --seed 4 --lambda0 25 --beta0 0.8") == 0);

  DatasetMeta meta;
  const DriverDataset ds = read_dataset(out, &meta);
  CHECK(ds.history.days() == 30);
  CHECK(ds.history.width() == 6);
  for (Eigen::Index d = 0; d < 30; ++d) CHECK(ds.history.labels(d, 0) == 1);
  CHECK(read_truth(out).has_value());
  CHECK(read_truth(out)->lambda0 == 25.0);

  const RunConfig config = read_config_file(out + "/config.txt");
  CHECK(config.at("command") == "simulate");
  CHECK(config.at("days") == "30");
  CHECK(config.at("seed") == "4");
}

TEST_CASE("simulate is byte-deterministic for a fixed seed") {
  WorkDir work;
  REQUIRE(run_cli("simulate --out " + (work / "a") + " --days 20 --width 5 --seed 9") == 0);
  REQUIRE(run_cli("simulate --out " + (work / "b") + " --days 20 --width 5 --seed 9") == 0);
  CHECK(slurp(work / "a/days.csv") == slurp(work / "b/days.csv"));
  CHECK(slurp(work / "a/meta.json") == slurp(work / "b/meta.json"));
  CHECK(slurp(work / "a/truth.json") == slurp(work / "b/truth.json"));
}

TEST_CASE("a zero-target generator stops at the first slot every day") {
  WorkDir work;
  const std::string out = work / "zero";
  REQUIRE(run_cli("simulate --out " + out +
                  " --days 15 --width 5 --seed 2 --lambda0 0 --a1 1 --a2 0 --noise-eps 0") == 0);
  const DriverDataset ds = read_dataset(out);
  for (Eigen::Index d = 0; d < ds.history.days(); ++d) CHECK(ds.history.stop_count(d) == 1);
}

TEST_CASE("ingest builds per-driver datasets from the fixture") {
  WorkDir work;
  const std::string out = work / "chicago";
  REQUIRE(run_cli("ingest " + std::string(DDS_FIXTURE_CSV) + " --out " + out +
                  " --drivers 2 --seed 0") == 0);

  const DriverDataset cab1 = read_dataset(out + "/driver_CAB001");
  CHECK(cab1.history.days() == 3);
  CHECK(cab1.history.width() == 3);
  const DriverDataset cab2 = read_dataset(out + "/driver_CAB002");
  CHECK(cab2.history.days() == 2);

  const std::string report = slurp(out + "/ingest_report.json");
  CHECK(report.find("\"rows_read\": 12") != std::string::npos);
  CHECK(report.find("\"rows_dropped\": 2") != std::string::npos);
}

TEST_CASE("ingest fails cleanly on bad inputs") {
  WorkDir work;
  // more drivers than the fixture holds
  CHECK(run_cli("ingest " + std::string(DDS_FIXTURE_CSV) + " --out " + (work / "x") +
                " --drivers 10") == 4);
  // missing column
  const std::string bad_csv = work / "bad.csv";
  std::ofstream(bad_csv) << "Taxi ID,Trip Start Timestamp,Trip Total\na,01/01/2023 01:00:00 AM,5\n";
  CHECK(run_cli("ingest " + bad_csv + " --out " + (work / "y")) == 4);
  // unreadable path
  CHECK(run_cli("ingest " + (work / "no_such.csv") + " --out " + (work / "z")) == 5);
}

TEST_CASE("train produces reports and honors the sweep flag") {
  WorkDir work;
  const std::string data = work / "sim";
  REQUIRE(run_cli("simulate --out " + data +
                  " --days 20 --width 6 --seed 4 --lambda0 25 --beta0 0.8 --noise-eta 0.05") == 0);

  const std::string out = work / "runs";
  REQUIRE(run_cli("train " + data + " --out " + out +
                  " --epochs 2 --samples 2 --lr 0.001 --seed 7 --baseline ds") == 0);
  const LoadedReport main_run = read_train_report(out + "/report.json");
  CHECK(main_run.report.epochs.size() == 2);
  CHECK(main_run.report.has_test);
  CHECK(main_run.report.has_truth);
  const LoadedReport baseline = read_train_report(out + "/baseline_ds/report.json");
  CHECK(baseline.report.final_params.a1 == 1.0);
  CHECK(baseline.report.final_params.a2 == 0.0);

  const std::string sweep_out = work / "sweep";
  REQUIRE(run_cli("train " + data + " --out " + sweep_out +
                  " --epochs 1 --sweep-samples 1,2,4 --lr 0.001 --seed 7") == 0);
  CHECK(fs::exists(fs::path(sweep_out) / "R1" / "report.json"));
  CHECK(fs::exists(fs::path(sweep_out) / "R2" / "report.json"));
  CHECK(fs::exists(fs::path(sweep_out) / "R4" / "report.json"));
}

TEST_CASE("train reruns are byte-identical") {
  WorkDir work;
  const std::string data = work / "sim";
  REQUIRE(run_cli("simulate --out " + data + " --days 15 --width 5 --seed 3 --lambda0 20") == 0);
  REQUIRE(run_cli("train " + data + " --out " + (work / "r1") +
                  " --epochs 2 --samples 2 --seed 11 --lr 0.001") == 0);
  REQUIRE(run_cli("train " + data + " --out " + (work / "r2") +
                  " --epochs 2 --samples 2 --seed 11 --lr 0.001") == 0);
  CHECK(slurp(work / "r1/report.json") == slurp(work / "r2/report.json"));
  CHECK(slurp(work / "r1/epochs.csv") == slurp(work / "r2/epochs.csv"));
}

TEST_CASE("config file values are used and flags override them") {
  WorkDir work;
  const std::string cfg = work / "sim.cfg";
  std::ofstream(cfg) << "out = " << (work / "from_file") << "\ndays = 12\nwidth = 4\nseed = 6\n";
  REQUIRE(run_cli("simulate --config " + cfg) == 0);
  CHECK(read_dataset(work / "from_file").history.days() == 12);

  REQUIRE(run_cli("simulate --config " + cfg + " --out " + (work / "override") + " --days 8") == 0);
  const DriverDataset ds = read_dataset(work / "override");
  CHECK(ds.history.days() == 8);
  CHECK(ds.history.width() == 4);  // width still came from the file
}

TEST_CASE("report merges runs into one tidy csv") {
  WorkDir work;
  const std::string data = work / "sim";
  REQUIRE(run_cli("simulate --out " + data + " --days 15 --width 5 --seed 3 --lambda0 20") == 0);
  REQUIRE(run_cli("train " + data + " --out " + (work / "sweep") +
                  " --epochs 2 --sweep-samples 1,2 --seed 5 --lr 0.001") == 0);

  const std::string tidy = work / "tidy.csv";
  REQUIRE(run_cli("report --out " + tidy + " " + (work / "sweep")) == 0);
  const std::string csv = slurp(tidy);
  CHECK(csv.rfind("run_id,epoch,metric,value\n", 0) == 0);
  CHECK(csv.find("R1,") != std::string::npos);
  CHECK(csv.find("R2,") != std::string::npos);
  CHECK(csv.find("train_loss") != std::string::npos);

  CHECK(run_cli("report --out " + (work / "empty.csv") + " " + (work / "nothing")) != 0);
}

TEST_CASE("usage errors exit nonzero") {
  CHECK(run_cli("train") != 0);
  CHECK(run_cli("no-such-command") != 0);
  WorkDir work;
  CHECK(run_cli("simulate --days 5") == 2);  // --out missing
}
