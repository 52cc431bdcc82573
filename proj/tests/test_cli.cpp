#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "gomix/maxcut.hpp"
#include "gomix/trace_io.hpp"

using namespace gomix;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

const fs::path& scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("gomix_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

CliResult cli(const std::string& args) {
  static int counter = 0;
  const fs::path out = scratch_dir() / ("out" + std::to_string(counter));
  const fs::path err = scratch_dir() / ("err" + std::to_string(counter));
  ++counter;
  const std::string cmd = std::string(GOMIX_CLI_PATH) + " " + args + " > " +
                          out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

// value of a "key value" line in a subcommand's stdout
std::string field(const std::string& out, const std::string& key) {
  std::istringstream in(out);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind(key + " ", 0) == 0) return line.substr(key.size() + 1);
  return "";
}

std::vector<TraceRecord> read_trace(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  return parse_trace(in);
}

// the strictly-rising rows: exactly the improvement records, since heartbeat
// rows never exceed the best fitness already on file
std::vector<TraceRecord> improvements(const std::vector<TraceRecord>& rows) {
  std::vector<TraceRecord> out;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& r : rows)
    if (r.fitness > best) {
      out.push_back(r);
      best = r.fitness;
    }
  return out;
}

const std::string example_instance_text =
    "5 6\n1 2 1\n1 3 1\n2 3 1\n3 4 1\n3 5 1\n4 5 1\n";

}  // namespace

TEST_CASE("oracle reports the exhaustive optimum") {
  const fs::path inst = scratch_dir() / "example.g";
  spit(inst, example_instance_text);

  const CliResult r = cli("oracle --instance " + inst.string());
  CHECK(r.code == 0);
  CHECK(field(r.out, "optimum") == "4");
  CHECK(field(r.out, "genotype") == "00100");

  const CliResult torus = cli("oracle --torus 4x4");
  CHECK(torus.code == 0);
  CHECK(field(torus.out, "optimum") == "32");  // bipartite: every edge cut

  const CliResult big = cli("oracle --complete 30");
  CHECK(big.code == 2);
  CHECK(big.err.find("26") != std::string::npos);
}

TEST_CASE("generate is seed-deterministic and loadable") {
  const fs::path a = scratch_dir() / "a.g";
  const fs::path b = scratch_dir() / "b.g";
  const fs::path c = scratch_dir() / "c.g";

  CHECK(cli("generate --torus 4x5 --weights uniform:-2:5 --seed 9 --out " +
            a.string()).code == 0);
  CHECK(cli("generate --torus 4x5 --weights uniform:-2:5 --seed 9 --out " +
            b.string()).code == 0);
  CHECK(cli("generate --torus 4x5 --weights uniform:-2:5 --seed 10 --out " +
            c.string()).code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a) != slurp(c));

  std::ifstream in(a);
  const MaxCutInstance inst = load_edge_list(in);
  CHECK(inst.num_vertices == 20);
  CHECK(inst.edges.size() == 40);

  const fs::path k6 = scratch_dir() / "k6.g";
  CHECK(cli("generate --complete 6 --out " + k6.string()).code == 0);
  CHECK(slurp(k6).rfind("6 15\n", 0) == 0);

  CHECK(cli("generate --complete 6 --torus 3x3 --out " + a.string()).code == 2);
  CHECK(cli("generate --out " + a.string()).code == 2);
  CHECK(cli("generate --complete 6 --weights uniform:5:2 --out " + a.string())
            .code == 2);
}

TEST_CASE("run reaches the requested optimum and reports it") {
  const CliResult r =
      cli("run --torus 3x3 --seed 4 --stop-on-optimum 12 --max-evaluations 200000");
  INFO(r.err);
  REQUIRE(r.code == 0);
  CHECK(field(r.out, "best") == "12");
  CHECK(field(r.out, "reason") == "target-reached");
  CHECK(field(r.out, "genotype").size() == 9);
  CHECK(std::stod(field(r.out, "evaluations")) > 0.0);

  // identical invocations give identical reports
  const CliResult again =
      cli("run --torus 3x3 --seed 4 --stop-on-optimum 12 --max-evaluations 200000");
  CHECK(again.out == r.out);
}

TEST_CASE("an unreachable target is a distinct failure") {
  const CliResult r =
      cli("run --torus 3x3 --target-fitness 999 --max-seconds 0.2");
  CHECK(r.code == 3);
  CHECK(field(r.out, "reason") == "wall-clock");
}

TEST_CASE("bad invocations exit with the input-error code") {
  CHECK(cli("frobnicate").code == 2);
  CHECK(cli("run --torus 3x3").code == 2);  // no stopping rule
  CHECK(cli("run --max-generations 5").code == 2);  // no instance
  CHECK(cli("run --torus 3x3 --complete 5 --max-generations 5").code == 2);
  CHECK(cli("run --torus 3x3 --max-generations 5 --engine warp").code == 2);
  CHECK(cli("run --torus 3x3 --max-generations 5 --engine serial --workers 4")
            .code == 2);
  CHECK(cli("run --torus 3x3 --max-generations 5 --model bflt:0").code == 2);
  CHECK(cli("run --torus 3x3 --max-generations 5 --model nonsense").code == 2);
  CHECK(cli("run --torus 3x3 --target-fitness 5 --stop-on-optimum 5").code == 2);
  CHECK(cli("run --instance /no/such/file.g --max-generations 1").code == 2);
  CHECK(cli("run --torus 2x9 --max-generations 1").code == 2);

  const fs::path broken = scratch_dir() / "broken.g";
  spit(broken, "3 2\n1 2 1\n1 1 1\n");
  const CliResult r =
      cli("run --instance " + broken.string() + " --max-generations 1");
  CHECK(r.code == 2);
  CHECK(r.err.find("line 3") != std::string::npos);

  // a model that must be relearned per generation cannot be colored once
  CHECK(cli("run --torus 3x3 --max-generations 1 --engine parallel "
            "--model learned-lt").code == 2);
}

TEST_CASE("equal seeds produce equal traces up to wall clock") {
  const fs::path t1 = scratch_dir() / "t1.csv";
  const fs::path t2 = scratch_dir() / "t2.csv";
  const std::string base =
      "run --torus 4x4 --seed 11 --engine parallel --workers 3 "
      "--stop-on-optimum 32 --max-evaluations 500000 --trace ";
  REQUIRE(cli(base + t1.string()).code == 0);
  REQUIRE(cli(base + t2.string()).code == 0);

  const auto rows1 = read_trace(t1);
  const auto rows2 = read_trace(t2);
  CHECK(trace_monotone(rows1));
  CHECK(trace_monotone(rows2));

  const auto imp1 = improvements(rows1);
  const auto imp2 = improvements(rows2);
  REQUIRE(imp1.size() == imp2.size());
  REQUIRE_FALSE(imp1.empty());
  for (std::size_t i = 0; i < imp1.size(); ++i) {
    CHECK(imp1[i].evaluations == imp2[i].evaluations);
    CHECK(imp1[i].generation == imp2[i].generation);
    CHECK(imp1[i].population == imp2[i].population);
    CHECK(imp1[i].fitness == imp2[i].fitness);
  }
  CHECK(imp1.back().fitness == 32.0);
}

TEST_CASE("the config file fills in whatever flags leave open") {
  const fs::path cfg = scratch_dir() / "run.json";
  spit(cfg, R"({
    "torus": "3x3",
    "seed": 3,
    "population": 8,
    "termination": {"max_generations": 5}
  })");

  const CliResult r = cli("run --config " + cfg.string());
  INFO(r.err);
  REQUIRE(r.code == 0);
  CHECK(field(r.out, "generations") == "5");
  CHECK(field(r.out, "populations") == "1");
  CHECK(field(r.out, "reason") == "generation-limit");

  // flags win over the file
  const CliResult flag = cli("run --config " + cfg.string() + " --max-generations 2");
  CHECK(field(flag.out, "generations") == "2");

  const fs::path junk = scratch_dir() / "junk.json";
  spit(junk, R"({"torus": "3x3", "max_generations": 5})");  // misplaced key
  CHECK(cli("run --config " + junk.string()).code == 2);

  const fs::path bad = scratch_dir() / "bad.json";
  spit(bad, "{nope");
  CHECK(cli("run --config " + bad.string()).code == 2);
  CHECK(cli("run --config /no/such/config.json").code == 2);
}

TEST_CASE("interleaved populations appear in the report") {
  const CliResult r =
      cli("run --torus 3x3 --seed 2 --ims-base 4 --max-generations 12");
  REQUIRE(r.code == 0);
  CHECK(field(r.out, "generations") == "12");
  CHECK(std::stoul(field(r.out, "populations")) >= 2);
}

TEST_CASE("color-stats reproduces the worked example's six groups") {
  const fs::path inst = scratch_dir() / "fig.g";
  spit(inst, example_instance_text);
  const fs::path fos = scratch_dir() / "fig.fos";
  spit(fos, "0\n1\n2\n3\n4\n0 2\n3 4\n0 1 2\n");

  const CliResult r = cli("color-stats --instance " + inst.string() +
                          " --model fos:" + fos.string());
  INFO(r.err);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("sets 8\n") != std::string::npos);
  CHECK(r.out.find("groups 6\n") != std::string::npos);
}

TEST_CASE("color-stats shows the density contrast") {
  const CliResult dense = cli("color-stats --complete 7 --model univariate");
  REQUIRE(dense.code == 0);
  CHECK(dense.out.find("groups 7\n") != std::string::npos);

  const CliResult sparse = cli("color-stats --torus 5x5 --model univariate");
  REQUIRE(sparse.code == 0);
  const std::string k = field(sparse.out, "groups");
  REQUIRE_FALSE(k.empty());
  CHECK(std::stoul(k) <= 5);

  CHECK(cli("color-stats --torus 5x5 --model learned-lt").code == 2);
  CHECK(cli("color-stats --torus 5x5 --model fos:/no/such.fos").code == 2);

  const fs::path bad_fos = scratch_dir() / "bad.fos";
  spit(bad_fos, "0 99\n");
  const fs::path inst = scratch_dir() / "fig2.g";
  spit(inst, example_instance_text);
  CHECK(cli("color-stats --instance " + inst.string() +
            " --model fos:" + bad_fos.string()).code == 2);
}

TEST_CASE("a generated file runs end to end") {
  const fs::path inst = scratch_dir() / "roundtrip.g";
  REQUIRE(cli("generate --torus 4x4 --seed 77 --out " + inst.string()).code == 0);
  const CliResult r = cli("run --instance " + inst.string() +
                          " --engine parallel --workers 2 --n 16 "
                          "--max-generations 3");
  INFO(r.err);
  CHECK(r.code == 0);
  CHECK(field(r.out, "generations") == "3");
  CHECK(field(r.out, "populations") == "1");
}
