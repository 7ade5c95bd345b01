#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unistd.h>

#include "fmea/cli.hpp"
#include "fmea/config.hpp"
#include "fmea/error.hpp"
#include "fmea/kg.hpp"
#include "fmea/model.hpp"
#include "fmea/util.hpp"

using namespace fmea;
namespace fs = std::filesystem;

namespace {

const std::string kFixtureDir = FMEA_FIXTURE_DIR;

int run(std::initializer_list<std::string> args) {
  std::vector<std::string> argv_storage{"fmea"};
  argv_storage.insert(argv_storage.end(), args);
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());
  return dispatch(static_cast<int>(argv.size()), argv.data());
}

struct CaptureStderr {
  std::ostringstream sink;
  std::streambuf* saved;
  CaptureStderr() : saved(std::cerr.rdbuf(sink.rdbuf())) {}
  ~CaptureStderr() { std::cerr.rdbuf(saved); }
  std::string text() const { return sink.str(); }
};

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("fmea-test-" + std::to_string(util::fnv1a64(
                               std::to_string(::getpid()) +
                               std::to_string(counter()))));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
  static int counter() {
    static int n = 0;
    return ++n;
  }
};

}  // namespace

TEST_CASE("unknown subcommands and bad flags exit 2") {
  CaptureStderr capture;
  CHECK(run({"no-such-command"}) == 2);
  CHECK(run({}) == 2);
  CHECK(run({"train", "--kg"}) == 2);     // missing value
  CHECK(run({"train", "--kg", "x.jsonl"}) == 2);  // missing required flags
}

TEST_CASE("run config: file, env, flag precedence and unknown keys") {
  RunConfig rc;
  rc.apply_file_text("epochs = 42\nlambda = 0.5\nllm = replay\n");
  CHECK(rc.train.epochs == 42);
  CHECK(rc.train.lambda == 0.5);
  CHECK(rc.llm_backend == "replay");
  CHECK_THROWS_AS(rc.apply_file_text("nonsense_key = 1\n"), Error);
  try {
    rc.apply_file_text("nonsense_key = 1\n");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UsageError);
  }

  setenv("FMEA_LLM_BASE_URL", "http://example.test/v1", 1);
  rc.apply_env();
  CHECK(rc.llm_base_url == "http://example.test/v1");
  unsetenv("FMEA_LLM_BASE_URL");
}

TEST_CASE("resolved config echo carries every paper hyperparameter") {
  RunConfig rc;
  std::string echo = rc.echo();
  for (const char* needle :
       {"epochs = 1000", "learning_rate = 0.001", "negative_ratio = 5",
        "split_train = 0.81", "split_val = 0.09", "split_test = 0.1",
        "alpha = 0.7", "beta = -0.1", "lambda = 0.6", "hidden_dim = 128",
        "text_dim = 128", "type_dim = 16", "k_overlap = 1"}) {
    CAPTURE(needle);
    CHECK(echo.find(needle) != std::string::npos);
  }
}

TEST_CASE("end-to-end: gen-synth, build-kg, train, predict, evaluate") {
  TempDir tmp;
  CaptureStderr capture;

  // generate a small dataset
  CHECK(run({"gen-synth", "--seed", "5", "--out", tmp.file("data"),
             "--lines", "3", "--functions", "3", "--rules", "2"}) == 0);
  CHECK(fs::exists(tmp.file("data") + "/manifest.json"));
  CHECK(fs::exists(tmp.file("data") + "/ontology.tsv"));
  CHECK(fs::exists(tmp.file("data") + "/scenarios.jsonl"));
  CHECK(fs::exists(tmp.file("data") + "/aliases.tsv"));

  // build the graph from two source lines + target
  CHECK(run({"build-kg", "--ontology", tmp.file("data") + "/ontology.tsv",
             "--worksheet", tmp.file("data") + "/line-1.csv",
             "--worksheet", tmp.file("data") + "/line-2.csv",
             "--worksheet", tmp.file("data") + "/line-3.csv",
             "--out", tmp.file("g.jsonl")}) == 0);
  CHECK(fs::exists(tmp.file("g.jsonl")));

  // train a small model
  CHECK(run({"train", "--kg", tmp.file("g.jsonl"), "--seed", "7", "--out",
             tmp.file("m.ckpt"), "--epochs", "8", "--loss-trace",
             tmp.file("trace.csv")}) == 0);
  CHECK(fs::exists(tmp.file("m.ckpt")));
  CHECK(fs::exists(tmp.file("trace.csv")));

  // predict against a scenario-like query
  CHECK(run({"predict", "--kg", tmp.file("g.jsonl"), "--ckpt",
             tmp.file("m.ckpt"), "--line", "line-3", "--function", "1",
             "--desc", "housing misalignment", "--topk", "5", "--out",
             tmp.file("pred.jsonl")}) == 0);
  std::string jsonl = util::read_file(tmp.file("pred.jsonl"));
  CHECK(jsonl.find("\"rank\":1") != std::string::npos);
  CHECK(jsonl.find("\"order\"") != std::string::npos);

  // evaluate the scenario file
  CHECK(run({"evaluate", "--kg", tmp.file("g.jsonl"), "--ckpt",
             tmp.file("m.ckpt"), "--scenarios",
             tmp.file("data") + "/scenarios.jsonl", "--alias",
             tmp.file("data") + "/aliases.tsv", "--ns", "1,10", "--out",
             tmp.file("report.csv")}) == 0);
  std::string csv = util::read_file(tmp.file("report.csv"));
  CHECK(csv.find("macro,10,") != std::string::npos);
}

TEST_CASE("train echoes the resolved config and seeds the checkpoint") {
  TempDir tmp;
  CaptureStderr capture;
  CHECK(run({"gen-synth", "--seed", "2", "--out", tmp.file("d"), "--lines",
             "2", "--functions", "3", "--rules", "1"}) == 0);
  CHECK(run({"build-kg", "--ontology", tmp.file("d") + "/ontology.tsv",
             "--worksheet", tmp.file("d") + "/line-1.csv",
             "--worksheet", tmp.file("d") + "/line-2.csv",
             "--out", tmp.file("g.jsonl")}) == 0);
  CHECK(run({"train", "--kg", tmp.file("g.jsonl"), "--seed", "123", "--out",
             tmp.file("m.ckpt"), "--epochs", "2"}) == 0);
  std::string err = capture.text();
  CHECK(err.find("# resolved config") != std::string::npos);
  CHECK(err.find("seed = 123") != std::string::npos);
  Checkpoint ckpt = load_checkpoint(tmp.file("m.ckpt"));
  CHECK(ckpt.config.seed == 123);
  CHECK(ckpt.config.epochs == 2);
}

TEST_CASE("alignment mismatches surface as exit 1") {
  TempDir tmp;
  CaptureStderr capture;
  CHECK(run({"gen-synth", "--seed", "2", "--out", tmp.file("d"), "--lines",
             "2", "--functions", "3", "--rules", "1"}) == 0);
  CHECK(run({"build-kg", "--ontology", tmp.file("d") + "/ontology.tsv",
             "--worksheet", tmp.file("d") + "/line-1.csv",
             "--worksheet", tmp.file("d") + "/line-2.csv",
             "--out", tmp.file("g.jsonl")}) == 0);
  CHECK(run({"train", "--kg", tmp.file("g.jsonl"), "--seed", "1", "--out",
             tmp.file("m.ckpt"), "--epochs", "1"}) == 0);
  // different graph (target line only, so the query still resolves):
  // digest mismatch
  CHECK(run({"build-kg", "--ontology", tmp.file("d") + "/ontology.tsv",
             "--worksheet", tmp.file("d") + "/line-2.csv",
             "--out", tmp.file("other.jsonl")}) == 0);
  CHECK(run({"evaluate", "--kg", tmp.file("other.jsonl"), "--ckpt",
             tmp.file("m.ckpt"), "--scenarios",
             tmp.file("d") + "/scenarios.jsonl"}) == 1);
  CHECK(capture.text().find("AlignmentMismatch") != std::string::npos);
}

TEST_CASE("config file values flow into runs; flags win") {
  TempDir tmp;
  CaptureStderr capture;
  util::write_file(tmp.file("paper.cfg"),
                   "# paper defaults\nepochs = 4\nlambda = 0.25\n");
  CHECK(run({"gen-synth", "--seed", "2", "--out", tmp.file("d"), "--lines",
             "2", "--functions", "3", "--rules", "1"}) == 0);
  CHECK(run({"build-kg", "--ontology", tmp.file("d") + "/ontology.tsv",
             "--worksheet", tmp.file("d") + "/line-1.csv",
             "--worksheet", tmp.file("d") + "/line-2.csv",
             "--out", tmp.file("g.jsonl")}) == 0);
  CHECK(run({"--config", tmp.file("paper.cfg"), "train", "--kg",
             tmp.file("g.jsonl"), "--seed", "1", "--out", tmp.file("a.ckpt"),
             "--lambda", "0.35"}) == 0);
  Checkpoint ckpt = load_checkpoint(tmp.file("a.ckpt"));
  CHECK(ckpt.config.epochs == 4);      // from file
  CHECK(ckpt.config.lambda == 0.35);   // flag beats file
  // unknown config key: usage error
  util::write_file(tmp.file("bad.cfg"), "whatever = 1\n");
  CHECK(run({"--config", tmp.file("bad.cfg"), "train", "--kg",
             tmp.file("g.jsonl"), "--seed", "1", "--out",
             tmp.file("b.ckpt")}) == 2);
}

TEST_CASE("grad-check passes on the default toy graph") {
  CaptureStderr capture;
  CHECK(run({"grad-check", "--probes", "25", "--seed", "3"}) == 0);
}

TEST_CASE("gen-synth reads a key-value spec file") {
  TempDir tmp;
  CaptureStderr capture;
  util::write_file(tmp.file("gen.cfg"),
                   "lines = 2\nfunctions_per_line = 3\nrules = 1\n"
                   "noise = 0.0\n");
  CHECK(run({"gen-synth", "--seed", "4", "--out", tmp.file("d"), "--spec",
             tmp.file("gen.cfg")}) == 0);
  std::string manifest = util::read_file(tmp.file("d") + "/manifest.json");
  CHECK(manifest.find("\"lines\": 2") != std::string::npos);
  CHECK(manifest.find("\"rules\": 1") != std::string::npos);
  util::write_file(tmp.file("bad.cfg"), "bogus = 3\n");
  CHECK(run({"gen-synth", "--seed", "4", "--out", tmp.file("d2"), "--spec",
             tmp.file("bad.cfg")}) == 2);
}

TEST_CASE("--config may follow the subcommand") {
  TempDir tmp;
  CaptureStderr capture;
  util::write_file(tmp.file("c.cfg"), "epochs = 3\n");
  CHECK(run({"gen-synth", "--seed", "2", "--out", tmp.file("d"), "--lines",
             "2", "--functions", "3", "--rules", "1"}) == 0);
  CHECK(run({"build-kg", "--ontology", tmp.file("d") + "/ontology.tsv",
             "--worksheet", tmp.file("d") + "/line-1.csv",
             "--worksheet", tmp.file("d") + "/line-2.csv",
             "--out", tmp.file("g.jsonl")}) == 0);
  CHECK(run({"train", "--kg", tmp.file("g.jsonl"), "--config",
             tmp.file("c.cfg"), "--seed", "7", "--out",
             tmp.file("m.ckpt")}) == 0);
  CHECK(load_checkpoint(tmp.file("m.ckpt")).config.epochs == 3);
}

TEST_CASE("precomputed rankings evaluate without a model") {
  TempDir tmp;
  CaptureStderr capture;
  util::write_file(
      tmp.file("scen.jsonl"),
      R"({"line":"l","function":"f","desc":"d","truth":["a","b"]})" "\n");
  util::write_file(tmp.file("rank.jsonl"), R"({"labels":["a","x","b"]})" "\n");
  CHECK(run({"evaluate", "--scenarios", tmp.file("scen.jsonl"), "--rankings",
             tmp.file("rank.jsonl"), "--ns", "1,2,3", "--out",
             tmp.file("out.csv")}) == 0);
  std::string csv = util::read_file(tmp.file("out.csv"));
  CHECK(csv.find("macro,3,0.666667,1.000000,0.800000") != std::string::npos);
}
