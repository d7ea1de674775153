#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "essr/data.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

const fs::path& workdir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "essr_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string p(const std::string& name) { return (workdir() / name).string(); }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run run(const std::string& args) {
  const std::string err_path = p("stderr.txt");
  const std::string cmd = std::string(ESSR_CLI_PATH) + " " + args + " 2>" + err_path;
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err_path);
  return r;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

const std::string kConfusable = "--k 3 --n 6 --d 4 --per-class 30 --noise 0.5 --seed 4";

}  // namespace

TEST_CASE("gen") {
  const Run r = run("gen --k 2 --n 10 --d 2 --per-class 100 --noise 0.05 --seed 7 --out " + p("g1.csv"));
  REQUIRE(r.code == 0);
  const auto rows = lines(slurp(p("g1.csv")));
  CHECK(rows.size() == 201);
  CHECK(rows.front().rfind("x0,", 0) == 0);
  const json side = json::parse(slurp(p("g1.csv.json")));
  CHECK(side["seed"] == 7);
  CHECK(side["bases"].size() == 2);
  CHECK(side["bases"][0].size() == 10);
  REQUIRE(run("gen --k 2 --n 10 --d 2 --per-class 100 --noise 0.05 --seed 7 --out " + p("g2.csv")).code == 0);
  CHECK(slurp(p("g1.csv")) == slurp(p("g2.csv")));

  const Run bad = run("gen --k 2 --n 3 --d 5 --out " + p("bad.csv"));
  CHECK(bad.code != 0);
  CHECK(bad.err.find("InfeasibleSpec") != std::string::npos);
  CHECK(lines(bad.err).size() == 1);
}

TEST_CASE("train writes one metrics line per layer") {
  REQUIRE(run("gen --k 2 --n 8 --d 2 --per-class 40 --seed 3 --out " + p("t.csv")).code == 0);
  const Run r = run("train --data " + p("t.csv") + " --lift 2 --lift-seed 5 --model " + p("t.model") + " --metrics " +
                    p("t.jsonl") + " --features-out " + p("t_feat.csv"));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("stopped_at=") != std::string::npos);
  const int stopped = std::stoi(r.out.substr(r.out.find("stopped_at=") + 11));
  const auto ml = lines(slurp(p("t.jsonl")));
  CHECK(static_cast<int>(ml.size()) == stopped);
  for (std::size_t i = 0; i < ml.size(); ++i) {
    const json m = json::parse(ml[i]);
    CHECK(m["layer"] == static_cast<int>(i) + 1);
    for (const char* key : {"R", "Rc", "delta_R", "delta_R_est", "estimation_errors", "w", "bayes_active", "tau", "vanishing"}) {
      CHECK(m.contains(key));
    }
  }

  // transforming the training CSV reproduces the training-phase features
  REQUIRE(run("transform --model " + p("t.model") + " --data " + p("t.csv") + " --out " + p("t_tx.csv")).code == 0);
  const auto a = essr::load_csv(p("t_feat.csv"));
  const auto b = essr::load_csv(p("t_tx.csv"));
  REQUIRE(a.features.cols() == 80);
  CHECK(a.features.rows() == 16);
  CHECK((a.features - b.features).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(a.labels == b.labels);

  REQUIRE(run("gen --k 2 --n 5 --d 2 --per-class 5 --seed 3 --out " + p("wrong.csv")).code == 0);
  const Run mismatch = run("transform --model " + p("t.model") + " --data " + p("wrong.csv") + " --out " + p("x.csv"));
  CHECK(mismatch.code != 0);
  CHECK(mismatch.err.find("DimensionMismatch") != std::string::npos);
  std::ofstream(p("empty.csv")) << "x0,x1,label\n";
  const Run empty = run("transform --model " + p("t.model") + " --data " + p("empty.csv") + " --out " + p("x.csv"));
  CHECK(empty.code != 0);
  CHECK(empty.err.find("EmptyFile") != std::string::npos);
}

TEST_CASE("invalid hyperparameters exit nonzero") {
  REQUIRE(run("gen --k 2 --n 4 --d 1 --per-class 5 --seed 1 --out " + p("h.csv")).code == 0);
  const Run r = run("train --data " + p("h.csv") + " --eta 0.2 --u 10 --model " + p("h.model"));
  CHECK(r.code != 0);
  CHECK(r.err.find("ConfigInvalid") != std::string::npos);
  const Run m = run("train --data " + p("h.csv") + " --mode magic --model " + p("h.model"));
  CHECK(m.code != 0);
}

TEST_CASE("baseline and ess metric streams agree until the first erring layer") {
  REQUIRE(run("gen " + kConfusable + " --out " + p("c.csv")).code == 0);
  const std::string common = "train --data " + p("c.csv") + " --max-layers 40 --no-stop ";
  REQUIRE(run(common + "--mode baseline --model " + p("cb.model") + " --metrics " + p("cb.jsonl")).code == 0);
  REQUIRE(run(common + "--mode ess --model " + p("ce.model") + " --metrics " + p("ce.jsonl")).code == 0);
  const auto b = lines(slurp(p("cb.jsonl")));
  const auto e = lines(slurp(p("ce.jsonl")));
  REQUIRE(b.size() == e.size());
  std::size_t first = b.size();
  for (std::size_t l = 0; l < b.size(); ++l) {
    if (json::parse(b[l])["estimation_errors"].get<int>() > 0) {
      first = l;
      break;
    }
  }
  REQUIRE(first < b.size());
  for (std::size_t l = 0; l < first; ++l) CHECK(b[l] == e[l]);
  const json jb = json::parse(b[first]);
  const json je = json::parse(e[first]);
  for (const char* key : {"R", "Rc", "estimation_errors", "confusion"}) CHECK(jb[key] == je[key]);
  CHECK(je["bayes_active"] == true);
  CHECK(jb["bayes_active"] == false);
  CHECK(json::parse(b[first + 1])["delta_R"] != json::parse(e[first + 1])["delta_R"]);
}

TEST_CASE("config file with flag precedence") {
  REQUIRE(run("gen --k 2 --n 4 --d 1 --per-class 10 --seed 1 --out " + p("cfg.csv")).code == 0);
  std::ofstream(p("run.ini")) << "[train]\nmax-layers=7\nmode=baseline\nno-stop=true\n";
  REQUIRE(run("--config " + p("run.ini") + " train --data " + p("cfg.csv") + " --model " + p("cfg.model") + " --metrics " +
              p("cfg.jsonl"))
              .code == 0);
  CHECK(lines(slurp(p("cfg.jsonl"))).size() == 7);
  REQUIRE(run("--config " + p("run.ini") + " train --data " + p("cfg.csv") + " --max-layers 3 --model " + p("cfg.model") +
              " --metrics " + p("cfg.jsonl"))
              .code == 0);
  CHECK(lines(slurp(p("cfg.jsonl"))).size() == 3);
  const Run in = run("inspect --model " + p("cfg.model") + " --json");
  REQUIRE(in.code == 0);
  CHECK(json::parse(in.out)["mode"] == "baseline");
}

TEST_CASE("eval reports accuracies") {
  REQUIRE(run("gen --k 2 --n 10 --d 2 --per-class 60 --seed 9 --out " + p("e_train.csv")).code == 0);
  REQUIRE(run("gen --k 2 --n 10 --d 2 --per-class 60 --seed 9 --out " + p("e_test.csv")).code == 0);
  REQUIRE(run("train --data " + p("e_train.csv") + " --model " + p("e.model")).code == 0);
  const Run r = run("eval --model " + p("e.model") + " --train " + p("e_train.csv") + " --test " + p("e_test.csv"));
  REQUIRE(r.code == 0);
  const json rep = json::parse(r.out);
  for (const char* key : {"nsc_acc", "knn_acc", "offblock_mean", "within_mean"}) CHECK(rep.contains(key));
  CHECK(rep["nsc_acc"].get<double>() == 1.0);
  const Run missing = run("eval --model " + p("nope.model") + " --train " + p("e_train.csv") + " --test " + p("e_test.csv"));
  CHECK(missing.code != 0);
  CHECK(missing.err.find("IoError") != std::string::npos);
}

TEST_CASE("inspect") {
  REQUIRE(run("gen " + kConfusable + " --out " + p("i.csv")).code == 0);
  REQUIRE(run("train --data " + p("i.csv") + " --max-layers 1 --model " + p("one.model")).code == 0);
  const Run one = run("inspect --model " + p("one.model") + " --json");
  REQUIRE(one.code == 0);
  CHECK(json::parse(one.out)["summary"].size() == 1);
  const Run text = run("inspect --model " + p("one.model"));
  CHECK(text.out.find("stop_reason max_layers") != std::string::npos);

  std::string bytes = slurp(p("one.model"));
  bytes[300] = static_cast<char>(bytes[300] ^ 0x5a);
  std::ofstream(p("bad.model"), std::ios::binary) << bytes;
  const Run bad = run("inspect --model " + p("bad.model"));
  CHECK(bad.code != 0);
  CHECK(bad.err.find("ChecksumMismatch") != std::string::npos);

  // after the estimate becomes error free every later layer has w = 1, no bayes
  REQUIRE(run("gen --k 2 --n 8 --d 6,3 --per-class 200,20 --seed 3 --out " + p("lop.csv")).code == 0);
  REQUIRE(run("train --data " + p("lop.csv") + " --max-layers 300 --no-stop --model " + p("ess.model") + " --metrics " +
              p("ess.jsonl"))
              .code == 0);
  const auto ml = lines(slurp(p("ess.jsonl")));
  int last_err = 0;
  for (const auto& l : ml) {
    const json m = json::parse(l);
    if (m["estimation_errors"].get<int>() > 0) last_err = m["layer"].get<int>();
  }
  const json ins = json::parse(run("inspect --model " + p("ess.model") + " --json").out);
  CAPTURE(last_err);
  REQUIRE(json::parse(ml.front())["estimation_errors"].get<int>() > 0);
  CHECK(last_err < 300);
  for (const auto& row : ins["summary"]) {
    if (row["layer"].get<int>() > last_err) {
      CHECK(row["w"] == 1.0);
      CHECK(row["bayes"] == false);
    }
  }
}
