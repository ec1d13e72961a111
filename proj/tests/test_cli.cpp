#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path in_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "elstm_lab_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

RunResult run(const std::string& args) {
  const fs::path out = in_dir("stdout.txt"), err = in_dir("stderr.txt");
  const std::string cmd = std::string(ELSTM_LAB_CLI) + " " + args + " > " + out.string() +
                          " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string drop_seconds(const std::string& csv) {
  std::stringstream in(csv), out;
  std::string line;
  while (std::getline(in, line)) out << line.substr(0, line.rfind(',')) << "\n";
  return out.str();
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

// Small random-letters corpus shared by the training cases.
std::string corpus() {
  const fs::path p = in_dir("corpus.txt");
  if (!fs::exists(p)) {
    REQUIRE(run("gen-data --n 400 --seed 2 --out " + p.string()).code == 0);
  }
  return p.string();
}

const std::string kSmall = " --hidden 6 --epochs 2 --seg-len 10 --seed 4";

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("help and usage errors") {
    CHECK(run("--help").code == 0);
    CHECK(run("train --help").out.find("--egate-lambda") != std::string::npos);
    CHECK(run("").code == 1);
    CHECK(run("frobnicate").code == 1);
    CHECK(run("gen-data --n 10 --out x --bogus").code == 1);
    CHECK(run("train --data " + corpus() + " --model gru").code == 1);
    CHECK(run("train --data " + corpus() + " --hidden 0").code == 1);
  }

  TEST_CASE("gen-data") {
    const fs::path a = in_dir("gen_a.txt"), b = in_dir("gen_b.txt");
    REQUIRE(run("gen-data --n 11000 --seed 7 --out " + a.string()).code == 0);
    REQUIRE(run("gen-data --n 11000 --seed 7 --out " + b.string()).code == 0);
    const std::string text = slurp(a);
    CHECK(text.size() == 11000);
    CHECK(text.find_first_not_of("abcdefghijklmnopqrstuvwxyz") == std::string::npos);
    CHECK(slurp(b) == text);
    CHECK(run("gen-data --n 1 --seed 7 --out " + a.string()).code == 1);
    CHECK(run("gen-data --n 10 --out /nonexistent-dir/x.txt").code == 1);
  }

  TEST_CASE("train writes metrics and checkpoint") {
    const fs::path metrics = in_dir("train.csv"), ckpt = in_dir("train.json");
    const RunResult r = run("train --model elstm --data " + corpus() + kSmall +
                            " --metrics-out " + metrics.string() + " --checkpoint-out " +
                            ckpt.string());
    REQUIRE(r.code == 0);
    CHECK(r.out.find("final loss") != std::string::npos);
    CHECK(r.out.find("mean epoch seconds") != std::string::npos);
    const std::string csv = slurp(metrics);
    CHECK(csv.rfind("epoch,model,loss,accuracy,seconds\n", 0) == 0);
    CHECK(count_lines(csv) == 3);
    const json doc = json::parse(slurp(ckpt));
    CHECK(doc["model"] == "elstm");
    CHECK(doc.contains("egate"));
  }

  TEST_CASE("train degeneracy and determinism") {
    const fs::path a = in_dir("deg_lstm.csv"), b = in_dir("deg_elstm.csv"),
                   c = in_dir("deg_lstm2.csv");
    REQUIRE(run("train --model lstm --data " + corpus() + kSmall + " --metrics-out " +
                a.string())
                .code == 0);
    REQUIRE(run("train --model elstm --egate-gain 0 --data " + corpus() + kSmall +
                " --metrics-out " + b.string())
                .code == 0);
    REQUIRE(run("train --model lstm --data " + corpus() + kSmall + " --metrics-out " +
                c.string())
                .code == 0);
    std::string lstm = drop_seconds(slurp(a)), elstm = drop_seconds(slurp(b));
    // Rows differ only in the model column.
    for (std::size_t pos; (pos = elstm.find(",elstm,")) != std::string::npos;)
      elstm.replace(pos, 7, ",lstm,");
    CHECK(lstm == elstm);
    CHECK(drop_seconds(slurp(c)) == drop_seconds(slurp(a)));
  }

  TEST_CASE("train reports a missing data file") {
    const RunResult r = run("train --data /nonexistent/corpus.txt --epochs 1");
    CHECK(r.code == 1);
    CHECK(r.err.find("/nonexistent/corpus.txt") != std::string::npos);
  }

  TEST_CASE("train numeric failure exits 2 with context") {
    const RunResult r =
        run("train --data " + corpus() + kSmall + " --lr 1e308 --clip 1e308");
    CHECK(r.code == 2);
    CHECK(r.err.find("epoch") != std::string::npos);
    CHECK(r.err.find("segment") != std::string::npos);
  }

  TEST_CASE("compare report") {
    const fs::path report = in_dir("report.json"), metrics = in_dir("compare.csv");
    const RunResult r = run("compare --serial --egate-gain 0 --data " + corpus() + kSmall +
                            " --targets 3.3,0.01 --report-out " + report.string() +
                            " --metrics-out " + metrics.string());
    REQUIRE(r.code == 0);
    const json doc = json::parse(slurp(report));
    CHECK(doc["overhead_pct"].is_number());
    CHECK(doc["models"]["lstm"]["mean_epoch_seconds"].is_number());
    CHECK(doc["models"]["elstm"]["mean_epoch_seconds"].is_number());
    REQUIRE(doc["epochs_to_target"].size() == 2);
    for (const auto& t : doc["epochs_to_target"]) {
      if (!t["ratio"].is_null()) CHECK(t["ratio"] == 1.0);
    }
    CHECK(doc["epochs_to_target"][1]["ratio"].is_null());
    CHECK(doc["epochs_to_target"][1]["lstm"].is_null());
    CHECK(doc["config"]["hidden"] == 6);
    CHECK(count_lines(slurp(metrics)) == 5);
    CHECK(run("compare --data " + corpus() + kSmall + " --targets 1.5,abc").code == 1);
  }

  TEST_CASE("gradcheck") {
    const RunResult l = run("gradcheck --model lstm --tolerance 1e-5");
    CHECK(l.code == 0);
    CHECK(l.out.find("max relative error") != std::string::npos);
    CHECK(run("gradcheck --model elstm --tolerance 1e-5").code == 0);
    CHECK(run("gradcheck --model lstm --tolerance 0").code == 1);
    const RunResult tight = run("gradcheck --model lstm --tolerance 1e-300");
    CHECK(tight.code == 2);
    CHECK(tight.out.find("worst block") != std::string::npos);
  }

  TEST_CASE("sample") {
    const fs::path ckpt = in_dir("sample.json");
    REQUIRE(run("train --data " + corpus() + kSmall + " --checkpoint-out " + ckpt.string())
                .code == 0);
    const RunResult five = run("sample --checkpoint " + ckpt.string() + " --length 5");
    REQUIRE(five.code == 0);
    CHECK(five.out.size() == 6);
    CHECK(five.out.back() == '\n');
    const std::string base = "sample --checkpoint " + ckpt.string() + " --length 50 --seed 3";
    CHECK(run(base).out == run(base).out);
    CHECK(run(base + " --temperature 1e-6").out ==
          run("sample --checkpoint " + ckpt.string() + " --length 50 --seed 9 --temperature 1e-6")
              .out);
    CHECK(run(base + " --temperature 0").code == 1);
    CHECK(run("sample --checkpoint " + ckpt.string() + " --length 0").code == 1);

    const fs::path bad = in_dir("bad_ckpt.json");
    std::ofstream(bad) << R"({"format_version": 1})";
    CHECK(run("sample --checkpoint " + bad.string()).code == 1);
  }
}
