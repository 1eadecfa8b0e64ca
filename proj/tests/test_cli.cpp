#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "fixture_corpus.hpp"
#include "logforge/log_entry.hpp"
#include "test_util.hpp"

using namespace logforge;
using logforge::testing::TempDir;
using logforge::testing::write_file;

namespace {

std::string g_cli;

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run(const std::string& args, const std::string& stdout_path) {
  const std::string cmd = g_cli + " " + args + " >" + stdout_path + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(stdout_path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  r.out = buf.str();
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  TempDir dir;
  CHECK(run("no-such-subcommand", dir.file("o")).exit_code == 2);
  CHECK(run("validate --definitely-not-a-flag x.log", dir.file("o")).exit_code == 2);
  CHECK(run("", dir.file("o")).exit_code == 2);
}

TEST_CASE("internal errors exit with code 3") {
  TempDir dir;
  CHECK(run("validate /definitely/missing.log", dir.file("o")).exit_code == 3);
  CHECK(run("gen-neural --model /missing.ckpt --n 3", dir.file("o")).exit_code == 3);
}

TEST_CASE("ingest writes splits and manifests deterministically") {
  TempDir dir;
  logforge::testing::write_fixture_corpus(dir.file("corpus.log"), {300, 3});
  const std::string args = "--seed 9 --out " + dir.file("split") +
                           " ingest --n-train 100 --n-test 40 " + dir.file("corpus.log");
  CHECK(run(args, dir.file("o")).exit_code == 0);
  CHECK(read_lines(dir.file("split/train.log")).size() == 100);
  CHECK(read_lines(dir.file("split/test.log")).size() == 40);
  const std::string manifest = slurp(dir.file("split/train.idx"));
  CHECK(run("--seed 9 --out " + dir.file("split2") + " ingest --n-train 100 --n-test 40 " +
                dir.file("corpus.log"),
            dir.file("o")).exit_code == 0);
  CHECK(slurp(dir.file("split2/train.idx")) == manifest);
}

TEST_CASE("gen-static output is seed-deterministic and passes validate") {
  TempDir dir;
  const std::string a = dir.file("a.log"), b = dir.file("b.log"), c = dir.file("c.log");
  CHECK(run("--seed 5 --out " + a + " gen-static --n 80", dir.file("o")).exit_code == 0);
  CHECK(run("--seed 5 --out " + b + " gen-static --n 80", dir.file("o")).exit_code == 0);
  CHECK(run("--seed 6 --out " + c + " gen-static --n 80", dir.file("o")).exit_code == 0);
  CHECK(slurp(a) == slurp(b));  // byte-identical per seed
  CHECK(slurp(a) != slurp(c));

  const RunResult v = run("validate " + a, dir.file("v.json"));
  CHECK(v.exit_code == 0);
  CHECK(v.out.find("\"chronology_ok\": true") != std::string::npos);
}

TEST_CASE("validate flags a shuffled file with exit code 1 and lists violations") {
  TempDir dir;
  LogFile file = logforge::testing::fixture_corpus({60, 7});
  // order-break: move the last entry to the front
  std::rotate(file.entries.begin(), file.entries.end() - 1, file.entries.end());
  write_log_file(dir.file("shuffled.log"), file, FieldSchema{});
  const RunResult v = run("validate " + dir.file("shuffled.log"), dir.file("v.json"));
  CHECK(v.exit_code == 1);
  CHECK(v.out.find("chronology") != std::string::npos);
}

TEST_CASE("validate --cleanse repairs separator runs") {
  TempDir dir;
  write_file(dir.file("messy.log"),
             "20210830T104958   EFW   Write   failed\n"
             "20210830T104959  EFR  Could  not  access  file\n");
  CHECK(run("validate " + dir.file("messy.log"), dir.file("o")).exit_code == 1);
  CHECK(run("validate --cleanse " + dir.file("messy.log"), dir.file("o")).exit_code == 0);
}

TEST_CASE("mine-rules emits a TSV usable by validate and gen-static") {
  TempDir dir;
  logforge::testing::write_fixture_corpus(dir.file("corpus.log"), {500, 11});
  const std::string rules = dir.file("rules.tsv");
  CHECK(run("--out " + rules + " mine-rules --gap-seconds 60 --min-support 3 " +
                dir.file("corpus.log"),
            dir.file("o")).exit_code == 0);
  const auto lines = read_lines(rules);
  CHECK(!lines.empty());
  CHECK(lines[0].find('\t') != std::string::npos);

  // the real corpus passes its own mined rules
  CHECK(run("validate --rules " + rules + " " + dir.file("corpus.log"), dir.file("o")).exit_code ==
        0);

  // a fake whose codes ignore the rules is caught
  LogFile bad;
  bad.entries.push_back({Timestamp{2021, 8, 30, 11, 0, 0, TimestampStyle::kSpaceSeparated},
                         "SDONE", "Session f00 completed with status 0"});
  bad.entries.push_back({Timestamp{2021, 8, 30, 11, 0, 1, TimestampStyle::kSpaceSeparated},
                         "SINIT", "Session f00 initialized by client wusa"});
  write_log_file(dir.file("bad.log"), bad, FieldSchema{});
  CHECK(run("validate --rules " + rules + " " + dir.file("bad.log"), dir.file("o")).exit_code == 1);
}

TEST_CASE("train, gen-neural, and detect round-trip through checkpoints") {
  TempDir dir;
  logforge::testing::write_fixture_corpus(dir.file("corpus.log"), {200, 13});
  CHECK(run("--seed 3 --out " + dir.file("split") + " ingest --n-train 120 --n-test 40 " +
                dir.file("corpus.log"),
            dir.file("o")).exit_code == 0);
  write_file(dir.file("train.cfg"),
             "train = " + dir.file("split/train.log") + "\n" +
                 "test = " + dir.file("split/test.log") + "\n" +
                 "mode = word\nmin_freq = 1\nmle_epochs = 2\nadv_epochs = 1\nbatch_size = 8\n"
                 "g_lr_mle = 0.3\nd_lr = 0.3\nembed_dim = 8\nhidden_dim = 12\nmax_seq_len = 24\n"
                 "seed = 77\n");
  CHECK(run("--out " + dir.file("run") + " train --scheme iw --config " + dir.file("train.cfg"),
            dir.file("o")).exit_code == 0);
  CHECK(std::filesystem::exists(dir.file("run/generator.ckpt")));
  CHECK(std::filesystem::exists(dir.file("run/discriminator.ckpt")));
  const auto csv = read_lines(dir.file("run/metrics.csv"));
  REQUIRE(!csv.empty());
  CHECK(csv[0] == "epoch,g_loss,d_loss,g_nll,d_nll,acc");
  CHECK(csv.size() == 4);  // header + 2 MLE + 1 adversarial rows

  const std::string s1 = dir.file("s1.log"), s2 = dir.file("s2.log");
  CHECK(run("--seed 21 --out " + s1 + " gen-neural --model " + dir.file("run/generator.ckpt") +
                " --n 25",
            dir.file("o")).exit_code == 0);
  CHECK(run("--seed 21 --out " + s2 + " gen-neural --model " + dir.file("run/generator.ckpt") +
                " --n 25",
            dir.file("o")).exit_code == 0);
  CHECK(slurp(s1) == slurp(s2));
  CHECK(read_lines(s1).size() == 25);

  // detect degrades gracefully without a model and uses one when given
  const RunResult plain = run("detect " + dir.file("split/test.log"), dir.file("d1.json"));
  CHECK(plain.exit_code == 0);
  CHECK(plain.out.find("\"discriminator\": null") != std::string::npos);
  const RunResult with_model = run("detect --model " + dir.file("run/discriminator.ckpt") + " " +
                                       dir.file("split/test.log"),
                                   dir.file("d2.json"));
  CHECK(with_model.out.find("mean_score") != std::string::npos);
  CHECK((with_model.exit_code == 0 || with_model.exit_code == 1));
}

TEST_CASE("experiment with zero schemes emits the static-only report") {
  TempDir dir;
  logforge::testing::write_fixture_corpus(dir.file("corpus.log"), {260, 17});
  write_file(dir.file("exp.cfg"),
             "corpus = " + dir.file("corpus.log") + "\n" +
                 "out_dir = " + dir.file("exp") + "\n" +
                 "schemes =\nn_train = 150\nn_test = 50\nmin_freq = 1\nsample_count = 40\n"
                 "seed = 5\n");
  CHECK(run("experiment --config " + dir.file("exp.cfg"), dir.file("o")).exit_code == 0);
  CHECK(std::filesystem::exists(dir.file("exp/report.json")));
  CHECK(std::filesystem::exists(dir.file("exp/report.txt")));
  const std::string json = slurp(dir.file("exp/report.json"));
  CHECK(json.find("\"name\": \"static\"") != std::string::npos);
  CHECK(json.find("\"name\": \"pg\"") == std::string::npos);

  const RunResult rep = run("report " + dir.file("exp"), dir.file("r.txt"));
  CHECK(rep.exit_code == 0);
  CHECK(rep.out.find("Training results") != std::string::npos);
  CHECK(rep.out.find("static") != std::string::npos);
}

int main(int argc, char** argv) {
  if (argc > 1) g_cli = argv[1];
  doctest::Context context;
  context.applyCommandLine(1, argv);
  return context.run();
}
