// End-to-end tests of the `vf` command-line tool. The binary path is passed
// as argv[1] by CTest; every scenario runs in its own temp directory.

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

std::string g_vf;
int g_failures = 0;

void check(bool ok, const std::string& what) {
  std::printf("%s: %s\n", ok ? "ok" : "FAIL", what.c_str());
  if (!ok) ++g_failures;
}

int run(const std::string& args) {
  const std::string cmd = g_vf + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const fs::path& p) {
  const std::string s = slurp(p);
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("vf_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const {
    return (path / f).string();
  }
};

void test_generate_determinism() {
  TempDir t("gen");
  check(run("generate --seed 7 --count 50 --out " + (t / "a.fib")) == 0,
        "generate exits 0");
  check(run("generate --seed 7 --count 50 --out " + (t / "b.fib")) == 0,
        "second generate exits 0");
  check(slurp(t / "a.fib") == slurp(t / "b.fib"),
        "same seed produces byte-identical tractograms");
  check(slurp(t / "a.fib.labels") == slurp(t / "b.fib.labels"),
        "same seed produces byte-identical labels");
  check(run("generate --seed 8 --count 50 --out " + (t / "c.fib")) == 0,
        "third generate exits 0");
  check(slurp(t / "a.fib") != slurp(t / "c.fib"),
        "different seed changes the tractogram");
}

void test_label_matches_generator() {
  TempDir t("label");
  run("generate --seed 3 --count 80 --out " + (t / "a.fib"));
  check(run("label --in " + (t / "a.fib") + " --out " + (t / "r.labels")) == 0,
        "label exits 0");
  check(slurp(t / "r.labels") == slurp(t / "a.fib.labels"),
        "rule labeler reproduces the generator's sidecar labels");
}

void test_full_pipeline() {
  TempDir t("pipe");
  run("generate --seed 11 --count 200 --out " + (t / "a.fib"));
  const std::string train_args =
      " --arch pn --epochs 6 --batch 32 --seed 11 --in " + (t / "a.fib");
  check(run("train" + train_args + " --out " + (t / "m.ckpt") + " --report " +
            (t / "log.csv")) == 0,
        "train exits 0");
  check(count_lines(t / "log.csv") == 7, "training log has header + 6 epochs");
  check(run("infer --model " + (t / "m.ckpt") + " --in " + (t / "a.fib") +
            " --out " + (t / "p.csv")) == 0,
        "infer exits 0");
  check(count_lines(t / "p.csv") == 201, "one prediction row per streamline");
  {
    std::ifstream in(t / "p.csv");
    std::string header;
    std::getline(in, header);
    check(header == "index,prob_plausible,label", "prediction CSV header");
  }
  check(run("eval --pred " + (t / "p.csv") + " --labels " +
            (t / "a.fib.labels") + " --in " + (t / "a.fib") + " --report " +
            (t / "metrics.csv")) == 0,
        "eval exits 0");
  {
    std::ifstream in(t / "metrics.csv");
    std::string header, all;
    std::getline(in, header);
    std::getline(in, all);
    check(header.rfind("subset,tp,fp,tn,fn,accuracy", 0) == 0,
          "metrics CSV header");
    std::stringstream ss(all);
    std::string tok;
    std::vector<std::string> cols;
    while (std::getline(ss, tok, ',')) cols.push_back(tok);
    const double acc = std::stod(cols[5]);
    check(acc >= 0.0 && acc <= 1.0, "accuracy in [0,1]");
  }
  // second identical run: byte-identical artifacts
  check(run("train" + train_args + " --out " + (t / "m2.ckpt") +
            " --report " + (t / "log2.csv")) == 0,
        "re-train exits 0");
  check(slurp(t / "m.ckpt") == slurp(t / "m2.ckpt"),
        "checkpoints from identical runs are byte-identical");
  check(slurp(t / "log.csv") == slurp(t / "log2.csv"),
        "training logs from identical runs are byte-identical");
  run("infer --model " + (t / "m2.ckpt") + " --in " + (t / "a.fib") +
      " --out " + (t / "p2.csv"));
  check(slurp(t / "p.csv") == slurp(t / "p2.csv"),
        "prediction CSVs from identical runs are byte-identical");

  // diagnostics on the trained model
  check(run("permtest --model " + (t / "m.ckpt") + " --in " + (t / "a.fib") +
            " --labels " + (t / "a.fib.labels") + " --seed 1 --report " +
            (t / "perm.csv")) == 0,
        "permtest exits 0");
  check(run("fliptest --model " + (t / "m.ckpt") + " --in " + (t / "a.fib") +
            " --report " + (t / "flip.csv")) == 0,
        "fliptest exits 0");
  check(run("attribute --model " + (t / "m.ckpt") + " --in " + (t / "a.fib") +
            " --out " + (t / "attr.csv")) == 0,
        "attribute exits 0");
  check(count_lines(t / "attr.csv") == 200 * 16 + 1,
        "attribution CSV has one row per resampled point");
  check(run("voxel-dsc --in " + (t / "a.fib") + " --ref " + (t / "a.fib") +
            " --report " + (t / "dsc.csv")) == 0,
        "voxel-dsc exits 0");
  check(slurp(t / "dsc.csv") == "volumetric_dsc\n1\n",
        "self-overlap volumetric dsc is 1");
}

void test_latent_and_cv() {
  TempDir t("aux");
  run("generate --seed 5 --count 60 --out " + (t / "a.fib"));
  run("train --arch vf --epochs 1 --batch 16 --seed 5 --in " + (t / "a.fib") +
      " --out " + (t / "m.ckpt"));
  check(run("latent --model " + (t / "m.ckpt") + " --in " + (t / "a.fib") +
            " --out " + (t / "z.csv")) == 0,
        "latent exits 0 for the sequence architecture");
  check(count_lines(t / "z.csv") == 61, "one descriptor row per streamline");
  check(run("cv --in " + (t / "a.fib") +
            " --folds 2 --arch pn --epochs 2 --batch 16 --report " +
            (t / "cv.csv")) == 0,
        "cv exits 0");
  check(count_lines(t / "cv.csv") == 3, "cv report has one row per fold");
  check(run("incremental --in " + (t / "a.fib") +
            " --stages \"1,2,3,4;1,2,3,4,5,6,7,8\" --arch pn --epochs 2 "
            "--batch 16 --report " +
            (t / "inc.csv")) == 0,
        "incremental exits 0");
  check(count_lines(t / "inc.csv") == 3,
        "incremental report has one row per stage");
}

void test_error_exit_codes() {
  TempDir t("err");
  run("generate --seed 2 --count 10 --out " + (t / "a.fib"));
  check(run("--bogus") == 1, "unknown flag exits 1");
  check(run("infer --model " + (t / "missing.ckpt") + " --in " +
            (t / "a.fib") + " --out " + (t / "x.csv")) == 2,
        "missing checkpoint exits 2");
  check(run("label --in " + (t / "missing.fib") + " --out " +
            (t / "x.labels")) == 2,
        "missing tractogram exits 2");
  check(run("cv --in " + (t / "a.fib") + " --folds 1 --report " +
            (t / "x.csv")) == 1,
        "invalid fold count exits 1");
  check(run("train --in " + (t / "a.fib") + " --out " + (t / "m.ckpt") +
            " --split 1.5 --epochs 1") == 1,
        "invalid split fraction exits 1");
  // corrupt header
  {
    std::ofstream out(t / "bad.fib", std::ios::binary);
    out << "NOT A FIB\n";
  }
  check(run("label --in " + (t / "bad.fib") + " --out " + (t / "x.labels")) ==
            2,
        "malformed tractogram exits 2");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: cli_tests <path-to-vf-binary>\n";
    return 2;
  }
  g_vf = argv[1];
  test_generate_determinism();
  test_label_matches_generator();
  test_full_pipeline();
  test_latent_and_cv();
  test_error_exit_codes();
  if (g_failures > 0) {
    std::printf("%d CLI check(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all CLI checks passed\n");
  return 0;
}
