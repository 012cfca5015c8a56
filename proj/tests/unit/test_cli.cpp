#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include "hictl/cli/config_file.hpp"
#include "hictl/cli/manifest.hpp"
#include "hictl/error.hpp"
#include "test_support.hpp"

using namespace hictl;
using namespace hictl::cli;
using hictl::testing::read_text;
using hictl::testing::TempDir;
using hictl::testing::write_text;

namespace {

// Runs the CLI with output captured to <dir>/stdout.txt; returns the exit code.
int run_cli(const TempDir& dir, const std::string& args) {
  const std::string cmd = std::string("\"") + HICTL_CLI_PATH + "\" " + args + " > \"" + (dir / "stdout.txt").string() +
                          "\" 2> \"" + (dir / "stderr.txt").string() + "\"";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

// Synthetic corpus plus a tiny pretrained encoder shared by the slower tests.
struct Workspace {
  TempDir dir;
  std::filesystem::path data = dir / "data";
  std::filesystem::path encoder = dir / "enc.ckpt";

  Workspace() {
    EXPECT_EQ(run_cli(dir, "synth --vocab-size 40 --pairs 60 --heldout 20 --seed 4 --out-dir " + q(data)), 0);
    EXPECT_EQ(run_cli(dir, "pretrain --parallel " + q(data / "train.tsv") + " --steps 4 --batch-size 4 --m 4 " +
                               "--layers 1 --hidden 16 --heads 2 --ffn 32 --max-seq 32 --lr 1e-3 --warmup 2 --out " +
                               q(encoder)),
              0)
        << read_text(dir / "stderr.txt");
  }
};

std::vector<std::vector<std::string>> csv_rows(const std::filesystem::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(read_text(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config files

TEST(ConfigFile, ParsesKeyValueLines) {
  const auto c = parse_config("# comment\n  steps = 10  \n\nlr=2e-3 # trailing\nname = a b\n");
  EXPECT_EQ(c.size(), 3u);
  EXPECT_EQ(get_int(c, "steps"), 10);
  EXPECT_DOUBLE_EQ(get_double(c, "lr"), 2e-3);
  EXPECT_EQ(get_string(c, "name"), "a b");
  EXPECT_EQ(parse_config(format_config(c)), c);
}

TEST(ConfigFile, MalformedAndDuplicateLinesAreConfigErrors) {
  EXPECT_THROW(parse_config("steps 10\n"), ConfigError);
  EXPECT_THROW(parse_config(" = 3\n"), ConfigError);
  EXPECT_THROW(parse_config("a = 1\na = 2\n"), ConfigError);
  try {
    parse_config("a = 1\n\nb\n", "run.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("run.cfg:3"), std::string::npos);
  }
  EXPECT_THROW(read_config_file("/nonexistent/run.cfg"), ConfigError);
}

TEST(ConfigFile, TypedGetters) {
  const auto c = parse_config("i = -3\nu = 7\nd = 0.25\nb1 = yes\nb0 = false\nl = lm, sctl ,\ne =\nbad = 1x\n");
  EXPECT_EQ(get_int(c, "i"), -3);
  EXPECT_EQ(get_uint(c, "u"), 7u);
  EXPECT_TRUE(get_bool(c, "b1"));
  EXPECT_FALSE(get_bool(c, "b0"));
  EXPECT_EQ(get_list(c, "l"), (std::vector<std::string>{"lm", "sctl"}));
  EXPECT_TRUE(get_list(c, "e").empty());
  EXPECT_THROW(get_int(c, "bad"), ConfigError);
  EXPECT_THROW(get_double(c, "bad"), ConfigError);
  EXPECT_THROW(get_bool(c, "d"), ConfigError);
  EXPECT_THROW(get_uint(c, "i"), ConfigError);
  EXPECT_THROW(get_string(c, "missing"), ConfigError);
}

TEST(ConfigFile, UnknownKeysRejected) {
  const auto c = parse_config("steps = 1\nstepz = 2\n");
  EXPECT_NO_THROW(require_known_keys(c, {"steps", "stepz"}));
  EXPECT_THROW(require_known_keys(c, {"steps"}), ConfigError);
}

TEST(Manifest, JsonRoundTrip) {
  TempDir dir;
  write_text(dir / "in.txt", "abc");
  RunManifest m{"pretrain", {{"steps", "3"}, {"lr", "1e-3"}}, {{"seed", 9}}, {digest_file(dir / "in.txt")}, {"out"}, 1.5, "x"};
  EXPECT_EQ(m.inputs[0].bytes, 3u);
  // FNV-1a 64 of "abc".
  EXPECT_EQ(m.inputs[0].fnv1a64, "e71fa2190541574b");
  write_manifest(dir / "m.json", m);
  const auto back = read_manifest(dir / "m.json");
  EXPECT_EQ(back.command, m.command);
  EXPECT_EQ(back.config, m.config);
  write_text(dir / "bad.json", "{");
  EXPECT_THROW(read_manifest(dir / "bad.json"), ConfigError);
}

// ---------------------------------------------------------------------------
// Binary

TEST(Cli, UsageErrorsExitWithOne) {
  TempDir dir;
  EXPECT_EQ(run_cli(dir, ""), 1);
  EXPECT_EQ(run_cli(dir, "no-such-command"), 1);
  EXPECT_EQ(run_cli(dir, "pretrain --steps"), 1);
  EXPECT_EQ(run_cli(dir, "pretrain --help"), 0);
  write_text(dir / "bad.cfg", "stepz = 3\n");
  EXPECT_EQ(run_cli(dir, "pretrain --config " + q(dir / "bad.cfg")), 1);
  EXPECT_NE(read_text(dir / "stderr.txt").find("stepz"), std::string::npos);
  EXPECT_EQ(run_cli(dir, "pretrain --out x --steps 3"), 1);  // no data
  EXPECT_EQ(run_cli(dir, "pretrain --parallel p.tsv --out x --weighting l2"), 1);
}

TEST(Cli, DataErrorsExitWithTwo) {
  TempDir dir;
  EXPECT_EQ(run_cli(dir, "pretrain --parallel " + q(dir / "missing.tsv") + " --out " + q(dir / "o")), 2);
  write_text(dir / "h.txt", "a b\n");
  write_text(dir / "r.txt", "a b\nc d\n");
  EXPECT_EQ(run_cli(dir, "bleu --hyp " + q(dir / "h.txt") + " --ref " + q(dir / "r.txt")), 2);
}

TEST(Cli, BleuCommandAndManifest) {
  TempDir dir;
  write_text(dir / "h.txt", "the cat sat on the mat\n");
  write_text(dir / "r.txt", "the cat sat on the red mat\n");
  ASSERT_EQ(run_cli(dir, "bleu --hyp " + q(dir / "h.txt") + " --ref " + q(dir / "r.txt") + " --manifest " +
                             q(dir / "b.json")),
            0);
  EXPECT_NE(read_text(dir / "stdout.txt").find("67.3"), std::string::npos);
  const auto m = read_manifest(dir / "b.json");
  EXPECT_EQ(m.command, "bleu");
  EXPECT_EQ(m.config.at("max-ngram"), "4");
}

TEST(Cli, ConfigFileThenFlagsPrecedence) {
  Workspace ws;
  const auto& dir = ws.dir;
  write_text(dir / "run.cfg", "steps = 2\nbatch-size = 4\nm = 4\nlayers = 1\nhidden = 16\nheads = 2\nffn = 32\n");
  ASSERT_EQ(run_cli(dir, "pretrain --config " + q(dir / "run.cfg") + " --steps 3 --parallel " +
                             q(ws.data / "train.tsv") + " --out " + q(dir / "p.ckpt")),
            0)
      << read_text(dir / "stderr.txt");
  const auto m = read_manifest(dir / "p.ckpt.manifest.json");
  EXPECT_EQ(m.config.at("steps"), "3");
  EXPECT_EQ(m.config.at("batch-size"), "4");
  EXPECT_EQ(m.config.at("lr"), "2.5e-5");
  EXPECT_EQ(csv_rows(dir / "p.ckpt.metrics.csv").size(), 4u);
}

TEST(Cli, RerunReproducesOutputsBitExactly) {
  Workspace ws;
  const auto& dir = ws.dir;
  const auto first = read_text(ws.encoder);
  const auto log = read_text(dir / "enc.ckpt.metrics.csv");
  std::filesystem::rename(ws.encoder, dir / "first.ckpt");
  ASSERT_EQ(run_cli(dir, "rerun " + q(dir / "enc.ckpt.manifest.json")), 0) << read_text(dir / "stderr.txt");
  EXPECT_EQ(read_text(ws.encoder), first);
  EXPECT_EQ(read_text(dir / "enc.ckpt.metrics.csv"), log);
  EXPECT_EQ(run_cli(dir, "rerun " + q(dir / "missing.json")), 1);
}

TEST(Cli, DisabledComponentsLogZeroColumns) {
  Workspace ws;
  const auto& dir = ws.dir;
  ASSERT_EQ(run_cli(dir, "continue-pretrain --checkpoint " + q(ws.encoder) + " --parallel " +
                             q(ws.data / "train.tsv") + " --steps 7 --batch-size 4 --m 4 --disable sctl,wctl --out " +
                             q(dir / "c.ckpt")),
            0)
      << read_text(dir / "stderr.txt");
  const auto rows = csv_rows(dir / "c.ckpt.metrics.csv");
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"step", "l_lm", "l_s", "l_w", "total", "lr"}));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    EXPECT_EQ(std::stod(rows[r][2]), 0.0);
    EXPECT_EQ(std::stod(rows[r][3]), 0.0);
    EXPECT_GT(std::stod(rows[r][1]), 0.0);
  }
  // Continuation resumes the step counter of the checkpoint; --steps is the horizon.
  EXPECT_EQ(rows[1][0], "4");
}

TEST(Cli, EvalEmbedAndTranslate) {
  Workspace ws;
  const auto& dir = ws.dir;
  ASSERT_EQ(run_cli(dir, "eval-retrieval --checkpoint " + q(ws.encoder) + " --corpus " + q(ws.data / "heldout.tsv") +
                             " --manifest " + q(dir / "eval.json")),
            0)
      << read_text(dir / "stderr.txt");
  EXPECT_NE(read_text(dir / "stdout.txt").find("top-1"), std::string::npos);

  write_text(dir / "mono.txt", "a1 a2 a3\na4\nb1 b2\n");
  ASSERT_EQ(run_cli(dir, "embed --checkpoint " + q(ws.encoder) + " --input " + q(dir / "mono.txt") + " --output " +
                             q(dir / "vec.txt")),
            0)
      << read_text(dir / "stderr.txt");
  EXPECT_EQ(csv_rows(dir / "vec.txt").size(), 3u);

  write_text(dir / "sents.txt", "a1 a2 a3\n\na4\n");
  // An encoder-only checkpoint cannot translate.
  EXPECT_EQ(run_cli(dir, "translate --checkpoint " + q(ws.encoder) + " --input " + q(dir / "sents.txt") + " --output " +
                             q(dir / "t.txt")),
            2);

  ASSERT_EQ(run_cli(dir, "finetune-nmt --checkpoint " + q(ws.encoder) + " --bitext " + q(ws.data / "train.tsv") +
                             " --stage1-steps 3 --stage2-steps 1 --batch-size 4 --dec-layers 1 --dec-heads 2 " +
                             "--dec-ffn 32 --out " + q(dir / "nmt.ckpt")),
            0)
      << read_text(dir / "stderr.txt");
  const auto log = csv_rows(dir / "nmt.ckpt.metrics.csv");
  EXPECT_EQ(log.size(), 5u);

  write_text(dir / "empty.txt", "");
  ASSERT_EQ(run_cli(dir, "translate --checkpoint " + q(dir / "nmt.ckpt") + " --input " + q(dir / "empty.txt") +
                             " --output " + q(dir / "t0.txt")),
            0)
      << read_text(dir / "stderr.txt");
  EXPECT_EQ(read_text(dir / "t0.txt"), "");

  ASSERT_EQ(run_cli(dir, "translate --checkpoint " + q(dir / "nmt.ckpt") + " --input " + q(dir / "sents.txt") +
                             " --output " + q(dir / "t1.txt") + " --max-len 6"),
            0);
  const auto out = read_text(dir / "t1.txt");
  EXPECT_EQ(std::count(out.begin(), out.end(), '\n'), 3);
  ASSERT_EQ(run_cli(dir, "translate --checkpoint " + q(dir / "nmt.ckpt") + " --input " + q(dir / "sents.txt") +
                             " --output " + q(dir / "t2.txt") + " --max-len 6"),
            0);
  EXPECT_EQ(read_text(dir / "t2.txt"), out);
}
