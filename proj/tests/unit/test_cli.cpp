#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "commands.hpp"

using namespace acnn;
using namespace acnn::cli;
namespace fs = std::filesystem;

namespace {

const Verb& verb(const std::string& name) {
  for (const auto& v : verbs())
    if (v.name == name) return v;
  throw std::runtime_error("no verb " + name);
}

RunConfig config(const std::string& name, std::initializer_list<std::pair<std::string, std::string>> kv) {
  RunConfig cfg(verb(name).keys);
  for (const auto& [k, v] : kv) cfg.set(k, v);
  return cfg;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("acnn_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& rel) const { return (dir_ / rel).string(); }

  std::string read_text(const std::string& rel) const {
    const auto b = io::read_file(dir_ / rel);
    return std::string(b.begin(), b.end());
  }

  // Small corpus: 16x16 planes, 2 coils.
  void gen(const std::string& out, std::uint64_t seed, std::size_t count = 3, std::size_t slices = 3) {
    auto cfg = config("gen-data", {{"out", path(out)},
                                   {"seed", std::to_string(seed)},
                                   {"count", std::to_string(count)},
                                   {"slices", std::to_string(slices)},
                                   {"size", "16"}});
    cmd_gen_data(cfg);
  }

  int run_cli(const std::string& args) const {
    const std::string cmd = std::string(ACNN_CLI_PATH) + " " + args + " >" + path("stdout.txt") + " 2>" + path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
};

// A freshly built model: zero output layer, all other parameters random.
void write_zeroed_checkpoint(const fs::path& path, std::size_t coils, std::size_t size) {
  auto cfg = ModelConfig::toy(ModelKind::acnn, 1, coils);
  cfg.input_size = size;
  auto m = build_model<float>(cfg, 5);
  for (const auto& p : m.params())
    if (p.name == "output.weight")
      for (float v : p.value.storage()) ASSERT_EQ(v, 0.0f);
  save_checkpoint(path, m, 5, 0);
}

}  // namespace

TEST_F(CliTest, ConfigPrecedenceDefaultsFileFlags) {
  io::write_text(dir_ / "run.config", "# comment\nepochs = 7\nbatch=4   # trailing\nunrelated-key = 1\n\n");
  RunConfig cfg(verb("train").keys);
  EXPECT_EQ(cfg.count("epochs"), 30u);
  EXPECT_EQ(cfg.real("lr-start"), 1e-4);
  EXPECT_EQ(cfg.real("weight-decay"), 1e-4);
  cfg.load_file(path("run.config"));
  EXPECT_EQ(cfg.count("epochs"), 7u);
  EXPECT_EQ(cfg.count("batch"), 4u);
  EXPECT_EQ(cfg.ignored(), std::vector<std::string>{"unrelated-key"});
  cfg.set("epochs", "9");
  EXPECT_EQ(cfg.count("epochs"), 9u);
  EXPECT_EQ(cfg.count("batch"), 4u);

  // the resolved config reloads to the same values
  const auto saved = cfg.save(dir_, "train");
  RunConfig again(verb("train").keys);
  again.load_file(saved);
  EXPECT_EQ(again.dump(), cfg.dump());
  EXPECT_TRUE(again.ignored().empty());
}

TEST_F(CliTest, ConfigErrors) {
  RunConfig cfg(verb("train").keys);
  EXPECT_THROW(cfg.set("no-such-key", "1"), Error);
  cfg.set("epochs", "-3");
  EXPECT_THROW(cfg.count("epochs"), Error);
  cfg.set("lr-start", "1e-4x");
  EXPECT_THROW(cfg.real("lr-start"), Error);
  io::write_text(dir_ / "bad.config", "epochs 3\n");
  try {
    cfg.load_file(path("bad.config"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::format);
    EXPECT_NE(std::string(e.what()).find(":1:"), std::string::npos);
  }
  EXPECT_THROW(cfg.load_file(path("missing.config")), Error);
}

TEST_F(CliTest, GenDataWritesShapedDeterministicVolumes) {
  auto cfg = config("gen-data", {{"out", path("a")}, {"seed", "3"}});
  cmd_gen_data(cfg);
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "a"))
    if (e.path().extension() == ".kspv") {
      const auto v = read_volume(e.path());
      EXPECT_EQ(v.shape_string(), ComplexVolume(8, 2, 64, 64, Domain::kspace).shape_string());
      EXPECT_EQ(v.domain(), Domain::kspace);
      ++n;
    }
  EXPECT_EQ(n, 12u);
  EXPECT_TRUE(fs::exists(dir_ / "a" / "gen-data.config"));
  const auto split = parse_manifest(read_text("a/split.txt"));
  EXPECT_EQ(split.train.size(), 9u);
  EXPECT_EQ(split.validation.size(), 1u);
  EXPECT_EQ(split.test.size(), 2u);

  gen("b", 3, 2, 2);
  gen("c", 3, 2, 2);
  gen("d", 4, 2, 2);
  for (const char* id : {"vol_000.kspv", "vol_001.kspv"}) {
    EXPECT_EQ(io::read_file(dir_ / "b" / id), io::read_file(dir_ / "c" / id)) << id;
    EXPECT_NE(io::read_file(dir_ / "b" / id), io::read_file(dir_ / "d" / id)) << id;
  }
  EXPECT_NE(io::read_file(dir_ / "b/vol_000.kspv"), io::read_file(dir_ / "b/vol_001.kspv"));
}

TEST_F(CliTest, IndivisibleSizeRejectedAtTrainTime) {
  auto gcfg = config("gen-data", {{"out", path("data")}, {"count", "4"}, {"slices", "3"}, {"size", "63"}});
  cmd_gen_data(gcfg);
  auto cfg = config("train", {{"out", path("run")}, {"data", path("data")}, {"epochs", "1"}});
  try {
    cmd_train(cfg);
    FAIL() << "expected a divisibility error";
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::shape_mismatch);
    EXPECT_NE(std::string(e.what()).find("not divisible by 2^3"), std::string::npos) << e.what();
  }
}

TEST_F(CliTest, MakeMaskCartesianAndRadial) {
  auto cfg = config("make-mask", {{"out", path("m")}, {"size", "256"}, {"seed", "2"}});
  cmd_make_mask(cfg);
  const auto m = read_mask(dir_ / "m" / "mask.msk1");
  EXPECT_EQ(m.sampled_columns().size(), 64u);
  EXPECT_TRUE(m.sampled(0, 128));
  EXPECT_TRUE(fs::exists(dir_ / "m" / "mask.png"));
  EXPECT_TRUE(fs::exists(dir_ / "m" / "make-mask.config"));

  auto rcfg = config("make-mask", {{"out", path("r")}, {"size", "256"}, {"sampling", "radial"}});
  cmd_make_mask(rcfg);
  std::istringstream csv(read_text("r/trajectory.csv"));
  std::string line;
  std::size_t rows = 0;
  std::getline(csv, line);
  EXPECT_EQ(line, "spoke,sample,kx,ky");
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 60u * 256u);
}

TEST_F(CliTest, ZeroedCheckpointReconstructsZeroFilled) {
  gen("data", 1, 1, 3);
  write_zeroed_checkpoint(dir_ / "zero.ackp", 2, 16);
  auto cfg = config("reconstruct", {{"out", path("rec")}, {"checkpoint", path("zero.ackp")}, {"volume", path("data/vol_000.kspv")}});
  cmd_reconstruct(cfg);
  const auto recon = read_volume(dir_ / "rec" / "vol_000.recon.kspv");
  const auto zf = read_volume(dir_ / "rec" / "vol_000.zf.kspv");
  ASSERT_EQ(recon.shape_string(), zf.shape_string());
  EXPECT_EQ(recon.n_slices(), 3u);
  double peak = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < zf.size(); ++i) {
    peak = std::max(peak, static_cast<double>(std::abs(zf.data()[i])));
    worst = std::max(worst, static_cast<double>(std::abs(recon.data()[i] - zf.data()[i])));
  }
  EXPECT_LE(worst, 1e-5 * peak);
  EXPECT_TRUE(fs::exists(dir_ / "rec" / "reconstruct.config"));

  // repeated invocation writes identical bytes
  auto again = config("reconstruct", {{"out", path("rec2")}, {"checkpoint", path("zero.ackp")}, {"volume", path("data/vol_000.kspv")}});
  cmd_reconstruct(again);
  EXPECT_EQ(io::read_file(dir_ / "rec" / "vol_000.recon.kspv"), io::read_file(dir_ / "rec2" / "vol_000.recon.kspv"));
}

TEST_F(CliTest, ReconstructRejectsIncompatibleVolume) {
  gen("data", 1, 1, 3);
  write_zeroed_checkpoint(dir_ / "c3.ackp", 3, 16);
  auto cfg = config("reconstruct", {{"out", path("rec")}, {"checkpoint", path("c3.ackp")}, {"volume", path("data/vol_000.kspv")}});
  try {
    cmd_reconstruct(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::shape_mismatch);
  }
}

TEST_F(CliTest, EvaluateIdenticalMethods) {
  gen("data", 1, 1, 6);
  const auto truth = path("data/vol_000.kspv");
  auto cfg = config("evaluate", {{"out", path("ev")}, {"truth", truth}, {"methods", "a=" + truth + ",b=" + truth}});
  cmd_evaluate(cfg);
  std::istringstream in(read_text("ev/metrics.csv"));
  std::string line;
  std::getline(in, line);
  std::size_t rows = 0;
  while (std::getline(in, line) && !line.empty()) {
    std::istringstream ls(line);
    std::string f[4];
    for (auto& s : f) std::getline(ls, s, ',');
    EXPECT_EQ(std::stod(f[2]), 1.0) << line;
    EXPECT_EQ(std::stod(f[3]), 0.0) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 12u);
  MetricsReport rep;
  const auto images = rss_images(read_volume(truth));
  rep.methods = {score("a", images, images), score("b", images, images)};
  EXPECT_EQ(rep.p_value(1, Metric::ssim), 1.0);
  EXPECT_EQ(rep.p_value(1, Metric::nmse), 1.0);
}

TEST_F(CliTest, VizAttentionAndResponse) {
  gen("data", 1, 1, 3);
  write_zeroed_checkpoint(dir_ / "m.ackp", 2, 16);
  auto cfg = config("viz", {{"out", path("att")}, {"what", "attention"}, {"checkpoint", path("m.ackp")},
                            {"volume", path("data/vol_000.kspv")}});
  cmd_viz(cfg);
  std::istringstream in(read_text("att/attention_maps.csv"));
  std::string line;
  std::getline(in, line);
  std::size_t maps = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string f[6];
    for (auto& s : f) std::getline(ls, s, ',');
    EXPECT_GT(std::stod(f[4]), 0.0) << line;
    EXPECT_LT(std::stod(f[5]), 1.0) << line;
    EXPECT_TRUE(fs::exists(dir_ / "att" / f[1]));
    ++maps;
  }
  EXPECT_GT(maps, 0u);

  auto rcfg = config("viz", {{"out", path("resp")}, {"what", "response"}, {"checkpoint", path("m.ackp")},
                             {"volume", path("data/vol_000.kspv")}});
  cmd_viz(rcfg);
  std::istringstream rin(read_text("resp/response.csv"));
  std::getline(rin, line);
  EXPECT_EQ(line, "channel,slice_offset,coil,part,response,normalized");
  double max_norm = 0.0;
  std::size_t channels = 0;
  while (std::getline(rin, line)) {
    max_norm = std::max(max_norm, std::stod(line.substr(line.rfind(',') + 1)));
    ++channels;
  }
  EXPECT_EQ(channels, 12u);
  EXPECT_DOUBLE_EQ(max_norm, 1.0);
}

TEST_F(CliTest, VizDifferenceOfTruthIsBlack) {
  gen("data", 1, 1, 3);
  auto cfg = config("viz", {{"out", path("diff")}, {"what", "difference"}, {"volume", path("data/vol_000.kspv")},
                            {"recon", path("data/vol_000.kspv")}});
  EXPECT_EQ(cfg.real("gain"), 5.0);
  cmd_viz(cfg);
  EXPECT_TRUE(fs::exists(dir_ / "diff" / "difference.png"));
  EXPECT_TRUE(fs::exists(dir_ / "diff" / "viz.config"));
}

TEST_F(CliTest, ExitCodesNameTheCategory) {
  EXPECT_EQ(run_cli("no-such-verb"), 64);
  EXPECT_EQ(run_cli("reconstruct --out " + path("x") + " --checkpoint " + path("missing.ackp") + " --volume v.kspv"), 6);
  EXPECT_NE(read_text("stderr.txt").find("acnn: io:"), std::string::npos) << read_text("stderr.txt");
  io::write_text(dir_ / "junk.ackp", "not a checkpoint");
  EXPECT_EQ(run_cli("reconstruct --out " + path("x") + " --checkpoint " + path("junk.ackp") + " --volume v.kspv"), 5);
  EXPECT_EQ(run_cli("gen-data --out " + path("d") + " --count 0"), 2);
  EXPECT_EQ(run_cli("gen-data --out " + path("d") + " --count 1 --slices 2 --size 16 --seed 4"), 0);
  EXPECT_TRUE(fs::exists(dir_ / "d" / "vol_000.kspv"));
  // a config file supplies values and flags override them
  io::write_text(dir_ / "g.config", "count = 2\nsize = 16\nslices = 2\n");
  EXPECT_EQ(run_cli("gen-data --config " + path("g.config") + " --out " + path("e") + " --count 1"), 0);
  EXPECT_TRUE(fs::exists(dir_ / "e" / "vol_000.kspv"));
  EXPECT_FALSE(fs::exists(dir_ / "e" / "vol_001.kspv"));
  EXPECT_EQ(read_volume(dir_ / "e" / "vol_000.kspv").height(), 16u);
}
