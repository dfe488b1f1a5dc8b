#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "apa/checkpoint.hpp"
#include "apa/infer.hpp"
#include "apa/lft_io.hpp"
#include "apa/run_config.hpp"
#include "apa/synthetic.hpp"
#include "doctest.h"

// End-to-end exercises of the apa binary (path provided by the build).

namespace fs = std::filesystem;
using namespace apa;

namespace {

const char* cli_bin() { return APA_CLI_BIN; }

fs::path work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "apa_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(cli_bin()) + " " + args + " >" +
                          (work_dir() / "stdout.txt").string() + " 2>" +
                          (work_dir() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string last_stdout() {
  std::ifstream in(work_dir() / "stdout.txt");
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

bool files_equal(const fs::path& a, const fs::path& b) {
  return file_checksum_hex(a) == file_checksum_hex(b) && fs::file_size(a) == fs::file_size(b);
}

// Small toy data shared by the cases below.
struct Fixture {
  fs::path clean_lft = work_dir() / "clean.lft";
  fs::path data_dir = work_dir() / "scenes";
  fs::path config_path = work_dir() / "toy.cfg";

  Fixture() {
    ToySceneParams p;
    p.w = 32;
    p.h = 32;
    p.n_h = 4;
    p.n_v = 4;
    p.disparity_base = 0.5;
    save_lft(make_toy_scene<float>(p), clean_lft);

    fs::create_directories(data_dir);
    for (int i = 0; i < 2; ++i) {
      ToySceneParams q = p;
      q.seed = 100 + static_cast<std::uint64_t>(i);
      save_lft(make_toy_scene<float>(q), data_dir / ("scene" + std::to_string(i) + ".lft"));
    }

    std::ofstream cfg(config_path);
    cfg << "# toy-scale run\n"
        << "sigma_255 = 20\n"
        << "patch_size = 16\n"
        << "stride = 16\n"
        << "guided.radius = 4\n"
        << "syn.widths = 8,8,8\n"
        << "view.widths = 8,8,4\n"
        << "view.patches_per_sai = 2\n"
        << "hyper.epochs = 2\n"
        << "hyper.batch_size = 8\n"
        << "threads = 2\n";
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

}  // namespace

TEST_CASE("cli: synth-noise basics") {
  const auto& f = fixture();
  const fs::path out = work_dir() / "noisy.lft";

  SUBCASE("sigma 0 reproduces the input") {
    CHECK(run_cli("synth-noise --in " + f.clean_lft.string() + " --out " + out.string() +
                  " --sigma 0") == 0);
    const auto a = load_lft<float>(f.clean_lft);
    const auto b = load_lft<float>(out);
    for (Eigen::Index i = 0; i < a.count(); ++i) CHECK(a.data()[i] == b.data()[i]);
    CHECK(last_stdout().find("measured sigma_255") != std::string::npos);
    CHECK(fs::exists(out.string() + ".manifest"));
  }

  SUBCASE("fixed seed twice gives identical files") {
    const fs::path out2 = work_dir() / "noisy2.lft";
    CHECK(run_cli("synth-noise --in " + f.clean_lft.string() + " --out " + out.string() +
                  " --sigma 20 --seed 7") == 0);
    CHECK(run_cli("synth-noise --in " + f.clean_lft.string() + " --out " + out2.string() +
                  " --sigma 20 --seed 7") == 0);
    CHECK(files_equal(out, out2));
  }

  SUBCASE("negative sigma is a usage error") {
    CHECK(run_cli("synth-noise --in " + f.clean_lft.string() + " --out " + out.string() +
                  " --sigma -5") == 2);
  }

  SUBCASE("missing input is a usage error") {
    CHECK(run_cli("synth-noise --in " + (work_dir() / "nope.lft").string() + " --out " +
                  out.string() + " --sigma 10") == 2);
  }
}

TEST_CASE("cli: train, denoise, eval round trip") {
  const auto& f = fixture();
  const fs::path noisy = work_dir() / "noisy_in.lft";
  const fs::path syn_ckpt = work_dir() / "syn.apaw";
  const fs::path view_ckpt = work_dir() / "view.apaw";

  REQUIRE(run_cli("synth-noise --in " + f.clean_lft.string() + " --out " + noisy.string() +
                  " --sigma 20 --seed 3") == 0);

  SUBCASE("view stage without --syn-ckpt is a usage error") {
    CHECK(run_cli("train --stage view --data " + f.data_dir.string() + " --config " +
                  f.config_path.string() + " --out " + view_ckpt.string()) == 2);
  }

  SUBCASE("full pipeline") {
    REQUIRE(run_cli("train --stage syn --data " + f.data_dir.string() + " --config " +
                    f.config_path.string() + " --out " + syn_ckpt.string()) == 0);
    CHECK(fs::exists(syn_ckpt));
    CHECK(fs::exists(syn_ckpt.string() + ".log"));
    CHECK(fs::exists(syn_ckpt.string() + ".manifest"));
    {  // log has one line per step: 2 scenes x 4 patches = 8 -> 1 batch of 8 per epoch
      std::ifstream log(syn_ckpt.string() + ".log");
      int lines = 0;
      std::string line;
      while (std::getline(log, line))
        if (!line.empty()) ++lines;
      CHECK(lines == 2);  // one batch per epoch x 2 epochs
    }

    REQUIRE(run_cli("train --stage view --data " + f.data_dir.string() + " --config " +
                    f.config_path.string() + " --out " + view_ckpt.string() + " --syn-ckpt " +
                    syn_ckpt.string()) == 0);

    SUBCASE("determinism: identical config and seed give identical checkpoints") {
      const fs::path syn2 = work_dir() / "syn_again.apaw";
      REQUIRE(run_cli("train --stage syn --data " + f.data_dir.string() + " --config " +
                      f.config_path.string() + " --out " + syn2.string()) == 0);
      CHECK(files_equal(syn_ckpt, syn2));
    }

    SUBCASE("denoise + eval") {
      const fs::path out = work_dir() / "denoised.lft";
      const fs::path inter = work_dir() / "intermediates";
      REQUIRE(run_cli("denoise --in " + noisy.string() + " --syn " + syn_ckpt.string() +
                      " --view " + view_ckpt.string() + " --out " + out.string() +
                      " --emit-intermediates " + inter.string()) == 0);

      const auto result = load_lft<float>(out);
      const auto input = load_lft<float>(noisy);
      CHECK(result.same_dims(input));

      // lf_syn dump equals the library baseline bit for bit
      const auto syn_net = load_checkpoint<float>(syn_ckpt).single();
      const auto meta = load_checkpoint<float>(syn_ckpt).meta;
      InferParams params;
      params.guided.radius = std::stoi(meta.at("guided.radius"));
      params.guided.epsilon = std::stod(meta.at("guided.epsilon"));
      params.gaussian = GaussianParams::from_sigma(std::stod(meta.at("gaussian.sigma_g")));
      params.syn_residual = meta.at("syn.residual") == "1";
      const auto baseline = baseline_apa_syn(input, syn_net, params);
      const auto dumped = load_lft<float>(inter / "lf_syn.lft");
      for (Eigen::Index i = 0; i < baseline.count(); ++i)
        CHECK(baseline.data()[i] == dumped.data()[i]);

      // eval: identical fields print ssim 1
      REQUIRE(run_cli("eval --gt " + f.clean_lft.string() + " --test " + f.clean_lft.string()) ==
              0);
      CHECK(last_stdout().find("ssim_mean = 1.000000") != std::string::npos);
      CHECK(last_stdout().find("psnr_mean = inf") != std::string::npos);

      // per-SAI table row count for the 4x4 fixture
      std::ifstream table(f.clean_lft.string() + ".quality.csv");
      int rows = 0;
      std::string line;
      while (std::getline(table, line))
        if (!line.empty()) ++rows;
      CHECK(rows == 17);  // header + 16 SAIs

      // PR table has one row per threshold
      REQUIRE(run_cli("eval --gt " + f.clean_lft.string() + " --test " + out.string() +
                      " --pr 0.02") == 0);
      std::ifstream pr(out.string() + ".pr.csv");
      rows = 0;
      while (std::getline(pr, line))
        if (!line.empty()) ++rows;
      CHECK(rows == 65);

      // dimension mismatch is a usage error
      const fs::path small = work_dir() / "small.lft";
      save_lft(LightFieldF(8, 8, 2, 2), small);
      CHECK(run_cli("eval --gt " + f.clean_lft.string() + " --test " + small.string()) == 2);
    }

    SUBCASE("sigma mismatch between checkpoints is rejected") {
      const fs::path syn50 = work_dir() / "syn50.apaw";
      REQUIRE(run_cli("train --stage syn --data " + f.data_dir.string() + " --config " +
                      f.config_path.string() + " --sigma 50 --out " + syn50.string()) == 0);
      const fs::path out = work_dir() / "wont_exist.lft";
      CHECK(run_cli("denoise --in " + noisy.string() + " --syn " + syn50.string() + " --view " +
                    view_ckpt.string() + " --out " + out.string()) == 2);
    }
  }
}

TEST_CASE("cli: estimate-sigma") {
  const auto& f = fixture();
  const fs::path noisy = work_dir() / "sigma20.lft";
  REQUIRE(run_cli("synth-noise --in " + f.clean_lft.string() + " --out " + noisy.string() +
                  " --sigma 20 --seed 5") == 0);
  CHECK(run_cli("estimate-sigma --in " + noisy.string()) == 0);
  CHECK(last_stdout().find("nearest trained level = 20") != std::string::npos);

  const fs::path flat = work_dir() / "flat.lft";
  LightFieldF lf(16, 16, 2, 2);
  for (Eigen::Index i = 0; i < lf.count(); ++i) lf.data()[i] = 0.5f;
  save_lft(lf, flat);
  CHECK(run_cli("estimate-sigma --in " + flat.string()) == 0);
  CHECK(last_stdout().find("estimated sigma_255 = 0.0000") != std::string::npos);
  CHECK(last_stdout().find("nearest trained level = 10") != std::string::npos);

  CHECK(run_cli("estimate-sigma --in " + (work_dir() / "missing.lft").string()) == 2);
}

TEST_CASE("cli: unknown config keys are rejected") {
  const fs::path bad = work_dir() / "bad.cfg";
  {
    std::ofstream out(bad);
    out << "sigma_255 = 20\nnot_a_key = 1\n";
  }
  const auto& f = fixture();
  CHECK(run_cli("train --stage syn --data " + f.data_dir.string() + " --config " + bad.string() +
                " --out " + (work_dir() / "x.apaw").string()) == 2);
}

TEST_CASE("cli: selftest passes") { CHECK(run_cli("selftest") == 0); }
