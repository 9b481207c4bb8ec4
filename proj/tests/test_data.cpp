#include <gtest/gtest.h>
#include <zlib.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "mdlcl/config.h"
#include "mdlcl/data_stream.h"
#include "mdlcl/idx.h"

using namespace mdlcl;
namespace fs = std::filesystem;

namespace {

void put_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

std::vector<std::uint8_t> idx_bytes(std::uint32_t magic, const std::vector<std::uint32_t>& dims,
                                    const std::vector<std::uint8_t>& payload) {
  std::vector<std::uint8_t> out;
  put_u32be(out, magic);
  for (auto d : dims) put_u32be(out, d);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mdlcl_test_data";
  fs::create_directories(dir);
  return dir / name;
}

void write_plain(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                           static_cast<std::streamsize>(bytes.size()));
}

void write_gzip(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  gzFile f = gzopen(p.c_str(), "wb");
  ASSERT_NE(f, nullptr);
  gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
  gzclose(f);
}

}  // namespace

TEST(Idx, ParsesImagesAndLabels) {
  const auto img = idx_bytes(kIdxImageMagic, {2, 2, 3}, {0, 255, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  const IdxArray a = parse_idx(img, kIdxImageMagic);
  EXPECT_EQ(a.dims, (std::vector<std::uint32_t>{2, 2, 3}));
  EXPECT_EQ(a.bytes.size(), 12u);
  EXPECT_EQ(a.bytes[1], 255);
  const IdxArray l = parse_idx(idx_bytes(kIdxLabelMagic, {3}, {7, 0, 9}), kIdxLabelMagic);
  EXPECT_EQ(l.bytes, (std::vector<std::uint8_t>{7, 0, 9}));
}

TEST(Idx, ReportsErrorKinds) {
  auto kind_of = [](std::span<const std::uint8_t> bytes, std::uint32_t magic) {
    try {
      parse_idx(bytes, magic);
    } catch (const IdxError& e) {
      return e.kind();
    }
    ADD_FAILURE() << "no error";
    return IdxError::Kind::kIo;
  };
  EXPECT_EQ(kind_of(idx_bytes(kIdxLabelMagic, {3}, {1, 2, 3}), kIdxImageMagic), IdxError::Kind::kBadMagic);
  EXPECT_EQ(kind_of(idx_bytes(kIdxLabelMagic, {4}, {1, 2, 3}), kIdxLabelMagic), IdxError::Kind::kTruncated);
  const std::vector<std::uint8_t> stub = {0, 0};
  EXPECT_EQ(kind_of(stub, kIdxLabelMagic), IdxError::Kind::kTruncated);
}

TEST(Idx, LoadsPlainAndGzippedFilesIdentically) {
  const auto img = idx_bytes(kIdxImageMagic, {3, 1, 2}, {0, 255, 51, 102, 255, 0});
  const auto lab = idx_bytes(kIdxLabelMagic, {3}, {4, 1, 4});
  write_plain(temp_file("img"), img);
  write_plain(temp_file("lab"), lab);
  write_gzip(temp_file("img.gz"), img);
  write_gzip(temp_file("lab.gz"), lab);
  EXPECT_EQ(read_file_maybe_gzip(temp_file("img.gz")), img);

  const LabeledImages plain = load_idx(temp_file("img"), temp_file("lab"));
  const LabeledImages gz = load_idx(temp_file("img.gz"), temp_file("lab.gz"));
  EXPECT_EQ(plain.examples, gz.examples);
  EXPECT_EQ(plain.labels, gz.labels);
  EXPECT_EQ(plain.examples.shape(), (Shape{3, 2}));
  EXPECT_DOUBLE_EQ(plain.examples[2], 0.2);
  EXPECT_EQ(plain.labels, (std::vector<int>{4, 1, 4}));
}

TEST(Idx, CountMismatchAndMissingFile) {
  write_plain(temp_file("img2"), idx_bytes(kIdxImageMagic, {2, 1, 1}, {0, 1}));
  write_plain(temp_file("lab2"), idx_bytes(kIdxLabelMagic, {3}, {0, 1, 2}));
  try {
    load_idx(temp_file("img2"), temp_file("lab2"));
    ADD_FAILURE() << "no error";
  } catch (const IdxError& e) {
    EXPECT_EQ(e.kind(), IdxError::Kind::kCountMismatch);
  }
  try {
    read_file_maybe_gzip(temp_file("does-not-exist"));
    ADD_FAILURE() << "no error";
  } catch (const IdxError& e) {
    EXPECT_EQ(e.kind(), IdxError::Kind::kIo);
  }
}

TEST(Synthetic, ZeroNoiseReproducesPrototypes) {
  const SyntheticData d = synthetic_data(3, 5, 12, 0.0, 7);
  for (std::size_t r = 0; r < 15; ++r) {
    const auto label = static_cast<std::size_t>(d.labels[r]);
    EXPECT_EQ(label, r / 5);
    for (std::size_t c = 0; c < 12; ++c) EXPECT_EQ(d.examples[r * 12 + c], d.prototypes[label * 12 + c]);
  }
}

TEST(Synthetic, DeterministicInSeed) {
  const SyntheticData a = synthetic_data(4, 10, 16, 0.1, 3), b = synthetic_data(4, 10, 16, 0.1, 3),
                      c = synthetic_data(4, 10, 16, 0.1, 4);
  EXPECT_EQ(a.examples, b.examples);
  EXPECT_NE(a.examples, c.examples);
}

TEST(Synthetic, FlipRateWithinThreeStandardErrors) {
  const double rate = 0.1;
  const SyntheticData d = synthetic_data(5, 400, 64, rate, 11);
  double flips = 0;
  const double n = 5 * 400 * 64;
  for (std::size_t r = 0; r < 2000; ++r) {
    const auto label = static_cast<std::size_t>(d.labels[r]);
    for (std::size_t c = 0; c < 64; ++c) flips += d.examples[r * 64 + c] != d.prototypes[label * 64 + c];
  }
  EXPECT_NEAR(flips / n, rate, 3 * std::sqrt(rate * (1 - rate) / n));
}

TEST(Synthetic, PrototypeSpreadControlsClassOverlap) {
  // Two prototypes drawn from a shared base at spread s differ per pixel with probability 2 s (1 - s).
  for (double s : {0.15, 0.5}) {
    double diff = 0, pairs = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const SyntheticData d = synthetic_data(6, 1, 64, 0.0, seed, s);
      for (std::size_t a = 0; a < 6; ++a)
        for (std::size_t b = a + 1; b < 6; ++b)
          for (std::size_t c = 0; c < 64; ++c) {
            diff += d.prototypes[a * 64 + c] != d.prototypes[b * 64 + c];
            pairs += 1;
          }
    }
    // Pairs share draws, so allow a wide band around the expected rate.
    EXPECT_NEAR(diff / pairs, 2 * s * (1 - s), 0.03) << s;
  }
}

TEST(Synthetic, RejectsBadRates) {
  EXPECT_ANY_THROW(synthetic_data(2, 2, 4, 0.5, 1));
  EXPECT_ANY_THROW(synthetic_data(2, 2, 4, -0.1, 1));
  EXPECT_ANY_THROW(synthetic_data(2, 2, 4, 0.1, 1, 0.6));
}

TEST(Stream, PartitionsEachClassIntoTrainAndHeldout) {
  const SyntheticData d = synthetic_data(4, 30, 8, 0.2, 5);
  // Tag each row by index in its last columns so rows can be traced.
  Tensor tagged({120, 9});
  for (std::size_t r = 0; r < 120; ++r) {
    for (std::size_t c = 0; c < 8; ++c) tagged[r * 9 + c] = d.examples[r * 8 + c];
    tagged[r * 9 + 8] = static_cast<double>(r) / 1000.0;
  }
  const std::vector<int> order = {2, 0, 3, 1};
  const auto s = class_incremental(tagged, d.labels, order, 2, 5, 9);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(s.heldout_batches, 2u);
  EXPECT_EQ(s.heldout_batch_size, 5u);
  std::set<double> seen;
  for (std::size_t t = 0; t < 4; ++t) {
    EXPECT_EQ(s.steps[t].class_label, order[t]);
    EXPECT_EQ(s.steps[t].examples.rows(), 20u);
    EXPECT_EQ(s.heldout[t].rows(), 10u);
    for (const Tensor* part : {&s.steps[t].examples, &s.heldout[t]})
      for (std::size_t r = 0; r < part->rows(); ++r) {
        const double tag = (*part)[r * 9 + 8];
        const auto src = static_cast<std::size_t>(std::lround(tag * 1000));
        EXPECT_EQ(d.labels[src], order[t]);
        EXPECT_TRUE(seen.insert(tag).second) << "row used twice";
      }
  }
  EXPECT_EQ(seen.size(), 120u);
}

TEST(Stream, WithholdsTenBatchesOfThirtyTwo) {
  const SyntheticData d = synthetic_data(2, 400, 4, 0.1, 2);
  const std::vector<int> order = {0, 1};
  const auto s = class_incremental(d.examples, d.labels, order, 10, 32, 1);
  for (std::size_t t = 0; t < 2; ++t) {
    EXPECT_EQ(s.heldout[t].rows(), 320u);
    EXPECT_EQ(s.steps[t].examples.rows(), 80u);
  }
}

TEST(Stream, DeterministicAndSeedSensitive) {
  const auto a = synthetic_stream(3, 40, 8, 0.1, 2, 4, 5), b = synthetic_stream(3, 40, 8, 0.1, 2, 4, 5),
             c = synthetic_stream(3, 40, 8, 0.1, 2, 4, 6);
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_EQ(a.steps[t].examples, b.steps[t].examples);
    EXPECT_EQ(a.heldout[t], b.heldout[t]);
  }
  EXPECT_NE(a.heldout[0], c.heldout[0]);
}

TEST(Stream, SeparateHeldoutPool) {
  const SyntheticData train = synthetic_data(2, 20, 4, 0.1, 1), pool = synthetic_data(2, 12, 4, 0.1, 2);
  const std::vector<int> order = {1, 0};
  const auto s = class_incremental(train.examples, train.labels, pool.examples, pool.labels, order, 2, 3, 7);
  EXPECT_EQ(s.steps[0].examples.rows(), 20u);
  EXPECT_EQ(s.heldout[0].rows(), 6u);
  EXPECT_EQ(s.steps[0].class_label, 1);
}

TEST(Stream, RejectsBadOrders) {
  const SyntheticData d = synthetic_data(2, 10, 4, 0.1, 1);
  const std::vector<int> missing = {0, 5}, repeated = {0, 0}, fine = {0, 1};
  EXPECT_ANY_THROW(class_incremental(d.examples, d.labels, missing, 1, 2, 1));
  EXPECT_ANY_THROW(class_incremental(d.examples, d.labels, repeated, 1, 2, 1));
  EXPECT_ANY_THROW(class_incremental(d.examples, d.labels, fine, 5, 2, 1));
}

TEST(Config, ParsesKeysCommentsAndPreset) {
  std::istringstream in(
      "# comment\n"
      "preset = tiny\n"
      "n_classes = 4   # trailing\n"
      "strategies = vcl, replay\n"
      "seeds = 7,8\n"
      "lr = 0.005\n"
      "\n"
      "replay_binarize = true\n"
      "class_order = 3,2,1,0\n");
  const ExperimentConfig c = parse_config(in, ExperimentConfig{});
  EXPECT_EQ(c.n_classes, 4u);
  EXPECT_EQ(c.strategies, (std::vector<StrategyKind>{StrategyKind::kVcl, StrategyKind::kReplay}));
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{7, 8}));
  EXPECT_DOUBLE_EQ(c.neural.adam.lr, 0.005);
  EXPECT_TRUE(c.neural.replay_binarize);
  EXPECT_EQ(c.class_order, (std::vector<int>{3, 2, 1, 0}));
  EXPECT_EQ(c.neural.epochs, preset_config("tiny").neural.epochs);
}

TEST(Config, PresetAppliesBeforeOtherKeysWhateverTheOrder) {
  std::istringstream in("epochs = 3\npreset = mnist\n");
  const ExperimentConfig c = parse_config(in, preset_config("tiny"));
  EXPECT_EQ(c.neural.epochs, 3u);
  EXPECT_EQ(c.input_dim(), 784u);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  ExperimentConfig c;
  EXPECT_THROW(apply_setting(c, "epoch", "3"), ConfigError);
  EXPECT_THROW(apply_setting(c, "epochs", "three"), ConfigError);
  EXPECT_THROW(apply_setting(c, "replay_binarize", "maybe"), ConfigError);
  EXPECT_THROW(apply_setting(c, "strategies", "ewc"), ConfigError);
  EXPECT_THROW(preset_config("huge"), ConfigError);
  std::istringstream in("no equals sign\n");
  EXPECT_THROW(parse_config(in, c), ConfigError);
}

TEST(Config, ValidateCatchesUnrunnableSettings) {
  EXPECT_NO_THROW(validate(preset_config("tiny")));
  auto broken = [](auto mutate) {
    ExperimentConfig c = preset_config("tiny");
    mutate(c);
    return c;
  };
  EXPECT_THROW(validate(broken([](auto& c) { c.seeds.clear(); })), ConfigError);
  EXPECT_THROW(validate(broken([](auto& c) { c.noise_rate = 0.5; })), ConfigError);
  EXPECT_THROW(validate(broken([](auto& c) { c.neural.prior_sigma = 0; })), ConfigError);
  EXPECT_THROW(validate(broken([](auto& c) { c.examples_per_class = 10; })), ConfigError);
  EXPECT_THROW(validate(broken([](auto& c) { c.source = StreamSource::kMnist; })), ConfigError);
}

TEST(Config, TextRoundTrip) {
  ExperimentConfig c = preset_config("tiny");
  c.seeds = {4, 9};
  c.neural.prior_sigma = 0.37;
  c.sigma_sweep = {0.5, 2};
  c.class_order = {1, 0, 2, 3, 4, 5};
  std::istringstream in(to_config_text(c));
  const ExperimentConfig back = parse_config(in, ExperimentConfig{});
  EXPECT_EQ(to_config_text(back), to_config_text(c));
  EXPECT_EQ(back.neural.description(), c.neural.description());
}
