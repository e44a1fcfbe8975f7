#include "evseg/dataset.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "evseg/common.hpp"
#include "evseg/lowlight.hpp"

using namespace evseg;

namespace {

namespace fs = std::filesystem;

class DatasetTest : public ::testing::Test {
  protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("evseg_ds_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
               "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    std::string path(const std::string& name) const { return (dir / name).string(); }

    fs::path dir;
};

DatasetConfig tiny_config() {
    DatasetConfig cfg;
    cfg.synth.height = 16;
    cfg.synth.width = 16;
    cfg.synth.frames = 4;
    cfg.synth.min_shapes = 1;
    cfg.synth.max_shapes = 2;
    cfg.train_clips = 2;
    cfg.val_clips = 1;
    cfg.seed = 11;
    return cfg;
}

std::vector<char> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::vector<char>(std::istreambuf_iterator<char>(in),
                             std::istreambuf_iterator<char>());
}

double quantize(double v) {
    return std::lround(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
}

// In-memory clip with recognizable per-frame fill values.
LoadedClip synthetic_clip(int frames, int h, int w) {
    LoadedClip clip;
    for (int t = 0; t < frames; ++t) {
        Tensor f({h, w, 3});
        Tensor e({h, w, 1});
        for (int64_t i = 0; i < f.size(); ++i) f[i] = 0.1 * t + 0.001 * static_cast<double>(i);
        for (int64_t i = 0; i < e.size(); ++i) e[i] = 0.05 * t + 0.002 * static_cast<double>(i);
        IntImage m(h, w);
        for (int64_t i = 0; i < m.size(); ++i) m.v[static_cast<size_t>(i)] = static_cast<int32_t>((t + i) % 5);
        clip.frames.push_back(std::move(f));
        clip.events.push_back(std::move(e));
        clip.masks.push_back(std::move(m));
    }
    return clip;
}

}  // namespace

TEST_F(DatasetTest, BuildWritesTreeAndManifest) {
    const DatasetConfig cfg = tiny_config();
    build_dataset(cfg, path("ds"));

    const DatasetInfo info = read_manifest(path("ds"));
    EXPECT_EQ(info.height, 16);
    EXPECT_EQ(info.width, 16);
    EXPECT_EQ(info.frames, 4);
    EXPECT_EQ(info.num_classes, kSynthClasses);
    EXPECT_EQ(info.train_clips, 2);
    EXPECT_EQ(info.val_clips, 1);
    EXPECT_EQ(info.seed, 11u);

    for (const char* name : {"ds/train/clip_0000", "ds/train/clip_0001", "ds/val/clip_0000"}) {
        for (int t = 0; t < 4; ++t) {
            const std::string stem = "00" + std::to_string(t);
            EXPECT_TRUE(fs::exists(path(std::string(name) + "/frame_" + stem + ".ppm")));
            EXPECT_TRUE(fs::exists(path(std::string(name) + "/mask_" + stem + ".pgm")));
            EXPECT_TRUE(fs::exists(path(std::string(name) + "/events_" + stem + ".pgm")));
        }
    }
}

TEST_F(DatasetTest, RebuildProducesByteIdenticalFiles) {
    const DatasetConfig cfg = tiny_config();
    build_dataset(cfg, path("a"));
    build_dataset(cfg, path("b"));

    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(path("a")))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    ASSERT_FALSE(files.empty());
    for (const fs::path& fa : files) {
        const fs::path fb = path("b") / fs::relative(fa, path("a"));
        ASSERT_TRUE(fs::exists(fb)) << fb;
        EXPECT_EQ(read_bytes(fa), read_bytes(fb)) << fa;
    }
}

TEST_F(DatasetTest, LoadClipReturnsExpectedShapes) {
    build_dataset(tiny_config(), path("ds"));
    const LoadedClip clip = load_clip(path("ds"), "val", 0);
    ASSERT_EQ(clip.frames.size(), 4u);
    ASSERT_EQ(clip.events.size(), 4u);
    ASSERT_EQ(clip.masks.size(), 4u);
    for (int t = 0; t < 4; ++t) {
        EXPECT_TRUE(clip.frames[t].same_shape(Tensor({16, 16, 3})));
        EXPECT_TRUE(clip.events[t].same_shape(Tensor({16, 16, 1})));
        EXPECT_EQ(clip.masks[t].h, 16);
        EXPECT_EQ(clip.masks[t].w, 16);
        for (int32_t id : clip.masks[t].v) {
            EXPECT_GE(id, 0);
            EXPECT_LT(id, kSynthClasses);
        }
    }
    EXPECT_THROW(load_clip(path("ds"), "val", 1), DataError);
    EXPECT_THROW(load_clip(path("ds"), "test", 0), DataError);
}

TEST_F(DatasetTest, FirstEventFrameIsNeutral) {
    build_dataset(tiny_config(), path("ds"));
    const LoadedClip clip = load_clip(path("ds"), "train", 0);
    // 0.5 quantizes to byte 128.
    for (int64_t i = 0; i < clip.events[0].size(); ++i)
        EXPECT_DOUBLE_EQ(clip.events[0][i], 128.0 / 255.0);
}

TEST_F(DatasetTest, StoredFramesAreTheDegradedRender) {
    const DatasetConfig cfg = tiny_config();
    build_dataset(cfg, path("ds"));
    const LoadedClip clip = load_clip(path("ds"), "train", 1);

    SynthConfig sc = cfg.synth;
    sc.seed = cfg.seed;
    const SynthClip raw = render_clip(sc, 1);
    const LowLightParams params =
        sample_lowlight_params(Rng(cfg.seed).derive("lowlight", 1).seed);
    const Tensor dark = degrade(raw.frames[2], params);
    double clean_diff = 0.0;
    for (int64_t i = 0; i < dark.size(); ++i) {
        EXPECT_DOUBLE_EQ(clip.frames[2][i], quantize(dark[i]));
        clean_diff = std::max(clean_diff, std::abs(clip.frames[2][i] - raw.frames[2][i]));
    }
    EXPECT_GT(clean_diff, 0.05);  // degradation visibly darkens the frame
    EXPECT_EQ(clip.masks[2].v, raw.masks[2].v);
}

TEST_F(DatasetTest, EventFramesMatchRecomputedSimulation) {
    const DatasetConfig cfg = tiny_config();
    build_dataset(cfg, path("ds"));
    const LoadedClip clip = load_clip(path("ds"), "train", 0);

    SynthConfig sc = cfg.synth;
    sc.seed = cfg.seed;
    const SynthClip raw = render_clip(sc, 0);
    const LowLightParams params =
        sample_lowlight_params(Rng(cfg.seed).derive("lowlight", 0).seed);
    std::vector<Tensor> dark;
    for (const Tensor& f : raw.frames) dark.push_back(degrade(f, params));

    for (int t = 1; t < cfg.synth.frames; ++t) {
        const double t0 = (t - 1) * cfg.events.delta_t;
        const double t1 = t * cfg.events.delta_t;
        const auto stream = frames_to_events(dark[t - 1], dark[t], t0, t1, cfg.events);
        const EventFrame expect = events_to_frame(stream, 16, 16, cfg.events);
        for (int64_t i = 0; i < expect.image.size(); ++i)
            EXPECT_DOUBLE_EQ(clip.events[t][i], quantize(expect.image[i]))
                << "frame " << t << " index " << i;
    }
}

TEST_F(DatasetTest, EventFramesRespondToMotion) {
    build_dataset(tiny_config(), path("ds"));
    const LoadedClip clip = load_clip(path("ds"), "train", 0);
    // Some later event frame must deviate from the neutral value somewhere.
    double dev = 0.0;
    for (int t = 1; t < 4; ++t)
        for (int64_t i = 0; i < clip.events[t].size(); ++i)
            dev = std::max(dev, std::abs(clip.events[t][i] - 128.0 / 255.0));
    EXPECT_GT(dev, 0.05);
}

TEST(MakeSampleTest, StacksPastFramesNewestFirst) {
    const LoadedClip clip = synthetic_clip(6, 2, 3);
    const Sample s = make_sample(clip, 5, 4, 2);
    ASSERT_TRUE(s.images.same_shape(Tensor({4, 2, 3, 3})));
    ASSERT_TRUE(s.events.same_shape(Tensor({4, 2, 3, 1})));
    const int expected_src[4] = {5, 3, 1, 0};  // 5-6 clamps to 0
    for (int k = 0; k < 4; ++k) {
        const Tensor img = slice_frame(s.images, k);
        const Tensor evt = slice_frame(s.events, k);
        EXPECT_EQ(max_abs_diff(img, clip.frames[expected_src[k]]), 0.0);
        EXPECT_EQ(max_abs_diff(evt, clip.events[expected_src[k]]), 0.0);
    }
    EXPECT_EQ(s.mask.v, clip.masks[5].v);
}

TEST(MakeSampleTest, EarlyFramesRepeatTheFirst) {
    const LoadedClip clip = synthetic_clip(6, 2, 3);
    const Sample s = make_sample(clip, 0, 3, 3);
    for (int k = 0; k < 3; ++k)
        EXPECT_EQ(max_abs_diff(slice_frame(s.images, k), clip.frames[0]), 0.0);
}

TEST(MakeSampleTest, RejectsBadArguments) {
    const LoadedClip clip = synthetic_clip(4, 2, 2);
    EXPECT_THROW(make_sample(clip, 4, 2, 3), ShapeError);
    EXPECT_THROW(make_sample(clip, -1, 2, 3), ShapeError);
    EXPECT_THROW(make_sample(clip, 0, 0, 3), ConfigError);
    EXPECT_THROW(make_sample(clip, 0, 2, 0), ConfigError);
}

TEST(AugmentTest, MatchesAReplayOfItsOwnDraws) {
    const LoadedClip clip = synthetic_clip(5, 4, 5);
    Sample s = make_sample(clip, 4, 3, 2);
    const Sample before = s;

    AugmentConfig cfg;
    Rng rng(42);
    augment_sample(s, cfg, rng);

    Rng replay(42);
    const bool flip = replay.coin();
    const double gamma_u = replay.uniform(-cfg.gamma_jitter, cfg.gamma_jitter);
    const double gain_u = replay.uniform(-cfg.gain_jitter, cfg.gain_jitter);

    const int t = before.images.dim(0), h = 4, w = 5;
    for (int f = 0; f < t; ++f)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const int sx = flip ? w - 1 - x : x;
                for (int c = 0; c < 3; ++c) {
                    const double v = std::clamp(
                        std::pow(before.images.at(f, y, sx, c), 1.0 + gamma_u) * (1.0 + gain_u),
                        0.0, 1.0);
                    EXPECT_DOUBLE_EQ(s.images.at(f, y, x, c), v);
                }
                EXPECT_DOUBLE_EQ(s.events.at(f, y, x, 0), before.events.at(f, y, sx, 0));
            }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int sx = flip ? w - 1 - x : x;
            EXPECT_EQ(s.mask.at(y, x), before.mask.at(y, sx));
        }
}

TEST(AugmentTest, PhotometricJitterLeavesEventsAndMaskAlone) {
    // Pick a seed whose first coin is tails so no flip happens.
    uint64_t seed = 0;
    while (Rng(seed).coin()) ++seed;

    const LoadedClip clip = synthetic_clip(5, 4, 4);
    Sample s = make_sample(clip, 3, 3, 1);
    const Sample before = s;
    AugmentConfig cfg;
    Rng rng(seed);
    augment_sample(s, cfg, rng);

    EXPECT_EQ(max_abs_diff(s.events, before.events), 0.0);
    EXPECT_EQ(s.mask.v, before.mask.v);
    EXPECT_GT(max_abs_diff(s.images, before.images), 0.0);
}

TEST(AugmentTest, ImagesStayInUnitRange) {
    const LoadedClip clip = synthetic_clip(4, 6, 6);
    AugmentConfig cfg;
    cfg.gamma_jitter = 0.5;
    cfg.gain_jitter = 0.5;
    Rng rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        Sample s = make_sample(clip, 3, 3, 1);
        augment_sample(s, cfg, rng);
        for (int64_t i = 0; i < s.images.size(); ++i) {
            EXPECT_GE(s.images[i], 0.0);
            EXPECT_LE(s.images[i], 1.0);
        }
    }
}
