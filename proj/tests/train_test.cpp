#include "evseg/train.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "evseg/loss.hpp"

using namespace evseg;

namespace {

namespace fs = std::filesystem;

class TrainTest : public ::testing::Test {
  protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("evseg_train_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
               "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    std::string path(const std::string& name) const { return (dir / name).string(); }

    // Small dataset at the minimum legal resolution for the encoder.
    std::string build_tiny_dataset(int train_clips = 3, int frames = 6) {
        DatasetConfig cfg;
        cfg.synth.height = 32;
        cfg.synth.width = 32;
        cfg.synth.frames = frames;
        cfg.synth.min_shapes = 1;
        cfg.synth.max_shapes = 2;
        cfg.train_clips = train_clips;
        cfg.val_clips = 2;
        cfg.seed = 5;
        const std::string root = path("data");
        build_dataset(cfg, root);
        return root;
    }

    TrainConfig tiny_train_config(const std::string& root, const std::string& out) {
        TrainConfig cfg;
        cfg.model.num_classes = kSynthClasses;
        cfg.model.frames = 2;
        cfg.model.feat_width = 2;
        cfg.model.image_widths = {2, 2, 2, 2};
        cfg.model.event_widths = {2, 2, 2, 2};
        cfg.dataset_root = root;
        cfg.out_dir = path(out);
        cfg.iters = 8;
        cfg.lr = 1e-3;
        cfg.seed = 3;
        return cfg;
    }

    fs::path dir;
};

int count_lines(const std::string& p) {
    std::ifstream in(p);
    int n = 0;
    std::string line;
    while (std::getline(in, line)) ++n;
    return n;
}

}  // namespace

TEST_F(TrainTest, ValidateRejectsBadConfigs) {
    TrainConfig cfg = tiny_train_config("root", "out");
    cfg.iters = 0;
    EXPECT_THROW(validate(cfg), ConfigError);
    cfg = tiny_train_config("root", "out");
    cfg.lr = 0.0;
    EXPECT_THROW(validate(cfg), ConfigError);
    cfg = tiny_train_config("root", "out");
    cfg.dataset_root.clear();
    EXPECT_THROW(validate(cfg), ConfigError);
    cfg = tiny_train_config("root", "out");
    cfg.frame_stride = 0;
    EXPECT_THROW(validate(cfg), ConfigError);
}

TEST_F(TrainTest, RejectsClassCountMismatch) {
    const std::string root = build_tiny_dataset(1, 4);
    TrainConfig cfg = tiny_train_config(root, "out");
    cfg.model.num_classes = 3;
    EXPECT_THROW(train(cfg), ConfigError);
}

TEST_F(TrainTest, LossCurveIsReproducible) {
    const std::string root = build_tiny_dataset();
    const TrainResult a = train(tiny_train_config(root, "out_a"));
    const TrainResult b = train(tiny_train_config(root, "out_b"));
    ASSERT_EQ(a.losses.size(), 8u);
    ASSERT_EQ(b.losses.size(), 8u);
    for (size_t i = 0; i < a.losses.size(); ++i)
        EXPECT_LE(std::abs(a.losses[i] - b.losses[i]), 1e-10) << "iteration " << i;
}

TEST_F(TrainTest, WritesLogAndCheckpoint) {
    const std::string root = build_tiny_dataset();
    const TrainConfig cfg = tiny_train_config(root, "out");
    const TrainResult res = train(cfg);
    EXPECT_TRUE(fs::exists(res.checkpoint_path));
    EXPECT_TRUE(fs::exists(res.log_path));
    EXPECT_EQ(count_lines(res.log_path), 1 + cfg.iters);  // header + one row per iter

    std::ifstream log(res.log_path);
    std::string header;
    std::getline(log, header);
    EXPECT_EQ(header, "iter,loss,lr");
}

TEST_F(TrainTest, LossFallsWhenOverfittingOneClip) {
    const std::string root = build_tiny_dataset(1, 4);
    TrainConfig cfg = tiny_train_config(root, "out");
    cfg.iters = 60;
    cfg.lr = 2e-3;
    cfg.augment.hflip = false;
    cfg.augment.gamma_jitter = 0.0;
    cfg.augment.gain_jitter = 0.0;
    const TrainResult res = train(cfg);
    double head = 0.0, tail = 0.0;
    for (int i = 0; i < 10; ++i) {
        head += res.losses[static_cast<size_t>(i)] / 10.0;
        tail += res.losses[res.losses.size() - 1 - static_cast<size_t>(i)] / 10.0;
    }
    EXPECT_LT(tail, head);
}

TEST_F(TrainTest, CheckpointRoundTripRestoresTheExactModel) {
    const std::string root = build_tiny_dataset();
    const TrainConfig cfg = tiny_train_config(root, "out");
    SegModel trained;
    const TrainResult res = train(cfg, trained);

    SegModel restored;
    Rng other_init(999);  // different init; loading must overwrite all of it
    restored.init(cfg.model, other_init);
    const nlohmann::json meta = load_model(res.checkpoint_path, restored);
    EXPECT_EQ(meta.at("iters").get<int>(), cfg.iters);
    EXPECT_EQ(meta.at("seed").get<uint64_t>(), cfg.seed);

    ParamRegistry ra, rb;
    trained.register_params(ra, "net");
    restored.register_params(rb, "net");
    ASSERT_EQ(ra.items.size(), rb.items.size());
    for (size_t i = 0; i < ra.items.size(); ++i) {
        EXPECT_EQ(ra.items[i].first, rb.items[i].first);
        EXPECT_EQ(max_abs_diff(ra.items[i].second->value, rb.items[i].second->value), 0.0);
    }

    // Same weights, same input, same logits.
    const LoadedClip clip = load_clip(root, "val", 0);
    const Sample s = make_sample(clip, 3, cfg.model.frames, cfg.frame_stride);
    SegModel::Ctx ca, cb;
    const Tensor ya = trained.forward(s.images, s.events, ca);
    const Tensor yb = restored.forward(s.images, s.events, cb);
    EXPECT_EQ(max_abs_diff(ya, yb), 0.0);
}

TEST_F(TrainTest, LoadRejectsAModelOfDifferentShape) {
    const std::string root = build_tiny_dataset();
    const TrainConfig cfg = tiny_train_config(root, "out");
    const TrainResult res = train(cfg);

    ModelConfig other = cfg.model;
    other.feat_width = 3;
    SegModel wrong;
    Rng rng(1);
    wrong.init(other, rng);
    EXPECT_THROW(load_model(res.checkpoint_path, wrong), ShapeError);
}

TEST_F(TrainTest, DivergenceAbortsWithDiagnostics) {
    const std::string root = build_tiny_dataset(1, 4);
    TrainConfig cfg = tiny_train_config(root, "out");
    cfg.iters = 5;
    cfg.lr = 1e300;  // guarantees overflow after the first update
    EXPECT_THROW(train(cfg), NumericError);
    EXPECT_TRUE(fs::exists(path("out") + "/nan_dump.txt"));
}

TEST_F(TrainTest, StagedEvaluationMatchesTheFullModel) {
    // 10-frame clips: long enough for 8-frame windows, too short for 16;
    // the pooled score must agree in both regimes.
    const std::string root = build_tiny_dataset(2, 10);
    TrainConfig cfg = tiny_train_config(root, "out");
    SegModel model;
    Rng rng(17);
    model.init(cfg.model, rng);

    const EvalResult staged = evaluate(model, root, "val", cfg.frame_stride);

    // Reference: run the monolithic forward per frame.
    const DatasetInfo info = read_manifest(root);
    ConfusionMatrix confusion(info.num_classes);
    MeanVc mvc8;
    MeanVc mvc16;
    mvc16.window_len = 16;
    for (int ci = 0; ci < info.val_clips; ++ci) {
        const LoadedClip clip = load_clip(root, "val", ci);
        std::vector<IntImage> preds;
        for (int t = 0; t < info.frames; ++t) {
            const Sample s = make_sample(clip, t, cfg.model.frames, cfg.frame_stride);
            SegModel::Ctx ctx;
            preds.push_back(predict_mask(model.forward(s.images, s.events, ctx)));
            confusion.update(clip.masks[static_cast<size_t>(t)], preds.back());
        }
        mvc8.add_clip(clip.masks, preds);
        mvc16.add_clip(clip.masks, preds);
    }

    EXPECT_EQ(staged.confusion.counts, confusion.counts);
    EXPECT_DOUBLE_EQ(staged.mean_iou, confusion.mean_iou());
    EXPECT_DOUBLE_EQ(staged.weighted_iou, confusion.weighted_iou());
    EXPECT_FALSE(std::isnan(staged.mvc8));
    EXPECT_DOUBLE_EQ(staged.mvc8, mvc8.mean());
    EXPECT_TRUE(std::isnan(staged.mvc16));
    EXPECT_TRUE(std::isnan(mvc16.mean()));
    EXPECT_EQ(staged.params, model.param_count());
    EXPECT_EQ(staged.flops, model.flops(info.height, info.width));
    EXPECT_GT(staged.params, 0);
    EXPECT_GT(staged.flops, 0);
}
