#include "evseg/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "evseg/loss.hpp"

namespace evseg {

namespace {

// Frame index feeding stack slot k for the sample centered on frame t.
int stack_source(int t, int k, int stride) { return std::max(0, t - k * stride); }

void dump_diagnostics(const std::string& path, int iter, double loss_main, double loss_aux,
                      double lr, const ParamRegistry& reg) {
    std::ofstream out(path);
    out << "non-finite loss at iteration " << iter << "\n";
    out << "main " << loss_main << " aux " << loss_aux << " lr " << lr << "\n";
    out << "name max|value| max|grad|\n";
    for (const auto& [name, p] : reg.items) {
        double mv = 0.0, mg = 0.0;
        for (int64_t i = 0; i < p->value.size(); ++i) {
            mv = std::max(mv, std::abs(p->value[i]));
            mg = std::max(mg, std::abs(p->grad[i]));
        }
        out << name << " " << mv << " " << mg << "\n";
    }
}

}  // namespace

void validate(const TrainConfig& cfg) {
    validate(cfg.model);
    check_config(!cfg.dataset_root.empty(), "train: dataset_root required");
    check_config(!cfg.out_dir.empty(), "train: out_dir required");
    check_config(cfg.iters > 0, "train: iters must be positive");
    check_config(cfg.lr > 0.0, "train: learning rate must be positive");
    check_config(cfg.poly_power >= 0.0, "train: poly power must be non-negative");
    check_config(cfg.weight_decay >= 0.0, "train: weight decay must be non-negative");
    check_config(cfg.frame_stride >= 1, "train: frame stride must be at least 1");
    check_config(cfg.log_every >= 1, "train: log_every must be at least 1");
}

TrainResult train(const TrainConfig& cfg, SegModel& model) {
    validate(cfg);
    const DatasetInfo info = read_manifest(cfg.dataset_root);
    check_config(info.num_classes == cfg.model.num_classes,
                 "train: model classes do not match the dataset");
    std::filesystem::create_directories(cfg.out_dir);

    std::vector<LoadedClip> clips;
    for (int i = 0; i < info.train_clips; ++i)
        clips.push_back(load_clip(cfg.dataset_root, "train", i));

    Rng init_rng = Rng(cfg.seed).derive("init");
    model.init(cfg.model, init_rng);
    ParamRegistry reg;
    model.register_params(reg, "net");

    AdamW opt;
    opt.weight_decay = cfg.weight_decay;
    opt.init(reg);

    TrainResult res;
    res.log_path = cfg.out_dir + "/train_log.csv";
    res.checkpoint_path = cfg.out_dir + "/model_final.ckpt";
    std::ofstream log(res.log_path);
    check_data(log.good(), "cannot write " + res.log_path);
    log << "iter,loss,lr\n";

    Rng data_rng = Rng(cfg.seed).derive("data");
    for (int it = 0; it < cfg.iters; ++it) {
        const int clip_idx = static_cast<int>(data_rng.uniform_int(info.train_clips));
        const int t = static_cast<int>(data_rng.uniform_int(info.frames));
        Sample sample = make_sample(clips[static_cast<size_t>(clip_idx)], t, cfg.model.frames,
                                    cfg.frame_stride);
        augment_sample(sample, cfg.augment, data_rng);

        reg.zero_grads();
        SegModel::Ctx ctx;
        const Tensor logits = model.forward(sample.images, sample.events, ctx);
        Tensor g_main;
        const XentResult main = softmax_xent(logits, sample.mask, 255, g_main);
        double loss = main.loss;
        double aux_loss = 0.0;
        Tensor g_aux;
        if (cfg.model.aux_head) {
            const XentResult aux = softmax_xent(ctx.aux_out, sample.mask, 255, g_aux);
            aux_loss = aux.loss;
            loss += cfg.model.aux_weight * aux.loss;
            g_aux.scale_(cfg.model.aux_weight);
        }
        const double lr = poly_lr(cfg.lr, it, cfg.iters, cfg.poly_power);
        if (!std::isfinite(loss)) {
            dump_diagnostics(cfg.out_dir + "/nan_dump.txt", it, main.loss, aux_loss, lr, reg);
            throw NumericError("training diverged at iteration " + std::to_string(it) +
                               "; diagnostics in " + cfg.out_dir + "/nan_dump.txt");
        }
        model.backward(g_main, g_aux, ctx);
        opt.step(reg, lr);

        res.losses.push_back(loss);
        log << it << "," << loss << "," << lr << "\n";
        if ((it + 1) % cfg.log_every == 0) log.flush();
    }

    nlohmann::json meta;
    meta["iters"] = cfg.iters;
    meta["seed"] = cfg.seed;
    meta["arrangement"] = arrangement_name(cfg.model.arrangement);
    meta["final_loss"] = res.losses.empty() ? 0.0 : res.losses.back();
    save_model(res.checkpoint_path, model, meta);
    return res;
}

TrainResult train(const TrainConfig& cfg) {
    SegModel model;
    return train(cfg, model);
}

void save_model(const std::string& path, SegModel& model, const nlohmann::json& meta) {
    ParamRegistry reg;
    model.register_params(reg, "net");
    std::vector<std::pair<std::string, const Tensor*>> tensors;
    for (const auto& [name, p] : reg.items) tensors.emplace_back(name, &p->value);
    save_tensors(path, tensors, meta);
}

nlohmann::json load_model(const std::string& path, SegModel& model) {
    ParamRegistry reg;
    model.register_params(reg, "net");
    TensorArchive archive = load_tensors(path);
    for (auto& [name, p] : reg.items) {
        const auto it = archive.tensors.find(name);
        check_data(it != archive.tensors.end(), "checkpoint is missing " + name);
        check_shape(it->second.shape == p->value.shape,
                    "checkpoint shape mismatch for " + name);
        p->value = it->second;
    }
    check_data(archive.tensors.size() == reg.items.size(),
               "checkpoint holds parameters the model does not have");
    return archive.meta;
}

EvalResult evaluate(SegModel& model, const std::string& root, const std::string& split,
                    int frame_stride) {
    check_config(frame_stride >= 1, "evaluate: frame stride must be at least 1");
    const DatasetInfo info = read_manifest(root);
    check_config(split == "train" || split == "val", "evaluate: unknown split " + split);
    const int n_clips = split == "train" ? info.train_clips : info.val_clips;
    const int t_frames = model.cfg.frames;

    EvalResult res;
    res.confusion = ConfusionMatrix(info.num_classes);
    MeanVc mvc8;
    MeanVc mvc16;
    mvc16.window_len = 16;

    for (int ci = 0; ci < n_clips; ++ci) {
        const LoadedClip clip = load_clip(root, split, ci);

        // Per-frame features, each computed once.
        std::vector<Tensor> f_img(clip.frames.size());
        std::vector<Tensor> f_evt(clip.events.size());
        for (size_t t = 0; t < clip.frames.size(); ++t) {
            PyramidEncoder::Ctx ic, ec;
            f_img[t] = model.image_encoder.forward(clip.frames[t], ic);
            f_evt[t] = model.motion.event_encoder.forward(clip.events[t], ec);
        }
        const int h4 = f_img[0].dim(0), w4 = f_img[0].dim(1);
        const int c = f_img[0].dim(2);

        std::vector<IntImage> preds;
        for (int t = 0; t < info.frames; ++t) {
            Tensor f_e({t_frames, h4, w4, c});
            for (int k = 0; k < t_frames; ++k) {
                const Tensor& src = f_evt[static_cast<size_t>(stack_source(t, k, frame_stride))];
                std::copy(src.v.begin(), src.v.end(), f_e.v.begin() + k * src.size());
            }
            MotionExtraction::BlockCtx bc;
            MotionExtraction::FuseCtx fc;
            const Tensor f_m_block = model.motion.temporal_conv_block(f_e, bc);
            const Tensor f_m = model.motion.fuse_motion(f_e, f_m_block, fc);

            Tensor fused({t_frames, h4, w4, c});
            for (int k = 0; k < t_frames; ++k) {
                MotionFusion::Ctx mfc;
                const Tensor fk =
                    model.fusion.forward(f_img[static_cast<size_t>(stack_source(t, k, frame_stride))],
                                         slice_frame(f_m, k), mfc);
                std::copy(fk.v.begin(), fk.v.end(), fused.v.begin() + k * fk.size());
            }
            TemporalDecoder::Ctx dc;
            const Tensor logits = model.decoder.forward(fused, dc);
            preds.push_back(predict_mask(logits));
            res.confusion.update(clip.masks[static_cast<size_t>(t)], preds.back());
        }
        mvc8.add_clip(clip.masks, preds);
        mvc16.add_clip(clip.masks, preds);
    }

    res.mean_iou = res.confusion.mean_iou();
    res.weighted_iou = res.confusion.weighted_iou();
    res.mvc8 = mvc8.mean();
    res.mvc16 = mvc16.mean();
    res.params = model.param_count();
    res.flops = model.flops(info.height, info.width);
    return res;
}

}  // namespace evseg
