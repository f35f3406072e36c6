#pragma once

#include <chrono>
#include <filesystem>
#include <limits>
#include <sstream>

#include "shaqlab/checkpoint.hpp"
#include "shaqlab/data.hpp"
#include "shaqlab/optim.hpp"
#include "shaqlab/svg.hpp"

namespace shaqlab {

inline double bpc_from_nats(double loss) {
    if (loss < 0) throw std::invalid_argument("bpc_from_nats: negative loss " + std::to_string(loss));
    return loss / std::log(2.0);
}

struct ExperimentSpec {
    ModelConfig model;
    OptimizerConfig optim;
    LrSchedule schedule;
    double clip_norm = 0.25;
    BatchPlan plan;
    int64_t epochs = 5;
    uint64_t seed = 42;
    std::string corpus_path;
    std::string out_dir = "out";
    std::string tag = "exp";
    std::string resume_from;  // optional checkpoint to continue from
};

inline json spec_to_json(const ExperimentSpec& s) {
    return json{{"model", config_to_json(s.model)},
                {"optimizer", s.optim.kind == OptimizerKind::Lamb ? "lamb" : "adam"},
                {"lr", s.optim.lr},
                {"beta1", s.optim.beta1},
                {"beta2", s.optim.beta2},
                {"eps", s.optim.eps},
                {"weight_decay", s.optim.weight_decay},
                {"clamp_lo", s.optim.clamp_lo},
                {"clamp_hi", s.optim.clamp_hi},
                {"warmup_steps", s.schedule.warmup_steps},
                {"clip_norm", s.clip_norm},
                {"batch", s.plan.batch},
                {"window_center", s.plan.center},
                {"epochs", s.epochs},
                {"seed", s.seed},
                {"corpus", s.corpus_path},
                {"tag", s.tag}};
}

inline uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string spec_hash(const ExperimentSpec& s) {
    std::ostringstream os;
    os << std::hex << fnv1a64(spec_to_json(s).dump());
    return os.str();
}

// bpc = loss / ln 2 exactly as recorded.
struct MetricsRecord {
    int64_t epoch = 0;
    double train_loss = 0;  // nats per character
    double valid_loss = 0;
    double valid_bpc = 0;
    double seconds = 0;  // epoch body wall-clock, ms resolution
    double cumulative_hours = 0;
    int64_t params = 0;
};

// Single deterministic pass over a whole split: fixed window length, state
// carried across windows, dropout off.
template <typename T>
std::pair<double, double> evaluate(Model<T>& model, const std::vector<uint8_t>& split,
                                   const BatchPlan& plan) {
    if (split.size() < size_t(plan.batch) + 1) {
        throw std::runtime_error("evaluate: split of " + std::to_string(split.size()) +
                                 " bytes cannot fill batch " + std::to_string(plan.batch));
    }
    Tracks tracks = batchify(split, plan.batch);
    ForwardState<T> state = model.initial_state(plan.batch);
    int64_t cursor = 0;
    double total_loss = 0;
    int64_t total_positions = 0;
    while (auto w = next_eval_window(tracks, plan.center, cursor)) {
        auto [logits, next_state] = model.forward(w->inputs, state, /*train=*/false);
        const int64_t positions = w->targets.numel();
        auto loss = cross_entropy_logits(logits, w->targets.reshaped({positions}));
        total_loss += double(loss->value[0]) * double(positions);
        total_positions += positions;
        state = std::move(next_state);
    }
    const double mean_loss = total_loss / double(total_positions);
    return {mean_loss, bpc_from_nats(mean_loss)};
}

struct TrainResult {
    std::vector<MetricsRecord> records;
    int64_t params = 0;
    double best_valid_bpc = std::numeric_limits<double>::infinity();
    int64_t best_epoch = -1;
    double test_loss = std::numeric_limits<double>::quiet_NaN();
    double test_bpc = std::numeric_limits<double>::quiet_NaN();
    bool aborted = false;
    std::string abort_reason;
    std::string best_checkpoint, last_checkpoint, metrics_csv;
};

namespace detail_harness {

inline uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    uint64_t h = seed ^ (salt * 0x9E3779B97F4A7C15ull);
    h ^= h >> 33;
    h *= 0xFF51AFD7ED558CCDull;
    h ^= h >> 33;
    return h;
}

template <typename T>
void save_state_checkpoint(const std::string& path, const Model<T>& model,
                           const Optimizer<T>& opt, int64_t completed_epoch,
                           const std::string& rng_state) {
    json meta;
    meta["config"] = config_to_json(model.config());
    meta["epoch"] = completed_epoch;
    meta["optimizer_t"] = opt.step_count();
    meta["rng_dropout"] = rng_state;
    std::vector<std::pair<std::string, Tensor<T>>> tensors;
    for (const auto& p : model.parameters()) tensors.emplace_back(p.name, p.var->value);
    write_checkpoint(path, meta, tensors, opt.named_state());
}

}  // namespace detail_harness

// Per-epoch loop: windows -> forward -> loss -> backward -> clip -> step,
// with states and caches detached between windows. Emits a MetricsRecord per
// epoch and checkpoints on best validation bpc. Wall-clock covers the epoch
// body only (no evaluation, no I/O).
template <typename T = float>
TrainResult train(const ExperimentSpec& spec_in) {
    namespace fs = std::filesystem;
    ExperimentSpec spec = spec_in;
    spec.model.window = spec.plan.center;  // cache cap follows the training window
    spec.model.validate();

    CorpusSplits corpus = load_corpus(spec.corpus_path, spec.plan.batch);
    Tracks train_tracks = batchify(corpus.train, spec.plan.batch);

    fs::create_directories(spec.out_dir);
    fs::create_directories(spec.out_dir + "/checkpoints");

    Model<T> model(spec.model, spec.seed);
    Optimizer<T> opt(model.parameters(), spec.optim);

    TrainResult result;
    result.params = model.total_params();
    result.metrics_csv = spec.out_dir + "/metrics.csv";
    result.best_checkpoint = spec.out_dir + "/checkpoints/best.ckpt";
    result.last_checkpoint = spec.out_dir + "/checkpoints/last.ckpt";

    int64_t start_epoch = 0;
    if (!spec.resume_from.empty()) {
        Checkpoint ck = read_checkpoint(spec.resume_from);
        load_model_params(model, ck);
        std::vector<std::pair<std::string, Tensor<double>>> moments;
        for (const auto& [name, t] : ck.f64) {
            if (name.rfind("optim.", 0) == 0) moments.emplace_back(name, t);
        }
        opt.load_state(moments, ck.meta.at("optimizer_t").get<int64_t>());
        std::istringstream rs(ck.meta.at("rng_dropout").get<std::string>());
        rs >> model.dropout_rng();
        start_epoch = ck.meta.at("epoch").get<int64_t>() + 1;
    }

    {
        std::ofstream meta(spec.out_dir + "/spec.json", std::ios::trunc);
        json j = spec_to_json(spec);
        j["spec_hash"] = spec_hash(spec);
        j["params"] = result.params;
        j["timing_note"] = "epoch seconds cover the training loop only; evaluation and I/O excluded";
        meta << j.dump(2) << "\n";
    }

    const bool fresh_csv = !fs::exists(result.metrics_csv) || start_epoch == 0;
    std::ofstream csv(result.metrics_csv, fresh_csv ? std::ios::trunc : std::ios::app);
    if (fresh_csv) csv << "epoch,train_loss,valid_loss,valid_bpc,seconds,params\n";
    csv.flush();

    int64_t global_step = opt.step_count();
    double cumulative_seconds = 0;
    for (const auto& r : result.records) cumulative_seconds += r.seconds;

    for (int64_t epoch = start_epoch; epoch < spec.epochs; ++epoch) {
        std::mt19937_64 batch_rng(detail_harness::mix_seed(spec.seed, uint64_t(epoch) + 1));
        ForwardState<T> state = model.initial_state(spec.plan.batch);
        int64_t cursor = 0;
        double epoch_loss = 0;
        int64_t epoch_positions = 0;

        const auto t0 = std::chrono::steady_clock::now();
        while (auto w = next_window(train_tracks, spec.plan, cursor, batch_rng)) {
            auto [logits, next_state] = model.forward(w->inputs, state, /*train=*/true);
            const int64_t positions = w->targets.numel();
            auto loss = cross_entropy_logits(logits, w->targets.reshaped({positions}));
            const double loss_v = double(loss->value[0]);
            if (!std::isfinite(loss_v)) {
                result.aborted = true;
                result.abort_reason = "non-finite loss at epoch " + std::to_string(epoch);
                break;
            }
            backward(loss);
            clip_grad_norm(model.parameters(), spec.clip_norm);
            if (!opt.step(lr_at(spec.schedule, global_step))) {
                result.aborted = true;
                result.abort_reason = "non-finite gradient at epoch " + std::to_string(epoch);
                break;
            }
            opt.zero_grad();
            state = std::move(next_state);
            epoch_loss += loss_v * double(positions);
            epoch_positions += positions;
            ++global_step;
        }
        const auto t1 = std::chrono::steady_clock::now();
        if (result.aborted) break;

        const double seconds =
            double(std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count()) / 1000.0;
        cumulative_seconds += seconds;

        auto [valid_loss, valid_bpc] = evaluate(model, corpus.valid, spec.plan);
        MetricsRecord rec;
        rec.epoch = epoch;
        rec.train_loss = epoch_positions > 0 ? epoch_loss / double(epoch_positions) : 0.0;
        rec.valid_loss = valid_loss;
        rec.valid_bpc = valid_bpc;
        rec.seconds = seconds;
        rec.cumulative_hours = cumulative_seconds / 3600.0;
        rec.params = result.params;
        result.records.push_back(rec);

        csv << rec.epoch << "," << rec.train_loss << "," << rec.valid_loss << "," << rec.valid_bpc
            << "," << rec.seconds << "," << rec.params << "\n";
        csv.flush();

        std::ostringstream rng_state;
        rng_state << model.dropout_rng();
        detail_harness::save_state_checkpoint(result.last_checkpoint, model, opt, epoch,
                                              rng_state.str());
        if (valid_bpc < result.best_valid_bpc) {
            result.best_valid_bpc = valid_bpc;
            result.best_epoch = epoch;
            detail_harness::save_state_checkpoint(result.best_checkpoint, model, opt, epoch,
                                                  rng_state.str());
        }
    }

    if (!result.aborted && !corpus.test.empty() &&
        corpus.test.size() > size_t(spec.plan.batch)) {
        auto [test_loss, test_bpc] = evaluate(model, corpus.test, spec.plan);
        result.test_loss = test_loss;
        result.test_bpc = test_bpc;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Grid runner
// ---------------------------------------------------------------------------

struct GridRow {
    ExperimentSpec spec;
    TrainResult result;
    bool failed = false;
    std::string error;
};

struct GridReport {
    std::vector<GridRow> rows;
    std::string csv_path, json_path;
};

// Runs every spec sequentially (timing columns are only comparable within one
// sequential run on one machine) and emits the comparative report plus
// bpc-vs-epoch / bpc-vs-time curves.
template <typename T = float>
GridReport run_grid(std::vector<ExperimentSpec> specs, const std::string& out_dir) {
    namespace fs = std::filesystem;
    if (specs.empty()) throw std::invalid_argument("run_grid: no specs");
    fs::create_directories(out_dir);
    fs::create_directories(out_dir + "/curves");

    GridReport report;
    for (auto& spec : specs) {
        GridRow row;
        spec.out_dir = out_dir + "/" + spec.tag;
        row.spec = spec;
        try {
            row.result = train<T>(spec);
            if (row.result.aborted) {
                row.failed = true;
                row.error = row.result.abort_reason;
            }
        } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
        }
        report.rows.push_back(std::move(row));
    }

    // Table schema: Experiment | avg. Time/Epoch | Params | Loss | bpc (+ spec hash)
    report.csv_path = out_dir + "/report.csv";
    std::ofstream csv(report.csv_path, std::ios::trunc);
    csv << "experiment,avg_time_per_epoch_s,params,loss,bpc,spec_hash\n";
    json jrows = json::array();
    for (const auto& row : report.rows) {
        double avg_seconds = 0;
        for (const auto& r : row.result.records) avg_seconds += r.seconds;
        if (!row.result.records.empty()) avg_seconds /= double(row.result.records.size());
        const bool has_test = std::isfinite(row.result.test_bpc);
        const double loss = has_test ? row.result.test_loss
                                     : (row.result.records.empty() ? 0.0
                                                                   : row.result.records.back().valid_loss);
        const double bpc = has_test ? row.result.test_bpc
                                    : (row.result.records.empty() ? 0.0
                                                                  : row.result.records.back().valid_bpc);
        csv << row.spec.tag << "," << avg_seconds << "," << row.result.params << "," << loss << ","
            << bpc << "," << spec_hash(row.spec) << "\n";
        json jr = {{"experiment", row.spec.tag},
                   {"avg_time_per_epoch_s", avg_seconds},
                   {"params", row.result.params},
                   {"loss", loss},
                   {"bpc", bpc},
                   {"spec_hash", spec_hash(row.spec)},
                   {"failed", row.failed}};
        if (row.failed) jr["error"] = row.error;
        json curve = json::array();
        for (const auto& r : row.result.records) {
            curve.push_back({{"epoch", r.epoch},
                             {"train_loss", r.train_loss},
                             {"valid_loss", r.valid_loss},
                             {"valid_bpc", r.valid_bpc},
                             {"seconds", r.seconds},
                             {"cumulative_hours", r.cumulative_hours}});
        }
        jr["epochs"] = curve;
        jrows.push_back(jr);
    }
    csv.close();

    report.json_path = out_dir + "/report.json";
    {
        json j;
        j["rows"] = jrows;
        j["execution"] = "sequential, single machine; timings comparable within this report only";
        j["timing_note"] = "epoch seconds cover the training loop only; evaluation and I/O excluded";
        std::ofstream js(report.json_path, std::ios::trunc);
        js << j.dump(2) << "\n";
    }

    std::vector<Series> by_epoch, by_time;
    for (const auto& row : report.rows) {
        if (row.result.records.empty()) continue;
        Series se{row.spec.tag, {}}, st{row.spec.tag, {}};
        for (const auto& r : row.result.records) {
            se.points.emplace_back(double(r.epoch), r.valid_bpc);
            st.points.emplace_back(r.cumulative_hours, r.valid_bpc);
        }
        write_line_chart(out_dir + "/curves/" + row.spec.tag + "_bpc_vs_epoch.svg",
                         row.spec.tag + ": validation bpc vs epoch", "epoch", "valid bpc", {se});
        write_line_chart(out_dir + "/curves/" + row.spec.tag + "_bpc_vs_time.svg",
                         row.spec.tag + ": validation bpc vs time", "hours", "valid bpc", {st});
        by_epoch.push_back(std::move(se));
        by_time.push_back(std::move(st));
    }
    if (!by_epoch.empty()) {
        write_line_chart(out_dir + "/curves/all_bpc_vs_epoch.svg", "validation bpc vs epoch",
                         "epoch", "valid bpc", by_epoch);
        write_line_chart(out_dir + "/curves/all_bpc_vs_time.svg", "validation bpc vs time", "hours",
                         "valid bpc", by_time);
    }
    return report;
}

// The seven attention-placement rows: four 4-block placements, two stacked
// variants, and the single-head 2-block network.
inline std::vector<ExperimentSpec> attention_placement_grid(const ExperimentSpec& base) {
    struct RowDef {
        const char* tag;
        int64_t blocks;
        std::vector<int64_t> attn;
    };
    const std::vector<RowDef> defs = {
        {"L4_a1", 4, {1}},      {"L4_a2", 4, {2}},    {"L4_a3", 4, {3}}, {"L4_a4", 4, {4}},
        {"L3_a33", 3, {3, 3}},  {"L2_a22", 2, {2, 2}}, {"L2_a2", 2, {2}},
    };
    std::vector<ExperimentSpec> out;
    for (const auto& d : defs) {
        ExperimentSpec s = base;
        s.tag = d.tag;
        s.model.n_blocks = d.blocks;
        s.model.attn_layers = d.attn;
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace shaqlab
