// Byte-level language modeling lab: SHA-RNN / SHAQ training, evaluation,
// ablation grids, and gradient checking.

#include <CLI11.hpp>

#include <iostream>

#include "shaqlab/gradcheck.hpp"
#include "shaqlab/harness.hpp"

using namespace shaqlab;

namespace {

struct CliOptions {
    std::string corpus, config_file, out_dir = "out", tag = "exp";
    std::string checkpoint, split = "test";
    int64_t epochs = 5, d_model = 256, blocks = 2, qrnn_w = 2, boom_inner = 0;
    int64_t batch = 16, window = 256, cache_cap = 0;
    std::string cell = "qrnn", attn = "ungated", ff = "none", optimizer = "lamb";
    std::string attn_layers = "last";
    double lr = 2e-3, clip = 0.25, dropout = -1.0;
    uint64_t seed = 42;
};

std::vector<int64_t> parse_attn_layers(const std::string& s, int64_t n_blocks) {
    if (s == "none" || s.empty()) return {};
    if (s == "last") return {n_blocks};
    std::vector<int64_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stoll(item));
    }
    return out;
}

// Flat key = value file, keys matching the flag names; flags override file.
std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = value;
    }
    return kv;
}

// CLI flags that were not given explicitly fall back to config-file values.
void merge_config_file(CLI::App* cmd, CliOptions& o) {
    if (o.config_file.empty()) return;
    const auto kv = read_config_file(o.config_file);
    auto get = [&](const char* key, auto& dst, const char* flag) {
        auto it = kv.find(key);
        if (it == kv.end()) return;
        const auto* opt = cmd->get_option_no_throw(flag);
        if (opt && opt->count() > 0) return;  // flag wins
        std::istringstream is(it->second);
        is >> dst;
    };
    get("corpus", o.corpus, "--corpus");
    get("epochs", o.epochs, "--epochs");
    get("d-model", o.d_model, "--d-model");
    get("blocks", o.blocks, "--blocks");
    get("cell", o.cell, "--cell");
    get("qrnn-w", o.qrnn_w, "--qrnn-w");
    get("attn-layers", o.attn_layers, "--attn-layers");
    get("attn", o.attn, "--attn");
    get("ff", o.ff, "--ff");
    get("boom-inner", o.boom_inner, "--boom-inner");
    get("optimizer", o.optimizer, "--optimizer");
    get("lr", o.lr, "--lr");
    get("seed", o.seed, "--seed");
    get("out", o.out_dir, "--out");
    get("batch", o.batch, "--batch");
    get("window", o.window, "--window");
    get("cache-cap", o.cache_cap, "--cache-cap");
    get("clip", o.clip, "--clip");
    get("dropout", o.dropout, "--dropout");
    get("tag", o.tag, "--tag");
}

ExperimentSpec build_spec(const CliOptions& o) {
    ExperimentSpec spec;
    spec.model.d_model = o.d_model;
    spec.model.n_blocks = o.blocks;
    spec.model.cell = cell_from_string(o.cell);
    spec.model.qrnn_window = o.qrnn_w;
    spec.model.attn_layers = parse_attn_layers(o.attn_layers, o.blocks);
    spec.model.attn = attn_from_string(o.attn);
    spec.model.ff = ff_from_string(o.ff);
    spec.model.boom_inner = o.boom_inner;
    spec.model.window = o.window;
    spec.model.cache_cap = o.cache_cap;
    if (o.dropout >= 0) {
        spec.model.drop_cell = spec.model.drop_attn_w = o.dropout;
        spec.model.drop_attn_out = spec.model.drop_ff = o.dropout;
    }
    spec.optim.kind = o.optimizer == "adam" ? OptimizerKind::Adam : OptimizerKind::Lamb;
    spec.optim.lr = o.lr;
    spec.schedule.target = o.lr;
    spec.clip_norm = o.clip;
    spec.plan.batch = o.batch;
    spec.plan.center = o.window;
    spec.epochs = o.epochs;
    spec.seed = o.seed;
    spec.corpus_path = o.corpus;
    spec.out_dir = o.out_dir;
    spec.tag = o.tag;
    return spec;
}

void add_common_flags(CLI::App* cmd, CliOptions& o) {
    cmd->add_option("--corpus", o.corpus, "raw byte corpus (enwik8-compatible)");
    cmd->add_option("--config", o.config_file, "flat key = value config file");
    cmd->add_option("--epochs", o.epochs);
    cmd->add_option("--d-model", o.d_model);
    cmd->add_option("--blocks", o.blocks);
    cmd->add_option("--cell", o.cell)->check(CLI::IsMember({"lstm", "qrnn"}));
    cmd->add_option("--qrnn-w", o.qrnn_w, "qrnn window width");
    cmd->add_option("--attn-layers", o.attn_layers, "comma list of 1-based blocks, 'last' or 'none'");
    cmd->add_option("--attn", o.attn)->check(CLI::IsMember({"gated", "ungated", "mean"}));
    cmd->add_option("--ff", o.ff)->check(CLI::IsMember({"boom", "fc", "none"}));
    cmd->add_option("--boom-inner", o.boom_inner, "feed-forward inner dim (0 = 4*d-model)");
    cmd->add_option("--optimizer", o.optimizer)->check(CLI::IsMember({"lamb", "adam"}));
    cmd->add_option("--lr", o.lr);
    cmd->add_option("--seed", o.seed);
    cmd->add_option("--out", o.out_dir);
    cmd->add_option("--batch", o.batch);
    cmd->add_option("--window", o.window, "training window length center L_c");
    cmd->add_option("--cache-cap", o.cache_cap, "attention memory cap (0 = 5000 - window)");
    cmd->add_option("--clip", o.clip, "gradient clip norm");
    cmd->add_option("--dropout", o.dropout, "override all dropout sites");
    cmd->add_option("--tag", o.tag, "experiment tag");
}

int run_train(const CliOptions& o) {
    auto spec = build_spec(o);
    std::cout << "training " << spec.tag << " (" << param_count(spec.model).total
              << " params) on " << spec.corpus_path << "\n";
    auto result = train<float>(spec);
    for (const auto& r : result.records) {
        std::cout << "epoch " << r.epoch << "  train " << r.train_loss << "  valid " << r.valid_loss
                  << "  bpc " << r.valid_bpc << "  " << r.seconds << "s\n";
    }
    if (result.aborted) {
        std::cout << "aborted: " << result.abort_reason << "\n";
        return 1;
    }
    if (std::isfinite(result.test_bpc)) {
        std::cout << "test loss " << result.test_loss << "  test bpc " << result.test_bpc << "\n";
    }
    std::cout << "best valid bpc " << result.best_valid_bpc << " (epoch " << result.best_epoch
              << ")\ncheckpoint: " << result.best_checkpoint << "\nmetrics: " << result.metrics_csv
              << "\n";
    return 0;
}

int run_eval(const CliOptions& o) {
    if (o.checkpoint.empty()) throw std::runtime_error("eval: --checkpoint required");
    Checkpoint ck = read_checkpoint(o.checkpoint);
    ModelConfig cfg = config_from_json(ck.meta.at("config"));
    Model<float> model(cfg, o.seed);
    load_model_params(model, ck);
    CorpusSplits corpus = load_corpus(o.corpus, o.batch);
    const std::vector<uint8_t>& split = o.split == "train"   ? corpus.train
                                        : o.split == "valid" ? corpus.valid
                                                             : corpus.test;
    BatchPlan plan;
    plan.batch = o.batch;
    plan.center = cfg.window;
    auto [loss, bpc] = evaluate(model, split, plan);
    std::cout << o.split << " loss " << loss << " nats/char, bpc " << bpc << "\n";
    return 0;
}

int run_grid(const CliOptions& o) {
    auto base = build_spec(o);
    auto specs = attention_placement_grid(base);
    std::cout << "running " << specs.size() << " experiments sequentially\n";
    auto report = run_grid<float>(specs, o.out_dir);
    int failures = 0;
    for (const auto& row : report.rows) {
        if (row.failed) {
            ++failures;
            std::cout << row.spec.tag << ": FAILED (" << row.error << ")\n";
        } else {
            std::cout << row.spec.tag << ": params " << row.result.params << ", test bpc "
                      << row.result.test_bpc << "\n";
        }
    }
    std::cout << "report: " << report.csv_path << "\n";
    return failures == 0 ? 0 : 1;
}

// 64-bit finite-difference suite over every layer kind and both block
// wirings at toy dims.
int run_gradcheck(uint64_t seed) {
    struct Row {
        std::string name;
        double err;
    };
    std::vector<Row> rows;
    std::mt19937_64 rng(seed);

    auto check_model = [&](const char* name, ModelConfig cfg) {
        cfg.drop_cell = cfg.drop_attn_w = cfg.drop_attn_out = cfg.drop_ff = 0.0;
        cfg.window = 5;
        cfg.cache_cap = 16;
        Model<double> m(cfg, seed);
        Tensor<int32_t> ids({5, 2});
        for (int64_t i = 0; i < ids.numel(); ++i) ids[i] = int32_t(rng() % 256);
        auto st = m.initial_state(2);
        auto warm = m.forward(ids, st, false);  // populate caches and states
        std::vector<Var<double>> params;
        for (auto& p : m.parameters()) params.push_back(p.var);
        auto fn = [&] {
            auto [logits, ns] = m.forward(ids, warm.second, false);
            return cross_entropy_logits(logits, ids.reshaped({ids.numel()}));
        };
        rows.push_back({name, finite_diff_check<double>(fn, params, 1e-5, 8, seed)});
    };

    ModelConfig sharnn;
    sharnn.d_model = 8;
    sharnn.n_blocks = 2;
    sharnn.cell = CellKind::Lstm;
    sharnn.attn_layers = {2};
    sharnn.attn = AttnChoice::Gated;
    sharnn.ff = FeedForwardKind::Boom;
    check_model("sha-rnn block stack", sharnn);

    ModelConfig shaq = sharnn;
    shaq.cell = CellKind::Qrnn;
    shaq.attn = AttnChoice::Ungated;
    shaq.ff = FeedForwardKind::None;
    check_model("shaq block stack", shaq);

    ModelConfig mean = sharnn;
    mean.attn = AttnChoice::Mean;
    mean.ff = FeedForwardKind::Fc;
    check_model("mean-attention + fc", mean);

    bool ok = true;
    for (const auto& r : rows) {
        const bool pass = r.err < 1e-4;
        ok = ok && pass;
        std::cout << (pass ? "  ok  " : " FAIL ") << r.name << ": max rel err " << r.err << "\n";
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"byte-level SHA-RNN / SHAQ language modeling lab"};
    app.require_subcommand(1);
    CliOptions o;

    auto* train_cmd = app.add_subcommand("train", "train one model");
    add_common_flags(train_cmd, o);
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a corpus split");
    add_common_flags(eval_cmd, o);
    eval_cmd->add_option("--checkpoint", o.checkpoint, "model checkpoint path");
    eval_cmd->add_option("--split", o.split)->check(CLI::IsMember({"train", "valid", "test"}));
    auto* grid_cmd = app.add_subcommand("grid", "run the attention-placement ablation grid");
    add_common_flags(grid_cmd, o);
    auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference gradient suite (64-bit)");
    gc_cmd->add_option("--seed", o.seed);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) {
            merge_config_file(train_cmd, o);
            if (o.corpus.empty()) throw std::runtime_error("train: --corpus required");
            return run_train(o);
        }
        if (eval_cmd->parsed()) {
            merge_config_file(eval_cmd, o);
            if (o.corpus.empty()) throw std::runtime_error("eval: --corpus required");
            return run_eval(o);
        }
        if (grid_cmd->parsed()) {
            merge_config_file(grid_cmd, o);
            if (o.corpus.empty()) throw std::runtime_error("grid: --corpus required");
            return run_grid(o);
        }
        if (gc_cmd->parsed()) return run_gradcheck(o.seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
