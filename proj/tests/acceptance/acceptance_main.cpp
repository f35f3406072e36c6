// Acceptance suite: every release criterion runs end to end and prints one
// pass/fail line. Exit status is the number of failed criteria.

#include <chrono>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "../support/synthetic_corpus.hpp"
#include "shaqlab/gradcheck.hpp"
#include "shaqlab/harness.hpp"

using namespace shaqlab;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << "criterion " << id << ": " << name;
    if (!detail.empty()) std::cout << " -- " << detail;
    std::cout << std::endl;
    if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1, double hi = 1) {
    Tensor<double> t(std::move(shape));
    fill_uniform(t, rng, lo, hi);
    return t;
}

Tensor<int32_t> random_ids(int64_t l, int64_t b, uint64_t seed) {
    Tensor<int32_t> ids({l, b});
    std::mt19937_64 rng(seed);
    for (int64_t i = 0; i < ids.numel(); ++i) ids[i] = int32_t(rng() % 256);
    return ids;
}

// ---------------------------------------------------------------------------
// 1. gradient suite: < 1e-4 relative in 64-bit for every layer and both full
//    block stacks, five seeds each, under two minutes
// ---------------------------------------------------------------------------
void criterion_gradients() {
    const auto t0 = Clock::now();
    double worst = 0;
    std::string worst_name = "none";
    auto track = [&](const std::string& name, double err) {
        if (err > worst) {
            worst = err;
            worst_name = name;
        }
    };

    for (uint64_t seed = 1; seed <= 5; ++seed) {
        std::mt19937_64 rng(seed);

        {  // linear + gelu + layer norm + embedding + cross entropy
            auto w = make_leaf(random_tensor({6, 4}, rng));
            auto b = make_leaf(random_tensor({4}, rng));
            auto g = make_leaf(Tensor<double>::ones({4}));
            auto bt = make_leaf(random_tensor({4}, rng));
            auto emb = make_leaf(random_tensor({16, 6}, rng));
            Tensor<int32_t> ids({3, 2});
            for (int64_t i = 0; i < 6; ++i) ids[i] = int32_t(rng() % 16);
            Tensor<int32_t> tgt({6});
            for (int64_t i = 0; i < 6; ++i) tgt[i] = int32_t(rng() % 4);
            auto fn = [&] {
                return cross_entropy_logits(layer_norm(gelu(linear(embedding(emb, ids), w, b)), g, bt),
                                            tgt);
            };
            track("primitives", finite_diff_check<double>(fn, {w, b, g, bt, emb}, 1e-5, 12, seed));
        }
        {  // softmax path
            auto x = make_leaf(random_tensor({3, 5}, rng));
            auto fn = [&] { return sum(mul(softmax(x, -1), x)); };
            track("softmax", finite_diff_check<double>(fn, {x}, 1e-5, 15, seed));
        }
        {  // recurrent cells
            const int64_t t = 4, b = 2, d = 4;
            auto x = make_leaf(random_tensor({t, b, d}, rng));
            auto lstm = make_lstm_params<double>(d, d, rng);
            auto lstm_fn = [&] {
                auto [y, st] = lstm_forward(x, lstm_zero_state<double>(b, d), lstm);
                return sum(mul(y, y));
            };
            auto lp = lstm_param_list(lstm);
            lp.push_back(x);
            track("lstm", finite_diff_check<double>(lstm_fn, lp, 1e-5, 10, seed));

            auto qrnn = make_qrnn_params<double>(d, d, 2, rng);
            auto qrnn_fn = [&] {
                auto [y, st] = qrnn_forward(x, qrnn_zero_state<double>(b, d, d, 2), qrnn);
                return sum(mul(y, y));
            };
            auto qp = qrnn_param_list(qrnn);
            qp.push_back(x);
            track("qrnn", finite_diff_check<double>(qrnn_fn, qp, 1e-5, 10, seed));
        }
        {  // attention variants
            const int64_t p = 3, b = 2, d = 4;
            MemoryCache<double> cache;
            cache.cap = 8;
            cache = cache_update(cache, random_tensor({3, b, d}, rng));
            auto h = make_leaf(random_tensor({p, b, d}, rng));
            for (auto [mode, variant, name] :
                 {std::tuple{AttnGateMode::Gated, AttnVariant::FullMemory, "attention-gated"},
                  std::tuple{AttnGateMode::Ungated, AttnVariant::FullMemory, "attention-ungated"},
                  std::tuple{AttnGateMode::Gated, AttnVariant::MeanMemory, "attention-mean"}}) {
                auto params = make_attention_params<double>(d, mode, variant, true, rng, 0.0);
                if (params.qs) {
                    fill_uniform(params.qs->value, rng, -1.0, 1.0);
                    fill_uniform(params.ks->value, rng, -1.0, 1.0);
                    fill_uniform(params.vs->value, rng, -1.0, 1.0);
                }
                auto fn = [&] {
                    auto out = attend(h, cache, params, false, rng);
                    return sum(mul(out, out));
                };
                auto ps = attention_param_list(params);
                ps.push_back(h);
                track(name, finite_diff_check<double>(fn, ps, 1e-5, 8, seed));
            }
        }
        {  // feed-forward kinds
            auto x = make_leaf(random_tensor({4, 4}, rng));
            for (auto [kind, name] : {std::pair{FeedForwardKind::Boom, "boom"},
                                      std::pair{FeedForwardKind::Fc, "fc"}}) {
                auto p = make_feedforward_params<double>(kind, 4, 8, rng);
                auto fn = [&] {
                    auto y = feedforward(x, p);
                    return sum(mul(y, y));
                };
                auto ps = feedforward_param_list(p);
                ps.push_back(x);
                track(name, finite_diff_check<double>(fn, ps, 1e-5, 10, seed));
            }
        }
        {  // full block stacks
            for (auto kind : {BlockWiring::ShaRnn, BlockWiring::Shaq}) {
                ModelConfig cfg;
                cfg.d_model = 8;
                cfg.n_blocks = 2;
                cfg.window = 5;
                cfg.cache_cap = 16;
                cfg.drop_cell = cfg.drop_attn_w = cfg.drop_attn_out = cfg.drop_ff = 0.0;
                cfg.attn_layers = {2};
                if (kind == BlockWiring::ShaRnn) {
                    cfg.cell = CellKind::Lstm;
                    cfg.attn = AttnChoice::Gated;
                    cfg.ff = FeedForwardKind::Boom;
                } else {
                    cfg.cell = CellKind::Qrnn;
                    cfg.attn = AttnChoice::Ungated;
                    cfg.ff = FeedForwardKind::None;
                }
                Model<double> m(cfg, seed);
                auto ids = random_ids(4, 2, seed * 7 + 1);
                auto warm = m.forward(ids, m.initial_state(2), false);
                std::vector<Var<double>> params;
                for (auto& p : m.parameters()) params.push_back(p.var);
                auto fn = [&] {
                    auto [logits, ns] = m.forward(ids, warm.second, false);
                    return cross_entropy_logits(logits, ids.reshaped({ids.numel()}));
                };
                track(kind == BlockWiring::ShaRnn ? "sha-rnn-block" : "shaq-block",
                      finite_diff_check<double>(fn, params, 1e-5, 5, seed));
            }
        }
    }

    const double elapsed = seconds_since(t0);
    std::ostringstream detail;
    detail << "max rel err " << std::scientific << std::setprecision(2) << worst << " ("
           << worst_name << "), " << std::fixed << std::setprecision(1) << elapsed << "s";
    report(1, "gradient suite < 1e-4 over 5 seeds", worst < 1e-4 && elapsed < 120.0, detail.str());
}

// ---------------------------------------------------------------------------
// 2. qrnn parallel path vs a naive sequential per-timestep oracle, including
//    chunk boundaries with carried state
// ---------------------------------------------------------------------------
void criterion_qrnn_oracle() {
    std::mt19937_64 rng(77);
    const int64_t t = 12, b = 2, d = 5, w = 3;
    auto params = make_qrnn_params<double>(d, d, w, rng);
    auto x = random_tensor({t, b, d}, rng);

    // oracle: explicit window sum per timestep, then the scan
    Tensor<double> oracle_h({t, b, d});
    Tensor<double> c = Tensor<double>::zeros({b, d});
    for (int64_t ti = 0; ti < t; ++ti) {
        for (int64_t bi = 0; bi < b; ++bi) {
            for (int64_t j = 0; j < d; ++j) {
                double az = params.bz->value[j], af = params.bf->value[j], ao = params.bo->value[j];
                for (int64_t shift = 0; shift < w; ++shift) {
                    const int64_t pos = ti - (w - 1) + shift;
                    if (pos < 0) continue;  // zero history at stream start
                    for (int64_t k = 0; k < d; ++k) {
                        const double xv = x.at(pos, bi, k);
                        az += xv * params.wz[size_t(shift)]->value.at(k, j);
                        af += xv * params.wf[size_t(shift)]->value.at(k, j);
                        ao += xv * params.wo[size_t(shift)]->value.at(k, j);
                    }
                }
                const double z = std::tanh(az);
                const double f = 1.0 / (1.0 + std::exp(-af));
                const double o = 1.0 / (1.0 + std::exp(-ao));
                const double cv = f * c.at(bi, j) + (1.0 - f) * z;
                c.at(bi, j) = cv;
                oracle_h.at(ti, bi, j) = o * cv;
            }
        }
    }

    auto [y_full, st_full] = qrnn_forward(constant(x), qrnn_zero_state<double>(b, d, d, w), params);
    double err_full = max_abs_diff(y_full->value, oracle_h);

    double err_chunk = 0;
    auto st = qrnn_zero_state<double>(b, d, d, w);
    for (int chunk = 0; chunk < 3; ++chunk) {
        Tensor<double> xc({4, b, d});
        std::memcpy(xc.data(), x.data() + chunk * 4 * b * d, sizeof(double) * size_t(4 * b * d));
        auto [yc, stc] = qrnn_forward(constant(xc), st, params);
        for (int64_t i = 0; i < 4 * b * d; ++i) {
            err_chunk = std::max(err_chunk,
                                 std::abs(yc->value[i] - oracle_h[chunk * 4 * b * d + i]));
        }
        st = std::move(stc);
    }

    std::ostringstream detail;
    detail << "full pass err " << std::scientific << std::setprecision(2) << err_full
           << ", chunked err " << err_chunk;
    report(2, "qrnn equals the sequential oracle < 1e-10", err_full < 1e-10 && err_chunk < 1e-10,
           detail.str());
}

// ---------------------------------------------------------------------------
// 3. causality: perturbing position t never changes outputs before t
// ---------------------------------------------------------------------------
void criterion_causality() {
    std::mt19937_64 rng(99);
    bool all_exact = true;
    std::string broken;

    const int64_t t = 6, b = 2, d = 4, cut = 3;
    auto xa = random_tensor({t, b, d}, rng);
    Tensor<double> xb = xa.clone();
    for (int64_t ti = cut; ti < t; ++ti)
        for (int64_t i = 0; i < b * d; ++i) xb[ti * b * d + i] += 0.7;

    {
        auto params = make_lstm_params<double>(d, d, rng);
        auto [ya, sa] = lstm_forward(constant(xa), lstm_zero_state<double>(b, d), params);
        auto [yb, sb] = lstm_forward(constant(xb), lstm_zero_state<double>(b, d), params);
        for (int64_t i = 0; i < cut * b * d; ++i) {
            if (ya->value[i] != yb->value[i]) { all_exact = false; broken = "lstm"; break; }
        }
    }
    {
        auto params = make_qrnn_params<double>(d, d, 2, rng);
        auto st = qrnn_zero_state<double>(b, d, d, 2);
        auto [ya, sa] = qrnn_forward(constant(xa), st, params);
        auto [yb, sb] = qrnn_forward(constant(xb), st, params);
        for (int64_t i = 0; i < cut * b * d; ++i) {
            if (ya->value[i] != yb->value[i]) { all_exact = false; broken = "qrnn"; break; }
        }
    }
    for (auto [mode, variant, name] :
         {std::tuple{AttnGateMode::Gated, AttnVariant::FullMemory, "attention-gated"},
          std::tuple{AttnGateMode::Ungated, AttnVariant::FullMemory, "attention-ungated"},
          std::tuple{AttnGateMode::Gated, AttnVariant::MeanMemory, "attention-mean"}}) {
        auto params = make_attention_params<double>(d, mode, variant, true, rng, 0.0);
        MemoryCache<double> cache;
        cache.cap = 16;
        cache = cache_update(cache, random_tensor({3, b, d}, rng));
        auto ya = attend(constant(xa), cache, params, false, rng);
        auto yb = attend(constant(xb), cache, params, false, rng);
        for (int64_t i = 0; i < cut * b * d; ++i) {
            if (ya->value[i] != yb->value[i]) { all_exact = false; broken = name; break; }
        }
    }
    for (auto wiring : {BlockWiring::ShaRnn, BlockWiring::Shaq}) {
        ModelConfig cfg;
        cfg.d_model = 8;
        cfg.n_blocks = 2;
        cfg.attn_layers = {2};
        cfg.window = 5;
        cfg.cache_cap = 16;
        cfg.wiring = wiring;
        cfg.drop_cell = cfg.drop_attn_w = cfg.drop_attn_out = cfg.drop_ff = 0.0;
        if (wiring == BlockWiring::ShaRnn) {
            cfg.cell = CellKind::Lstm;
            cfg.attn = AttnChoice::Gated;
            cfg.ff = FeedForwardKind::Boom;
        } else {
            cfg.cell = CellKind::Qrnn;
            cfg.attn = AttnChoice::Ungated;
            cfg.ff = FeedForwardKind::None;
        }
        Model<double> m(cfg, 5);
        auto ids = random_ids(6, 2, 55);
        auto st = m.initial_state(2);
        auto warm = m.forward(ids, st, false);  // cache filled
        auto [la, s1] = m.forward(ids, warm.second, false);
        Tensor<int32_t> perturbed = ids.clone();
        perturbed.at(4, 0) = (perturbed.at(4, 0) + 3) % 256;
        auto [lb, s2] = m.forward(perturbed, warm.second, false);
        for (int64_t i = 0; i < 4 * 2 * 256; ++i) {
            if (la->value[i] != lb->value[i]) {
                all_exact = false;
                broken = wiring == BlockWiring::ShaRnn ? "sha-rnn block" : "shaq block";
                break;
            }
        }
    }
    report(3, "causality is exact for cells, attention variants, and both wirings", all_exact,
           all_exact ? "bit-identical prefixes" : "violated by " + broken);
}

// ---------------------------------------------------------------------------
// 4. parameter arithmetic vs the published table values
// ---------------------------------------------------------------------------
void criterion_parameters() {
    bool ok = true;
    std::ostringstream detail;

    ok = ok && lstm_param_count(1024) == 8392704;
    ok = ok && qrnn_param_count(1024, 2) == 6294528;
    const int64_t swap_delta = 4 * (lstm_param_count(1024) - qrnn_param_count(1024, 2));
    // the 4-layer cell swap saves ~8.39M, consistent with the published
    // 54M -> 45M within million rounding
    ok = ok && std::abs(std::llround(double(swap_delta) / 1e6) - 9) <= 1;

    ModelConfig baseline;
    baseline.d_model = 1024;
    baseline.n_blocks = 4;
    baseline.cell = CellKind::Lstm;
    baseline.attn_layers = {3};
    baseline.attn = AttnChoice::Gated;
    baseline.ff = FeedForwardKind::Boom;
    baseline.window = 1024;

    ModelConfig shaq;
    shaq.d_model = 1024;
    shaq.n_blocks = 4;
    shaq.cell = CellKind::Qrnn;
    shaq.qrnn_window = 2;
    shaq.attn_layers = {4};
    shaq.attn = AttnChoice::Ungated;
    shaq.ff = FeedForwardKind::None;
    shaq.window = 1024;

    ModelConfig two_layer = baseline;
    two_layer.n_blocks = 2;
    two_layer.attn_layers = {2};

    struct Check {
        const char* name;
        ModelConfig cfg;
        int64_t published_m;
    };
    for (const auto& [name, cfg, published] : {Check{"baseline", baseline, 54},
                                               Check{"shaq", shaq, 26},
                                               Check{"2-layer(2)", two_layer, 29}}) {
        const int64_t count = param_count(cfg).total;
        const int64_t rounded = std::llround(double(count) / 1e6);
        const bool pass = std::abs(rounded - published) <= 2;
        ok = ok && pass;
        detail << name << " " << count << " (" << rounded << "M vs " << published << "M) ";
    }
    report(4, "closed-form parameter counts match the published table within 2M", ok, detail.str());
}

// ---------------------------------------------------------------------------
// 5. bpc conversion
// ---------------------------------------------------------------------------
void criterion_bpc() {
    const bool exact = bpc_from_nats(std::log(2.0)) == 1.0;
    const double pair_err = std::abs(bpc_from_nats(0.84) - 1.208);
    const bool uniform = std::abs(bpc_from_nats(std::log(256.0)) - 8.0) < 1e-12;
    std::ostringstream detail;
    detail << "bpc(ln 2) = 1 " << (exact ? "exactly" : "VIOLATED") << ", |bpc(0.84) - 1.208| = "
           << std::setprecision(4) << pair_err;
    report(5, "bpc conversion reproduces the published loss/bpc pair", exact && pair_err < 0.01 && uniform,
           detail.str());
}

ExperimentSpec desk_spec(const std::string& corpus, const std::string& out, CellKind cell) {
    ExperimentSpec spec;
    spec.model.d_model = 256;
    spec.model.n_blocks = 2;
    spec.model.cell = cell;
    spec.model.qrnn_window = 2;
    spec.model.attn_layers = {2};
    spec.model.attn = AttnChoice::Ungated;
    spec.model.ff = FeedForwardKind::None;
    spec.model.cache_cap = 512;  // desk-scale cap keeps the smoke inside its budget
    spec.plan.batch = 16;
    spec.plan.center = 256;
    spec.epochs = 2;  // within the five-epoch bound
    spec.seed = 1234;
    spec.optim.lr = 2e-3;
    spec.corpus_path = corpus;
    spec.out_dir = out;
    spec.tag = cell == CellKind::Qrnn ? "toy_shaq" : "toy_lstm";
    return spec;
}

// ---------------------------------------------------------------------------
// 6. desk-scale training smoke on a 1 MB corpus
// ---------------------------------------------------------------------------
void criterion_training_smoke(const std::string& corpus_1mb, const std::string& out_root) {
    const auto t0 = Clock::now();
    auto shaq = train<float>(desk_spec(corpus_1mb, out_root + "/toy_shaq", CellKind::Qrnn));
    auto lstm = train<float>(desk_spec(corpus_1mb, out_root + "/toy_lstm", CellKind::Lstm));
    const double elapsed = seconds_since(t0);

    bool ok = !shaq.aborted && !lstm.aborted;
    ok = ok && !shaq.records.empty() && shaq.records[0].valid_bpc < 8.0;
    ok = ok && !lstm.records.empty() && lstm.records[0].valid_bpc < 8.0;
    ok = ok && shaq.best_valid_bpc < 4.0;
    ok = ok && std::abs(shaq.best_valid_bpc - lstm.best_valid_bpc) <= 0.5;

    std::ostringstream detail;
    detail << std::fixed << std::setprecision(3) << "shaq bpc " << shaq.best_valid_bpc
           << ", lstm bpc " << lstm.best_valid_bpc << ", |delta| "
           << std::abs(shaq.best_valid_bpc - lstm.best_valid_bpc) << ", " << std::setprecision(0)
           << elapsed << "s total";
    report(6, "desk-scale smoke: bpc < 4 within 5 epochs and cell parity within 0.5", ok,
           detail.str());
}

// ---------------------------------------------------------------------------
// 7. throughput direction: qrnn epoch <= 0.8x lstm epoch at equal dims
// ---------------------------------------------------------------------------
void criterion_throughput(const std::string& corpus_small, const std::string& out_root) {
    auto spec_for = [&](CellKind cell) {
        ExperimentSpec spec = desk_spec(corpus_small, out_root + "/bench", cell);
        spec.model.attn_layers = {};  // isolate the recurrent units
        spec.model.drop_cell = 0.0;
        spec.epochs = 1;
        spec.tag = cell == CellKind::Qrnn ? "bench_qrnn" : "bench_lstm";
        spec.out_dir = out_root + "/" + spec.tag;
        return spec;
    };
    auto qrnn = train<float>(spec_for(CellKind::Qrnn));
    auto lstm = train<float>(spec_for(CellKind::Lstm));
    const double tq = qrnn.records.empty() ? 1e9 : qrnn.records[0].seconds;
    const double tl = lstm.records.empty() ? 1e-9 : lstm.records[0].seconds;
    const double ratio = tq / tl;
    std::ostringstream detail;
    detail << std::fixed << std::setprecision(1) << "qrnn " << tq << "s vs lstm " << tl
           << "s per epoch, ratio " << std::setprecision(3) << ratio;
    report(7, "qrnn epoch wall-clock <= 0.8x lstm at d=256, L=256, B=16", ratio <= 0.8, detail.str());
}

// ---------------------------------------------------------------------------
// 8. every published ablation row is reachable; the placement grid runs
// ---------------------------------------------------------------------------
void criterion_reachability(const std::string& corpus_tiny, const std::string& out_root) {
    bool constructible = true;
    {
        ModelConfig base;
        base.d_model = 1024;
        base.n_blocks = 4;
        base.cell = CellKind::Lstm;
        base.attn_layers = {3};
        base.attn = AttnChoice::Gated;
        base.ff = FeedForwardKind::Boom;
        base.window = 1024;
        std::vector<ModelConfig> rows;
        rows.push_back(base);
        {
            ModelConfig c = base;
            c.ff = FeedForwardKind::None;
            rows.push_back(c);
            c.ff = FeedForwardKind::Fc;
            rows.push_back(c);
        }
        {
            ModelConfig c = base;
            c.cell = CellKind::Qrnn;
            rows.push_back(c);
        }
        {
            ModelConfig c = base;
            c.attn = AttnChoice::Mean;
            rows.push_back(c);
            c.attn = AttnChoice::Ungated;
            rows.push_back(c);
        }
        for (auto [blocks, layers] : std::vector<std::pair<int64_t, std::vector<int64_t>>>{
                 {4, {1}}, {4, {2}}, {4, {3}}, {4, {4}}, {3, {3, 3}}, {2, {2, 2}}, {2, {2}}}) {
            ModelConfig c = base;
            c.n_blocks = blocks;
            c.attn_layers = layers;
            rows.push_back(c);
        }
        for (auto& c : rows) {
            try {
                c.validate();
                constructible = constructible && param_count(c).total > 0;
            } catch (const std::exception&) {
                constructible = false;
            }
        }
    }

    // the seven-row placement grid runs end to end at toy scale
    ExperimentSpec base;
    base.model.d_model = 32;
    base.model.cell = CellKind::Lstm;
    base.model.attn = AttnChoice::Gated;
    base.model.ff = FeedForwardKind::Boom;
    base.model.cache_cap = 64;
    base.plan.batch = 8;
    base.plan.center = 32;
    base.epochs = 1;
    base.seed = 7;
    base.optim.lr = 3e-3;
    base.corpus_path = corpus_tiny;
    auto specs = attention_placement_grid(base);
    auto grid = run_grid<float>(specs, out_root + "/placement_grid");

    bool grid_ok = grid.rows.size() == 7;
    for (const auto& row : grid.rows) grid_ok = grid_ok && !row.failed;
    std::ifstream csv(grid.csv_path);
    std::string header;
    std::getline(csv, header);
    grid_ok = grid_ok && header == "experiment,avg_time_per_epoch_s,params,loss,bpc,spec_hash";

    std::ostringstream detail;
    detail << "13 table rows constructible: " << (constructible ? "yes" : "NO")
           << "; placement grid rows: " << grid.rows.size() << ", report " << grid.csv_path;
    report(8, "ablation rows constructible and the placement grid runs end to end",
           constructible && grid_ok, detail.str());
}

// ---------------------------------------------------------------------------
// 9. determinism and checkpoint resume
// ---------------------------------------------------------------------------
void criterion_determinism(const std::string& corpus_tiny, const std::string& out_root) {
    ExperimentSpec spec;
    spec.model.d_model = 32;
    spec.model.n_blocks = 2;
    spec.model.cell = CellKind::Qrnn;
    spec.model.attn_layers = {2};
    spec.model.attn = AttnChoice::Ungated;
    spec.model.ff = FeedForwardKind::None;
    spec.model.cache_cap = 64;
    spec.plan.batch = 8;
    spec.plan.center = 32;
    spec.epochs = 3;
    spec.seed = 21;
    spec.optim.lr = 3e-3;
    spec.corpus_path = corpus_tiny;
    spec.out_dir = out_root + "/det_a";

    auto a = train<float>(spec);
    spec.out_dir = out_root + "/det_b";
    auto b = train<float>(spec);

    bool identical = a.records.size() == b.records.size();
    for (size_t i = 0; identical && i < a.records.size(); ++i) {
        identical = a.records[i].train_loss == b.records[i].train_loss &&
                    a.records[i].valid_loss == b.records[i].valid_loss;
    }

    ExperimentSpec head = spec;
    head.out_dir = out_root + "/det_head";
    head.epochs = 2;
    auto first = train<float>(head);
    ExperimentSpec tail = spec;
    tail.out_dir = out_root + "/det_tail";
    tail.resume_from = first.last_checkpoint;
    auto resumed = train<float>(tail);
    const double resume_err = resumed.records.empty()
                                  ? 1.0
                                  : std::abs(resumed.records.back().train_loss -
                                             a.records.back().train_loss);

    std::ostringstream detail;
    detail << "replay " << (identical ? "identical" : "DIVERGED") << ", resume epoch-loss delta "
           << std::scientific << std::setprecision(2) << resume_err;
    report(9, "identical seeds replay exactly; resume matches within 1e-6", identical && resume_err < 1e-6,
           detail.str());
}

}  // namespace

int main(int argc, char** argv) {
    std::string out_root = "acceptance_out";
    for (int i = 1; i + 1 < argc; i += 2) {
        if (std::string(argv[i]) == "--out") out_root = argv[i + 1];
    }
    fs::create_directories(out_root);

    const std::string corpus_1mb = out_root + "/corpus_1mb.bin";
    const std::string corpus_small = out_root + "/corpus_384k.bin";
    const std::string corpus_tiny = out_root + "/corpus_96k.bin";
    testsupport::write_corpus_file(corpus_1mb, 1 << 20, 2024);
    testsupport::write_corpus_file(corpus_small, 384 << 10, 2025);
    testsupport::write_corpus_file(corpus_tiny, 96 << 10, 2026);

    const auto t0 = Clock::now();
    criterion_gradients();
    criterion_qrnn_oracle();
    criterion_causality();
    criterion_parameters();
    criterion_bpc();
    criterion_training_smoke(corpus_1mb, out_root);
    criterion_throughput(corpus_small, out_root);
    criterion_reachability(corpus_tiny, out_root);
    criterion_determinism(corpus_tiny, out_root);

    std::cout << (g_failures == 0 ? "all criteria passed" : std::to_string(g_failures) + " criteria failed")
              << " (" << std::fixed << std::setprecision(0) << seconds_since(t0) << "s)" << std::endl;
    return g_failures;
}
