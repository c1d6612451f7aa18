#include "dcct/trainer.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "dcct/metricspace.hpp"
#include "dcct/schedule.hpp"

namespace dcct {

namespace {

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

std::string fmt_opt(const std::optional<double>& v) {
    return v ? fmt(*v) : "nan";
}

}  // namespace

std::string EpochMetrics::csv_header() {
    return "epoch,p1,p2,K1,K2,dbi1,dbi2,gate,"
           "consistent,inconsistent,inconsistent_correct,inconsistent_incorrect,"
           "skipped_steps,loss1,loss2,mAP1,mAP2,"
           "top1_1,top5_1,top10_1,top1_2,top5_2,top10_2";
}

std::string EpochMetrics::csv_row() const {
    std::ostringstream ss;
    ss << epoch << ',' << fmt(p1) << ',' << fmt(p2) << ',' << k1 << ',' << k2
       << ',' << fmt_opt(dbi1) << ',' << fmt_opt(dbi2) << ','
       << (gate_active ? 1 : 0) << ',' << consistent << ',' << inconsistent
       << ',' << inconsistent_correct << ',' << inconsistent_incorrect << ','
       << skipped_steps << ',' << fmt(loss1) << ',' << fmt(loss2) << ','
       << fmt(mAP1) << ',' << fmt(mAP2) << ',' << fmt(top1_1) << ','
       << fmt(top5_1) << ',' << fmt(top10_1) << ',' << fmt(top1_2) << ','
       << fmt(top5_2) << ',' << fmt(top10_2);
    return ss.str();
}

void write_metrics_csv(const std::vector<EpochMetrics>& log,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << EpochMetrics::csv_header() << "\n";
    for (const auto& m : log) out << m.csv_row() << "\n";
}

Trainer::Trainer(const RunConfig& config)
    : config_(config),
      batch_rng1_(config.seed * 0x94d049bb133111ebULL + 21),
      batch_rng2_(config.seed * 0x94d049bb133111ebULL + 22) {
    config_.validate();
    DatasetSpec dspec = config_.dataset;
    dspec.seed = dspec.seed != 0 ? dspec.seed : config_.seed;
    dataset_ = generate(dspec);

    const int n = static_cast<int>(dataset_.samples.size());
    inputs_.resize(n, dspec.d_in);
    for (int i = 0; i < n; ++i)
        inputs_.row(i) = dataset_.samples[i].input.transpose();

    split_ = split_query_gallery(dataset_.samples, config_.query_fraction,
                                 config_.seed + 1);
    auto gather = [&](const std::vector<int>& idx, Matrix& m,
                      RetrievalMeta& meta) {
        m.resize(static_cast<int>(idx.size()), dspec.d_in);
        for (size_t i = 0; i < idx.size(); ++i) {
            m.row(static_cast<int>(i)) = dataset_.samples[idx[i]].input;
            meta.identity.push_back(dataset_.samples[idx[i]].identity);
            meta.camera.push_back(dataset_.samples[idx[i]].camera);
        }
    };
    gather(split_.query_indices, query_inputs_, query_meta_);
    gather(split_.gallery_indices, gallery_inputs_, gallery_meta_);
}

CoTeachState Trainer::initial_state() const {
    CoTeachState s;
    // Both networks start from the same initialization, as do their shadows;
    // divergence comes from DCDP and the independent batch streams.
    s.params1 = EncoderParams::random_init(config_.dataset.d_in,
                                           config_.d_hidden, config_.d_out,
                                           config_.seed + 100);
    s.params2 = s.params1;
    s.mean1 = MeanNetParams::init_from(s.params1, config_.alpha);
    s.mean2 = MeanNetParams::init_from(s.params2, config_.alpha);
    return s;
}

NetEpochData Trainer::cluster_one(const EmbeddingBatch& features, double param,
                                  std::uint64_t kmeans_seed) const {
    NetEpochData d;
    switch (config_.clusterer) {
        case ClustererKind::dbscan: {
            Matrix dist = k_reciprocal_jaccard(features, config_.k1, config_.k2,
                                               config_.jaccard_blend);
            d.clusters = dbscan(dist, param, config_.min_pts);
            break;
        }
        case ClustererKind::infomap: {
            Matrix dist = k_reciprocal_jaccard(features, config_.k1, config_.k2,
                                               config_.jaccard_blend);
            d.clusters = infomap(dist, param);
            break;
        }
        case ClustererKind::kmeans: {
            int k = std::min(static_cast<int>(std::lround(param)),
                             features.size());
            d.clusters = kmeans(features.rows, k, kmeans_seed);
            break;
        }
    }
    d.pseudo = pseudo_labels(d.clusters);
    d.dbi = davies_bouldin(features.rows, d.clusters.assignment);

    d.members.assign(d.pseudo.num_clusters, {});
    for (size_t i = 0; i < d.pseudo.kept.size(); ++i)
        d.members[d.pseudo.labels[i]].push_back(static_cast<int>(i));

    // Diagnostics: a pseudo label counts as correct when the sample's hidden
    // identity matches its cluster's majority identity.
    std::vector<std::unordered_map<int, int>> votes(d.pseudo.num_clusters);
    for (size_t i = 0; i < d.pseudo.kept.size(); ++i)
        ++votes[d.pseudo.labels[i]]
               [dataset_.samples[d.pseudo.kept[i]].identity];
    std::vector<int> majority(d.pseudo.num_clusters, -1);
    for (int k = 0; k < d.pseudo.num_clusters; ++k) {
        int best = -1, best_count = -1;
        for (const auto& [id, c] : votes[k]) {
            if (c > best_count || (c == best_count && id < best)) {
                best = id;
                best_count = c;
            }
        }
        majority[k] = best;
    }
    d.label_correct.resize(d.pseudo.kept.size());
    for (size_t i = 0; i < d.pseudo.kept.size(); ++i)
        d.label_correct[i] =
            dataset_.samples[d.pseudo.kept[i]].identity ==
            majority[d.pseudo.labels[i]];
    return d;
}

bool Trainer::epoch_setup(CoTeachState& state, int epoch) {
    auto features1 = forward(state.mean1.params, inputs_);
    auto features2 = forward(state.mean2.params, inputs_);

    double p1, p2;
    if (config_.use_dcdp) {
        std::tie(p1, p2) = params_at(config_.schedule(), epoch);
    } else {
        p1 = p2 = config_.base;
    }

    state.metrics = EpochMetrics{};
    state.metrics.epoch = epoch;
    state.metrics.p1 = p1;
    state.metrics.p2 = p2;

    state.data1 = cluster_one(features1, p1, config_.seed * 1000 + epoch * 2);
    state.data2 = cluster_one(features2, p2, config_.seed * 1000 + epoch * 2 + 1);
    state.metrics.k1 = state.data1.pseudo.num_clusters;
    state.metrics.k2 = state.data2.pseudo.num_clusters;
    state.metrics.dbi1 = state.data1.dbi;
    state.metrics.dbi2 = state.data2.dbi;

    if (state.data1.pseudo.empty() || state.data2.pseudo.empty()) {
        state.epoch_ready = false;
        return false;
    }

    auto bank_init = [&](const EmbeddingBatch& feats, const NetEpochData& d) {
        // Normalized cluster means over the kept samples only; rebuild a
        // compacted view so the bank rows line up with the contiguous
        // pseudo labels.
        ClusterResult compact;
        compact.assignment.assign(feats.size(), -1);
        for (size_t i = 0; i < d.pseudo.kept.size(); ++i)
            compact.assignment[d.pseudo.kept[i]] = d.pseudo.labels[i];
        compact.num_clusters = d.pseudo.num_clusters;
        return init_from_clusters(feats, compact, config_.beta,
                                  config_.normalize_memory);
    };
    state.bank1 = bank_init(features1, state.data1);
    state.bank2 = bank_init(features2, state.data2);

    state.gate_active =
        config_.use_csm && gate(state.data1.dbi, state.data2.dbi, config_.gamma);
    state.metrics.gate_active = state.gate_active;
    state.lr = config_.lr_at(epoch);
    state.epoch_ready = true;
    return true;
}

std::vector<int> Trainer::pk_sample(
    const std::vector<std::vector<int>>& members, int p, int k_inst, Rng& rng) {
    int n_clusters = static_cast<int>(members.size());
    p = std::min(p, n_clusters);  // fewer clusters than P: shrink the batch

    std::vector<int> cluster_ids(n_clusters);
    std::iota(cluster_ids.begin(), cluster_ids.end(), 0);
    rng.shuffle(cluster_ids);

    std::vector<int> batch;
    batch.reserve(static_cast<size_t>(p) * k_inst);
    for (int c = 0; c < p; ++c) {
        const auto& group = members[cluster_ids[c]];
        int size = static_cast<int>(group.size());
        if (size >= k_inst) {
            std::vector<int> pick(group);
            rng.shuffle(pick);
            for (int j = 0; j < k_inst; ++j) batch.push_back(pick[j]);
        } else {
            for (int j = 0; j < k_inst; ++j)
                batch.push_back(group[rng.uniform_int(size)]);
        }
    }
    return batch;
}

void Trainer::iteration(CoTeachState& state) {
    if (!state.epoch_ready)
        throw std::logic_error("iteration before epoch_setup");

    struct Side {
        std::vector<int> batch;       // positions into pseudo set
        std::vector<int> kept;        // positions into batch
        Matrix batch_inputs;          // full batch
        std::vector<int> labels;      // full batch pseudo labels
    };

    auto prepare = [&](const NetEpochData& d, const MemoryBank& bank,
                       const MeanNetParams& mean, Rng& rng) {
        Side s;
        s.batch = pk_sample(d.members, config_.batch_p, config_.batch_k, rng);
        const int b = static_cast<int>(s.batch.size());
        s.batch_inputs.resize(b, inputs_.cols());
        s.labels.resize(b);
        std::vector<bool> correct(b);
        for (int i = 0; i < b; ++i) {
            int pos = s.batch[i];
            s.batch_inputs.row(i) = inputs_.row(d.pseudo.kept[pos]);
            s.labels[i] = d.pseudo.labels[pos];
            correct[i] = d.label_correct[pos];
        }
        if (config_.use_csm) {
            // diagnostics run every epoch; the DBI gate only decides
            // whether the inconsistent samples are actually dropped
            auto embed = forward(mean.params, s.batch_inputs);
            auto mined = mine(embed.rows, s.labels, bank, &correct);
            if (state.gate_active) {
                s.kept = mined.kept;
            } else {
                s.kept.resize(b);
                std::iota(s.kept.begin(), s.kept.end(), 0);
            }
            state.metrics.consistent += mined.report.consistent_count;
            state.metrics.inconsistent += mined.report.inconsistent_count;
            state.metrics.inconsistent_correct +=
                mined.report.inconsistent_correct;
            state.metrics.inconsistent_incorrect +=
                mined.report.inconsistent_incorrect;
        } else {
            s.kept.resize(b);
            std::iota(s.kept.begin(), s.kept.end(), 0);
            state.metrics.consistent += b;
        }
        return s;
    };

    // X1* mined by mean1/bank1 trains Net2; X2* trains Net1.
    Side side1 = prepare(state.data1, state.bank1, state.mean1, batch_rng1_);
    Side side2 = prepare(state.data2, state.bank2, state.mean2, batch_rng2_);

    auto train_on = [&](EncoderParams& params, const Side& s,
                        const MemoryBank& peer_bank, double& loss_acc,
                        int& steps) {
        if (s.kept.empty()) {
            ++state.metrics.skipped_steps;
            return;
        }
        Matrix mined_inputs(static_cast<int>(s.kept.size()), inputs_.cols());
        std::vector<int> mined_labels(s.kept.size());
        for (size_t i = 0; i < s.kept.size(); ++i) {
            mined_inputs.row(static_cast<int>(i)) =
                s.batch_inputs.row(s.kept[i]);
            mined_labels[i] = s.labels[s.kept[i]];
        }
        auto lg = loss_and_grad(params, mined_inputs, mined_labels, peer_bank,
                                config_.tau);
        params = sgd_step(params, lg.grad, state.lr, config_.weight_decay);
        loss_acc += lg.loss;
        ++steps;
    };

    int steps1 = 0, steps2 = 0;
    double loss1 = 0, loss2 = 0;
    train_on(state.params1, side2, state.bank2, loss1, steps1);
    train_on(state.params2, side1, state.bank1, loss2, steps2);
    state.metrics.loss1 += loss1;
    state.metrics.loss2 += loss2;

    // Memory updates after both gradient steps: bank1 absorbs Net2's features
    // of X1*, bank2 absorbs Net1's features of X2*, per-sample in batch order.
    auto update_bank = [&](MemoryBank& bank, const Side& s,
                           const EncoderParams& peer_params) {
        if (s.kept.empty()) return;
        Matrix mined_inputs(static_cast<int>(s.kept.size()), inputs_.cols());
        for (size_t i = 0; i < s.kept.size(); ++i)
            mined_inputs.row(static_cast<int>(i)) =
                s.batch_inputs.row(s.kept[i]);
        auto feats = forward(peer_params, mined_inputs);
        for (size_t i = 0; i < s.kept.size(); ++i)
            momentum_update(bank, s.labels[s.kept[i]],
                            feats.rows.row(static_cast<int>(i)).transpose());
    };
    update_bank(state.bank1, side1, state.params2);
    update_bank(state.bank2, side2, state.params1);

    state.mean1 = ema_update(state.mean1, state.params1);
    state.mean2 = ema_update(state.mean2, state.params2);
}

void Trainer::evaluate_epoch(CoTeachState& state) {
    auto eval_net = [&](const MeanNetParams& mean, double& mAP, double& t1,
                        double& t5, double& t10) {
        auto q = forward(mean.params, query_inputs_);
        auto g = forward(mean.params, gallery_inputs_);
        auto r = evaluate(q.rows, query_meta_, g.rows, gallery_meta_);
        mAP = r.mAP;
        t1 = r.cmc[0];
        t5 = r.cmc[1];
        t10 = r.cmc[2];
    };
    eval_net(state.mean1, state.metrics.mAP1, state.metrics.top1_1,
             state.metrics.top5_1, state.metrics.top10_1);
    eval_net(state.mean2, state.metrics.mAP2, state.metrics.top1_2,
             state.metrics.top5_2, state.metrics.top10_2);
}

RunResult Trainer::run() {
    CoTeachState state = initial_state();
    RunResult result;

    for (int epoch = 0; epoch < config_.epochs; ++epoch) {
        if (!epoch_setup(state, epoch)) {
            ++result.skipped_epochs;
            evaluate_epoch(state);
            result.log.push_back(state.metrics);
            continue;
        }
        int steps_taken = 0;
        for (int it = 0; it < config_.iterations; ++it) {
            iteration(state);
            ++steps_taken;
        }
        if (steps_taken > 0) {
            // csv stores the per-iteration mean loss
            state.metrics.loss1 /= steps_taken;
            state.metrics.loss2 /= steps_taken;
        }
        evaluate_epoch(state);
        result.log.push_back(state.metrics);
    }

    const auto& last = result.log.back();
    result.chosen_net = last.mAP1 >= last.mAP2 ? 1 : 2;
    double d1 = last.dbi1.value_or(std::numeric_limits<double>::infinity());
    double d2 = last.dbi2.value_or(std::numeric_limits<double>::infinity());
    result.dbi_fallback_net = d1 <= d2 ? 1 : 2;
    result.best_mean_net =
        result.chosen_net == 1 ? state.mean1.params : state.mean2.params;
    result.final_mAP = result.chosen_net == 1 ? last.mAP1 : last.mAP2;
    if (result.chosen_net == 1)
        result.final_cmc = {last.top1_1, last.top5_1, last.top10_1};
    else
        result.final_cmc = {last.top1_2, last.top5_2, last.top10_2};
    return result;
}

}  // namespace dcct
