#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dcct/clustering.hpp"
#include "dcct/config.hpp"
#include "dcct/csm.hpp"
#include "dcct/datagen.hpp"
#include "dcct/encoder.hpp"
#include "dcct/eval.hpp"
#include "dcct/memory.hpp"
#include "dcct/rng.hpp"

namespace dcct {

/// One line of the metrics log; serializes to the run's metrics CSV.
struct EpochMetrics {
    int epoch = 0;
    double p1 = 0, p2 = 0;
    int k1 = 0, k2 = 0;
    std::optional<double> dbi1, dbi2;
    bool gate_active = false;
    // Per-epoch sums over iterations, both mining directions combined.
    long consistent = 0, inconsistent = 0;
    long inconsistent_correct = 0, inconsistent_incorrect = 0;
    int skipped_steps = 0;
    double loss1 = 0, loss2 = 0;  // mean over taken steps
    double mAP1 = 0, mAP2 = 0;
    double top1_1 = 0, top5_1 = 0, top10_1 = 0;
    double top1_2 = 0, top5_2 = 0, top10_2 = 0;

    static std::string csv_header();
    std::string csv_row() const;
};

/// Per-network training view for the current epoch.
struct NetEpochData {
    ClusterResult clusters;
    PseudoLabels pseudo;
    std::vector<std::vector<int>> members;  // cluster -> positions in pseudo
    std::vector<bool> label_correct;        // diagnostics, vs hidden identity
    std::optional<double> dbi;
};

struct CoTeachState {
    EncoderParams params1, params2;
    MeanNetParams mean1, mean2;
    MemoryBank bank1, bank2;
    NetEpochData data1, data2;
    bool epoch_ready = false;
    bool gate_active = false;
    double lr = 0.0;

    EpochMetrics metrics;  // filled across the epoch
};

struct RunResult {
    std::vector<EpochMetrics> log;
    EncoderParams best_mean_net;
    int chosen_net = 0;  // 1 or 2, by final mAP
    int dbi_fallback_net = 0;  // 1 or 2, by lower final DBI (label-free)
    double final_mAP = 0.0;
    std::array<double, 3> final_cmc{};
    int skipped_epochs = 0;
};

class Trainer {
  public:
    explicit Trainer(const RunConfig& config);

    /// Cluster both mean nets' features, rebuild pseudo labels, memories and
    /// DBIs for the given epoch. Returns false when either clustering yields
    /// an empty training set (the epoch is skipped).
    bool epoch_setup(CoTeachState& state, int epoch);

    /// One co-teaching iteration: PK batches, CSM, cross-wired gradient
    /// steps, memory momentum updates, EMA updates.
    void iteration(CoTeachState& state);

    /// Algorithm 1 end to end. Deterministic given the config.
    RunResult run();

    CoTeachState initial_state() const;

    const Dataset& dataset() const { return dataset_; }
    const QueryGallerySplit& split() const { return split_; }

    /// P pseudo-label clusters, batch_k members each (with replacement for
    /// undersized clusters). Returns positions into the pseudo-labeled set.
    static std::vector<int> pk_sample(const std::vector<std::vector<int>>& members,
                                      int p, int k_inst, Rng& rng);

    void evaluate_epoch(CoTeachState& state);

  private:
    NetEpochData cluster_one(const EmbeddingBatch& features, double param,
                             std::uint64_t kmeans_seed) const;

    RunConfig config_;
    Dataset dataset_;
    Matrix inputs_;  // n x d_in
    QueryGallerySplit split_;
    Matrix query_inputs_, gallery_inputs_;
    RetrievalMeta query_meta_, gallery_meta_;
    Rng batch_rng1_, batch_rng2_;
};

void write_metrics_csv(const std::vector<EpochMetrics>& log,
                       const std::string& path);

}  // namespace dcct
