#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "timbre/matrix.hpp"

namespace timbre::gbt {

enum class Loss {
    squared_one_hot, // l = 1/2 (yhat - y)^2 per class against one-hot targets
    softmax,         // multiclass cross-entropy on softmaxed class scores
};

std::string to_string(Loss loss);
Loss loss_from_string(const std::string& s);

/// Training hyperparameters. Defaults follow the reference configuration:
/// learning_rate 0.05, n_estimators 100, max_depth 6, min_child_weight 1,
/// subsample 0.8.
struct TrainConfig {
    double learning_rate = 0.05;
    int n_estimators = 100;
    int max_depth = 6;
    double min_child_weight = 1.0;
    double subsample = 0.8;
    double lambda_l2 = 1.0;  // L2 penalty on leaf weights
    double gamma_leaf = 0.0; // per-leaf count penalty
    Loss loss = Loss::squared_one_hot;
    std::uint64_t seed = 0;

    void validate() const;
};

TrainConfig load_train_config(const std::filesystem::path& path);
void save_train_config(const TrainConfig& cfg, const std::filesystem::path& path);

/// Node of a regression tree, stored preorder in Tree::nodes.
/// feature < 0 marks a leaf.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double weight = 0.0;

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> x) const;
    int max_depth() const;
};

/// Additive ensemble; each tree contributes (scaled by learning_rate) to the
/// score of the single class it was fit for.
struct TreeEnsemble {
    int num_classes = 0;
    std::size_t feature_dim = 0;
    double learning_rate = 0.0;
    double base_score = 0.0;
    Loss loss = Loss::squared_one_hot;
    std::vector<std::string> class_names; // optional; used by reports
    std::vector<std::pair<int, Tree>> trees;

    std::vector<double> scores(std::span<const double> x) const;
};

/// First- and second-order loss statistics per instance.
struct GradHess {
    std::vector<double> g;
    std::vector<double> h;
};

/// For squared_one_hot, predictions are raw class scores; for softmax they
/// are the per-class probabilities (g = p - y, h = p(1 - p)).
GradHess compute_grad_hess(std::span<const double> predictions,
                           std::span<const double> targets, Loss loss);

/// Closed-form optimal leaf weight -G / (H + lambda).
double optimal_leaf_weight(double sum_grad, double sum_hess, double lambda_l2);

/// Minimized objective of a fixed partition:
/// -1/2 sum_j G_j^2/(H_j + lambda) + gamma * T.
double structure_score(std::span<const std::pair<double, double>> leaf_stats,
                       double lambda_l2, double gamma_leaf);

/// Score reduction of one candidate split:
/// 1/2 [GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l)] - gamma.
double split_gain(double grad_left, double hess_left, double grad_right,
                  double hess_right, double lambda_l2, double gamma_leaf);

struct SplitCandidate {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

/// Exact greedy search over every boundary between distinct sorted values of
/// every feature. Returns the best positive-gain split whose children both
/// meet min_child_weight, or nullopt. Ties break to the lowest feature index,
/// then the lowest threshold. Feature scans run in parallel.
std::optional<SplitCandidate> find_best_split(const Matrix& features,
                                              const GradHess& grad_hess,
                                              std::span<const int> rows,
                                              const TrainConfig& cfg,
                                              std::span<const int> feature_subset = {});

/// Recursively applies the gain criterion down to max_depth; leaves carry the
/// closed-form optimal weights.
Tree build_tree(const Matrix& features, const GradHess& grad_hess,
                std::span<const int> rows, const TrainConfig& cfg);

/// One-vs-rest boosting: each round adds one tree per class fit to that
/// class's gradient statistics on a seeded subsample. Deterministic per seed.
TreeEnsemble train(const Matrix& features, const std::vector<int>& labels,
                   int num_classes, const TrainConfig& cfg);

/// Predicted class (argmax of scores, ties to the lowest index) plus scores.
std::pair<int, std::vector<double>> predict(const TreeEnsemble& ensemble,
                                            std::span<const double> x);

/// Predicted class per row, computed in parallel.
std::vector<int> predict_batch(const TreeEnsemble& ensemble, const Matrix& features);

/// Versioned text serialization; round-trips scores bit-exactly.
void save_model(const TreeEnsemble& ensemble, const std::filesystem::path& path);
TreeEnsemble load_model(const std::filesystem::path& path);
std::string model_to_string(const TreeEnsemble& ensemble);

/// Deterministic subsample of round(rate * n) distinct indices (at least 1),
/// returned sorted. rate >= 1 returns all indices.
std::vector<int> subsample_indices(std::size_t count, double rate, std::uint64_t seed);

namespace detail {

struct FeatureScan {
    bool valid = false;
    double threshold = 0.0;
    double gain = 0.0;
};

/// Best boundary for a single feature; shared by the parallel and serial
/// split-search drivers.
FeatureScan scan_feature(const Matrix& features, const GradHess& grad_hess,
                         std::span<const int> rows, int feature, double total_grad,
                         double total_hess, const TrainConfig& cfg);

} // namespace detail
} // namespace timbre::gbt
