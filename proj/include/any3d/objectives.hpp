#pragma once

// Training objectives on toy predictors: the masked autoregressive token
// loss, the conditional flow-matching loss on a linear (rectified) path, and
// the two data augmentations applied before them.

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <vector>

#include "any3d/geometry.hpp"
#include "any3d/rng.hpp"

namespace any3d::objectives {

// Chunk length and per-step action size: 6 pose-delta components + gripper.
constexpr std::size_t kDefaultHorizon = 4;
constexpr std::size_t kDefaultActionDim = 7;

// H x d_act action chunk A_0.
struct ActionChunk {
    Eigen::MatrixXd values;

    std::size_t horizon() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t action_dim() const { return static_cast<std::size_t>(values.cols()); }
    void validate() const;
};

// One point on the path A_t = (1 - t) A_0 + t eps with target u_t = eps - A_0.
struct FlowSample {
    double t = 0.0;
    Eigen::MatrixXd noise;
    Eigen::MatrixXd a_t;
    Eigen::MatrixXd u_t;
};

FlowSample make_flow_sample(const ActionChunk& a0, double t, const Eigen::MatrixXd& noise);

// A single-timestep draw: t ~ U[0, 1], eps ~ N(0, I).
FlowSample draw_flow_sample(const ActionChunk& a0, CounterRng& rng);

// L_S1 = 1[synthetic] * ||predicted - u_t||_F^2.
double flow_matching_loss(const FlowSample& sample, const Eigen::MatrixXd& predicted, bool is_synthetic);

// dL_S1 / d predicted = 2 (predicted - u_t) * 1[synthetic].
Eigen::MatrixXd flow_matching_loss_grad(const FlowSample& sample, const Eigen::MatrixXd& predicted,
                                        bool is_synthetic);

struct TokenTargets {
    std::vector<std::uint32_t> bbox;
    std::vector<std::uint32_t> gpose;
    bool is_synthetic = false;
};

// Row-wise log-softmax with max subtraction.
Eigen::MatrixXd log_softmax_rows(const Eigen::MatrixXd& logits);

// L_S2 = -sum log p(bbox_n) - 1[synthetic] * sum log p(gpose_n), natural log.
// logits_bbox is N_bbox x V, logits_gpose N_gpose x V.
double sequence_loss(const Eigen::MatrixXd& logits_bbox, const Eigen::MatrixXd& logits_gpose,
                     const TokenTargets& targets);

double total_loss(double l_s2, double l_s1);

struct PaddedImage {
    RgbImage image;
    int offset_x = 0;
    int offset_y = 0;
    int scaled_width = 0;
    int scaled_height = 0;
};

// Aspect-preserving bilinear resize so the image fits the canvas with one side
// filling it, placed at a uniform integer offset on a black canvas.
PaddedImage augment_random_pad(const RgbImage& rgb, int canvas_width, int canvas_height, CounterRng& rng);

// Bilinear resize with half-pixel centers; an identity resize copies.
RgbImage resize_bilinear(const RgbImage& rgb, int width, int height);

struct Pose {
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();  // meters
    Eigen::Vector3d rotation = Eigen::Vector3d::Zero();     // axis-angle, radians
};

// Half-widths of the uniform perturbation per component.
struct PoseNoiseBounds {
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    Eigen::Vector3d rotation = Eigen::Vector3d::Zero();
};

Pose augment_pose_noise(const Pose& pose, const PoseNoiseBounds& bounds, CounterRng& rng);

// Toy conditional field predictor v = W [vec(A_t); t; 1; c] with per-sample
// conditioning c, trained by plain gradient descent on L_S1.
class LinearFlowPredictor {
public:
    LinearFlowPredictor(std::size_t horizon, std::size_t action_dim, std::size_t cond_dim);

    Eigen::MatrixXd predict(const FlowSample& sample, const Eigen::VectorXd& cond) const;

    // Mean L_S1 over the batch.
    double batch_loss(const std::vector<FlowSample>& batch, const std::vector<Eigen::VectorXd>& conds,
                      const std::vector<bool>& synthetic) const;

    // One descent step on the mean batch loss; returns the loss before the step.
    double step(const std::vector<FlowSample>& batch, const std::vector<Eigen::VectorXd>& conds,
                const std::vector<bool>& synthetic, double learning_rate);

    // 1 / L for the mean batch loss, L its gradient Lipschitz constant.
    double stable_learning_rate(const std::vector<FlowSample>& batch,
                                const std::vector<Eigen::VectorXd>& conds) const;

    const Eigen::MatrixXd& weights() const { return w_; }

private:
    Eigen::VectorXd features(const FlowSample& sample, const Eigen::VectorXd& cond) const;

    std::size_t horizon_;
    std::size_t action_dim_;
    std::size_t cond_dim_;
    Eigen::MatrixXd w_;
};

}  // namespace any3d::objectives
