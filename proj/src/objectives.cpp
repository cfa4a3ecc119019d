#include "any3d/objectives.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "any3d/error.hpp"

namespace any3d::objectives {

void ActionChunk::validate() const {
    require(values.rows() >= 1 && values.cols() >= 1, "action chunk: horizon and action dim must be >= 1");
    require(values.allFinite(), "action chunk: non-finite entry");
}

FlowSample make_flow_sample(const ActionChunk& a0, double t, const Eigen::MatrixXd& noise) {
    a0.validate();
    require(t >= 0.0 && t <= 1.0, "flow sample: t must lie in [0, 1]");
    require(noise.rows() == a0.values.rows() && noise.cols() == a0.values.cols(),
            "flow sample: noise shape differs from the action chunk");
    FlowSample s;
    s.t = t;
    s.noise = noise;
    // Endpoint branches keep A_t exact where (1 - t) or t rounds.
    if (t == 0.0) {
        s.a_t = a0.values;
    } else if (t == 1.0) {
        s.a_t = noise;
    } else {
        s.a_t = (1.0 - t) * a0.values + t * noise;
    }
    s.u_t = noise - a0.values;
    return s;
}

FlowSample draw_flow_sample(const ActionChunk& a0, CounterRng& rng) {
    const double t = rng.uniform();
    Eigen::MatrixXd noise(a0.values.rows(), a0.values.cols());
    for (Eigen::Index j = 0; j < noise.cols(); ++j)
        for (Eigen::Index i = 0; i < noise.rows(); ++i) noise(i, j) = rng.normal();
    return make_flow_sample(a0, t, noise);
}

double flow_matching_loss(const FlowSample& sample, const Eigen::MatrixXd& predicted, bool is_synthetic) {
    require(predicted.rows() == sample.u_t.rows() && predicted.cols() == sample.u_t.cols(),
            "flow loss: predicted field shape differs from the sample");
    if (!is_synthetic) return 0.0;
    return (predicted - sample.u_t).squaredNorm();
}

Eigen::MatrixXd flow_matching_loss_grad(const FlowSample& sample, const Eigen::MatrixXd& predicted,
                                        bool is_synthetic) {
    require(predicted.rows() == sample.u_t.rows() && predicted.cols() == sample.u_t.cols(),
            "flow loss: predicted field shape differs from the sample");
    if (!is_synthetic) return Eigen::MatrixXd::Zero(predicted.rows(), predicted.cols());
    return 2.0 * (predicted - sample.u_t);
}

Eigen::MatrixXd log_softmax_rows(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd out(logits.rows(), logits.cols());
    for (Eigen::Index n = 0; n < logits.rows(); ++n) {
        const double m = logits.row(n).maxCoeff();
        double z = 0.0;
        for (Eigen::Index v = 0; v < logits.cols(); ++v) z += std::exp(logits(n, v) - m);
        const double lse = m + std::log(z);
        for (Eigen::Index v = 0; v < logits.cols(); ++v) out(n, v) = logits(n, v) - lse;
    }
    return out;
}

namespace {

double token_nll(const Eigen::MatrixXd& logits, const std::vector<std::uint32_t>& targets, const char* what) {
    require(static_cast<std::size_t>(logits.rows()) == targets.size(),
            std::string("sequence loss: ") + what + " logits rows differ from the target length");
    if (targets.empty()) return 0.0;
    require(logits.allFinite(), std::string("sequence loss: non-finite ") + what + " logits");
    const Eigen::MatrixXd lp = log_softmax_rows(logits);
    double nll = 0.0;
    for (std::size_t n = 0; n < targets.size(); ++n) {
        require(targets[n] < static_cast<std::uint64_t>(logits.cols()),
                std::string("sequence loss: ") + what + " token id outside the vocabulary");
        nll -= lp(static_cast<Eigen::Index>(n), targets[n]);
    }
    return nll;
}

}  // namespace

double sequence_loss(const Eigen::MatrixXd& logits_bbox, const Eigen::MatrixXd& logits_gpose,
                     const TokenTargets& targets) {
    const double bbox = token_nll(logits_bbox, targets.bbox, "bbox");
    if (!targets.is_synthetic) return bbox;
    return bbox + token_nll(logits_gpose, targets.gpose, "grasp-pose");
}

double total_loss(double l_s2, double l_s1) {
    require(std::isfinite(l_s2) && std::isfinite(l_s1) && l_s2 >= 0.0 && l_s1 >= 0.0,
            "total loss: components must be finite and non-negative");
    return l_s2 + l_s1;
}

RgbImage resize_bilinear(const RgbImage& rgb, int width, int height) {
    require(rgb.width > 0 && rgb.height > 0 && width > 0 && height > 0, "resize: sizes must be positive");
    if (width == rgb.width && height == rgb.height) return rgb;
    RgbImage out(width, height);
    const double sx = static_cast<double>(rgb.width) / width;
    const double sy = static_cast<double>(rgb.height) / height;
    for (int v = 0; v < height; ++v) {
        const double fy = std::clamp((v + 0.5) * sy - 0.5, 0.0, rgb.height - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, rgb.height - 1);
        const float wy = static_cast<float>(fy - y0);
        for (int u = 0; u < width; ++u) {
            const double fx = std::clamp((u + 0.5) * sx - 0.5, 0.0, rgb.width - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, rgb.width - 1);
            const float wx = static_cast<float>(fx - x0);
            const Eigen::Vector3f top = (1.0f - wx) * rgb.at(x0, y0) + wx * rgb.at(x1, y0);
            const Eigen::Vector3f bot = (1.0f - wx) * rgb.at(x0, y1) + wx * rgb.at(x1, y1);
            out.at(u, v) = ((1.0f - wy) * top + wy * bot).cwiseMax(0.0f).cwiseMin(1.0f);
        }
    }
    return out;
}

PaddedImage augment_random_pad(const RgbImage& rgb, int canvas_width, int canvas_height, CounterRng& rng) {
    require(rgb.width > 0 && rgb.height > 0, "random pad: zero-size input image");
    require(canvas_width > 0 && canvas_height > 0, "random pad: zero-size canvas");
    const double scale = std::min(static_cast<double>(canvas_width) / rgb.width,
                                  static_cast<double>(canvas_height) / rgb.height);
    PaddedImage out;
    out.scaled_width = std::clamp(static_cast<int>(std::lround(rgb.width * scale)), 1, canvas_width);
    out.scaled_height = std::clamp(static_cast<int>(std::lround(rgb.height * scale)), 1, canvas_height);
    const RgbImage scaled = resize_bilinear(rgb, out.scaled_width, out.scaled_height);
    out.offset_x = static_cast<int>(rng.uniform_int(0, canvas_width - out.scaled_width));
    out.offset_y = static_cast<int>(rng.uniform_int(0, canvas_height - out.scaled_height));
    out.image = RgbImage(canvas_width, canvas_height);
    for (int v = 0; v < out.scaled_height; ++v)
        for (int u = 0; u < out.scaled_width; ++u) out.image.at(u + out.offset_x, v + out.offset_y) = scaled.at(u, v);
    return out;
}

Pose augment_pose_noise(const Pose& pose, const PoseNoiseBounds& bounds, CounterRng& rng) {
    require((bounds.translation.array() >= 0.0).all() && (bounds.rotation.array() >= 0.0).all(),
            "pose noise: bounds must be non-negative");
    Pose out = pose;
    for (int a = 0; a < 3; ++a) {
        const double b = bounds.translation[a];
        const double draw = rng.uniform();
        if (b > 0.0) out.translation[a] += b * (2.0 * draw - 1.0);
    }
    for (int a = 0; a < 3; ++a) {
        const double b = bounds.rotation[a];
        const double draw = rng.uniform();
        if (b > 0.0) out.rotation[a] += b * (2.0 * draw - 1.0);
    }
    return out;
}

LinearFlowPredictor::LinearFlowPredictor(std::size_t horizon, std::size_t action_dim, std::size_t cond_dim)
    : horizon_(horizon), action_dim_(action_dim), cond_dim_(cond_dim),
      w_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(horizon * action_dim),
                               static_cast<Eigen::Index>(horizon * action_dim + 2 + cond_dim))) {
    require(horizon >= 1 && action_dim >= 1, "linear predictor: horizon and action dim must be >= 1");
}

Eigen::VectorXd LinearFlowPredictor::features(const FlowSample& sample, const Eigen::VectorXd& cond) const {
    require(static_cast<std::size_t>(sample.a_t.rows()) == horizon_ &&
                static_cast<std::size_t>(sample.a_t.cols()) == action_dim_,
            "linear predictor: sample shape mismatch");
    require(static_cast<std::size_t>(cond.size()) == cond_dim_, "linear predictor: conditioning size mismatch");
    const Eigen::Index n = static_cast<Eigen::Index>(horizon_ * action_dim_);
    Eigen::VectorXd x(w_.cols());
    x.head(n) = sample.a_t.reshaped();
    x[n] = sample.t;
    x[n + 1] = 1.0;
    x.tail(static_cast<Eigen::Index>(cond_dim_)) = cond;
    return x;
}

Eigen::MatrixXd LinearFlowPredictor::predict(const FlowSample& sample, const Eigen::VectorXd& cond) const {
    const Eigen::VectorXd y = w_ * features(sample, cond);
    return y.reshaped(static_cast<Eigen::Index>(horizon_), static_cast<Eigen::Index>(action_dim_));
}

double LinearFlowPredictor::batch_loss(const std::vector<FlowSample>& batch, const std::vector<Eigen::VectorXd>& conds,
                                       const std::vector<bool>& synthetic) const {
    require(!batch.empty() && conds.size() == batch.size() && synthetic.size() == batch.size(),
            "linear predictor: batch, conditioning and flags differ in length");
    double sum = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b)
        sum += flow_matching_loss(batch[b], predict(batch[b], conds[b]), synthetic[b]);
    return sum / static_cast<double>(batch.size());
}

double LinearFlowPredictor::step(const std::vector<FlowSample>& batch, const std::vector<Eigen::VectorXd>& conds,
                                 const std::vector<bool>& synthetic, double learning_rate) {
    const double loss = batch_loss(batch, conds, synthetic);
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(w_.rows(), w_.cols());
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const Eigen::VectorXd x = features(batch[b], conds[b]);
        const Eigen::MatrixXd g = flow_matching_loss_grad(batch[b], predict(batch[b], conds[b]), synthetic[b]);
        grad.noalias() += g.reshaped() * x.transpose();
    }
    w_ -= learning_rate * grad / static_cast<double>(batch.size());
    return loss;
}

double LinearFlowPredictor::stable_learning_rate(const std::vector<FlowSample>& batch,
                                                 const std::vector<Eigen::VectorXd>& conds) const {
    require(!batch.empty() && conds.size() == batch.size(), "linear predictor: empty batch");
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(w_.cols(), w_.cols());
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const Eigen::VectorXd x = features(batch[b], conds[b]);
        gram.noalias() += x * x.transpose();
    }
    const double lmax = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    return static_cast<double>(batch.size()) / (2.0 * lmax);
}

}  // namespace any3d::objectives
