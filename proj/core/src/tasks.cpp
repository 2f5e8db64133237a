#include "rootopt/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "rootopt/errors.hpp"

namespace rootopt {
namespace {

using Mat = RowMajorMatrix;

std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
  return std::mt19937_64(seq);
}

void check_dims(std::initializer_list<std::size_t> dims) {
  for (std::size_t d : dims) {
    if (d == 0 || d > kMaxTaskDim) {
      throw InvalidArgument(fmt::format("task dimension {} outside [1, {}]", d, kMaxTaskDim));
    }
  }
}

Parameter make_param(std::string name, ParamRole role, DenseMatrix value, bool vector = false) {
  Parameter p;
  p.spec.name = std::move(name);
  p.spec.role = role;
  p.spec.shape = vector ? std::vector<std::size_t>{value.cols()} : std::vector<std::size_t>{value.rows(), value.cols()};
  p.value = std::move(value);
  return p;
}

void expect_count(std::span<const Parameter> params, std::size_t n, const char* task) {
  if (params.size() != n) throw ShapeMismatch(fmt::format("{}: expected {} parameters", task, n));
}

// Row-wise softmax cross-entropy. Returns the mean loss and, if requested,
// d(mean loss)/d(logits).
double softmax_cross_entropy(const Mat& logits, std::span<const int> labels, Mat* grad) {
  const auto n = logits.rows();
  double total = 0.0;
  if (grad) grad->resize(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double peak = logits.row(i).maxCoeff();
    Eigen::RowVectorXd e = (logits.row(i).array() - peak).exp();
    const double z = e.sum();
    total += std::log(z) + peak - logits(i, labels[static_cast<std::size_t>(i)]);
    if (grad) {
      grad->row(i) = e / z;
      (*grad)(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
    }
  }
  if (grad) *grad /= static_cast<double>(n);
  return total / static_cast<double>(n);
}

class MatrixRegression final : public Task {
 public:
  MatrixRegression(const MatrixRegressionOptions& o, std::uint64_t seed) {
    check_dims({o.samples, o.input_dim, o.output_dim});
    auto rng = seeded_rng(seed, 1);
    a_ = DenseMatrix::gaussian(o.samples, o.input_dim, rng).values() / std::sqrt(static_cast<double>(o.samples));
    const Mat w_star = DenseMatrix::gaussian(o.input_dim, o.output_dim, rng).values();
    b_ = a_ * w_star + o.noise * DenseMatrix::gaussian(o.samples, o.output_dim, rng).values();
    output_dim_ = o.output_dim;
  }

  std::string name() const override { return "matrix_regression"; }

  std::vector<Parameter> initial_parameters() const override {
    std::vector<Parameter> out;
    out.push_back(make_param("W", ParamRole::Weight, DenseMatrix(static_cast<std::size_t>(a_.cols()), output_dim_)));
    return out;
  }

  double loss(std::span<const Parameter> p) const override {
    expect_count(p, 1, "matrix_regression");
    return (a_ * p[0].value.values() - b_).squaredNorm();
  }

  std::vector<DenseMatrix> gradients(std::span<const Parameter> p) const override {
    expect_count(p, 1, "matrix_regression");
    const Mat residual = a_ * p[0].value.values() - b_;
    std::vector<DenseMatrix> g;
    g.emplace_back(Mat(2.0 * a_.transpose() * residual));
    return g;
  }

  double smoothness() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(a_.transpose() * a_),
                                                       Eigen::EigenvaluesOnly);
    return 2.0 * eig.eigenvalues().maxCoeff();
  }

 private:
  Mat a_;
  Mat b_;
  std::size_t output_dim_ = 0;
};

class Factorization final : public Task {
 public:
  Factorization(const FactorizationOptions& o, std::uint64_t seed) : options_(o) {
    check_dims({o.rows, o.cols, o.rank});
    if (o.rank > std::min(o.rows, o.cols)) throw InvalidArgument("factorization: rank exceeds min(rows, cols)");
    auto rng = seeded_rng(seed, 2);
    const Mat left = DenseMatrix::gaussian(o.rows, o.rank, rng).values();
    const Mat right = DenseMatrix::gaussian(o.cols, o.rank, rng).values();
    target_ = left * right.transpose() / std::sqrt(static_cast<double>(o.rank)) +
              o.noise * DenseMatrix::gaussian(o.rows, o.cols, rng).values();
    u0_ = DenseMatrix(Mat(o.init_scale * DenseMatrix::gaussian(o.rows, o.rank, rng).values()));
    v0_ = DenseMatrix(Mat(o.init_scale * DenseMatrix::gaussian(o.cols, o.rank, rng).values()));
  }

  std::string name() const override { return "factorization"; }

  std::vector<Parameter> initial_parameters() const override {
    std::vector<Parameter> out;
    out.push_back(make_param("U", ParamRole::Weight, u0_));
    out.push_back(make_param("V", ParamRole::Weight, v0_));
    return out;
  }

  double loss(std::span<const Parameter> p) const override {
    expect_count(p, 2, "factorization");
    return (p[0].value.values() * p[1].value.values().transpose() - target_).squaredNorm();
  }

  std::vector<DenseMatrix> gradients(std::span<const Parameter> p) const override {
    expect_count(p, 2, "factorization");
    const Mat& u = p[0].value.values();
    const Mat& v = p[1].value.values();
    const Mat residual = u * v.transpose() - target_;
    std::vector<DenseMatrix> g;
    g.emplace_back(Mat(2.0 * residual * v));
    g.emplace_back(Mat(2.0 * residual.transpose() * u));
    return g;
  }

 private:
  FactorizationOptions options_;
  Mat target_;
  DenseMatrix u0_;
  DenseMatrix v0_;
};

class TinyMlp final : public Task {
 public:
  TinyMlp(const MlpOptions& o, std::uint64_t seed) : options_(o) {
    check_dims({o.samples, o.input_dim, o.hidden, o.classes});
    auto rng = seeded_rng(seed, 3);
    const Mat centers = 1.5 * DenseMatrix::gaussian(o.classes, o.input_dim, rng).values();
    std::uniform_int_distribution<int> pick(0, static_cast<int>(o.classes) - 1);
    x_ = DenseMatrix::gaussian(o.samples, o.input_dim, rng).values();
    labels_.resize(o.samples);
    for (std::size_t i = 0; i < o.samples; ++i) {
      labels_[i] = pick(rng);
      x_.row(static_cast<Eigen::Index>(i)) += centers.row(labels_[i]);
    }
    w1_ = DenseMatrix(Mat(DenseMatrix::gaussian(o.input_dim, o.hidden, rng).values() /
                          std::sqrt(static_cast<double>(o.input_dim))));
    w2_ = DenseMatrix(Mat(DenseMatrix::gaussian(o.hidden, o.classes, rng).values() /
                          std::sqrt(static_cast<double>(o.hidden))));
  }

  std::string name() const override { return "tiny_mlp"; }

  std::vector<Parameter> initial_parameters() const override {
    std::vector<Parameter> out;
    out.push_back(make_param("W1", ParamRole::Weight, w1_));
    out.push_back(make_param("b1", ParamRole::Bias, DenseMatrix(1, options_.hidden), true));
    out.push_back(make_param("W2", ParamRole::Weight, w2_));
    out.push_back(make_param("b2", ParamRole::Bias, DenseMatrix(1, options_.classes), true));
    return out;
  }

  double loss(std::span<const Parameter> p) const override { return forward_backward(p, nullptr); }

  std::vector<DenseMatrix> gradients(std::span<const Parameter> p) const override {
    std::vector<DenseMatrix> g;
    forward_backward(p, &g);
    return g;
  }

 private:
  double forward_backward(std::span<const Parameter> p, std::vector<DenseMatrix>* grads) const {
    expect_count(p, 4, "tiny_mlp");
    const Mat& w1 = p[0].value.values();
    const Mat& b1 = p[1].value.values();
    const Mat& w2 = p[2].value.values();
    const Mat& b2 = p[3].value.values();

    Mat pre = x_ * w1;
    pre.rowwise() += b1.row(0);
    const Mat hidden = pre.array().tanh().matrix();
    Mat logits = hidden * w2;
    logits.rowwise() += b2.row(0);

    Mat d_logits;
    const double loss = softmax_cross_entropy(logits, labels_, grads ? &d_logits : nullptr);
    if (!grads) return loss;

    const Mat d_w2 = hidden.transpose() * d_logits;
    const Mat d_b2 = d_logits.colwise().sum();
    const Mat d_pre = ((d_logits * w2.transpose()).array() * (1.0 - hidden.array().square())).matrix();
    const Mat d_w1 = x_.transpose() * d_pre;
    const Mat d_b1 = d_pre.colwise().sum();
    grads->clear();
    grads->emplace_back(d_w1);
    grads->emplace_back(d_b1);
    grads->emplace_back(d_w2);
    grads->emplace_back(d_b2);
    return loss;
  }

  MlpOptions options_;
  Mat x_;
  std::vector<int> labels_;
  DenseMatrix w1_;
  DenseMatrix w2_;
};

class TinyAttentionLm final : public Task {
 public:
  TinyAttentionLm(const AttentionLmOptions& o, std::uint64_t seed) : options_(o) {
    check_dims({o.vocab, o.embed, o.context, o.sequences});
    if (o.vocab < 2) throw InvalidArgument("tiny_attention_lm: vocab must be >= 2");
    auto rng = seeded_rng(seed, 4);

    // Markov chain with peaked transition rows so the stream is learnable.
    Mat transition = DenseMatrix::gaussian(o.vocab, o.vocab, rng).values();
    transition = (2.0 * transition).array().exp().matrix();
    for (Eigen::Index i = 0; i < transition.rows(); ++i) transition.row(i) /= transition.row(i).sum();

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto draw = [&](int from) {
      double u = unit(rng);
      for (std::size_t j = 0; j + 1 < o.vocab; ++j) {
        u -= transition(from, static_cast<Eigen::Index>(j));
        if (u < 0.0) return static_cast<int>(j);
      }
      return static_cast<int>(o.vocab) - 1;
    };

    std::uniform_int_distribution<int> start(0, static_cast<int>(o.vocab) - 1);
    tokens_.resize(o.sequences);
    for (auto& seq : tokens_) {
      seq.resize(o.context + 1);
      seq[0] = start(rng);
      for (std::size_t t = 1; t < seq.size(); ++t) seq[t] = draw(seq[t - 1]);
    }

    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(o.embed));
    embedding_ = DenseMatrix(Mat(DenseMatrix::gaussian(o.vocab, o.embed, rng).values()));
    wq_ = DenseMatrix(Mat(DenseMatrix::gaussian(o.embed, o.embed, rng).values() * inv_sqrt_d));
    wk_ = DenseMatrix(Mat(DenseMatrix::gaussian(o.embed, o.embed, rng).values() * inv_sqrt_d));
    wv_ = DenseMatrix(Mat(DenseMatrix::gaussian(o.embed, o.embed, rng).values() * inv_sqrt_d));
    wo_ = DenseMatrix(Mat(DenseMatrix::gaussian(o.embed, o.vocab, rng).values() * inv_sqrt_d));
  }

  std::string name() const override { return "tiny_attention_lm"; }

  std::vector<Parameter> initial_parameters() const override {
    std::vector<Parameter> out;
    out.push_back(make_param("embedding", ParamRole::Embedding, embedding_));
    out.push_back(make_param("Wq", ParamRole::Weight, wq_));
    out.push_back(make_param("Wk", ParamRole::Weight, wk_));
    out.push_back(make_param("Wv", ParamRole::Weight, wv_));
    out.push_back(make_param("Wo", ParamRole::Weight, wo_));
    return out;
  }

  double loss(std::span<const Parameter> p) const override { return forward_backward(p, nullptr); }

  std::vector<DenseMatrix> gradients(std::span<const Parameter> p) const override {
    std::vector<DenseMatrix> g;
    forward_backward(p, &g);
    return g;
  }

 private:
  double forward_backward(std::span<const Parameter> p, std::vector<DenseMatrix>* grads) const {
    expect_count(p, 5, "tiny_attention_lm");
    const Mat& emb = p[0].value.values();
    const Mat& wq = p[1].value.values();
    const Mat& wk = p[2].value.values();
    const Mat& wv = p[3].value.values();
    const Mat& wo = p[4].value.values();
    const auto len = static_cast<Eigen::Index>(options_.context);
    const auto dim = static_cast<Eigen::Index>(options_.embed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(options_.embed));
    const double weight = 1.0 / static_cast<double>(tokens_.size());

    Mat d_emb = Mat::Zero(emb.rows(), emb.cols());
    Mat d_wq = Mat::Zero(dim, dim);
    Mat d_wk = Mat::Zero(dim, dim);
    Mat d_wv = Mat::Zero(dim, dim);
    Mat d_wo = Mat::Zero(wo.rows(), wo.cols());

    double total = 0.0;
    Mat x(len, dim);
    std::vector<int> targets(static_cast<std::size_t>(len));
    for (const auto& seq : tokens_) {
      for (Eigen::Index t = 0; t < len; ++t) {
        x.row(t) = emb.row(seq[static_cast<std::size_t>(t)]);
        targets[static_cast<std::size_t>(t)] = seq[static_cast<std::size_t>(t) + 1];
      }
      const Mat q = x * wq;
      const Mat k = x * wk;
      const Mat v = x * wv;
      Mat attn = scale * (q * k.transpose());
      for (Eigen::Index i = 0; i < len; ++i) {
        const double peak = attn.row(i).head(i + 1).maxCoeff();
        double z = 0.0;
        for (Eigen::Index j = 0; j < len; ++j) {
          attn(i, j) = j <= i ? std::exp(attn(i, j) - peak) : 0.0;
          z += attn(i, j);
        }
        attn.row(i) /= z;
      }
      const Mat h = attn * v + x;
      const Mat logits = h * wo;

      Mat d_logits;
      total += softmax_cross_entropy(logits, targets, grads ? &d_logits : nullptr);
      if (!grads) continue;
      d_logits *= weight;

      d_wo += h.transpose() * d_logits;
      const Mat d_h = d_logits * wo.transpose();
      Mat d_x = d_h;
      const Mat d_attn = d_h * v.transpose();
      const Mat d_v = attn.transpose() * d_h;
      // softmax backward; masked entries have attn = 0 and drop out.
      const Eigen::VectorXd row_dot = (d_attn.array() * attn.array()).rowwise().sum();
      Mat d_scores = (attn.array() * (d_attn.colwise() - row_dot).array()).matrix() * scale;
      const Mat d_q = d_scores * k;
      const Mat d_k = d_scores.transpose() * q;

      d_wq += x.transpose() * d_q;
      d_wk += x.transpose() * d_k;
      d_wv += x.transpose() * d_v;
      d_x += d_q * wq.transpose() + d_k * wk.transpose() + d_v * wv.transpose();
      for (Eigen::Index t = 0; t < len; ++t) d_emb.row(seq[static_cast<std::size_t>(t)]) += d_x.row(t);
    }

    if (grads) {
      grads->clear();
      grads->emplace_back(std::move(d_emb));
      grads->emplace_back(std::move(d_wq));
      grads->emplace_back(std::move(d_wk));
      grads->emplace_back(std::move(d_wv));
      grads->emplace_back(std::move(d_wo));
    }
    return total * weight;
  }

  AttentionLmOptions options_;
  std::vector<std::vector<int>> tokens_;
  DenseMatrix embedding_;
  DenseMatrix wq_;
  DenseMatrix wk_;
  DenseMatrix wv_;
  DenseMatrix wo_;
};

}  // namespace

std::string task_kind_name(const TaskOptions& options) {
  struct Visitor {
    std::string operator()(const MatrixRegressionOptions&) const { return "matrix_regression"; }
    std::string operator()(const FactorizationOptions&) const { return "factorization"; }
    std::string operator()(const MlpOptions&) const { return "tiny_mlp"; }
    std::string operator()(const AttentionLmOptions&) const { return "tiny_attention_lm"; }
  };
  return std::visit(Visitor{}, options);
}

std::unique_ptr<Task> make_task(const TaskSpec& spec, bool verify_gradients) {
  struct Visitor {
    std::uint64_t seed;
    std::unique_ptr<Task> operator()(const MatrixRegressionOptions& o) const {
      return std::make_unique<MatrixRegression>(o, seed);
    }
    std::unique_ptr<Task> operator()(const FactorizationOptions& o) const {
      return std::make_unique<Factorization>(o, seed);
    }
    std::unique_ptr<Task> operator()(const MlpOptions& o) const { return std::make_unique<TinyMlp>(o, seed); }
    std::unique_ptr<Task> operator()(const AttentionLmOptions& o) const {
      return std::make_unique<TinyAttentionLm>(o, seed);
    }
  };
  auto task = std::visit(Visitor{spec.seed}, spec.options);
  if (verify_gradients) check_gradients(*task, spec.seed ^ 0x9E3779B97F4A7C15ULL);
  return task;
}

GradientCheckResult check_gradients(const Task& task, std::uint64_t seed, int points, double tolerance) {
  constexpr int kCoordinatesPerPoint = 24;
  auto rng = seeded_rng(seed, 99);
  std::normal_distribution<double> normal(0.0, 1.0);

  const std::vector<Parameter> base = task.initial_parameters();
  std::size_t total_entries = 0;
  for (const auto& p : base) total_entries += p.value.size();

  GradientCheckResult result;
  for (int point = 0; point < points; ++point) {
    std::vector<Parameter> params = base;
    for (auto& p : params) {
      for (double& v : p.value.data()) v += 0.3 * normal(rng);
    }
    const std::vector<DenseMatrix> analytic = task.gradients(params);
    if (analytic.size() != params.size()) throw GradientCheckFailed(task.name() + ": gradient count mismatch");

    std::uniform_int_distribution<std::size_t> pick(0, total_entries - 1);
    double diff_sq = 0.0;
    double ref_sq = 0.0;
    for (int c = 0; c < kCoordinatesPerPoint; ++c) {
      std::size_t flat = pick(rng);
      std::size_t which = 0;
      while (flat >= params[which].value.size()) flat -= params[which++].value.size();
      double& entry = params[which].value.data()[flat];
      const double saved = entry;
      const double h = 1e-5 * std::max(1.0, std::abs(saved));
      entry = saved + h;
      const double up = task.loss(params);
      entry = saved - h;
      const double down = task.loss(params);
      entry = saved;
      const double fd = (up - down) / (2.0 * h);
      const double an = analytic[which].data()[flat];
      diff_sq += (fd - an) * (fd - an);
      ref_sq += an * an;
    }
    const double err = std::sqrt(diff_sq) / std::max(std::sqrt(ref_sq), 1e-12);
    result.worst_relative_error = std::max(result.worst_relative_error, err);
    ++result.points;
    if (!(err <= tolerance)) {
      throw GradientCheckFailed(
          fmt::format("{}: gradient check failed at point {} (relative error {:.3g} > {:.3g})", task.name(), point,
                      err, tolerance));
    }
  }
  return result;
}

double regression_smoothness(const Task& task) {
  const auto* reg = dynamic_cast<const MatrixRegression*>(&task);
  if (!reg) throw InvalidArgument("regression_smoothness: task is not matrix_regression");
  return reg->smoothness();
}

}  // namespace rootopt
