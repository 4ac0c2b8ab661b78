#include "hbpn/optim.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "hbpn/kernels.hpp"

namespace hbpn::optim {

Adam::Adam(std::vector<TensorPtr> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  if (cfg_.lr <= 0.0f) {
    throw std::invalid_argument("Adam: learning rate must be positive");
  }
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    p->ensure_grad();
    m_.emplace_back(p->data.size(), 0.0f);
    v_.emplace_back(p->data.size(), 0.0f);
  }
}

bool Adam::step() {
  ++t_;
  for (const auto& p : params_) {
    if (!kernels::all_finite(p->grad.data(), p->numel())) {
      ++rejected_;
      std::fprintf(stderr,
                   "adam: non-finite gradient at step %llu, update skipped\n",
                   static_cast<unsigned long long>(t_));
      return false;
    }
  }
  const float bc1 = 1.0f - std::pow(cfg_.beta1, static_cast<float>(t_));
  const float bc2 = 1.0f - std::pow(cfg_.beta2, static_cast<float>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor4& p = *params_[i];
    float* m = m_[i].data();
    float* v = v_[i].data();
    const std::int64_t count = p.numel();
    float* theta = p.data.data();
    const float* grad = p.grad.data();
    const float lr = cfg_.lr, b1 = cfg_.beta1, b2 = cfg_.beta2, eps = cfg_.eps,
                wd = cfg_.weight_decay;
#pragma omp parallel for schedule(static)
    for (std::int64_t j = 0; j < count; ++j) {
      const float g = grad[j] + wd * theta[j];
      m[j] = b1 * m[j] + (1.0f - b1) * g;
      v[j] = b2 * v[j] + (1.0f - b2) * g * g;
      const float mhat = m[j] / bc1;
      const float vhat = v[j] / bc2;
      theta[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
  return true;
}

void Adam::zero_grad() {
  for (const auto& p : params_) p->zero_grad();
}

void Adam::restore(std::uint64_t t, std::vector<std::vector<float>> m,
                   std::vector<std::vector<float>> v) {
  if (m.size() != params_.size() || v.size() != params_.size()) {
    throw std::invalid_argument("Adam: moment count mismatch on restore");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (m[i].size() != params_[i]->data.size() ||
        v[i].size() != params_[i]->data.size()) {
      throw std::invalid_argument("Adam: moment shape mismatch on restore");
    }
  }
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace hbpn::optim
