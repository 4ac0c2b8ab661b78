#include "hbpn/hourglass.hpp"

#include <cmath>

namespace hbpn {

namespace {

constexpr float kLinearScale = 1.0f;
constexpr float kShortcutScale = 0.02f;
constexpr float kHeScale = 2.0f;

}  // namespace

HourGlassModule HourGlassModule::build(int depth, int base_channels,
                                       std::mt19937& rng) {
  if (depth < 1) throw ShapeError("hourglass: depth must be >= 1");
  if (base_channels < 1) throw ShapeError("hourglass: base channels >= 1");
  HourGlassModule m;
  m.depth = depth;
  m.base_channels = base_channels;
  for (int i = 0; i < depth; ++i) {
    m.dbp.push_back(BackProjectionBlock::make_dbp(base_channels << i, rng));
  }
  for (int j = 0; j < depth; ++j) {
    const int ch = base_channels << (depth - j);
    m.ubp.push_back(BackProjectionBlock::make_ubp(ch, rng));
    m.local_shortcuts.emplace_back(ch, ch, 1, 1, 0);
    m.local_shortcuts.back().init(rng, kShortcutScale);
  }
  m.coarse_head = nn::Conv2d(base_channels, 3, 3, 1, 1);
  m.coarse_head.init(rng, kLinearScale);
  // start the coarse prediction at mid-gray instead of zero
  std::fill(m.coarse_head.bias->data.begin(), m.coarse_head.bias->data.end(),
            0.5f);
  m.weight_head = nn::Conv2d(base_channels, 3, 3, 1, 1);
  m.weight_head.init(rng, kLinearScale);
  return m;
}

HourGlassModule::Out HourGlassModule::forward(ad::Tape* tape,
                                              const TensorPtr& features) const {
  if (features->shape.c != base_channels) {
    throw ShapeError("hourglass: expected " + std::to_string(base_channels) +
                     " input channels, got " + std::to_string(features->shape.c));
  }
  const int mult = 1 << depth;
  if (features->shape.h % mult != 0 || features->shape.w % mult != 0) {
    throw ShapeError("hourglass: spatial dims of " + features->shape.str() +
                     " not divisible by 2^T=" + std::to_string(mult) +
                     " (pad the input first)");
  }
  std::vector<TensorPtr> down_outputs;  // dbp[i] output, i = 0..T-1
  TensorPtr cur = features;
  for (int i = 0; i < depth; ++i) {
    cur = dbp_forward(tape, cur, dbp[i]);
    down_outputs.push_back(cur);
  }
  Out out;
  for (int j = 0; j < depth; ++j) {
    // scale-matched DBP output feeding this UBP through a 1x1 shortcut
    const TensorPtr& skip = down_outputs[depth - 1 - j];
    cur = ad::add(tape, cur, local_shortcuts[j].forward(tape, skip));
    TensorPtr preact;
    cur = ubp_forward(tape, cur, ubp[j], &preact);
    if (j == depth - 1) out.last_preact = preact;
  }
  out.features = cur;
  out.coarse = coarse_head.forward(tape, cur);
  out.weight_map = weight_head.forward(tape, cur);
  return out;
}

void HourGlassModule::collect(const std::string& prefix,
                              std::vector<nn::NamedParam>& out) const {
  for (std::size_t i = 0; i < dbp.size(); ++i) {
    dbp[i].collect(prefix + ".dbp" + std::to_string(i), out);
  }
  for (std::size_t j = 0; j < ubp.size(); ++j) {
    ubp[j].collect(prefix + ".ubp" + std::to_string(j), out);
    local_shortcuts[j].collect(prefix + ".lshort" + std::to_string(j), out);
  }
  coarse_head.collect(prefix + ".coarse_head", out);
  weight_head.collect(prefix + ".weight_head", out);
}

HBPNModel HBPNModel::build(const ModelConfig& cfg, std::uint64_t seed) {
  if (cfg.modules < 1) throw ShapeError("model: K must be >= 1");
  HBPNModel model;
  model.cfg = cfg;
  std::mt19937 rng(static_cast<std::mt19937::result_type>(seed));
  model.feature_head = nn::Conv2d(3, cfg.base_channels, 3, 1, 1);
  model.feature_head.init(rng, kHeScale);
  model.feature_act = nn::PReLU(cfg.base_channels);
  for (int k = 0; k < cfg.modules; ++k) {
    model.modules.push_back(
        HourGlassModule::build(cfg.depth, cfg.base_channels, rng));
  }
  for (int k = 0; k + 1 < cfg.modules; ++k) {
    model.global_shortcuts.emplace_back(cfg.base_channels, cfg.base_channels,
                                        1, 1, 0);
    model.global_shortcuts.back().init(rng, kShortcutScale);
  }
  if (cfg.head == HeadKind::Plain) {
    model.plain_head = nn::Conv2d(3 * cfg.modules, 3, 3, 1, 1);
    model.plain_head.init(rng, kLinearScale);
    std::fill(model.plain_head.bias->data.begin(),
              model.plain_head.bias->data.end(), 0.5f);
  }
  return model;
}

HBPNModel::ForwardOut HBPNModel::forward(ad::Tape* tape,
                                         const TensorPtr& input) const {
  if (input->shape.c != 3) {
    throw ShapeError("model: expected a 3-channel input, got " +
                     input->shape.str());
  }
  ForwardOut out;
  TensorPtr cur = feature_act.forward(tape, feature_head.forward(tape, input));
  for (std::size_t k = 0; k < modules.size(); ++k) {
    const TensorPtr module_in = cur;
    auto hg = modules[k].forward(tape, module_in);
    out.coarse.push_back(hg.coarse);
    out.weight_maps.push_back(hg.weight_map);
    out.last_preacts.push_back(hg.last_preact);
    if (k + 1 < modules.size()) {
      cur = ad::add(tape, hg.features,
                    global_shortcuts[k].forward(tape, module_in));
    }
  }
  out.sr = cfg.head == HeadKind::WR
               ? wr_reconstruct(tape, out.coarse, out.weight_maps)
               : plain_reconstruct(tape, out.coarse, plain_head);
  return out;
}

std::vector<nn::NamedParam> HBPNModel::named_params() const {
  std::vector<nn::NamedParam> out;
  feature_head.collect("feature_head", out);
  feature_act.collect("feature_head", out);
  for (std::size_t k = 0; k < modules.size(); ++k) {
    modules[k].collect("hg" + std::to_string(k), out);
  }
  for (std::size_t k = 0; k < global_shortcuts.size(); ++k) {
    global_shortcuts[k].collect("gshort" + std::to_string(k), out);
  }
  if (plain_head.valid()) plain_head.collect("plain_head", out);
  return out;
}

std::int64_t HBPNModel::parameter_count() const {
  std::int64_t total = 0;
  for (const auto& p : named_params()) total += p.tensor->numel();
  return total;
}

TensorPtr wr_reconstruct(ad::Tape* tape, const std::vector<TensorPtr>& coarse,
                         const std::vector<TensorPtr>& weight_maps) {
  if (coarse.empty() || coarse.size() != weight_maps.size()) {
    throw ShapeError("wr_reconstruct: need equal nonzero counts of coarse "
                     "results and weighting maps");
  }
  const Shape4 s = coarse[0]->shape;
  for (const auto& t : coarse) {
    if (!(t->shape == s)) throw ShapeError("wr_reconstruct: coarse shape mix");
  }
  for (const auto& t : weight_maps) {
    if (!(t->shape == s)) throw ShapeError("wr_reconstruct: map shape mix");
  }
  // view each (n,3,H,W) as one slab and stack the K maps along axis 0
  const Shape4 slab{1, s.n * s.c, s.h, s.w};
  std::vector<TensorPtr> wparts, cparts;
  for (std::size_t k = 0; k < coarse.size(); ++k) {
    wparts.push_back(ad::reshape(tape, weight_maps[k], slab));
    cparts.push_back(ad::reshape(tape, coarse[k], slab));
  }
  auto wstack = ad::concat(tape, wparts, 0);
  auto cstack = ad::concat(tape, cparts, 0);
  auto probs = ad::softmax_over_axis(tape, wstack, 0);
  auto mixed = ad::sum_axis0(tape, ad::mul(tape, probs, cstack));
  return ad::reshape(tape, mixed, s);
}

TensorPtr plain_reconstruct(ad::Tape* tape,
                            const std::vector<TensorPtr>& coarse,
                            const nn::Conv2d& head) {
  if (coarse.empty()) throw ShapeError("plain_reconstruct: no coarse inputs");
  if (head.spec.in_channels != static_cast<int>(coarse.size()) * 3 ||
      head.spec.out_channels != 3) {
    throw ShapeError("plain_reconstruct: head expects " +
                     std::to_string(head.spec.in_channels) +
                     " channels for K=" + std::to_string(coarse.size()));
  }
  auto cat = ad::concat(tape, coarse, 1);
  return head.forward(tape, cat);
}

double strictly_positive_percentage(const Tensor4& t) {
  std::int64_t pos = 0;
  for (const float v : t.data) {
    if (v > 0.0f) ++pos;
  }
  return 100.0 * static_cast<double>(pos) / static_cast<double>(t.numel());
}

std::vector<double> activation_percentage(const HBPNModel& model,
                                          const TensorPtr& input) {
  auto out = model.forward(nullptr, input);
  std::vector<double> result;
  for (const auto& pre : out.last_preacts) {
    result.push_back(strictly_positive_percentage(*pre));
  }
  return result;
}

}  // namespace hbpn
