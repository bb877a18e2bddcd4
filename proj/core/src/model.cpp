#include "inb/model.hpp"

#include "inb/errors.hpp"

namespace inb {
namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

}  // namespace

template <typename T>
std::size_t parameter_count(const Layer<T>& layer) {
  return std::visit(Overloaded{[](const MaxPool<T>&) -> std::size_t { return 0; },
                               [](const GlobalAvgPool<T>&) -> std::size_t { return 0; },
                               [](const auto& l) -> std::size_t { return l.parameter_count(); }},
                    layer);
}

template <typename T>
std::size_t parameter_count(const Model<T>& model) {
  std::size_t total = 0;
  for (const auto& layer : model.layers) total += parameter_count(layer);
  return total;
}

template <typename T>
std::size_t grouped_parameter_count(const Model<T>& model) {
  std::size_t total = 0;
  for (const auto& layer : model.layers)
    if (is_grouped(layer)) total += parameter_count(layer);
  return total;
}

template <typename T>
bool has_grouped_layers(const Model<T>& model) {
  for (const auto& layer : model.layers)
    if (is_grouped(layer)) return true;
  return false;
}

template <typename T>
std::vector<GroupSpec> group_specs(const Model<T>& model) {
  std::vector<GroupSpec> specs;
  for (const auto& layer : model.layers) {
    if (const auto* d = std::get_if<DenseGrouped<T>>(&layer)) specs.push_back(d->spec());
    if (const auto* c = std::get_if<ConvGrouped<T>>(&layer)) specs.push_back(c->spec());
  }
  return specs;
}

template <typename T>
std::vector<MaskBatch> sample_masks(const Model<T>& model, std::size_t batch, Rng& rng) {
  std::vector<MaskBatch> masks;
  for (const auto& spec : group_specs(model)) masks.push_back(sample_mask(spec, batch, rng));
  return masks;
}

template <typename T>
Tensor<T> forward_train(Model<T>& model, const Tensor<T>& input, const std::vector<MaskBatch>& masks) {
  std::size_t next_mask = 0;
  auto take_mask = [&]() -> const MaskBatch& {
    if (next_mask >= masks.size()) {
      throw ShapeError("forward_train: " + std::to_string(masks.size()) + " masks for a model with more grouped layers");
    }
    return masks[next_mask++];
  };
  Tensor<T> x = input;
  for (auto& layer : model.layers) {
    x = std::visit(Overloaded{[&](DenseGrouped<T>& l) { return l.forward_train(x, take_mask()); },
                              [&](ConvGrouped<T>& l) { return l.forward_train(x, take_mask()); },
                              [&](auto& l) { return l.forward_train(x); }},
                   layer);
  }
  if (next_mask != masks.size()) {
    throw ShapeError("forward_train: " + std::to_string(masks.size()) + " masks for " + std::to_string(next_mask) +
                     " grouped layers");
  }
  return x;
}

template <typename T>
void backward(Model<T>& model, const Tensor<T>& logits_grad) {
  Tensor<T> g = logits_grad;
  for (std::size_t i = model.layers.size(); i-- > 0;) {
    const bool need_input = i > 0;
    g = std::visit([&](auto& l) { return l.backward(g, need_input); }, model.layers[i]);
  }
}

template <typename T>
std::vector<ParamRef<T>> parameters(Model<T>& model) {
  std::vector<ParamRef<T>> params;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    std::visit(Overloaded{[](MaxPool<T>&) {}, [](GlobalAvgPool<T>&) {},
                          [&](auto& l) {
                            for (auto p : l.parameters()) {
                              p.name = "layer" + std::to_string(i) + "." + p.name;
                              params.push_back(std::move(p));
                            }
                          }},
               model.layers[i]);
  }
  return params;
}

template <typename T>
Tensor<T> forward(const Model<T>& model, const Tensor<T>& input) {
  Tensor<T> x = input;
  for (const auto& layer : model.layers) {
    x = std::visit(Overloaded{[](const DenseGrouped<T>&) -> Tensor<T> {
                                throw StateError("inference forward on a grouped layer; combine the model first");
                              },
                              [](const ConvGrouped<T>&) -> Tensor<T> {
                                throw StateError("inference forward on a grouped layer; combine the model first");
                              },
                              [&](const auto& l) { return l.forward(x); }},
                   layer);
  }
  return x;
}

template <typename T>
Tensor<T> forward_expected(const Model<T>& model, const Tensor<T>& input) {
  Tensor<T> x = input;
  for (const auto& layer : model.layers) {
    x = std::visit(
        Overloaded{[&](const DenseGrouped<T>& l) {
                     const auto pre = l.member_pre_activations(x);  // [B,k,n]
                     const std::size_t batch = pre.dim(0), k = pre.dim(1), n = pre.dim(2);
                     Tensor<T> out({batch, k});
                     for (std::size_t b = 0; b < batch; ++b) {
                       Tensor<T> slice({k, n}, std::vector<T>(pre.data().begin() + static_cast<std::ptrdiff_t>(b * k * n),
                                                              pre.data().begin() + static_cast<std::ptrdiff_t>((b + 1) * k * n)));
                       const auto e = exact_expected_output(slice, l.spec(), l.activation());
                       std::copy(e.data().begin(), e.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(b * k));
                     }
                     return out;
                   },
                   [&](const ConvGrouped<T>& l) {
                     const auto pre = l.member_pre_activations(x);  // [B,k*n,H,W]
                     const std::size_t batch = pre.dim(0), k = l.spec().group_count, n = l.spec().group_size;
                     const std::size_t area = pre.dim(2) * pre.dim(3);
                     Tensor<T> out({batch, k, pre.dim(2), pre.dim(3)});
                     Tensor<T> slice({k, n});
                     for (std::size_t b = 0; b < batch; ++b)
                       for (std::size_t s = 0; s < area; ++s) {
                         for (std::size_t c = 0; c < k * n; ++c) slice[c] = pre[(b * k * n + c) * area + s];
                         const auto e = exact_expected_output(slice, l.spec(), l.activation());
                         for (std::size_t i = 0; i < k; ++i) out[(b * k + i) * area + s] = e[i];
                       }
                     return out;
                   },
                   [&](const auto& l) { return l.forward(x); }},
        layer);
  }
  return x;
}

template <typename T>
Model<T> combine_model(const Model<T>& model) {
  Model<T> out{model.architecture, model.input_shape, {}};
  for (const auto& layer : model.layers) {
    out.layers.push_back(std::visit(Overloaded{[](const DenseGrouped<T>& l) -> Layer<T> { return combine_layer(l); },
                                               [](const ConvGrouped<T>& l) -> Layer<T> { return combine_layer(l); },
                                               [](const auto& l) -> Layer<T> { return l; }},
                                    layer));
  }
  return out;
}

template <typename T>
Model<T> single_member_model(const Model<T>& model) {
  Model<T> out{model.architecture, model.input_shape, {}};
  for (const auto& layer : model.layers) {
    out.layers.push_back(std::visit(Overloaded{[](const DenseGrouped<T>& l) -> Layer<T> { return l.single_member(0); },
                                               [](const ConvGrouped<T>& l) -> Layer<T> { return l.single_member(0); },
                                               [](const auto& l) -> Layer<T> { return l; }},
                                    layer));
  }
  return out;
}

template <typename T>
void average_model(Model<T>& model) {
  for (auto& layer : model.layers) {
    if (auto* d = std::get_if<DenseGrouped<T>>(&layer)) d->average();
    if (auto* c = std::get_if<ConvGrouped<T>>(&layer)) c->average();
  }
}

template <typename T>
bool members_identical(const Model<T>& model) {
  for (const auto& layer : model.layers) {
    if (const auto* d = std::get_if<DenseGrouped<T>>(&layer); d && !d->members_identical()) return false;
    if (const auto* c = std::get_if<ConvGrouped<T>>(&layer); c && !c->members_identical()) return false;
  }
  return true;
}

#define INB_INSTANTIATE_MODEL(T)                                                                    \
  template std::size_t parameter_count(const Layer<T>&);                                            \
  template std::size_t parameter_count(const Model<T>&);                                            \
  template std::size_t grouped_parameter_count(const Model<T>&);                                    \
  template bool has_grouped_layers(const Model<T>&);                                                \
  template std::vector<GroupSpec> group_specs(const Model<T>&);                                     \
  template std::vector<MaskBatch> sample_masks(const Model<T>&, std::size_t, Rng&);                 \
  template Tensor<T> forward_train(Model<T>&, const Tensor<T>&, const std::vector<MaskBatch>&);     \
  template void backward(Model<T>&, const Tensor<T>&);                                              \
  template std::vector<ParamRef<T>> parameters(Model<T>&);                                          \
  template Tensor<T> forward(const Model<T>&, const Tensor<T>&);                                    \
  template Tensor<T> forward_expected(const Model<T>&, const Tensor<T>&);                           \
  template Model<T> combine_model(const Model<T>&);                                                 \
  template Model<T> single_member_model(const Model<T>&);                                           \
  template void average_model(Model<T>&);                                                           \
  template bool members_identical(const Model<T>&);

INB_INSTANTIATE_MODEL(float)
INB_INSTANTIATE_MODEL(double)

#undef INB_INSTANTIATE_MODEL

}  // namespace inb
