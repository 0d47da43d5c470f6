#include <benchmark/benchmark.h>

#include "mrprime/cs.hpp"
#include "mrprime/fft.hpp"
#include "mrprime/kspace.hpp"
#include "mrprime/masks.hpp"
#include "mrprime/model.hpp"
#include "mrprime/ops.hpp"
#include "mrprime/phantom.hpp"
#include "mrprime/rng.hpp"
#include "mrprime/tensor.hpp"

namespace {

using namespace mrprime;

Image random_image(int h, int w, std::uint64_t seed) {
  Image img(h, w);
  Rng rng(seed);
  for (auto& p : img.px) p = rng.uniform();
  return img;
}

Tensor random_tensor(std::vector<int> shape, std::uint64_t seed, bool requires_grad = false) {
  Tensor t(std::move(shape), requires_grad);
  Rng rng(seed);
  for (auto& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

void BM_fft2c(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Image img = random_image(n, n, 7);
  for (auto _ : state) {
    auto k = fft2c(img);
    benchmark::DoNotOptimize(k.v.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_fft2c)->Arg(64)->Arg(96)->Arg(256); // 96 exercises the non-power-of-two path

void BM_conv2d_forward(benchmark::State& state) {
  const Tensor x = random_tensor({1, 16, 32, 32}, 1);
  const Tensor w = random_tensor({16, 16, 3, 3}, 2);
  const Tensor b = random_tensor({16}, 3);
  for (auto _ : state) {
    Tensor y = ops::conv2d(nullptr, x, w, b);
    benchmark::DoNotOptimize(y.data().data());
  }
}
BENCHMARK(BM_conv2d_forward);

void BM_conv2d_backward(benchmark::State& state) {
  const Tensor x = random_tensor({1, 16, 32, 32}, 1, true);
  const Tensor w = random_tensor({16, 16, 3, 3}, 2, true);
  const Tensor b = random_tensor({16}, 3, true);
  for (auto _ : state) {
    Tape tape;
    Tensor y = ops::conv2d(&tape, x, w, b);
    Tensor target(y.shape());
    Tensor loss = ops::l1_loss(&tape, y, target);
    tape.backward(loss);
    benchmark::DoNotOptimize(loss.item());
  }
}
BENCHMARK(BM_conv2d_backward);

void BM_unet_forward(benchmark::State& state) {
  const UnetModel model(UnetConfig{2, 3, 16}, 11);
  const Tensor input = random_tensor({1, 2, 64, 64}, 4);
  for (auto _ : state) {
    Tensor out = model.forward(nullptr, input);
    benchmark::DoNotOptimize(out.data().data());
  }
}
BENCHMARK(BM_unet_forward);

void BM_tv_denoise(benchmark::State& state) {
  const Image img = random_image(64, 64, 9);
  for (auto _ : state) {
    Image out = tv_denoise(img, 0.05, 25);
    benchmark::DoNotOptimize(out.px.data());
  }
}
BENCHMARK(BM_tv_denoise);

void BM_gen_mask(benchmark::State& state) {
  MaskSpec spec;
  spec.width = 368;
  spec.acceleration = 4;
  spec.center_fraction = 0.08;
  spec.pattern = MaskPattern::RandomUniform;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    spec.seed = seed++;
    Mask m = gen_mask(spec);
    benchmark::DoNotOptimize(m.num_sampled());
  }
}
BENCHMARK(BM_gen_mask);

void BM_cs_reconstruct(benchmark::State& state) {
  const PhantomSample s = gen_phantom(Family::A, 64, 64, 5);
  MaskSpec spec;
  spec.width = 64;
  spec.acceleration = 4;
  spec.center_fraction = 0.08;
  spec.pattern = MaskPattern::EquispacedFixed;
  const Mask mask = gen_mask(spec);
  const ComplexGrid k_us = apply_forward_model(s.image, mask, 0.0, 0);
  CsConfig cfg;
  cfg.outer_iters = 10;
  cfg.prox_inner_iters = 10;
  for (auto _ : state) {
    Image out = cs_reconstruct(k_us, mask, cfg);
    benchmark::DoNotOptimize(out.px.data());
  }
}
BENCHMARK(BM_cs_reconstruct);

} // namespace

BENCHMARK_MAIN();
