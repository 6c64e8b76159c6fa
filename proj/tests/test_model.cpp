#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <filesystem>
#include <functional>
#include <vector>

#include "laeh/model.hpp"
#include "laeh/net.hpp"
#include "laeh/objective.hpp"

using laeh::DenseMatrix;
using laeh::FeedForwardNet;
using laeh::SeededRng;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("laeh_model_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

std::vector<double*> net_param_refs(FeedForwardNet& net) {
  std::vector<double*> refs;
  for (auto& layer : net.layers()) {
    for (std::size_t i = 0; i < layer.weight.size(); ++i)
      refs.push_back(layer.weight.data() + i);
    for (std::size_t i = 0; i < layer.bias.size(); ++i)
      refs.push_back(layer.bias.data() + i);
  }
  return refs;
}

std::vector<double> net_grad_values(const laeh::NetGradients& g) {
  std::vector<double> values;
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    for (std::size_t i = 0; i < g.weights[l].size(); ++i)
      values.push_back(g.weights[l].data()[i]);
    for (std::size_t i = 0; i < g.biases[l].size(); ++i)
      values.push_back(g.biases[l].data()[i]);
  }
  return values;
}

}  // namespace

TEST_CASE("init_model is seed-deterministic with documented shapes",
          "[model]") {
  SeededRng r1(7), r2(7);
  auto m1 = laeh::init_model(10, 8, 6, 5, 64, {12, 12}, 20, r1);
  auto m2 = laeh::init_model(10, 8, 6, 5, 64, {12, 12}, 20, r2);
  CHECK(m1.c_proj == m2.c_proj);
  CHECK(m1.codes == m2.codes);
  CHECK(m1.image_net.layers()[0].weight == m2.image_net.layers()[0].weight);

  CHECK(m1.codes.rows() == 64);
  CHECK(m1.codes.cols() == 20);
  CHECK(m1.image_net.n_layers() == 3);  // two hidden + output
  CHECK(m1.image_net.input_dim() == 10);
  CHECK(m1.image_net.output_dim() == 5);
  CHECK(m1.transform_net.input_dim() == 6);
  for (std::size_t i = 0; i < m1.codes.size(); ++i)
    CHECK((m1.codes.data()[i] == 1.0 || m1.codes.data()[i] == -1.0));
}

TEST_CASE("forward_features zero weights give zero features", "[model]") {
  SeededRng rng(8);
  auto model = laeh::init_model(4, 3, 2, 5, 8, {6}, 10, rng);
  for (auto* net :
       {&model.image_net, &model.text_net, &model.transform_net})
    for (auto& layer : net->layers()) {
      layer.weight *= 0.0;
      layer.bias *= 0.0;
    }
  DenseMatrix x1 = rng.gaussian_matrix(4, 3);
  DenseMatrix x2 = rng.gaussian_matrix(3, 3);
  DenseMatrix v = rng.gaussian_matrix(2, 3);
  auto cache = laeh::forward_features(model, x1, x2, v);
  CHECK(laeh::frobenius_sq(cache.f1()) == 0.0);
  CHECK(laeh::frobenius_sq(cache.f2()) == 0.0);
  CHECK(laeh::frobenius_sq(cache.fl()) == 0.0);
}

TEST_CASE("forward matches hand-composed two-layer computation", "[model]") {
  SeededRng rng(9);
  FeedForwardNet net(3, {4}, 2, rng);
  DenseMatrix x = rng.gaussian_matrix(3, 1);
  auto cache = net.forward(x);

  // By hand: relu(W0 x + b0), then W1 h + b1.
  const auto& l0 = net.layers()[0];
  const auto& l1 = net.layers()[1];
  std::vector<double> h(4);
  for (std::size_t r = 0; r < 4; ++r) {
    double s = l0.bias(r, 0);
    for (std::size_t c = 0; c < 3; ++c) s += l0.weight(r, c) * x(c, 0);
    h[r] = s > 0.0 ? s : 0.0;
  }
  for (std::size_t r = 0; r < 2; ++r) {
    double s = l1.bias(r, 0);
    for (std::size_t c = 0; c < 4; ++c) s += l1.weight(r, c) * h[c];
    CHECK_THAT(cache.output()(r, 0), Catch::Matchers::WithinAbs(s, 1e-14));
  }
}

TEST_CASE("forward is pure and column-wise", "[model]") {
  SeededRng rng(10);
  FeedForwardNet net(4, {5, 5}, 3, rng);
  DenseMatrix x(4, 2);
  for (std::size_t r = 0; r < 4; ++r) x(r, 0) = x(r, 1) = rng.gaussian();
  auto cache = net.forward(x);
  for (std::size_t r = 0; r < 3; ++r)
    CHECK(cache.output()(r, 0) == cache.output()(r, 1));

  auto again = net.forward(x);
  CHECK(again.output() == cache.output());
}

TEST_CASE("backward zero upstream gradient gives zero parameter gradients",
          "[model]") {
  SeededRng rng(11);
  FeedForwardNet net(3, {4}, 2, rng);
  DenseMatrix x = rng.gaussian_matrix(3, 5);
  auto cache = net.forward(x);
  auto grads = net.backward(cache, DenseMatrix(2, 5));
  for (const auto& w : grads.weights) CHECK(laeh::frobenius_sq(w) == 0.0);
  for (const auto& b : grads.biases) CHECK(laeh::frobenius_sq(b) == 0.0);
}

TEST_CASE("backward of a single identity layer is grad_out times input^T",
          "[model]") {
  SeededRng rng(12);
  FeedForwardNet net(3, {}, 2, rng);
  REQUIRE(net.n_layers() == 1);
  REQUIRE(net.layers()[0].activation == laeh::Activation::kIdentity);
  DenseMatrix x = rng.gaussian_matrix(3, 4);
  DenseMatrix up = rng.gaussian_matrix(2, 4);
  auto cache = net.forward(x);
  auto grads = net.backward(cache, up);
  DenseMatrix want = laeh::matmul(up, laeh::transpose(x));
  for (std::size_t i = 0; i < want.size(); ++i)
    CHECK_THAT(grads.weights[0].data()[i],
               Catch::Matchers::WithinAbs(want.data()[i], 1e-12));
}

TEST_CASE("backward matches finite differences on a random two-layer net",
          "[model]") {
  SeededRng rng(13);
  FeedForwardNet net(3, {4}, 2, rng);
  DenseMatrix x = rng.gaussian_matrix(3, 5);
  // Scalar loss: 0.5 |output - T|^2 so grad wrt output is (output - T).
  DenseMatrix target = rng.gaussian_matrix(2, 5);

  auto loss = [&]() {
    auto out = net.forward(x).output();
    return 0.5 * laeh::frobenius_sq(out - target);
  };
  auto cache = net.forward(x);
  auto grads = net.backward(cache, cache.output() - target);

  const double err = laeh::finite_diff_check(loss, net_param_refs(net),
                                             net_grad_values(grads), 1e-5);
  CHECK(err < 1e-6);
}

TEST_CASE("hash_functions sums common and individual parts", "[model]") {
  SeededRng rng(14);
  auto model = laeh::init_model(4, 4, 4, 6, 5, {4}, 3, rng);

  auto [p1, p2] = laeh::hash_functions(model);
  for (std::size_t i = 0; i < p1.size(); ++i) {
    CHECK(p1.data()[i] == model.c_proj.data()[i] + model.d1_proj.data()[i]);
    CHECK(p2.data()[i] == model.c_proj.data()[i] + model.d2_proj.data()[i]);
  }

  model.d1_proj *= 0.0;
  auto [q1, q2] = laeh::hash_functions(model);
  CHECK(q1 == model.c_proj);

  model.c_proj *= 0.0;
  auto [z1, z2] = laeh::hash_functions(model);
  CHECK(z1 == model.d1_proj);
  CHECK(z2 == model.d2_proj);
}

TEST_CASE("encode determinism, shape, and modality validation", "[model]") {
  SeededRng rng(15);
  auto model = laeh::init_model(4, 3, 2, 5, 7, {6}, 3, rng);
  DenseMatrix x1 = rng.gaussian_matrix(4, 9);
  DenseMatrix codes = laeh::encode(model, x1, 1);
  CHECK(codes.rows() == 7);
  CHECK(codes.cols() == 9);
  for (std::size_t i = 0; i < codes.size(); ++i)
    CHECK((codes.data()[i] == 1.0 || codes.data()[i] == -1.0));
  CHECK(laeh::encode(model, x1, 1) == codes);
  CHECK_THROWS_WITH(laeh::encode(model, x1, 3),
                    Catch::Matchers::ContainsSubstring("modality"));
}

TEST_CASE("encode bits flip exactly where the projected value flips sign",
          "[model]") {
  SeededRng rng(16);
  DenseMatrix m = rng.gaussian_matrix(4, 6);
  DenseMatrix s1 = laeh::sign_matrix(m);
  m(2, 3) = -m(2, 3);
  DenseMatrix s2 = laeh::sign_matrix(m);
  std::size_t diffs = 0;
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 6; ++c)
      if (s1(r, c) != s2(r, c)) {
        ++diffs;
        CHECK(r == 2);
        CHECK(c == 3);
      }
  CHECK(diffs == 1);
}

TEST_CASE("checkpoint save/load round-trips bit-exactly", "[model]") {
  TempDir dir;
  SeededRng rng(17);
  auto model = laeh::init_model(6, 5, 4, 8, 16, {7, 3}, 11, rng);
  model.normalize_text = true;
  laeh::save_model(model, dir.path.string());
  auto back = laeh::load_model(dir.path.string());

  CHECK(back.normalize_text == model.normalize_text);
  CHECK(back.c_proj == model.c_proj);
  CHECK(back.d1_proj == model.d1_proj);
  CHECK(back.d2_proj == model.d2_proj);
  CHECK(back.codes == model.codes);
  REQUIRE(back.image_net.n_layers() == model.image_net.n_layers());
  for (auto nets : {std::make_pair(&back.image_net, &model.image_net),
                    std::make_pair(&back.text_net, &model.text_net),
                    std::make_pair(&back.transform_net,
                                   &model.transform_net)}) {
    for (std::size_t l = 0; l < nets.second->n_layers(); ++l) {
      CHECK(nets.first->layers()[l].weight == nets.second->layers()[l].weight);
      CHECK(nets.first->layers()[l].bias == nets.second->layers()[l].bias);
      CHECK(nets.first->layers()[l].activation ==
            nets.second->layers()[l].activation);
    }
  }

  // Behavioral equality on fresh inputs.
  DenseMatrix x = rng.gaussian_matrix(6, 4);
  CHECK(laeh::encode(back, x, 1) == laeh::encode(model, x, 1));
}

TEST_CASE("normalize_text flag changes only the text path", "[model]") {
  SeededRng rng(18);
  auto model = laeh::init_model(4, 4, 3, 5, 6, {4}, 3, rng);
  DenseMatrix x = rng.gaussian_matrix(4, 5);
  model.normalize_text = false;
  DenseMatrix plain = laeh::encode(model, x, 2);
  model.normalize_text = true;
  DenseMatrix normed = laeh::encode(model, x, 2);
  // Same shapes; values may differ. Image path identical either way.
  CHECK(plain.rows() == normed.rows());
  DenseMatrix img1 = laeh::encode(model, x, 1);
  model.normalize_text = false;
  CHECK(laeh::encode(model, x, 1) == img1);

  // Per-column normalization leaves already-unit columns untouched.
  DenseMatrix unit(2, 1);
  unit(0, 0) = 0.6;
  unit(1, 0) = 0.8;
  CHECK(laeh::l2_normalize_cols(unit) == unit);
}
