#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "nicp/neural/adamw.hpp"
#include "nicp/neural/network.hpp"
#include "nicp/neural/serialize.hpp"
#include "nicp/neural/set_abstraction.hpp"

using namespace nicp::neural;

namespace {

NetworkSpec tiny_spec(int nodes = 3) {
  NetworkSpec s;
  s.stages = {{16, 0.3f, {8, 8}}, {4, 0.8f, {16}}};
  s.head = {24, 6 * nodes};
  s.gradient_channels = 6 * nodes;
  s.last_layer_init = 0.3f;  // large enough for visible outputs
  return s;
}

NetworkInput random_input(int points, int grad, std::mt19937_64& rng) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  NetworkInput in;
  in.positions.resize(3, points);
  in.residuals.resize(3, points);
  for (int i = 0; i < points; ++i) {
    for (int r = 0; r < 3; ++r) {
      in.positions(r, i) = 0.4f * n(rng);
      in.residuals(r, i) = 0.05f * n(rng);
    }
  }
  in.gradient.resize(grad);
  for (int i = 0; i < grad; ++i) in.gradient[i] = n(rng);
  return in;
}

NetworkInput select_columns(const NetworkInput& in, const std::vector<int>& cols) {
  NetworkInput out;
  out.positions.resize(3, static_cast<Eigen::Index>(cols.size()));
  out.residuals.resize(3, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out.positions.col(static_cast<Eigen::Index>(i)) = in.positions.col(cols[i]);
    out.residuals.col(static_cast<Eigen::Index>(i)) = in.residuals.col(cols[i]);
  }
  out.gradient = in.gradient;
  return out;
}

}  // namespace

TEST_CASE("dense layer equals explicit loops") {
  std::mt19937_64 rng(1);
  std::vector<float> data(5 * 4 + 5);
  for (auto& v : data) v = uniform(rng, -1.0f, 1.0f);
  const LayerView layer{data.data(), 4, 5};
  MatrixXf x(4, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = uniform(rng, -1.0f, 1.0f);
  const MatrixXf y = dense_forward(layer, x);
  for (int c = 0; c < 3; ++c) {
    for (int o = 0; o < 5; ++o) {
      float s = data[20 + static_cast<std::size_t>(o)];
      for (int i = 0; i < 4; ++i) s += data[static_cast<std::size_t>(i * 5 + o)] * x(i, c);
      CHECK(y(o, c) == doctest::Approx(s).epsilon(1e-6));
    }
  }
  CHECK(leaky_relu(-2.0f, 0.2f) == doctest::Approx(-0.4f));
  CHECK(leaky_relu(3.0f, 0.2f) == 3.0f);
  CHECK(leaky_relu_grad(-1.0f, 0.2f) == 0.2f);
}

TEST_CASE("neural FPS is a greedy max-min selection from the most central point") {
  std::mt19937_64 rng(2);
  Matrix3Xf xyz(3, 200);
  for (Eigen::Index i = 0; i < xyz.size(); ++i) xyz.data()[i] = uniform(rng, -1.0f, 1.0f);
  const MatrixXf none(0, 200);
  const auto picked = farthest_point_sampling(xyz, none, 25);
  const Eigen::Vector3f center = 0.5f * (xyz.rowwise().minCoeff() + xyz.rowwise().maxCoeff());
  int start = 0;
  for (int i = 1; i < 200; ++i) {
    if ((xyz.col(i) - center).squaredNorm() < (xyz.col(start) - center).squaredNorm()) start = i;
  }
  CHECK(picked.front() == start);
  for (std::size_t k = 1; k < picked.size(); ++k) {
    float best = -1.0f;
    for (int i = 0; i < 200; ++i) {
      float d = std::numeric_limits<float>::infinity();
      for (std::size_t j = 0; j < k; ++j) d = std::min(d, (xyz.col(i) - xyz.col(picked[j])).squaredNorm());
      best = std::max(best, d);
    }
    float mine = std::numeric_limits<float>::infinity();
    for (std::size_t j = 0; j < k; ++j) mine = std::min(mine, (xyz.col(picked[k]) - xyz.col(picked[j])).squaredNorm());
    CHECK(mine == doctest::Approx(best).epsilon(1e-5));
  }
  CHECK_THROWS_AS(farthest_point_sampling(xyz, none, 201), std::invalid_argument);
}

TEST_CASE("ball grouping keeps the nearest distinct points within the radius") {
  std::mt19937_64 rng(3);
  Matrix3Xf xyz(3, 300);
  for (Eigen::Index i = 0; i < xyz.size(); ++i) xyz.data()[i] = uniform(rng, -1.0f, 1.0f);
  const MatrixXf none(0, 300);
  const std::vector<int> centers = {0, 17, 123};
  const auto g = group_neighbors(xyz, none, centers, 0.5f, 8);
  for (int c = 0; c < g.group_count(); ++c) {
    std::vector<std::pair<float, int>> inside;
    for (int i = 0; i < 300; ++i) {
      const float d = (xyz.col(i) - xyz.col(centers[static_cast<std::size_t>(c)])).squaredNorm();
      if (d <= 0.25f) inside.emplace_back(d, i);
    }
    std::sort(inside.begin(), inside.end());
    const int expected = std::min<int>(8, static_cast<int>(inside.size()));
    REQUIRE(g.offsets[c + 1] - g.offsets[c] == expected);
    for (int k = 0; k < expected; ++k) CHECK(g.source[static_cast<std::size_t>(g.offsets[c] + k)] == inside[k].second);
  }
}

TEST_CASE("fresh network output is near zero") {
  auto spec = NetworkSpec::standard(8);
  const UpdateNetwork net(spec, 5);
  std::mt19937_64 rng(4);
  const auto in = random_input(600, spec.gradient_channels, rng);
  const VectorXf out = net.forward(in);
  CHECK(out.size() == 48);
  CHECK(out.allFinite());
  CHECK(out.cwiseAbs().maxCoeff() < 1e-6f * 512 * 10);
}

TEST_CASE("the standard network has the documented size") {
  const UpdateNetwork net(NetworkSpec::standard(125), 0);
  CHECK(net.parameter_count() == 2001790);
  CHECK(net.spec().output_dim() == 750);
}

TEST_CASE("forward pass ignores point order and duplicates") {
  const auto spec = tiny_spec();
  const UpdateNetwork net(spec, 6);
  std::mt19937_64 rng(7);
  const auto in = random_input(120, spec.gradient_channels, rng);
  const VectorXf base = net.forward(in);
  CHECK(base.cwiseAbs().maxCoeff() > 1e-4f);

  std::vector<int> perm(120);
  std::iota(perm.begin(), perm.end(), 0);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(perm.begin(), perm.end(), rng);
    CHECK(net.forward(select_columns(in, perm)) == base);
  }
  std::vector<int> dup = perm;
  for (int i = 0; i < 40; ++i) dup.push_back(perm[static_cast<std::size_t>(i * 3 % 120)]);
  std::shuffle(dup.begin(), dup.end(), rng);
  CHECK(net.forward(select_columns(in, dup)) == base);
}

TEST_CASE("disabled inputs do not influence the output") {
  auto spec = tiny_spec();
  spec.use_residual = false;
  spec.use_gradient = false;
  const UpdateNetwork net(spec, 8);
  std::mt19937_64 rng(9);
  auto in = random_input(80, spec.gradient_channels, rng);
  const VectorXf a = net.forward(in);
  in.residuals *= 3.0f;
  in.gradient.setRandom();
  CHECK(net.forward(in) == a);

  auto full = tiny_spec();
  const UpdateNetwork with_inputs(full, 8);
  CHECK(with_inputs.parameters() == net.parameters());
  CHECK(with_inputs.forward(in) != a);
}

TEST_CASE("backward pass matches finite differences") {
  auto spec = tiny_spec();
  spec.residual_scale = 5.0f;
  UpdateNetwork net(spec, 10);
  std::mt19937_64 rng(11);
  const auto in = random_input(60, spec.gradient_channels, rng);
  VectorXf upstream(spec.output_dim());
  for (Eigen::Index i = 0; i < upstream.size(); ++i) upstream[i] = uniform(rng, -1.0f, 1.0f);

  Tape tape;
  net.forward(in, &tape);
  VectorXf grad;
  net.backward(tape, upstream, grad);
  REQUIRE(grad.size() == static_cast<Eigen::Index>(net.parameter_count()));

  auto loss = [&](const UpdateNetwork& n) {
    const VectorXf out = n.forward(in);
    double s = 0.0;
    for (Eigen::Index i = 0; i < out.size(); ++i) s += static_cast<double>(out[i]) * upstream[i];
    return s;
  };
  int probed = 0, good = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto i = std::uniform_int_distribution<Eigen::Index>(0, grad.size() - 1)(rng);
    UpdateNetwork a = net, b = net;
    const float h = 1e-2f;
    a.parameters()[i] += h;
    b.parameters()[i] -= h;
    const double fd = (loss(a) - loss(b)) / (2.0 * h);
    if (std::abs(fd) < 1e-4 && std::abs(grad[i]) < 1e-4) continue;
    ++probed;
    good += std::abs(fd - grad[i]) <= 1e-2 * std::max(std::abs(fd), 1e-3);
  }
  CHECK(probed > 20);
  // Kinks of the rectifier can spoil an occasional probe.
  CHECK(good >= probed - 2);
  CHECK_THROWS_AS(net.backward(Tape{}, upstream, grad), std::logic_error);
}

TEST_CASE("AdamW follows the hand-written recurrence") {
  AdamWConfig c;
  c.lr = 1e-2f;
  c.weight_decay = 0.1f;
  AdamW opt(3, c);
  VectorXf p(3);
  p << 1.0f, -2.0f, 0.5f;
  std::vector<double> ref = {1.0, -2.0, 0.5}, m(3, 0.0), v(3, 0.0);
  std::mt19937_64 rng(12);
  for (int t = 1; t <= 20; ++t) {
    VectorXf g(3);
    for (int i = 0; i < 3; ++i) g[i] = uniform(rng, -1.0f, 1.0f);
    opt.step(p, g);
    for (int i = 0; i < 3; ++i) {
      ref[i] *= 1.0 - 1e-2 * 0.1;
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double mh = m[i] / (1.0 - std::pow(0.9, t)), vh = v[i] / (1.0 - std::pow(0.999, t));
      ref[i] -= 1e-2 * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  for (int i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(ref[static_cast<std::size_t>(i)]).epsilon(1e-5));
  CHECK(opt.step_count() == 20);
  CHECK_THROWS(opt.step(p, VectorXf::Zero(2)));
}

TEST_CASE("weights round trip with checksum") {
  auto spec = tiny_spec();
  UpdateNetwork net(spec, 13);
  net.set_steps(42);
  const auto path = std::filesystem::temp_directory_path() / "nicp_weights.bin";
  save_weights(net, path);
  const auto back = load_weights(path);
  CHECK(back.parameters() == net.parameters());
  CHECK(back.steps() == 42);
  CHECK(back.spec().to_json() == spec.to_json());
  CHECK(weights_checksum(back.parameters()) == weights_checksum(net.parameters()));

  // Flip one payload byte.
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(-3, std::ios::end);
    char c = 0;
    f.read(&c, 1);
    c ^= 0x5a;
    f.seekp(-3, std::ios::end);
    f.write(&c, 1);
  }
  CHECK_THROWS(load_weights(path));
  std::filesystem::remove(path);
  CHECK_THROWS(load_weights(path));
}

TEST_CASE("spec JSON round trip and validation") {
  const auto spec = NetworkSpec::standard(10);
  CHECK(NetworkSpec::from_json(spec.to_json()).to_json() == spec.to_json());
  auto bad = spec;
  bad.head.back() = 7;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = spec;
  bad.stages.clear();
  CHECK_THROWS_AS(UpdateNetwork(bad, 0), std::invalid_argument);
}
