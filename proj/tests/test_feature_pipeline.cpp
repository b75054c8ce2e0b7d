#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "foal/errors.hpp"
#include "foal/feature_pipeline.hpp"

using namespace foal;

namespace {

BlockFeatureSet blocks(std::vector<std::vector<float>> b) { return BlockFeatureSet::from_blocks(b); }

EncoderConfig config(bool fusion, bool sp, std::shared_ptr<const ProjectionSpec> proj = nullptr) {
  EncoderConfig c;
  c.fusion_enabled = fusion;
  c.smooth_projection_enabled = sp;
  c.projection = std::move(proj);
  return c;
}

BlockFeatureSet random_sample(std::mt19937& rng, int n, int e, float scale = 1.0f) {
  std::normal_distribution<float> dist(0.0f, scale);
  RowMatrixF m(n, e);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return BlockFeatureSet(m);
}

}  // namespace

TEST_CASE("fuse_blocks") {
  SUBCASE("symmetric average") {
    const auto f = fuse_blocks(blocks({{2, 0}, {0, 2}}), config(true, false));
    CHECK(f(0) == 1.0f);
    CHECK(f(1) == 1.0f);
  }
  SUBCASE("single block is identity under either toggle") {
    for (bool fusion : {true, false}) {
      const auto f = fuse_blocks(blocks({{3, 4}}), config(fusion, false));
      CHECK(f(0) == 3.0f);
      CHECK(f(1) == 4.0f);
    }
  }
  SUBCASE("fusion off passes the last block through") {
    const auto f = fuse_blocks(blocks({{1, 1}, {2, 2}, {3, 3}}), config(false, false));
    CHECK(f(0) == 3.0f);
    CHECK(f(1) == 3.0f);
  }
  SUBCASE("ragged blocks name the offending index") {
    try {
      blocks({{1, 2}, {1, 2}, {1}});
      FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
      CHECK(std::string(e.what()).find("block 2") != std::string::npos);
    }
  }
  SUBCASE("invalid sets") {
    CHECK_THROWS_AS(blocks({}), DimensionError);
    CHECK_THROWS_AS(blocks({{1, std::numeric_limits<float>::quiet_NaN()}}), NumericalError);
    CHECK_THROWS_AS(blocks({{std::numeric_limits<float>::infinity()}}), NumericalError);
  }
}

TEST_CASE("fusion is linear in the block values") {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_sample(rng, 5, 16);
    for (float alpha : {0.5f, 2.0f, -4.0f, 3.7f}) {
      const BlockFeatureSet scaled(RowMatrixF(alpha * x.blocks()));
      const Eigen::VectorXf lhs = fuse_blocks(scaled, config(true, false));
      const Eigen::VectorXf rhs = alpha * fuse_blocks(x, config(true, false));
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-5f * (1.0f + rhs.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("init_projection") {
  SUBCASE("deterministic and byte identical") {
    const auto a = init_projection(7, 4, 2);
    const auto b = init_projection(7, 4, 2);
    REQUIRE(a.weights().size() == 8);
    CHECK(std::memcmp(a.weights().data(), b.weights().data(), 8 * sizeof(float)) == 0);
    CHECK(a.input_dim() == 4);
    CHECK(a.output_dim() == 2);
  }
  SUBCASE("seed sensitive") {
    const auto a = init_projection(7, 4, 2);
    const auto c = init_projection(8, 4, 2);
    CHECK(a.weights() != c.weights());
  }
  SUBCASE("odd entry count fills every cell") {
    const auto a = init_projection(1, 3, 3);
    CHECK(a.weights().allFinite());
    CHECK(a.weights()(2, 2) != 0.0f);
  }
  SUBCASE("zero dimensions rejected") {
    CHECK_THROWS_AS(init_projection(1, 0, 5), ConfigError);
    CHECK_THROWS_AS(init_projection(1, 5, 0), ConfigError);
  }
  SUBCASE("standard normal moments over 768000 draws") {
    const auto p = init_projection(1, 768, 1000);
    const auto w = p.weights().cast<double>();
    const double mean = w.mean();
    const double var = (w.array() - mean).square().sum() / static_cast<double>(w.size() - 1);
    CHECK(std::abs(mean) <= 0.01);
    CHECK(std::abs(var - 1.0) <= 0.02);
  }
}

TEST_CASE("smooth_project") {
  auto spec = std::make_shared<const ProjectionSpec>(init_projection(11, 3, 5));
  SUBCASE("zero input maps to one half") {
    const auto out = smooth_project(Eigen::VectorXf::Zero(3), spec.get(), true);
    REQUIRE(out.size() == 5);
    for (Eigen::Index i = 0; i < out.size(); ++i) CHECK(out(i) == 0.5f);
  }
  SUBCASE("disabled is a passthrough") {
    Eigen::VectorXf v(3);
    v << 1, 2, 3;
    CHECK(smooth_project(v, nullptr, false) == v);
  }
  SUBCASE("scalar evaluation of sigmoid(2)") {
    RowMatrixF w(2, 1);
    w << 1, 1;
    const auto one = ProjectionSpec::from_weights(w);
    const auto out = smooth_project(Eigen::Vector2f(1, 1), &one, true);
    REQUIRE(out.size() == 1);
    CHECK(out(0) == doctest::Approx(0.8807970779778823).epsilon(1e-7));
  }
  SUBCASE("length mismatch") {
    CHECK_THROWS_AS(smooth_project(Eigen::VectorXf::Zero(4), spec.get(), true), DimensionError);
  }
  SUBCASE("saturating inputs stay strictly inside (0, 1)") {
    const auto out = smooth_project(Eigen::Vector3f(1e6f, -1e6f, 40.0f), spec.get(), true);
    CHECK((out.array() > 0.0f).all());
    CHECK((out.array() < 1.0f).all());
  }
}

TEST_CASE("encode_batch") {
  std::mt19937 rng(5);
  SUBCASE("full passthrough") {
    const std::vector<BlockFeatureSet> s{blocks({{1.5f, -2.0f, 0.25f}})};
    const auto batch = encode_batch(s, config(true, false));
    REQUIRE(batch.rows() == 1);
    CHECK(batch.row(0) == s[0].blocks().row(0));
  }
  SUBCASE("identical samples give identical rows") {
    const auto x = random_sample(rng, 3, 4);
    const std::vector<BlockFeatureSet> s{x, x};
    auto proj = std::make_shared<const ProjectionSpec>(init_projection(7, 4, 2));
    const auto batch = encode_batch(s, config(true, true, proj));
    CHECK(batch.row(0) == batch.row(1));
  }
  SUBCASE("matches the per-sample pipeline exactly") {
    auto proj = std::make_shared<const ProjectionSpec>(init_projection(7, 4, 2));
    for (bool fusion : {true, false}) {
      for (bool sp : {true, false}) {
        const auto cfg = config(fusion, sp, sp ? proj : nullptr);
        const std::vector<BlockFeatureSet> s{random_sample(rng, 2, 4), random_sample(rng, 2, 4),
                                             random_sample(rng, 2, 4)};
        const auto batch = encode_batch(s, cfg);
        REQUIRE(batch.rows() == 3);
        REQUIRE(batch.cols() == (sp ? 2 : 4));
        for (int i = 0; i < 3; ++i) {
          const Eigen::VectorXf row = smooth_project(fuse_blocks(s[i], cfg), proj.get(), sp);
          CHECK(std::memcmp(batch.row(i).eval().data(), row.data(), sizeof(float) * row.size()) == 0);
        }
      }
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(encode_batch(std::vector<BlockFeatureSet>{}, config(true, false)), DimensionError);
    const std::vector<BlockFeatureSet> mixed_e{random_sample(rng, 2, 4), random_sample(rng, 2, 5)};
    CHECK_THROWS_AS(encode_batch(mixed_e, config(true, false)), DimensionError);
    const std::vector<BlockFeatureSet> mixed_n{random_sample(rng, 2, 4), random_sample(rng, 3, 4)};
    CHECK_THROWS_AS(encode_batch(mixed_n, config(true, false)), DimensionError);
    const std::vector<BlockFeatureSet> ok{random_sample(rng, 2, 4)};
    CHECK_THROWS_AS(encode_batch(ok, config(true, true)), ConfigError);
  }
}

TEST_CASE("property: smooth projection range and frozen encoder") {
  std::mt19937 rng(17);
  auto proj = std::make_shared<const ProjectionSpec>(init_projection(99, 24, 64));
  const auto cfg = config(true, true, proj);
  for (int trial = 0; trial < 50; ++trial) {
    const float scale = std::pow(10.0f, static_cast<float>(trial % 7) - 2.0f);  // 1e-2 .. 1e4
    std::vector<BlockFeatureSet> s;
    for (int i = 0; i < 4; ++i) s.push_back(random_sample(rng, 3, 24, scale));
    const auto a = encode_batch(s, cfg);
    const auto b = encode_batch(s, cfg);
    CHECK((a.array() > 0.0f).all());
    CHECK((a.array() < 1.0f).all());
    CHECK(a.allFinite());
    CHECK(std::memcmp(a.data(), b.data(), sizeof(float) * a.size()) == 0);
  }
}
