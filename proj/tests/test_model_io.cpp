#include "test_util.hpp"

#include "mdcr/model_io.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <fstream>

using namespace mdcr;
using testutil::TempDir;

namespace {

Model sample_model(bool with_zscore) {
  std::mt19937_64 gen(13);
  Model model;
  model.pair.task = Task::T2I;
  model.pair.V = testutil::random_matrix(3, 5, gen);
  model.pair.W = testutil::random_matrix(3, 4, gen);
  model.hp = Hyperparams{0.1, 0.25, 0.75};
  model.mu = 0.02;
  model.epsilon = 1e-4;
  model.label_map.originals = {4, 9, 17};
  if (with_zscore) {
    ZscoreStats image, text;
    image.mean = testutil::random_matrix(5, 1, gen).col(0);
    image.std = testutil::random_matrix(5, 1, gen).col(0).cwiseAbs();
    text.mean = testutil::random_matrix(4, 1, gen).col(0);
    text.std = testutil::random_matrix(4, 1, gen).col(0).cwiseAbs();
    model.image_stats = image;
    model.text_stats = text;
  }
  return model;
}

}  // namespace

TEST_CASE("model round trip preserves every field exactly", "[model_io]") {
  TempDir dir;
  for (bool with_zscore : {false, true}) {
    const Model model = sample_model(with_zscore);
    save_model(model, dir.file("m.mdcr"));
    const Model back = load_model(dir.file("m.mdcr"));
    REQUIRE(back.pair.task == Task::T2I);
    REQUIRE(back.pair.V == model.pair.V);
    REQUIRE(back.pair.W == model.pair.W);
    REQUIRE(back.hp.lambda == model.hp.lambda);
    REQUIRE(back.hp.eta1 == model.hp.eta1);
    REQUIRE(back.hp.eta2 == model.hp.eta2);
    REQUIRE(back.mu == model.mu);
    REQUIRE(back.epsilon == model.epsilon);
    REQUIRE(back.label_map.originals == model.label_map.originals);
    REQUIRE(back.image_stats.has_value() == with_zscore);
    if (with_zscore) {
      REQUIRE(back.image_stats->mean == model.image_stats->mean);
      REQUIRE(back.image_stats->std == model.image_stats->std);
      REQUIRE(back.text_stats->mean == model.text_stats->mean);
      REQUIRE(back.text_stats->std == model.text_stats->std);
    }
  }
}

TEST_CASE("saving the same model twice is byte-identical", "[model_io]") {
  TempDir dir;
  const Model model = sample_model(true);
  save_model(model, dir.file("a.mdcr"));
  save_model(model, dir.file("b.mdcr"));
  std::ifstream a(dir.file("a.mdcr"), std::ios::binary);
  std::ifstream b(dir.file("b.mdcr"), std::ios::binary);
  const std::string bytes_a((std::istreambuf_iterator<char>(a)),
                            std::istreambuf_iterator<char>());
  const std::string bytes_b((std::istreambuf_iterator<char>(b)),
                            std::istreambuf_iterator<char>());
  REQUIRE(!bytes_a.empty());
  REQUIRE(bytes_a == bytes_b);
}

TEST_CASE("model loader rejects corrupt files", "[model_io]") {
  TempDir dir;
  SECTION("wrong magic") {
    std::ofstream out(dir.file("bad.mdcr"), std::ios::binary);
    out << "NOTAMODEL\n";
    out.close();
    REQUIRE_THROWS_AS(load_model(dir.file("bad.mdcr")), IoError);
  }
  SECTION("truncated header") {
    std::ofstream out(dir.file("bad.mdcr"), std::ios::binary);
    out << "MDCRMODEL1\ntask: i2t\n";
    out.close();
    REQUIRE_THROWS_WITH(load_model(dir.file("bad.mdcr")),
                        Catch::Matchers::ContainsSubstring("truncated"));
  }
  SECTION("missing matrices") {
    const Model model = sample_model(false);
    save_model(model, dir.file("m.mdcr"));
    std::ifstream in(dir.file("m.mdcr"), std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    in.close();
    bytes.resize(bytes.size() - 40);
    std::ofstream out(dir.file("cut.mdcr"), std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    REQUIRE_THROWS_AS(load_model(dir.file("cut.mdcr")), IoError);
  }
}
