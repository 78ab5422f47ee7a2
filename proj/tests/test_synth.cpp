#include <doctest.h>

#include <random>

#include "facemorph/morpho_metrics.hpp"
#include "facemorph/synth_faces.hpp"
#include "support.hpp"

using namespace facemorph;

namespace {

Eigen::RowVector2d at(const LandmarkConfig& c, LandmarkIndex i) { return c.row(row_of(i)); }

}  // namespace

TEST_CASE("template is mirror-symmetric and satisfies the construction rules") {
  for (const ShapeCoefficients shape : {ShapeCoefficients{}, ShapeCoefficients{1.2, 0.9, 1.1, 0.8, 0.9, 1.15, 1.3, 0.85}}) {
    const auto t = face_template(shape);
    CHECK(reflect_relabel<double>(t) == t);
    CHECK(at(t, 4) == 0.5 * (at(t, 3) + at(t, 6)));
    CHECK(at(t, 5) == 0.5 * (at(t, 3) + at(t, 7)));
    CHECK(at(t, 11) == 0.5 * (at(t, 8) + at(t, 9)));
    CHECK(at(t, 69) == 0.5 * (at(t, 68) + at(t, 6)));
    CHECK(at(t, 26) == 0.5 * (at(t, 20) + at(t, 23)));
    for (auto m : pair_map().midline) CHECK(t(row_of(m), 0) == 0.0);
    // 68 lies between 8 and 3 on the midline.
    CHECK(t(row_of(8), 1) < t(row_of(68), 1));
    CHECK(t(row_of(68), 1) < t(row_of(3), 1));
    // Pupil centre is the centre of the iris points.
    CHECK((at(t, 71) - 0.25 * (at(t, 22) + at(t, 23) + at(t, 24) + at(t, 25))).norm() < 1e-12);

    SUBCASE("jaw points sit at equal parameter steps of the jaw ellipse") {
      // Ellipse centred level with zygion 50, semi-axes from 50 and menton 2.
      const double cy = t(row_of(50), 1);
      const double a = -t(row_of(50), 0);
      const double b = t(row_of(2), 1) - cy;
      std::vector<double> params;
      for (LandmarkIndex i : {2, 51, 52, 53, 54, 55, 56, 57, 58, 50}) {
        const double u = -t(row_of(i), 0) / a;
        const double v = (t(row_of(i), 1) - cy) / b;
        CHECK(u * u + v * v == doctest::Approx(1.0).epsilon(1e-12));
        params.push_back(std::atan2(v, u));
      }
      for (std::size_t k = 1; k < params.size(); ++k) {
        CHECK(params[k - 1] - params[k] == doctest::Approx((std::numbers::pi / 2.0) / 9.0).epsilon(1e-9));
      }
    }
    SUBCASE("brow points are evenly spaced along circular arcs") {
      for (auto chain : {std::vector<LandmarkIndex>{34, 38, 39, 40, 35}, std::vector<LandmarkIndex>{34, 41, 42, 43, 35}}) {
        const double first = (at(t, chain[1]) - at(t, chain[0])).norm();
        for (std::size_t k = 2; k < chain.size(); ++k) {
          CHECK((at(t, chain[k]) - at(t, chain[k - 1])).norm() == doctest::Approx(first).epsilon(1e-9));
        }
      }
    }
  }
}

TEST_CASE("generate_face") {
  FaceParams p;
  p.seed = 5;
  const auto a = generate_face(p);
  const auto b = generate_face(p);
  CHECK(a.image == b.image);
  CHECK(a.truth == b.truth);
  CHECK(a.mesh.points == b.mesh.points);
  CHECK(a.image.width == 256);
  CHECK(a.mesh.size() == 468);
  CHECK(asymmetry_score(a.truth) < 1e-10);
  CHECK((at(a.truth, 4) - 0.5 * (at(a.truth, 3) + at(a.truth, 6))).norm() < 1e-12);

  SUBCASE("mesh is an exact linear function of the truth without jitter") {
    FaceParams q = p;
    q.mesh_jitter_sd = 0.0;
    const auto f = generate_face(q);
    CHECK((f.mesh.points - mesh_generating_map(q.mesh_size) * f.truth).cwiseAbs().maxCoeff() == 0.0);
    const auto g = mesh_generating_map(50);
    CHECK((g.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
  }
  SUBCASE("pupil is dark at landmark 71") {
    const auto patch = extract_patch(a.image, a.truth(row_of(71), 0), a.truth(row_of(71), 1), 33);
    CHECK(patch(16, 16) < 0.3);
    CHECK(patch.mean() > patch(16, 16) + 0.2);
  }
  SUBCASE("errors") {
    FaceParams bad = p;
    bad.shape.jaw_width = 2.5;
    CHECK_THROWS_AS(generate_face(bad), DataError);
    bad = p;
    bad.shape.iris_radius = 2.0;
    CHECK_THROWS_AS(generate_face(bad), DataError);
    CHECK_THROWS_AS(generate_face(p, 100), DataError);
  }
}

TEST_CASE("asymmetry field") {
  const auto base = face_template();
  std::mt19937_64 rng(6);
  const auto field = facemorph::testing::random_config(rng, kLandmarkCount, 2.0);
  const auto moved = apply_asymmetry(base, field);
  CHECK(at(moved, 4) == 0.5 * (at(moved, 3) + at(moved, 6)));
  CHECK(apply_asymmetry(base, LandmarkConfig::Zero(kLandmarkCount, 2)) == base);
  CHECK(asymmetry_score(moved) > 1e-4);

  // A field moving one mouth corner shifts the whole mouth by its group mean.
  LandmarkConfig one = LandmarkConfig::Zero(kLandmarkCount, 2);
  one(row_of(6), 0) = 7.0;
  const auto shifted = apply_asymmetry(base, one);
  CHECK(shifted(row_of(6), 0) - base(row_of(6), 0) == doctest::Approx(7.0));
  CHECK((at(shifted, 20) - at(base, 20)).norm() == 0.0);
}

TEST_CASE("populations") {
  const auto flat = generate_population(100, 0.0, 3);
  for (const auto& f : flat) CHECK(f.truth == flat.front().truth);
  std::vector<LandmarkConfig> truths;
  for (const auto& f : flat) truths.push_back(f.truth);
  for (double d : distinctiveness(gpa<double>(truths))) CHECK(d < 1e-12);

  const auto pop = generate_population(100, kDefaultSpread, 3);
  truths.clear();
  for (const auto& f : pop) truths.push_back(f.truth);
  int positive = 0;
  for (double d : distinctiveness(gpa<double>(truths))) positive += d > 0.0;
  CHECK(positive >= 99);

  const auto again = generate_population(100, kDefaultSpread, 3);
  for (std::size_t i = 0; i < pop.size(); ++i) {
    CHECK(pop[i].image == again[i].image);
    CHECK(pop[i].truth == again[i].truth);
    CHECK(pop[i].mesh.points == again[i].mesh.points);
  }
  CHECK_THROWS_AS(generate_population(0, 0.1, 1), DataError);

  const auto specimens = truth_specimens(pop);
  CHECK(specimens[3].image_name == "face_003.pgm");
  CHECK(specimens[3].landmarks == pixel_to_tps(pop[3].truth, 256.0));
}

TEST_CASE("replicates") {
  const auto specimens = truth_specimens(generate_population(12, kDefaultSpread, 8));
  const auto zero = make_replicates(specimens, 0.0, 1);
  CHECK(repeatability(zero).repeatability == doctest::Approx(1.0).epsilon(1e-9));

  const auto noisy = make_replicates(specimens, 1.5, 1);
  for (std::size_t i = 0; i < specimens.size(); ++i) {
    CHECK(noisy.rep1[i].landmarks == specimens[i].landmarks);
    CHECK(noisy.rep2[i].landmarks != specimens[i].landmarks);
  }
  CHECK_THROWS_AS(make_replicates(specimens, -1.0, 1), DataError);
}
