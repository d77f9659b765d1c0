#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "lshade/objectives.hpp"
#include "lshade/rng.hpp"
#include "lshade/vecmath.hpp"
#include "oracles.hpp"

using namespace lshade;

namespace {

ObjectiveSpec unshifted(const std::string& id, int dim) {
  ShiftRot sr;
  sr.shift.assign(dim, 0.0);
  return make_objective(id, dim, sr);
}

}  // namespace

TEST_CASE("evaluate: known values") {
  const auto sphere = unshifted("sphere", 2);
  CHECK(sphere.evaluate(std::vector<double>{0.0, 0.0}) == 0.0);
  CHECK(sphere.evaluate(std::vector<double>{1.0, 1.0}) == 2.0);

  const auto rosen = unshifted("rosenbrock", 2);
  CHECK(rosen.evaluate(std::vector<double>{1.0, 1.0}) == 0.0);

  CHECK_THROWS(sphere.evaluate(std::vector<double>{1.0, 2.0, 3.0}));
}

TEST_CASE("evaluate is pure") {
  const auto spec = make_objective("rastrigin", 4);
  RngStream rng = RngStream::derive(3, 0, 0, 0, Draw::Test);
  for (int s = 0; s < 20; ++s) {
    std::vector<double> x(4);
    for (auto& v : x) v = rng.uniform(-5.0, 5.0);
    const double f1 = spec.evaluate(x);
    const double f2 = spec.evaluate(x);
    CHECK(f1 == f2);
  }
}

TEST_CASE("sublevel_radii") {
  MorseData m{2.0, 2.0, 10.0, false};
  auto [rin, rout] = sublevel_radii(1.0, m);
  CHECK(rin == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rout == doctest::Approx(1.0).epsilon(1e-15));

  MorseData m2{1.0, 4.0, 10.0, false};
  auto [rin2, rout2] = sublevel_radii(2.0, m2);
  CHECK(rin2 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rout2 == doctest::Approx(2.0).epsilon(1e-15));

  CHECK_THROWS(sublevel_radii(0.0, m));
  // 2 eps > mu r0^2
  MorseData tiny{2.0, 2.0, 0.1, false};
  CHECK_THROWS(sublevel_radii(1.0, tiny));
}

TEST_CASE("sublevel_radii strictly increasing in eps") {
  MorseData m{1.5, 6.0, 50.0, false};
  double prev_in = 0.0, prev_out = 0.0;
  for (double eps : {0.1, 0.5, 1.0, 5.0, 20.0}) {
    auto [rin, rout] = sublevel_radii(eps, m);
    CHECK(rin > prev_in);
    CHECK(rout > prev_out);
    CHECK(rin <= rout);
    prev_in = rin;
    prev_out = rout;
  }
}

TEST_CASE("quadratic growth sampling check for quadratic and rastrigin Morse data") {
  for (const char* id : {"sphere", "ellipsoid", "rastrigin"}) {
    const auto spec = make_objective(id, 5);
    REQUIRE(spec.morse().has_value());
    REQUIRE(spec.x_star().has_value());
    const MorseData& m = *spec.morse();
    const auto& xs = *spec.x_star();
    RngStream rng = RngStream::derive(11, 0, 0, 0, Draw::Test);
    // Keep sampling inside both the basin ball and the box.
    double r = m.r0;
    for (int j = 0; j < spec.dim(); ++j)
      r = std::min({r, xs[j] - spec.lower()[j], spec.upper()[j] - xs[j]});
    int checked = 0;
    for (int s = 0; s < 10000; ++s) {
      const auto y = oracles::ball_point(rng, xs, r);
      const double fx = spec.evaluate(y);
      const double q = dist2(y, xs);
      CHECK(fx >= spec.f_star() + 0.5 * m.mu * q - 1e-9 * std::max(1.0, fx));
      CHECK(fx <= spec.f_star() + 0.5 * m.lip * q + 1e-9 * std::max(1.0, fx));
      ++checked;
    }
    CHECK(checked == 10000);
  }
}

TEST_CASE("builtin suite contract") {
  const auto suite = builtin_suite(10);
  CHECK(suite.size() >= 5);
  for (const auto& spec : suite) {
    CHECK(spec.dim() == 10);
    REQUIRE(spec.x_star().has_value());
    const auto& xs = *spec.x_star();
    for (int j = 0; j < 10; ++j) {
      CHECK(xs[j] > spec.lower()[j]);
      CHECK(xs[j] < spec.upper()[j]);
    }
    CHECK(std::fabs(spec.evaluate(xs) - spec.f_star()) <=
          1e-12 * std::max(1.0, std::fabs(spec.f_star())));
  }
}

TEST_CASE("shifted sphere minimizer sits at the shift") {
  ShiftRot sr;
  sr.shift = {1.5, -2.0, 0.25};
  const auto spec = make_objective("sphere", 3, sr);
  REQUIRE(spec.x_star().has_value());
  CHECK((*spec.x_star()) == sr.shift);
  CHECK(spec.evaluate(sr.shift) == 0.0);
}

TEST_CASE("shift/rotation file loading") {
  const std::string good = "sr_good.txt";
  {
    std::ofstream out(good);
    out << "2\n0.5 -0.25\n0 1\n-1 0\n";  // 90-degree rotation
  }
  const auto sr = load_shift_rotation(good, 2);
  CHECK(sr.shift == std::vector<double>{0.5, -0.25});
  REQUIRE(sr.rotation.size() == 4);
  const auto spec = make_objective("ellipsoid", 2, sr);
  CHECK(spec.evaluate(*spec.x_star()) == doctest::Approx(0.0));

  CHECK_THROWS(load_shift_rotation(good, 3));  // wrong dimension

  const std::string bad = "sr_bad.txt";
  {
    std::ofstream out(bad);
    out << "2\n0.5\n";  // truncated shift
  }
  CHECK_THROWS(load_shift_rotation(bad, 2));

  const std::string skew = "sr_skew.txt";
  {
    std::ofstream out(skew);
    out << "2\n0 0\n1 1\n0 1\n";  // not orthogonal
  }
  CHECK_THROWS(load_shift_rotation(skew, 2));

  std::remove(good.c_str());
  std::remove(bad.c_str());
  std::remove(skew.c_str());
}

TEST_CASE("morse estimator recovers quadratic constants") {
  const auto spec = make_objective("ellipsoid", 4);
  const auto est = estimate_morse(spec);
  REQUIRE(est.has_value());
  CHECK(est->estimated);
  // Safety-factored: mu_hat ~ lambda_min/2 = 1, lip_hat ~ 2 lambda_max = 40.
  CHECK(est->mu == doctest::Approx(1.0).epsilon(0.05));
  CHECK(est->lip == doctest::Approx(40.0).epsilon(0.05));
  CHECK(est->r0 > 0.0);
}

TEST_CASE("morse estimator reports no basin for ackley") {
  // Ackley is not twice differentiable at its minimizer (conical term), so no
  // two-sided quadratic growth holds on any ball.
  const auto spec = make_objective("ackley", 3);
  CHECK_FALSE(spec.morse().has_value());
  const auto est = estimate_morse(spec);
  CHECK_FALSE(est.has_value());
}
