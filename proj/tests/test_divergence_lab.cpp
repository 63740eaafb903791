#include <doctest.h>

#include <cmath>
#include <random>

#include "roughflow/divergence_lab.hpp"

using namespace roughflow;

namespace {

// three unit squares in a row, consecutive overlaps of width 1/4
StarDecomposition make_chain() {
  StarDecomposition d;
  d.kind = DecompositionKind::Chain;
  const double w = 0.75;  // piece pitch
  for (int j = 0; j < 3; ++j) {
    StarPiece p;
    p.box = Rect{j * w, 0.0, j * w + 1.0, 1.0};
    p.star_center = Eigen::Vector2d(j * w + 0.5, 0.5);
    p.star_radius = 0.25;
    d.pieces.push_back(p);
  }
  d.shape_constant = 8.0;
  d.grid.x0 = 0.0;
  d.grid.y0 = 0.0;
  d.grid.h = 1.0 / 16;
  d.grid.nx = static_cast<int>(std::lround((2 * w + 1.0) / d.grid.h));
  d.grid.ny = 16;
  return d;
}

void check_split(const StarDecomposition& d, const LabField& f, const SplitSource& s) {
  REQUIRE(s.pieces.size() == d.pieces.size());
  const double scale = std::sqrt(f.lq_norm_q(2));
  // per-piece means vanish and supports respect the pieces
  for (std::size_t k = 0; k < s.pieces.size(); ++k) {
    CHECK(std::abs(s.means[k]) < 1e-12 * std::max(1.0, scale));
    const Rect& box = d.pieces[k].box;
    for (int j = 0; j < d.grid.ny; ++j)
      for (int i = 0; i < d.grid.nx; ++i) {
        if (!box.contains(d.grid.cx(i), d.grid.cy(j)))
          CHECK(s.pieces[k].v[d.grid.id(i, j)] == 0.0);
      }
  }
  // the pieces sum back to the source pointwise
  for (int idx = 0; idx < d.grid.cells(); ++idx) {
    double sum = 0.0;
    for (const auto& p : s.pieces) sum += p.v[idx];
    CHECK(std::abs(sum - f.v[idx]) < 1e-12 * std::max(1.0, scale));
  }
}

}  // namespace

TEST_CASE("power-mean constant is 2^(q-1)") {
  CHECK(power_mean_constant(1.0) == doctest::Approx(1.0));
  CHECK(power_mean_constant(2.0) == doctest::Approx(2.0));
  CHECK(power_mean_constant(3.0) == doctest::Approx(4.0));
}

TEST_CASE("rectangle helpers") {
  const Rect a{0, 0, 2, 1};
  CHECK(a.area() == doctest::Approx(2.0));
  CHECK(a.diam() == doctest::Approx(std::sqrt(5.0)));
  const Rect b{1, 0.5, 3, 2};
  const Rect c = intersect(a, b);
  CHECK(c.x0 == doctest::Approx(1.0));
  CHECK(c.y1 == doctest::Approx(1.0));
  CHECK(intersect(a, Rect{5, 5, 6, 6}).empty());
}

TEST_CASE("rough-square generator: layout, validation, random source") {
  const StarDecomposition d = make_rough_square_decomposition(1.0 / 8);
  CHECK(d.kind == DecompositionKind::Star);
  CHECK(d.pieces.size() == 5);  // macro + floor(1/(2 eps)) micros
  CHECK(d.shape_constant == doctest::Approx(2 * std::sqrt(2.0)));
  CHECK(d.grid.h == doctest::Approx(1.0 / 64));
  validate_decomposition(d);
  for (std::size_t k = 1; k < d.pieces.size(); ++k)
    CHECK_FALSE(d.overlap(static_cast<int>(k)).empty());

  const LabField f = random_mean_zero_field(d, 7);
  CHECK(std::abs(f.integral()) < 1e-12);
  // zero outside the union
  bool found_zero_outside = false;
  for (int j = 0; j < d.grid.ny && !found_zero_outside; ++j)
    for (int i = 0; i < d.grid.nx; ++i)
      if (!d.in_domain(d.grid.cx(i), d.grid.cy(j))) {
        CHECK(f.v[d.grid.id(i, j)] == 0.0);
        found_zero_outside = true;
        break;
      }
  CHECK(found_zero_outside);
}

TEST_CASE("star split: exact identities and the per-piece norm bound") {
  const StarDecomposition d = make_rough_square_decomposition(1.0 / 8);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const LabField f = random_mean_zero_field(d, seed);
    const SplitSource s = split_source_star(d, f);
    check_split(d, f, s);
    const double bound = power_mean_constant(2.0) * (1.0 + d.shape_constant);
    for (std::size_t k = 1; k < s.norm_ratios.size(); ++k)
      CHECK(s.norm_ratios[k] <= bound);
  }
}

TEST_CASE("chain split: exact identities on a three-piece chain") {
  const StarDecomposition d = make_chain();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  LabField f;
  f.grid = d.grid;
  f.v.assign(d.grid.cells(), 0.0);
  double sum = 0.0;
  int inside = 0;
  for (int j = 0; j < d.grid.ny; ++j)
    for (int i = 0; i < d.grid.nx; ++i)
      if (d.in_domain(d.grid.cx(i), d.grid.cy(j))) {
        f.v[d.grid.id(i, j)] = U(rng);
        sum += f.v[d.grid.id(i, j)];
        ++inside;
      }
  // shift to exact discrete mean zero
  for (int j = 0; j < d.grid.ny; ++j)
    for (int i = 0; i < d.grid.nx; ++i)
      if (d.in_domain(d.grid.cx(i), d.grid.cy(j)))
        f.v[d.grid.id(i, j)] -= sum / inside;

  const SplitSource s = split_source_chain(d, f);
  check_split(d, f, s);
}

TEST_CASE("invalid decompositions are rejected") {
  // micro piece detached from the macro piece
  StarDecomposition d = make_rough_square_decomposition(1.0 / 8);
  d.pieces[1].box.y0 += 0.5;
  d.pieces[1].box.y1 += 0.5;
  CHECK_THROWS_AS(validate_decomposition(d), DecompositionError);

  // corner off the shared lattice
  StarDecomposition d2 = make_rough_square_decomposition(1.0 / 8);
  d2.pieces[2].box.x1 += 0.3 * d2.grid.h;
  CHECK_THROWS_AS(validate_decomposition(d2), DecompositionError);

  // star ball outside the piece
  StarDecomposition d3 = make_rough_square_decomposition(1.0 / 8);
  d3.pieces[0].star_center = Eigen::Vector2d(5.0, 5.0);
  CHECK_THROWS_AS(validate_decomposition(d3), DecompositionError);
}

TEST_CASE("divergence solve: constraint met, walls closed, sane constant") {
  const Rect box{0, 0, 1, 1};
  LabGrid g;
  g.h = 1.0 / 32;
  g.nx = g.ny = 32;
  LabField f;
  f.grid = g;
  f.v.resize(g.cells());
  // smooth mean-zero source
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      f.v[g.id(i, j)] = std::sin(2 * M_PI * g.cx(i)) * std::cos(2 * M_PI * g.cy(j));

  const DivergenceSolution sol = divergence_solve(box, f);
  CHECK(sol.div_residual < 1e-9);
  CHECK(sol.ratio > 0.1);
  CHECK(sol.ratio < 3.0);
  // no-flow boundary faces (identity rows in the saddle solve)
  for (int j = 0; j < sol.ny; ++j) {
    CHECK(std::abs(sol.u[0 + (sol.nx + 1) * j]) < 1e-12);
    CHECK(std::abs(sol.u[sol.nx + (sol.nx + 1) * j]) < 1e-12);
  }
  for (int i = 0; i < sol.nx; ++i) {
    CHECK(std::abs(sol.v[i]) < 1e-12);
    CHECK(std::abs(sol.v[i + sol.nx * sol.ny]) < 1e-12);
  }
}
