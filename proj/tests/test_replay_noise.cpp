#include <algorithm>
#include <cmath>
#include <set>

#include "apac/noise.hpp"
#include "apac/replay.hpp"
#include "doctest.h"

using namespace apac;

namespace {

Transition tagged(double r) {
  Transition t;
  t.r = r;
  return t;
}

}  // namespace

TEST_CASE("replay: FIFO eviction preserves order") {
  ReplayBuffer buffer(3);
  for (int i = 1; i <= 4; ++i) buffer.push(tagged(i));
  REQUIRE(buffer.size() == 3);
  CHECK(buffer.entries()[0].r == 2.0);
  CHECK(buffer.entries()[1].r == 3.0);
  CHECK(buffer.entries()[2].r == 4.0);
}

TEST_CASE("replay: singleton sample returns the only element") {
  ReplayBuffer buffer(10);
  buffer.push(tagged(-7.5));
  Rng rng(1);
  const auto batch = buffer.sample_batch(1, rng);
  REQUIRE(batch.size() == 1);
  CHECK(batch[0].r == -7.5);
}

TEST_CASE("replay: size never exceeds capacity") {
  ReplayBuffer buffer(1000);
  for (int i = 0; i < 100000; ++i) {
    buffer.push(tagged(i));
    CHECK(buffer.size() <= 1000);
  }
  CHECK(buffer.size() == 1000);
  CHECK(buffer.entries().front().r == 99000.0);
}

TEST_CASE("replay: full-size sample is a permutation of the buffer") {
  ReplayBuffer buffer(8);
  for (int i = 0; i < 8; ++i) buffer.push(tagged(i));
  Rng rng(2);
  const auto batch = buffer.sample_batch(8, rng);
  std::multiset<double> seen;
  for (const Transition& t : batch) seen.insert(t.r);
  std::multiset<double> expected;
  for (int i = 0; i < 8; ++i) expected.insert(i);
  CHECK(seen == expected);
}

TEST_CASE("replay: sampling is deterministic for a fixed rng") {
  ReplayBuffer buffer(50);
  for (int i = 0; i < 50; ++i) buffer.push(tagged(i));
  Rng a(3), b(3);
  const auto ba = buffer.sample_batch(10, a);
  const auto bb = buffer.sample_batch(10, b);
  for (int i = 0; i < 10; ++i) CHECK(ba[i].r == bb[i].r);
}

TEST_CASE("replay: oversized batch request throws") {
  ReplayBuffer buffer(10);
  buffer.push(tagged(0));
  Rng rng(4);
  CHECK_THROWS_AS(buffer.sample_batch(2, rng), std::invalid_argument);
}

TEST_CASE("replay: single-draw frequencies are uniform within 3 sigma") {
  ReplayBuffer buffer(10);
  for (int i = 0; i < 10; ++i) buffer.push(tagged(i));
  Rng rng(5);
  int counts[10] = {0};
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const auto batch = buffer.sample_batch(1, rng);
    counts[static_cast<int>(batch[0].r)]++;
  }
  const double expected = draws / 10.0;
  const double sigma = std::sqrt(draws * 0.1 * 0.9);
  for (int c : counts) CHECK(std::abs(c - expected) <= 3.0 * sigma);
}

TEST_CASE("noise: deterministic decay with zero volatility") {
  OuProcess ou(0.15, 0.0, 0.0);
  Vector2d s;
  s << 1.0, 1.0;
  ou.set_state(s);
  Rng rng(6);
  const Vector2d next = ou.next(rng);
  CHECK(next(0) == doctest::Approx(0.85).epsilon(1e-12));
  CHECK(next(1) == doctest::Approx(0.85).epsilon(1e-12));
}

TEST_CASE("noise: mean is a fixed point without volatility") {
  OuProcess ou(0.15, 0.5, 0.0);
  Rng rng(7);
  for (int i = 0; i < 10; ++i) {
    const Vector2d s = ou.next(rng);
    CHECK(s(0) == 0.5);
    CHECK(s(1) == 0.5);
  }
}

TEST_CASE("noise: zero-volatility trajectory converges monotonically") {
  OuProcess ou(0.15, 0.0, 0.0);
  Vector2d s;
  s << 2.0, -2.0;
  ou.set_state(s);
  Rng rng(8);
  double prev = 2.0;
  for (int i = 0; i < 50; ++i) {
    const Vector2d x = ou.next(rng);
    CHECK(x(0) < prev);
    CHECK(x(0) >= 0.0);
    CHECK(x(1) == -x(0));
    prev = x(0);
  }
}

TEST_CASE("noise: reset returns the state to the mean") {
  OuProcess ou(0.15, 0.0, 36.0);
  Rng rng(9);
  ou.next(rng);
  ou.reset();
  CHECK(ou.state()(0) == 0.0);
  CHECK(ou.state()(1) == 0.0);
  ou.reset();
  CHECK(ou.state()(0) == 0.0);
}

TEST_CASE("noise: empirical stationary variance matches the discrete form") {
  // Discrete OU: var = sigma^2 / (2*theta - theta^2).
  const double theta = 0.15, sigma = 0.2;
  OuProcess ou(theta, 0.0, sigma);
  Rng rng(10);
  for (int i = 0; i < 1000; ++i) ou.next(rng);  // burn-in
  const int n = 1000000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = ou.next(rng)(0);
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  const double expected = sigma * sigma / (2.0 * theta - theta * theta);
  CHECK(std::abs(var - expected) / expected < 0.05);
}
