#include <doctest.h>

#include <cmath>
#include <set>

#include "coforget/epoch.hpp"
#include "coforget/relevance.hpp"
#include "coforget/workload.hpp"

using namespace coforget;

namespace {

WorkloadGenerator make_gen(WorkloadSpec spec, std::size_t dim = 64, std::uint64_t ctx_seed = 1) {
  Rng rng(ctx_seed);
  return WorkloadGenerator(spec, dim, make_context(dim, rng), {"planner-1", "perception-1"});
}

}  // namespace

TEST_CASE("workload spec checks") {
  CHECK(check_workload(WorkloadSpec{}).empty());
  WorkloadSpec s;
  s.arrivals_min = 21;
  s.access_skew = 0.0;
  s.relevance_mix = 1.5;
  CHECK(check_workload(s).size() == 3);
}

TEST_CASE("workload keys") {
  auto kv = parse_key_values(
      "workload.initial_items = 10\nworkload.arrivals_per_epoch = 3..5\nworkload.access_skew = 1.3\n"
      "workload.relevance_mix = 0.25\nalpha = 0.7\n");
  WorkloadSpec s;
  apply_workload_keys(s, kv);
  CHECK(s.initial_items == 10);
  CHECK(s.arrivals_min == 3);
  CHECK(s.arrivals_max == 5);
  CHECK(s.access_skew == 1.3);
  CHECK(s.relevance_mix == 0.25);
  CHECK(kv.size() == 1);
}

TEST_CASE("embedding_with_cosine hits the requested cosine") {
  Rng rng(4);
  const auto ctx = make_context(128, rng);
  for (double c : {-1.0, -0.3, 0.0, 0.5, 0.77, 1.0}) {
    const auto e = embedding_with_cosine(ctx.embedding, c, rng);
    CHECK(cosine_similarity(e, ctx.embedding) == doctest::Approx(c).epsilon(1e-9));
  }
  CHECK_THROWS_AS(embedding_with_cosine(ctx.embedding, 1.5, rng), Error);
}

TEST_CASE("generate_initial") {
  SUBCASE("empty") {
    WorkloadSpec s;
    s.initial_items = 0;
    CHECK(make_gen(s).generate_initial().empty());
  }
  SUBCASE("mix split is binomial around the requested fraction") {
    WorkloadSpec s;
    auto gen = make_gen(s);
    const auto items = gen.generate_initial();
    REQUIRE(items.size() == 1000);
    std::size_t near = 0;
    std::set<std::string> ids;
    for (const auto& m : items) {
      near += cosine_similarity(m.embedding, gen.context().embedding) >= kNearCosine;
      CHECK(m.t_last >= 0.0);
      CHECK(m.t_last < s.history_window_s);
      ids.insert(m.id);
    }
    CHECK(ids.size() == 1000);
    // 500 +/- 4 sigma, sigma = sqrt(1000 * 0.25) ~ 15.8
    CHECK(std::abs(static_cast<double>(near) - 500.0) <= 64.0);
  }
  SUBCASE("same seed, same list") {
    const auto a = make_gen(WorkloadSpec{}).generate_initial();
    const auto b = make_gen(WorkloadSpec{}).generate_initial();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(same_contents(a[i], b[i]));
  }
}

TEST_CASE("Zipf sampling follows the analytic mass") {
  const ZipfSampler z(100, 1.0);
  double total = 0.0;
  for (std::size_t k = 0; k < 100; ++k) total += z.mass(k);
  CHECK(total == doctest::Approx(1.0));
  CHECK(z.mass(0) / z.mass(9) == doctest::Approx(10.0));
  Rng rng(8);
  std::vector<int> counts(100, 0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) ++counts[z.sample(rng)];
  CHECK(counts[0] > counts[9]);
  for (std::size_t k : {0u, 1u, 9u}) {
    const double p = z.mass(k);
    const double sigma = std::sqrt(draws * p * (1 - p));
    CHECK(std::abs(counts[k] - draws * p) <= 4 * sigma);
  }
  CHECK_THROWS_AS(ZipfSampler(0, 1.0), Error);
}

TEST_CASE("step_interaction") {
  WorkloadSpec s;
  s.accesses_per_interaction = 3;
  Rng rng(2);
  const std::vector<std::string> one{"only"};
  for (const auto& id : step_interaction(s, one, rng)) CHECK(id == "only");
  const std::vector<std::string> none;
  try {
    step_interaction(s, none, rng);
    FAIL("expected EmptyPopulation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyPopulation);
  }
}

TEST_CASE("arrivals per epoch stay in range and are spread over the epoch") {
  auto gen = make_gen(WorkloadSpec{});
  const std::vector<std::string> live{"x"};
  for (int e = 0; e < 100; ++e) {
    gen.begin_epoch(100);
    CHECK(gen.planned_arrivals() >= 10);
    CHECK(gen.planned_arrivals() <= 20);
    std::size_t seen = 0;
    for (int step = 0; step < 100; ++step) {
      const auto it = gen.step(step, live, 1000.0 + step);
      CHECK(it.accesses.size() == 1);
      for (const auto& r : it.arrivals) CHECK(r.t_last == 1000.0 + step);
      seen += it.arrivals.size();
    }
    CHECK(seen == static_cast<std::size_t>(gen.planned_arrivals()));
  }
}

TEST_CASE("aggregate") {
  std::vector<EpochReport> reports(4);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    reports[i].epoch_index = i;
    reports[i].memories_start = 100;
    reports[i].memories_end = 100;
    reports[i].cache_hits = 3;
    reports[i].cache_misses = 1;
  }
  std::vector<std::size_t> baseline(4, 100);
  SUBCASE("no forgetting, no instances") {
    const auto m = aggregate(reports, baseline);
    CHECK(m.footprint_reduction == 0.0);
    CHECK(m.pbft_success_rate == 1.0);
    CHECK(m.cache_hit_rate == doctest::Approx(0.75));
    CHECK(aggregate(reports, baseline, true).pbft_success_rate == 1.0);
  }
  SUBCASE("timeouts and vacuous epochs") {
    reports[0].consensus_reached = 5;
    reports[1].consensus_reached = 4;
    reports[1].consensus_failed = 1;
    reports[2].consensus_reached = 2;
    reports.back().memories_end = 60;
    reports.back().deleted = 40;
    reports.back().deletion_rate = 0.4;
    const auto m = aggregate(reports, baseline);
    CHECK(m.pbft_success_rate == doctest::Approx(3.0 / 4.0));
    CHECK(aggregate(reports, baseline, true).pbft_success_rate == doctest::Approx(2.0 / 3.0));
    CHECK(m.footprint_reduction == doctest::Approx(0.4));
    CHECK(m.mean_deletion_rate == doctest::Approx(0.1));
    CHECK(m.total_timeouts == 1);
  }
  SUBCASE("480 of 500 decided") {
    std::vector<EpochReport> many(500);
    for (std::size_t i = 0; i < many.size(); ++i) {
      many[i].consensus_reached = 3;
      many[i].consensus_failed = i < 20 ? 1 : 0;
    }
    std::vector<std::size_t> b(500, 1);
    CHECK(aggregate(many, b).pbft_success_rate == doctest::Approx(0.96));
  }
  CHECK_THROWS_AS(aggregate(std::span<const EpochReport>{}, std::span<const std::size_t>{}), Error);
}
