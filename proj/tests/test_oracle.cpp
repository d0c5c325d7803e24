#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "naf/errors.hpp"
#include "naf/numeric.hpp"
#include "naf/oracle.hpp"

using namespace naf;
using namespace naf::oracle;

namespace {

const std::vector<std::string> kNoPrompt;

ModelPtr table(const Categorical& dist) {
    return std::make_shared<TableModel>(TableModel::single_step(dist));
}

}  // namespace

TEST_CASE("event specs: label sets and token-boundary substrings") {
    const EventSpec labels = EventSpec::label_set({"a b", "c"});
    CHECK(labels.matches("a b"));
    CHECK_FALSE(labels.matches("a"));

    const EventSpec sub = EventSpec::substring("quick fox");
    CHECK(sub.matches("quick fox"));
    CHECK(sub.matches("the quick fox runs"));
    CHECK_FALSE(sub.matches("quick foxes run"));  // token boundary respected
    CHECK_FALSE(sub.matches("quick"));
}

TEST_CASE("verify_naf measures zero against itself and the worked constants") {
    const ExampleFixture f = example_fixture();
    const std::vector<ModelPtr> self = {f.q1};
    const NafEntry zero = verify_naf(*f.q1, self, kNoPrompt, 1, Bits(0.0));
    CHECK(zero.measured_k.value() == 0.0);
    CHECK(zero.pass);

    const Categorical dists[] = {f.q1->next_token_dist({}), f.q2->next_token_dist({})};
    const CombineResult c = combine_next(dists, Divergence::kMax);
    const NafEntry e = verify_naf(*table(c.dist), f.cover.models, kNoPrompt, 1, c.k_bound);
    CHECK(e.measured_k.value() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e.claimed_bound.value() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e.pass);

    // Cross-check: measured_k equals dmax on the materialized distributions.
    const Categorical p_seq = sequence_distribution(*table(c.dist), kNoPrompt, 1);
    const Categorical q_seq = sequence_distribution(*f.q1, kNoPrompt, 1);
    CHECK(e.measured_k.value() == dmax(p_seq, q_seq).value());

    // Understated claim fails.
    CHECK_FALSE(verify_naf(*table(c.dist), f.cover.models, kNoPrompt, 1, Bits(0.5)).pass);
}

TEST_CASE("verify_naf passes on random combiner instances (the oracle's own law)") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 60; ++i) {
        const auto family = random_family(rng, 3 + rng() % 8, 2 + i % 3, 0.2);
        std::vector<ModelPtr> cover;
        for (const Categorical& q : family) {
            cover.push_back(table(q));
        }
        for (Divergence div : {Divergence::kMax, Divergence::kKl}) {
            const CombineResult c = combine_next(family, div);
            CHECK(verify_naf(*table(c.dist), cover, kNoPrompt, 1, c.k_bound, div).pass);
        }
    }
}

TEST_CASE("verify_event_bound: trivial event, worked zero-mass event, negative control") {
    const ExampleFixture f = example_fixture();
    const Categorical dists[] = {f.q1->next_token_dist({}), f.q2->next_token_dist({})};
    const CombineResult c = combine_next(dists, Divergence::kMax);
    const ModelPtr combined = table(c.dist);

    // Everything-event: both masses are 1 and any k >= 0 passes.
    const EventBoundResult all = verify_event_bound(
        *combined, f.cover.models, kNoPrompt, 1,
        EventSpec::label_set({"C1", "C2", "a", "b"}), Bits(0.0));
    CHECK(all.p_mass == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(all.pass);

    // The spike event has zero combined mass: 0 <= 2^1 * 0.
    const EventBoundResult spike = verify_event_bound(
        *combined, f.cover.models, kNoPrompt, 1, EventSpec::label_set({"C1"}), c.k_bound);
    CHECK(spike.p_mass == 0.0);
    CHECK(spike.pass);

    // Unprotected model against the safe shard at k = 0 must fail.
    const std::vector<ModelPtr> safe_only = {f.q2};
    const EventBoundResult bad = verify_event_bound(
        *f.q1, safe_only, kNoPrompt, 1, EventSpec::label_set({"C1"}), Bits(0.0));
    CHECK_FALSE(bad.pass);
    CHECK(bad.p_mass == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(bad.safe_masses[0] == 0.0);
}

TEST_CASE("concentration frontier: degenerate, constant, and spread cases") {
    const ExampleFixture f = example_fixture();

    // p = safe: Y is identically 0, (0,0)-concentrated.
    const ConcentrationFrontier self =
        concentration_frontier(*f.q1, *f.q1, kNoPrompt, 1);
    CHECK(self.mean.value() == 0.0);
    CHECK(self.delta.front() == 0.0);

    // The worked KL-combined model: Y = 1 on the whole support.
    const Categorical dists[] = {f.q1->next_token_dist({}), f.q2->next_token_dist({})};
    const CombineResult c = combine_next(dists, Divergence::kKl);
    const ConcentrationFrontier fixed =
        concentration_frontier(*table(c.dist), *f.q1, kNoPrompt, 1);
    CHECK(fixed.mean.value() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fixed.delta.front() == 0.0);

    // A spread case: delta decreases along the epsilon grid to 0.
    const Categorical p({"a", "b"}, {0.9, 0.1});
    const Categorical q({"a", "b"}, {0.5, 0.5});
    const ConcentrationFrontier spread =
        concentration_frontier(*table(p), *table(q), kNoPrompt, 1);
    CHECK(spread.mean.value() == doctest::Approx(brute::kl_bits(brute::to_map(p),
                                                                brute::to_map(q)))
                                     .epsilon(1e-12));
    for (std::size_t i = 1; i < spread.delta.size(); ++i) {
        CHECK(spread.delta[i] <= spread.delta[i - 1] + 1e-15);
    }
    CHECK(spread.delta.back() == 0.0);
    CHECK(spread.eps[1] - spread.eps[0] == doctest::Approx(1e-3));

    // Support violation: KL undefined.
    CHECK_THROWS_AS(concentration_frontier(*f.q1, *f.q2, kNoPrompt, 1), InvalidInput);
}

TEST_CASE("verify_event_bound_kl holds on random instances and fails when corrupted") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 20; ++i) {
        const Categorical q = random_categorical(rng, 4 + rng() % 10, 0.0);
        const Categorical p = random_categorical(rng, q.size(), 0.3);
        std::vector<EventSpec> events;
        for (int e = 0; e < 40; ++e) {
            std::set<std::string> labels;
            for (const std::string& label : p.labels()) {
                if (rng() % 2 == 0) {
                    labels.insert(label);
                }
            }
            events.push_back(EventSpec::label_set(std::move(labels)));
        }
        const KlEventResult res =
            verify_event_bound_kl(*table(p), *table(q), kNoPrompt, 1, events);
        CHECK(res.pass);
        CHECK(res.events_checked == events.size());
    }

    // A fabricated (0,0) concentration claim is rejected.
    const Categorical p({"a", "b"}, {0.9, 0.1});
    const Categorical q({"a", "b"}, {0.5, 0.5});
    CHECK_FALSE(kl_event_inequality_holds(0.9, 0.5, kl(p, q), 0.0, 0.0));
    // With the true delta at eps = 0 (everything off-mean), it holds.
    CHECK(kl_event_inequality_holds(0.9, 0.5, kl(p, q), 0.0, 1.0));
}

TEST_CASE("event bound with substring events on a small sharded experiment") {
    // Two shard bigrams, each memorizing its own duplicated sentence.
    std::vector<std::string> shard1(5, "magma vortex");
    std::vector<std::string> shard2(5, "lichen tundra");
    for (int i = 0; i < 10; ++i) {
        shard1.push_back(i % 2 == 0 ? "rock rolls" : "water flows");
        shard2.push_back(i % 2 == 0 ? "rock rolls" : "water flows");
    }
    std::vector<std::string> words;
    for (const auto& docs : {shard1, shard2}) {
        for (const std::string& doc : docs) {
            for (std::string& t : split_tokens(doc)) {
                words.push_back(std::move(t));
            }
        }
    }
    const Vocab vocab = Vocab::from_words(words);
    std::vector<ModelPtr> cover = {
        std::make_shared<NGramModel>(NGramModel::train(shard1, 2, 0.2, vocab)),
        std::make_shared<NGramModel>(NGramModel::train(shard2, 2, 0.2, vocab))};
    const int max_len = 2;
    const CPDeltaModel combined(cover, Divergence::kMax);

    // The combined model's mass on either memorized sentence obeys
    // p(E) <= 2^k safe(E) with the worst chain-rule bound as k.
    double worst_bound = 0.0;
    for_each_sequence(combined, kNoPrompt, max_len, kDefaultEnumerationCap,
                      [&](std::span<const std::string> y, double /*prob*/) {
                          worst_bound = std::max(
                              worst_bound,
                              sequence_k_bound(combined, kNoPrompt, y, max_len).value());
                      });
    for (const char* sentence : {"magma vortex", "lichen tundra"}) {
        const EventBoundResult r =
            verify_event_bound(combined, cover, kNoPrompt, max_len,
                               EventSpec::substring(sentence), Bits(worst_bound));
        CHECK(r.pass);
        // Margin is real: the event has positive mass under every model.
        CHECK(r.p_mass > 0.0);
        for (double safe_mass : r.safe_masses) {
            CHECK(r.p_mass <= std::exp2(worst_bound) * safe_mass + 1e-9);
        }
    }
}

TEST_CASE("kl event bound reduces to p(E) <= safe(E) + delta when p equals safe") {
    const ExampleFixture f = example_fixture();
    std::vector<EventSpec> events;
    events.push_back(EventSpec::label_set({"C1"}));
    events.push_back(EventSpec::label_set({"a", "b"}));
    const KlEventResult res = verify_event_bound_kl(*f.q1, *f.q1, kNoPrompt, 1, events);
    CHECK(res.pass);
    CHECK(res.k.value() == 0.0);
}

TEST_CASE("degradation verifiers: identical sources, boundary case, corrupted claim") {
    const ExampleFixture f = example_fixture();

    // Identical sources: all distances 0.
    const CPDeltaModel noop({f.q1, f.q1}, Divergence::kMax);
    for (const DegradationEntry& e : verify_degradation_cp_delta(noop, kNoPrompt)) {
        CHECK(e.measured <= 1e-12);
        CHECK(e.pass);
    }

    // Worked boundary case: TV(combined, q_i) = 1/2 = TV(q1, q2) exactly.
    const CPDeltaModel combined(f.cover.models, Divergence::kMax);
    for (const DegradationEntry& e : verify_degradation_cp_delta(combined, kNoPrompt)) {
        CHECK(e.measured == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(e.bound == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(e.pass);
    }

    // CP-k: TV(p_k, p) <= 1 - nu.
    CPkSampler s;
    s.base = f.q1;
    s.cover = f.cover.models;
    s.variant = CpkVariant::kSmooth;
    s.k = Bits(0.0);
    s.max_len = 1;
    const DegradationEntry e = verify_degradation_cpk(s, kNoPrompt);
    CHECK(e.measured == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(e.bound == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(e.pass);
}

TEST_CASE("chi-squared goodness of fit flags impossible labels and gross mismatch") {
    const Categorical expected({"a", "b"}, {0.5, 0.5});
    std::map<std::string, std::uint64_t> ok{{"a", 5030}, {"b", 4970}};
    CHECK(chi_squared_gof(expected, ok, 10000).p_value > 0.001);

    std::map<std::string, std::uint64_t> impossible{{"a", 5000}, {"z", 5000}};
    CHECK(chi_squared_gof(expected, impossible, 10000).p_value == 0.0);

    std::map<std::string, std::uint64_t> skewed{{"a", 9000}, {"b", 1000}};
    CHECK(chi_squared_gof(expected, skewed, 10000).p_value < 1e-6);
}

TEST_CASE("suite: single named check, unknown name, and config parsing") {
    SuiteConfig cfg;
    cfg.only = {"example-3.2"};
    const SuiteReport report = verify_suite(cfg);
    REQUIRE(report.checks.size() == 1);
    CHECK(report.checks[0].pass);
    CHECK(report.all_pass());
    CHECK(report.to_json().at("all_pass").get<bool>());

    SuiteConfig bad;
    bad.only = {"no-such-check"};
    CHECK_THROWS_AS(verify_suite(bad), InvalidInput);

    const auto parsed = suite_config_from_json(nlohmann::json::parse(R"({
        "seeds": {"master": 99},
        "instances": {"partition_pairs": 10, "sampler_draws": 1000},
        "tolerances": {"exact": 1e-10},
        "only": ["partition-identity"]
    })"));
    CHECK(parsed.seed == 99);
    CHECK(parsed.partition_pairs == 10);
    CHECK(parsed.sampler_draws == 1000);
    CHECK(parsed.tol.exact == 1e-10);
    REQUIRE(parsed.only.size() == 1);
    const SuiteReport small = verify_suite(parsed);
    CHECK(small.all_pass());
}

TEST_CASE("suite corrupt mode reports every corrupted fixture as a failure") {
    SuiteConfig cfg;
    cfg.corrupt = true;
    const SuiteReport report = verify_suite(cfg);
    CHECK(report.checks.size() >= 8);
    for (const CheckResult& c : report.checks) {
        CHECK_FALSE(c.pass);
    }
}

TEST_CASE("generators: families overlap and spiked sources are proper spikes") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 30; ++i) {
        const auto family = random_family(rng, 2 + rng() % 30, 3, 0.5);
        for (const Categorical& c : family) {
            CHECK(c.prob_of("y0") > 0.0);
        }
        const auto spiked = spiked_family(rng, 4, 3, 0.4);
        for (std::size_t j = 0; j < spiked.size(); ++j) {
            CHECK(spiked[j].prob_of("spike" + std::to_string(j)) ==
                  doctest::Approx(0.4).epsilon(1e-12));
            for (std::size_t l = 0; l < spiked.size(); ++l) {
                if (l != j) {
                    CHECK(spiked[j].prob_of("spike" + std::to_string(l)) == 0.0);
                }
            }
        }
    }
}
