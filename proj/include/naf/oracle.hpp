#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "naf/cp_delta.hpp"
#include "naf/cp_k.hpp"
#include "naf/model.hpp"
#include "naf/sharding.hpp"

namespace naf::oracle {

/**
 * Decidable event over output sequences: either an explicit set of joined
 * sequences, or token-boundary substring containment (the desk-scale stand-in
 * for "substantially similar to C").
 */
class EventSpec {
public:
    static EventSpec label_set(std::set<std::string> labels);
    static EventSpec substring(std::string needle);

    bool matches(const std::string& joined_sequence) const;
    const std::string& description() const { return description_; }

private:
    EventSpec() = default;
    std::set<std::string> labels_;
    std::optional<std::string> needle_;
    std::string description_;
};

// ---------------------------------------------------------------------------
// Brute-force verifiers. All of them materialize or stream the exact output
// distributions, so a failure is a real bug, not noise.
// ---------------------------------------------------------------------------

struct NafEntry {
    std::string prompt;
    std::string worst_y;
    Bits measured_k{0.0};
    Bits claimed_bound{0.0};
    bool pass = false;
};

// Measures the divergence from p's full output distribution to every cover
// model's and compares it against the builder's claimed bound. For the max
// divergence, measured_k is the worst log ratio over Supp(p); for KL it is
// the worst per-cover-model KL divergence.
NafEntry verify_naf(const ConditionalModel& p, std::span<const ModelPtr> cover,
                    std::span<const std::string> prompt, int max_len, Bits claimed_bound,
                    Divergence divergence = Divergence::kMax, double tol_bits = 1e-9,
                    std::size_t cap = kDefaultEnumerationCap);

struct EventBoundResult {
    double p_mass = 0.0;
    std::vector<double> safe_masses;
    Bits k{0.0};
    bool pass = false;
};

// Checks p(E|x) <= 2^k * q(E|x) for every cover model q.
EventBoundResult verify_event_bound(const ConditionalModel& p,
                                    std::span<const ModelPtr> cover,
                                    std::span<const std::string> prompt, int max_len,
                                    const EventSpec& event, Bits k, double tol_mass = 1e-9,
                                    std::size_t cap = kDefaultEnumerationCap);

/**
 * Exact concentration profile of the log-ratio variable Y = log2(p(y)/q(y)),
 * y ~ p: for each epsilon on a 1e-3 grid, delta is the exact probability
 * that Y falls outside (1 +- epsilon) E[Y]. E[Y] is the KL divergence.
 */
struct ConcentrationFrontier {
    Bits mean{0.0};
    std::vector<double> eps;
    std::vector<double> delta;
};

ConcentrationFrontier concentration_frontier(const ConditionalModel& p,
                                             const ConditionalModel& safe,
                                             std::span<const std::string> prompt,
                                             int max_len, double eps_step = 1e-3,
                                             std::size_t cap = kDefaultEnumerationCap);

// The concentrated-KL event inequality, p(E) <= 2^((1+eps) k) safe(E) + delta.
bool kl_event_inequality_holds(double p_mass, double safe_mass, Bits k, double eps,
                               double delta, double tol_mass = 1e-9);

struct KlEventResult {
    Bits k{0.0};
    std::size_t events_checked = 0;
    std::size_t frontier_points = 0;
    bool pass = false;
};

// Checks the inequality above for every event at every point of the exact
// (eps, delta) frontier.
KlEventResult verify_event_bound_kl(const ConditionalModel& p, const ConditionalModel& safe,
                                    std::span<const std::string> prompt, int max_len,
                                    std::span<const EventSpec> events,
                                    double tol_mass = 1e-9,
                                    std::size_t cap = kDefaultEnumerationCap);

struct DegradationEntry {
    std::string what;
    double measured = 0.0;
    double bound = 0.0;
    bool pass = false;
};

// CP-Delta combiner at one context: TV(combined, q_i) <= TV(q1, q2) for two
// sources (1 - Z in general) and KL(combined, q_i) <= -(m+1) log2 Z.
std::vector<DegradationEntry> verify_degradation_cp_delta(
    const CPDeltaModel& p, std::span<const std::string> context, double tol = 1e-9);

// CP-k: TV(p_k, p) <= 1 - nu.
DegradationEntry verify_degradation_cpk(const CPkSampler& s,
                                        std::span<const std::string> prompt,
                                        double tol = 1e-9,
                                        std::size_t cap = kDefaultEnumerationCap);

// ---------------------------------------------------------------------------
// Instance generators (shared by the suite and the property tests).
// ---------------------------------------------------------------------------

// Random distribution over labels y0..y{n-1}; index 0 always keeps positive
// mass so families built over one alphabet overlap somewhere.
Categorical random_categorical(std::mt19937_64& rng, std::size_t alphabet_size,
                               double zero_fraction = 0.0);

// A family of `count` distributions over one alphabet.
std::vector<Categorical> random_family(std::mt19937_64& rng, std::size_t alphabet_size,
                                       std::size_t count, double zero_fraction = 0.0);

// Family where source i puts `spike_mass` on its own unique label (the
// memorized element) and the rest on a shared background.
std::vector<Categorical> spiked_family(std::mt19937_64& rng, std::size_t alphabet_size,
                                       std::size_t count, double spike_mass);

/// The worked two-source fixture: spiked shard models whose combination
/// drops both spikes and reproduces every constant in the analysis.
struct ExampleFixture {
    ModelPtr q1;
    ModelPtr q2;
    SafeCover cover;
};

ExampleFixture example_fixture();

// ---------------------------------------------------------------------------
// Verification suite
// ---------------------------------------------------------------------------

struct SuiteTolerances {
    double exact = 1e-12;
    double mass = 1e-9;
    double bits = 1e-9;
};

struct SuiteConfig {
    std::uint64_t seed = 13;
    int partition_pairs = 1000;
    int naf_instances = 200;
    int efficiency_instances = 200;
    int nu_grid_points = 20;
    int corollary_pairs = 100;
    int sampler_instances = 10;
    std::uint64_t sampler_draws = 100000;
    int kl_event_instances = 20;
    int kl_events_per_instance = 100;
    std::uint64_t memorization_draws = 10000;
    std::size_t enum_cap = kDefaultEnumerationCap;
    SuiteTolerances tol;
    std::vector<std::string> only;  // empty = run everything
    bool corrupt = false;           // run the corrupted fixtures instead
};

SuiteConfig suite_config_from_json(const nlohmann::json& j);

struct CheckResult {
    std::string name;
    bool pass = false;
    double seconds = 0.0;
    std::string details;
};

struct SuiteReport {
    std::vector<CheckResult> checks;
    bool all_pass() const;
    nlohmann::json to_json() const;
};

// Goodness-of-fit of observed counts against an exact distribution. Labels
// with expected count below 5 are pooled; observed labels outside the
// distribution's support force a zero p-value.
struct GofResult {
    double statistic = 0.0;
    double dof = 0.0;
    double p_value = 0.0;
};

GofResult chi_squared_gof(const Categorical& expected,
                          const std::map<std::string, std::uint64_t>& observed,
                          std::uint64_t draws);

// Known check names, in criterion order.
const std::vector<std::string>& suite_check_names();

// Runs every requested check; failures are results, not errors.
SuiteReport verify_suite(const SuiteConfig& config);

}  // namespace naf::oracle
