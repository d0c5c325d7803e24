#include "naf/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

#include "naf/demo.hpp"
#include "naf/errors.hpp"
#include "naf/numeric.hpp"

namespace naf::oracle {

using nlohmann::json;

// ---------------------------------------------------------------------------
// EventSpec
// ---------------------------------------------------------------------------

EventSpec EventSpec::label_set(std::set<std::string> labels) {
    EventSpec e;
    e.description_ = "label-set(" + std::to_string(labels.size()) + " labels)";
    e.labels_ = std::move(labels);
    return e;
}

EventSpec EventSpec::substring(std::string needle) {
    EventSpec e;
    e.description_ = "contains \"" + needle + "\"";
    e.needle_ = std::move(needle);
    return e;
}

bool EventSpec::matches(const std::string& joined_sequence) const {
    if (needle_.has_value()) {
        // Token-boundary containment: tokens carry no spaces, so padding both
        // sides with one space makes substring search exact on token runs.
        const std::string padded = " " + joined_sequence + " ";
        const std::string target = " " + *needle_ + " ";
        return padded.find(target) != std::string::npos;
    }
    return labels_.count(joined_sequence) != 0;
}

// ---------------------------------------------------------------------------
// Verifiers
// ---------------------------------------------------------------------------

NafEntry verify_naf(const ConditionalModel& p, std::span<const ModelPtr> cover,
                    std::span<const std::string> prompt, int max_len, Bits claimed_bound,
                    Divergence divergence, double tol_bits, std::size_t cap) {
    if (cover.empty()) {
        throw InvalidInput("verify_naf: cover is empty");
    }
    const Categorical p_dist = sequence_distribution(p, prompt, max_len, cap);
    NafEntry entry;
    entry.prompt = join_tokens(prompt);
    entry.claimed_bound = claimed_bound;
    Bits measured = Bits::neg_infinity();
    for (const ModelPtr& q : cover) {
        const Categorical q_dist = sequence_distribution(*q, prompt, max_len, cap);
        const Bits div = divergence == Divergence::kMax ? dmax(p_dist, q_dist)
                                                        : kl(p_dist, q_dist);
        if (div > measured) {
            measured = div;
            // Worst output = largest pointwise log ratio against this model.
            double worst_ratio = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < p_dist.size(); ++i) {
                const double py = p_dist.probs()[i];
                if (py <= 0.0) {
                    continue;
                }
                const double qy = q_dist.prob_of(p_dist.labels()[i]);
                const double r = qy == 0.0 ? std::numeric_limits<double>::infinity()
                                           : std::log2(py / qy);
                if (r > worst_ratio) {
                    worst_ratio = r;
                    entry.worst_y = p_dist.labels()[i];
                }
            }
        }
    }
    entry.measured_k = measured;
    entry.pass = measured <= claimed_bound + Bits(tol_bits);
    return entry;
}

EventBoundResult verify_event_bound(const ConditionalModel& p,
                                    std::span<const ModelPtr> cover,
                                    std::span<const std::string> prompt, int max_len,
                                    const EventSpec& event, Bits k, double tol_mass,
                                    std::size_t cap) {
    if (cover.empty()) {
        throw InvalidInput("verify_event_bound: cover is empty");
    }
    EventBoundResult result;
    result.k = k;
    NeumaierSum p_mass;
    for_each_sequence(p, prompt, max_len, cap,
                      [&](std::span<const std::string> y, double prob) {
                          if (event.matches(join_tokens(y))) {
                              p_mass.add(prob);
                          }
                      });
    result.p_mass = p_mass.value();
    result.pass = true;
    for (const ModelPtr& q : cover) {
        NeumaierSum q_mass;
        for_each_sequence(*q, prompt, max_len, cap,
                          [&](std::span<const std::string> y, double prob) {
                              if (event.matches(join_tokens(y))) {
                                  q_mass.add(prob);
                              }
                          });
        result.safe_masses.push_back(q_mass.value());
        if (k.finite()) {
            const double bound = std::exp2(k.value()) * q_mass.value();
            if (result.p_mass > bound + tol_mass) {
                result.pass = false;
            }
        }
    }
    return result;
}

ConcentrationFrontier concentration_frontier(const ConditionalModel& p,
                                             const ConditionalModel& safe,
                                             std::span<const std::string> prompt,
                                             int max_len, double eps_step,
                                             std::size_t cap) {
    if (!(eps_step > 0.0)) {
        throw InvalidInput("concentration_frontier: eps_step must be positive");
    }
    // Collect the log-ratio variable Y over Supp(p) with its p-masses.
    std::vector<std::pair<double, double>> y_mass;  // (Y value, p mass)
    NeumaierSum mean;
    for_each_sequence(p, prompt, max_len, cap,
                      [&](std::span<const std::string> y, double /*prob*/) {
                          const double lp = score_sequence(p, prompt, y, max_len).value();
                          const Bits lq = score_sequence(safe, prompt, y, max_len);
                          if (!lq.finite()) {
                              throw InvalidInput(
                                  "concentration_frontier: p has mass outside the safe "
                                  "model's support, KL is infinite");
                          }
                          const double py = std::exp2(lp);
                          const double yv = lp - lq.value();
                          y_mass.emplace_back(yv, py);
                          mean.add(py * yv);
                      });
    ConcentrationFrontier frontier;
    const double mu = std::max(0.0, mean.value());
    frontier.mean = Bits(mu);

    double eps_needed = 0.0;
    if (mu > 0.0) {
        for (const auto& [yv, mass] : y_mass) {
            eps_needed = std::max(eps_needed, std::abs(yv - mu) / mu);
        }
    }
    const auto delta_at = [&](double eps) {
        const double lo = (1.0 - eps) * mu;
        const double hi = (1.0 + eps) * mu;
        NeumaierSum outside;
        for (const auto& [yv, mass] : y_mass) {
            if (yv < lo || yv > hi) {
                outside.add(mass);
            }
        }
        return std::clamp(outside.value(), 0.0, 1.0);
    };

    constexpr std::size_t kMaxGridPoints = 200000;
    for (std::size_t i = 0;; ++i) {
        const double eps = static_cast<double>(i) * eps_step;
        const double delta = delta_at(eps);
        frontier.eps.push_back(eps);
        frontier.delta.push_back(delta);
        if (delta == 0.0 || mu == 0.0) {
            break;
        }
        if (eps > eps_needed || i >= kMaxGridPoints) {
            frontier.eps.push_back(eps_needed + eps_step);
            frontier.delta.push_back(delta_at(eps_needed + eps_step));
            break;
        }
    }
    return frontier;
}

bool kl_event_inequality_holds(double p_mass, double safe_mass, Bits k, double eps,
                               double delta, double tol_mass) {
    if (!k.finite()) {
        return true;
    }
    const double bound = std::exp2((1.0 + eps) * k.value()) * safe_mass + delta;
    return p_mass <= bound + tol_mass;
}

KlEventResult verify_event_bound_kl(const ConditionalModel& p, const ConditionalModel& safe,
                                    std::span<const std::string> prompt, int max_len,
                                    std::span<const EventSpec> events, double tol_mass,
                                    std::size_t cap) {
    // Materialize once; event masses are then simple filtered sums.
    struct Row {
        std::string label;
        double p_mass;
        double safe_mass;
    };
    std::vector<Row> rows;
    for_each_sequence(p, prompt, max_len, cap,
                      [&](std::span<const std::string> y, double prob) {
                          const double qy =
                              std::exp2(score_sequence(safe, prompt, y, max_len).value());
                          rows.push_back({join_tokens(y), prob, qy});
                      });
    const ConcentrationFrontier frontier =
        concentration_frontier(p, safe, prompt, max_len, 1e-3, cap);

    KlEventResult result;
    result.k = frontier.mean;
    result.frontier_points = frontier.eps.size();
    result.pass = true;
    for (const EventSpec& event : events) {
        NeumaierSum pe;
        NeumaierSum qe;
        for (const Row& row : rows) {
            if (event.matches(row.label)) {
                pe.add(row.p_mass);
                qe.add(row.safe_mass);
            }
        }
        for (std::size_t i = 0; i < frontier.eps.size(); ++i) {
            if (!kl_event_inequality_holds(pe.value(), qe.value(), frontier.mean,
                                           frontier.eps[i], frontier.delta[i], tol_mass)) {
                result.pass = false;
            }
        }
        ++result.events_checked;
    }
    return result;
}

std::vector<DegradationEntry> verify_degradation_cp_delta(
    const CPDeltaModel& p, std::span<const std::string> context, double tol) {
    const CombineResult combined = p.combine_at(context);
    std::vector<Categorical> sources;
    sources.reserve(p.sources().size());
    for (const ModelPtr& q : p.sources()) {
        sources.push_back(q->next_token_dist(context));
    }
    const bool two_sources = sources.size() == 2;
    std::vector<DegradationEntry> entries;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        DegradationEntry e;
        if (p.divergence() == Divergence::kMax) {
            e.what = "TV(combined, q" + std::to_string(i + 1) + ")";
            e.measured = tv(combined.dist, sources[i]);
            e.bound = two_sources ? tv(sources[0], sources[1]) : 1.0 - combined.z;
        } else {
            e.what = "KL(combined, q" + std::to_string(i + 1) + ")";
            const Bits measured = kl(combined.dist, sources[i]);
            e.measured = measured.value();
            e.bound = two_sources
                          ? -2.0 * std::log2(1.0 - hellinger_sq(sources[0], sources[1]))
                          : static_cast<double>(sources.size()) * -std::log2(combined.z);
        }
        e.pass = e.measured <= e.bound + tol;
        entries.push_back(std::move(e));
    }
    return entries;
}

DegradationEntry verify_degradation_cpk(const CPkSampler& s,
                                        std::span<const std::string> prompt, double tol,
                                        std::size_t cap) {
    const AnalyticPk pk = analytic_pk(s, prompt, cap);
    const Categorical base = sequence_distribution(*s.base, prompt, s.max_len, cap);
    DegradationEntry e;
    e.what = "TV(p_k, p)";
    e.measured = tv(pk.dist, base);
    e.bound = 1.0 - pk.nu;
    e.pass = e.measured <= e.bound + tol;
    return e;
}

// ---------------------------------------------------------------------------
// Generators and the worked fixture
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> alphabet_labels(std::size_t n) {
    std::vector<std::string> labels;
    labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels.push_back("y" + std::to_string(i));
    }
    return labels;
}

std::vector<double> normalized_weights(std::vector<double> w) {
    const double total = neumaier_sum(w);
    for (double& x : w) {
        x /= total;
    }
    return w;
}

}  // namespace

Categorical random_categorical(std::mt19937_64& rng, std::size_t alphabet_size,
                               double zero_fraction) {
    if (alphabet_size < 2) {
        throw InvalidInput("random_categorical: alphabet must have >= 2 labels");
    }
    std::vector<double> w(alphabet_size);
    for (std::size_t i = 0; i < alphabet_size; ++i) {
        w[i] = -std::log(1.0 - uniform01(rng));
        if (i > 0 && uniform01(rng) < zero_fraction) {
            w[i] = 0.0;  // index 0 stays positive so families always overlap
        }
    }
    return Categorical(alphabet_labels(alphabet_size), normalized_weights(std::move(w)));
}

std::vector<Categorical> random_family(std::mt19937_64& rng, std::size_t alphabet_size,
                                       std::size_t count, double zero_fraction) {
    std::vector<Categorical> family;
    family.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        family.push_back(random_categorical(rng, alphabet_size, zero_fraction));
    }
    return family;
}

std::vector<Categorical> spiked_family(std::mt19937_64& rng, std::size_t alphabet_size,
                                       std::size_t count, double spike_mass) {
    if (!(spike_mass > 0.0) || !(spike_mass < 1.0)) {
        throw InvalidInput("spiked_family: spike mass must be in (0, 1)");
    }
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < count; ++i) {
        labels.push_back("spike" + std::to_string(i));
    }
    for (const std::string& l : alphabet_labels(alphabet_size)) {
        labels.push_back(l);
    }
    std::vector<double> background(alphabet_size);
    for (double& x : background) {
        x = -std::log(1.0 - uniform01(rng));
    }
    background = normalized_weights(std::move(background));

    std::vector<Categorical> family;
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<double> probs(labels.size(), 0.0);
        probs[i] = spike_mass;
        for (std::size_t j = 0; j < alphabet_size; ++j) {
            probs[count + j] = (1.0 - spike_mass) * background[j];
        }
        family.emplace_back(labels, std::move(probs));
    }
    return family;
}

ExampleFixture example_fixture() {
    ExampleFixture f;
    f.q1 = std::make_shared<TableModel>(
        TableModel::single_step(Categorical({"C1", "a", "b"}, {0.5, 0.25, 0.25})));
    f.q2 = std::make_shared<TableModel>(
        TableModel::single_step(Categorical({"C2", "a", "b"}, {0.5, 0.25, 0.25})));
    f.cover.models = {f.q1, f.q2};
    f.cover.safe_index = {{"C1", 1}, {"C2", 0}};
    return f;
}

// ---------------------------------------------------------------------------
// chi-squared goodness of fit
// ---------------------------------------------------------------------------

GofResult chi_squared_gof(const Categorical& expected,
                          const std::map<std::string, std::uint64_t>& observed,
                          std::uint64_t draws) {
    if (draws == 0) {
        throw InvalidInput("chi_squared_gof: no draws");
    }
    // Any observed label outside the expected support is an immediate bust.
    for (const auto& [label, count] : observed) {
        if (count > 0 && expected.prob_of(label) == 0.0) {
            return {std::numeric_limits<double>::infinity(), 1.0, 0.0};
        }
    }
    const double n = static_cast<double>(draws);
    double stat = 0.0;
    int bins = 0;
    double pooled_expected = 0.0;
    double pooled_observed = 0.0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const double e = expected.probs()[i] * n;
        const auto it = observed.find(expected.labels()[i]);
        const double o = it == observed.end() ? 0.0 : static_cast<double>(it->second);
        if (e < 5.0) {
            pooled_expected += e;
            pooled_observed += o;
            continue;
        }
        stat += (o - e) * (o - e) / e;
        ++bins;
    }
    if (pooled_expected > 0.0) {
        stat += (pooled_observed - pooled_expected) * (pooled_observed - pooled_expected) /
                pooled_expected;
        ++bins;
    }
    GofResult r;
    r.statistic = stat;
    r.dof = std::max(1, bins - 1);
    r.p_value = chi_squared_pvalue(stat, r.dof);
    return r;
}

// ---------------------------------------------------------------------------
// Suite
// ---------------------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

ModelPtr wrap_single_step(const Categorical& dist) {
    return std::make_shared<TableModel>(TableModel::single_step(dist));
}

std::vector<ModelPtr> wrap_family(const std::vector<Categorical>& family) {
    std::vector<ModelPtr> out;
    out.reserve(family.size());
    for (const Categorical& c : family) {
        out.push_back(wrap_single_step(c));
    }
    return out;
}

struct Failure {
    std::ostringstream text;
    int count = 0;

    void note(const std::string& msg) {
        if (count < 5) {
            if (count > 0) {
                text << "; ";
            }
            text << msg;
        }
        ++count;
    }
    bool ok() const { return count == 0; }
    std::string str() const {
        if (count == 0) {
            return "";
        }
        return std::to_string(count) + " violation(s): " + text.str();
    }
};

// Random single-step instance for the theorem checks: m+1 sources, either
// plain random or spiked, plus a base model over the same alphabet.
struct Instance {
    std::vector<Categorical> sources;
    Categorical base;
    int m;
};

Instance make_instance(std::mt19937_64& rng, int index) {
    const int m = 1 + index % 3;
    const std::size_t alphabet = 3 + rng() % 10;
    std::vector<Categorical> sources;
    if (index % 3 == 2) {
        sources = spiked_family(rng, alphabet, static_cast<std::size_t>(m + 1),
                                0.2 + 0.5 * uniform01(rng));
    } else {
        sources = random_family(rng, alphabet, static_cast<std::size_t>(m + 1),
                                index % 2 == 0 ? 0.0 : 0.25);
    }
    // Base model is either one shard or a fresh mix over the same alphabet.
    Categorical base = (index % 3 == 2 || rng() % 2 == 0)
                           ? sources[0]
                           : random_categorical(rng, alphabet, 0.0);
    return Instance{std::move(sources), std::move(base), m};
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

// --- individual checks -----------------------------------------------------

CheckResult check_example(const SuiteConfig& cfg) {
    CheckResult r{"example-3.2", false, 0.0, ""};
    Failure fail;
    const double tol = cfg.tol.exact;
    const ExampleFixture f = example_fixture();
    const Categorical q1 = f.q1->next_token_dist({});
    const Categorical q2 = f.q2->next_token_dist({});

    if (std::abs(tv(q1, q2) - 0.5) > tol) {
        fail.note("TV(q1,q2) != 1/2");
    }
    if (std::abs(hellinger_sq(q1, q2) - 0.5) > tol) {
        fail.note("H2(q1,q2) != 1/2");
    }
    const Categorical dists[] = {q1, q2};
    for (Divergence div : {Divergence::kMax, Divergence::kKl}) {
        const CombineResult c = combine_next(dists, div);
        if (std::abs(c.z - 0.5) > tol) {
            fail.note("Z != 1/2");
        }
        if (c.dist.size() != 2 || std::abs(c.dist.prob_of("a") - 0.5) > tol ||
            std::abs(c.dist.prob_of("b") - 0.5) > tol) {
            fail.note("combined output is not q");
        }
        const double expected_bound = div == Divergence::kMax ? 1.0 : 2.0;
        if (std::abs(c.k_bound.value() - expected_bound) > tol) {
            fail.note("bound != " + fmt(expected_bound));
        }
        for (const Categorical& q : dists) {
            if (std::abs(dmax(c.dist, q).value() - 1.0) > tol) {
                fail.note("max divergence to a source != 1 bit");
            }
            if (std::abs(kl(c.dist, q).value() - 1.0) > tol) {
                fail.note("KL divergence to a source != 1 bit");
            }
        }
        // Tight for max, loose by exactly a factor of two for KL.
        const double measured = 1.0;
        if (div == Divergence::kMax && std::abs(c.k_bound.value() - measured) > tol) {
            fail.note("max bound is not tight");
        }
        if (div == Divergence::kKl && std::abs(c.k_bound.value() - 2.0 * measured) > tol) {
            fail.note("KL bound is not loose by a factor of 2");
        }
    }
    r.pass = fail.ok();
    r.details = fail.ok() ? "all constants reproduced at 1e-12" : fail.str();
    return r;
}

CheckResult check_partition_identity(const SuiteConfig& cfg) {
    CheckResult r{"partition-identity", false, 0.0, ""};
    Failure fail;
    std::mt19937_64 rng(derive_seed(cfg.seed, "partition"));
    double worst = 0.0;
    for (int i = 0; i < cfg.partition_pairs; ++i) {
        const std::size_t alphabet = 2 + rng() % 63;
        const double zero_fraction = (i % 2 == 0) ? 0.0 : 0.3;
        const std::vector<Categorical> pair = random_family(rng, alphabet, 2, zero_fraction);
        const CombineResult cmax = combine_next(pair, Divergence::kMax);
        const CombineResult ckl = combine_next(pair, Divergence::kKl);
        const double err_max = std::abs(cmax.z - (1.0 - tv(pair[0], pair[1])));
        const double err_kl = std::abs(ckl.z - (1.0 - hellinger_sq(pair[0], pair[1])));
        worst = std::max({worst, err_max, err_kl});
        if (err_max > cfg.tol.exact) {
            fail.note("pair " + std::to_string(i) + ": |Z-(1-TV)| = " + fmt(err_max));
        }
        if (err_kl > cfg.tol.exact) {
            fail.note("pair " + std::to_string(i) + ": |Z-(1-H2)| = " + fmt(err_kl));
        }
    }
    r.pass = fail.ok();
    r.details = fail.ok() ? std::to_string(cfg.partition_pairs) +
                                " pairs, worst residual " + fmt(worst)
                          : fail.str();
    return r;
}

CheckResult check_naf_inequalities(const SuiteConfig& cfg) {
    CheckResult r{"naf-inequalities", false, 0.0, ""};
    Failure fail;
    std::mt19937_64 rng(derive_seed(cfg.seed, "naf"));
    const std::vector<std::string> no_prompt;
    for (int i = 0; i < cfg.naf_instances; ++i) {
        const Instance inst = make_instance(rng, i);
        const std::vector<ModelPtr> cover = wrap_family(inst.sources);

        // CP-Delta, both divergences.
        for (Divergence div : {Divergence::kMax, Divergence::kKl}) {
            const CombineResult c = combine_next(inst.sources, div);
            const NafEntry e = verify_naf(*wrap_single_step(c.dist), cover, no_prompt, 1,
                                          c.k_bound, div, cfg.tol.bits, cfg.enum_cap);
            if (!e.pass) {
                fail.note("instance " + std::to_string(i) + " cp-delta-" +
                          divergence_name(div) + ": measured " +
                          fmt(e.measured_k.value()) + " > claimed " +
                          fmt(e.claimed_bound.value()));
            }
        }

        // CP-k and smooth-CP-k with the exact acceptance probability.
        const double d = dx_categorical(inst.base, inst.sources);
        if (d >= 0.999) {
            continue;  // essentially disjoint; the hard threshold has no useful k
        }
        for (CpkVariant variant : {CpkVariant::kHard, CpkVariant::kSmooth}) {
            CPkSampler s;
            s.base = wrap_single_step(inst.base);
            s.cover = cover;
            s.variant = variant;
            s.max_len = 1;
            s.k = variant == CpkVariant::kHard
                      ? Bits(std::log2(2.0 / (1.0 - d)) + uniform01(rng))
                      : Bits(2.0 * uniform01(rng));
            const double nu = exact_nu(s, no_prompt, cfg.enum_cap);
            if (nu <= 0.0) {
                continue;
            }
            const AnalyticPk pk = analytic_pk(s, no_prompt, cfg.enum_cap);
            const NafEntry e =
                verify_naf(*wrap_single_step(pk.dist), cover, no_prompt, 1,
                           k_tilde(s.k, nu), Divergence::kMax, cfg.tol.bits, cfg.enum_cap);
            if (!e.pass) {
                fail.note("instance " + std::to_string(i) + " cp-k-" +
                          cpk_variant_name(variant) + ": measured " +
                          fmt(e.measured_k.value()) + " > claimed " +
                          fmt(e.claimed_bound.value()));
            }
        }
    }
    r.pass = fail.ok();
    r.details = fail.ok() ? std::to_string(cfg.naf_instances) + " instances, m in {1,2,3}"
                          : fail.str();
    return r;
}

CheckResult check_degradation(const SuiteConfig& cfg) {
    CheckResult r{"degradation-bounds", false, 0.0, ""};
    Failure fail;
    std::mt19937_64 rng(derive_seed(cfg.seed, "naf"));  // same instances as criterion 3
    const std::vector<std::string> no_prompt;
    for (int i = 0; i < cfg.naf_instances; ++i) {
        const Instance inst = make_instance(rng, i);
        const std::vector<ModelPtr> cover = wrap_family(inst.sources);
        for (Divergence div : {Divergence::kMax, Divergence::kKl}) {
            const CPDeltaModel combined(cover, div);
            for (const DegradationEntry& e :
                 verify_degradation_cp_delta(combined, no_prompt, cfg.tol.mass)) {
                if (!e.pass) {
                    fail.note("instance " + std::to_string(i) + " " + e.what + " = " +
                              fmt(e.measured) + " > " + fmt(e.bound));
                }
            }
        }
        const double d = dx_categorical(inst.base, inst.sources);
        if (d >= 0.999) {
            continue;
        }
        for (CpkVariant variant : {CpkVariant::kHard, CpkVariant::kSmooth}) {
            CPkSampler s;
            s.base = wrap_single_step(inst.base);
            s.cover = cover;
            s.variant = variant;
            s.max_len = 1;
            s.k = variant == CpkVariant::kHard
                      ? Bits(std::log2(2.0 / (1.0 - d)) + uniform01(rng))
                      : Bits(2.0 * uniform01(rng));
            if (exact_nu(s, no_prompt, cfg.enum_cap) <= 0.0) {
                continue;
            }
            const DegradationEntry e =
                verify_degradation_cpk(s, no_prompt, cfg.tol.mass, cfg.enum_cap);
            if (!e.pass) {
                fail.note("instance " + std::to_string(i) + " " + e.what + " = " +
                          fmt(e.measured) + " > " + fmt(e.bound));
            }
        }
    }
    r.pass = fail.ok();
    r.details = fail.ok() ? "TV/KL degradation within bounds on all instances" : fail.str();
    return r;
}

CheckResult check_efficiency(const SuiteConfig& cfg) {
    CheckResult r{"efficiency-bounds", false, 0.0, ""};
    Failure fail;
    std::mt19937_64 rng(derive_seed(cfg.seed, "efficiency"));
    const std::vector<std::string> no_prompt;
    int used = 0;
    int attempts_left = cfg.efficiency_instances * 20;
    while (used < cfg.efficiency_instances && attempts_left-- > 0) {
        const std::size_t alphabet = 3 + rng() % 10;
        const std::size_t cover_size = 2 + rng() % 2;
        const std::vector<Categorical> sources =
            random_family(rng, alphabet, cover_size, 0.2);
        const Categorical base = (rng() % 2 == 0)
                                     ? sources[0]
                                     : random_categorical(rng, alphabet, 0.0);
        const double d = dx_categorical(base, sources);
        if (d >= 0.95) {
            continue;
        }
        ++used;

        CPkSampler s;
        s.base = wrap_single_step(base);
        s.cover = wrap_family(sources);
        s.max_len = 1;

        // Hard variant at the theorem's threshold.
        const EfficiencyBound hard = efficiency_bound(d, CpkVariant::kHard);
        s.variant = CpkVariant::kHard;
        s.k = hard.k_required;
        const double nu_hard = exact_nu(s, no_prompt, cfg.enum_cap);
        if (nu_hard < hard.nu_lower - cfg.tol.mass) {
            fail.note("hard: nu " + fmt(nu_hard) + " < " + fmt(hard.nu_lower) + " at d " +
                      fmt(d));
        }

        // Smooth variant at k = 0.
        const EfficiencyBound smooth = efficiency_bound(d, CpkVariant::kSmooth);
        s.variant = CpkVariant::kSmooth;
        s.k = Bits(0.0);
        const double nu_smooth = exact_nu(s, no_prompt, cfg.enum_cap);
        if (nu_smooth < smooth.nu_lower - cfg.tol.mass) {
            fail.note("smooth: nu " + fmt(nu_smooth) + " < " + fmt(smooth.nu_lower) +
                      " at d " + fmt(d));
        }

        // Exact nu is non-decreasing along a k grid, for both variants.
        const double k_top = std::max(3.0, hard.k_required.value() + 1.0);
        for (CpkVariant variant : {CpkVariant::kHard, CpkVariant::kSmooth}) {
            s.variant = variant;
            double prev = -1.0;
            for (int g = 0; g < cfg.nu_grid_points; ++g) {
                s.k = Bits(k_top * static_cast<double>(g) /
                           static_cast<double>(cfg.nu_grid_points - 1));
                const double nu = exact_nu(s, no_prompt, cfg.enum_cap);
                if (nu < prev - 1e-12) {
                    fail.note(std::string("nu not monotone (") + cpk_variant_name(variant) +
                              ") at grid point " + std::to_string(g));
                }
                prev = nu;
            }
        }
    }
    r.pass = fail.ok() && used == cfg.efficiency_instances;
    if (used != cfg.efficiency_instances) {
        r.details = "could not generate enough instances with d < 0.95";
    } else {
        r.details = fail.ok() ? std::to_string(used) + " instances, bounds and monotonicity hold"
                              : fail.str();
    }
    return r;
}

CheckResult check_corollary(const SuiteConfig& cfg) {
    CheckResult r{"corollary-equivalence", false, 0.0, ""};
    Failure fail;
    std::mt19937_64 rng(derive_seed(cfg.seed, "corollary"));
    const std::vector<std::string> no_prompt;
    double worst = 0.0;
    for (int i = 0; i < cfg.corollary_pairs; ++i) {
        const std::size_t alphabet = 2 + rng() % 15;
        const std::vector<Categorical> pair = random_family(rng, alphabet, 2, 0.25);
        CPkSampler s;
        s.base = wrap_single_step(pair[0]);  // p = q1
        s.cover = wrap_family(pair);
        s.variant = CpkVariant::kSmooth;
        s.k = Bits(0.0);
        s.max_len = 1;
        const AnalyticPk pk = analytic_pk(s, no_prompt, cfg.enum_cap);
        const CombineResult c = combine_next(pair, Divergence::kMax);
        const Aligned a = align(pk.dist, c.dist);
        for (std::size_t j = 0; j < a.labels.size(); ++j) {
            const double diff = std::abs(a.rows[0][j] - a.rows[1][j]);
            worst = std::max(worst, diff);
            if (diff > cfg.tol.exact) {
                fail.note("pair " + std::to_string(i) + " label " + a.labels[j] +
                          " differs by " + fmt(diff));
            }
        }
        if (std::abs(pk.nu - c.z) > cfg.tol.exact) {
            fail.note("pair " + std::to_string(i) + ": nu != Z");
        }
    }
    r.pass = fail.ok();
    r.details = fail.ok() ? std::to_string(cfg.corollary_pairs) +
                                " pairs, worst per-entry gap " + fmt(worst)
                          : fail.str();
    return r;
}

// Small bigram training sets for the multi-step sampler-law instances.
struct ToyNgram {
    ModelPtr base;
    std::vector<ModelPtr> cover;
    int max_len;
};

ToyNgram make_toy_ngram(std::mt19937_64& rng) {
    const std::vector<std::string> words = {"red", "green", "blue"};
    auto make_corpus = [&](std::size_t docs) {
        std::vector<std::string> corpus;
        for (std::size_t i = 0; i < docs; ++i) {
            std::string doc = words[rng() % words.size()];
            const std::size_t len = 1 + rng() % 2;
            for (std::size_t t = 1; t < len; ++t) {
                doc += " " + words[rng() % words.size()];
            }
            corpus.push_back(std::move(doc));
        }
        return corpus;
    };
    const std::vector<std::string> c1 = make_corpus(12);
    const std::vector<std::string> c2 = make_corpus(12);
    std::vector<std::string> all = c1;
    all.insert(all.end(), c2.begin(), c2.end());
    std::vector<std::string> vocab_words;
    for (const std::string& doc : all) {
        for (std::string& t : split_tokens(doc)) {
            vocab_words.push_back(std::move(t));
        }
    }
    const Vocab vocab = Vocab::from_words(vocab_words);
    ToyNgram toy;
    toy.base = std::make_shared<NGramModel>(NGramModel::train(all, 2, 0.2, vocab));
    toy.cover = {std::make_shared<NGramModel>(NGramModel::train(c1, 2, 0.2, vocab)),
                 std::make_shared<NGramModel>(NGramModel::train(c2, 2, 0.2, vocab))};
    toy.max_len = 3;
    return toy;
}

CheckResult check_sampler_law(const SuiteConfig& cfg) {
    CheckResult r{"sampler-law", false, 0.0, ""};
    Failure fail;
    std::mt19937_64 rng(derive_seed(cfg.seed, "sampler-law"));
    const std::vector<std::string> no_prompt;
    double min_p = 1.0;
    for (int i = 0; i < cfg.sampler_instances; ++i) {
        CPkSampler s;
        if (i % 2 == 0) {
            const std::size_t alphabet = 4 + rng() % 3;
            const std::vector<Categorical> sources = random_family(rng, alphabet, 2, 0.2);
            s.base = wrap_single_step((rng() % 2 == 0)
                                          ? sources[0]
                                          : random_categorical(rng, alphabet, 0.0));
            s.cover = wrap_family(sources);
            s.max_len = 1;
        } else {
            const ToyNgram toy = make_toy_ngram(rng);
            s.base = toy.base;
            s.cover = toy.cover;
            s.max_len = toy.max_len;
        }
        s.variant = (i % 4 < 2) ? CpkVariant::kHard : CpkVariant::kSmooth;
        // A threshold in the middle of the observed ratios keeps nu away
        // from both 0 and 1 so rejection actually happens.
        s.k = std::max(
            Bits(0.0),
            log_ratio_percentile(s.base, s.cover, no_prompt, s.max_len, 512,
                                 60.0 + 5.0 * static_cast<double>(i % 4),
                                 derive_seed(cfg.seed, "sampler-k" + std::to_string(i))));
        const AnalyticPk pk = analytic_pk(s, no_prompt, cfg.enum_cap);

        std::mt19937_64 draw_rng(derive_seed(cfg.seed, "sampler-draws" + std::to_string(i)));
        std::map<std::string, std::uint64_t> counts;
        for (std::uint64_t t = 0; t < cfg.sampler_draws; ++t) {
            counts[join_tokens(cpk_sample(s, no_prompt, draw_rng).tokens)] += 1;
        }
        const GofResult gof = chi_squared_gof(pk.dist, counts, cfg.sampler_draws);
        min_p = std::min(min_p, gof.p_value);
        if (gof.p_value <= 0.001) {
            fail.note("instance " + std::to_string(i) + ": chi2 p = " + fmt(gof.p_value));
        }
    }
    r.pass = fail.ok();
    r.details = fail.ok() ? std::to_string(cfg.sampler_instances) +
                                " instances x " + std::to_string(cfg.sampler_draws) +
                                " draws, min p-value " + fmt(min_p)
                          : fail.str();
    return r;
}

CheckResult check_memorization(const SuiteConfig& cfg) {
    CheckResult r{"memorization-analog", false, 0.0, ""};
    Failure fail;
    const std::vector<std::string> no_prompt;
    const int n = 3;
    const double alpha = 0.25;
    // Output window = injected-sentence length, so "emits the sentence"
    // means reproducing it verbatim as the whole output.
    const int max_len = 3;

    const Dataset d = demo::make_corpus();
    const ShardPlan plan =
        plan_shards_colocating_duplicates(d, 1, derive_seed(cfg.seed, "memorization"));
    const TrainerConfig trainer{n, alpha};
    const SafeCover cover = build_safe_cover(d, plan, trainer);
    std::vector<std::string> words;
    for (const Datapoint& z : d.datapoints) {
        for (std::string& t : split_tokens(z.doc)) {
            words.push_back(std::move(t));
        }
    }
    const ModelPtr full = std::make_shared<NGramModel>(
        NGramModel::train(d.docs(), n, alpha, Vocab::from_words(words)));

    const EventSpec event_a = EventSpec::substring(demo::kSentenceA);
    const EventSpec event_b = EventSpec::substring(demo::kSentenceB);

    // The unprotected full-data model memorizes both sentences.
    std::mt19937_64 rng(derive_seed(cfg.seed, "memorization-draws"));
    std::uint64_t full_a = 0;
    std::uint64_t full_b = 0;
    for (std::uint64_t t = 0; t < cfg.memorization_draws; ++t) {
        const std::string y = join_tokens(sample_sequence(*full, no_prompt, rng, max_len));
        full_a += event_a.matches(y) ? 1 : 0;
        full_b += event_b.matches(y) ? 1 : 0;
    }
    const auto one_percent = cfg.memorization_draws / 100;
    if (full_a < one_percent || full_b < one_percent) {
        fail.note("full model emitted the injected sentences only " + std::to_string(full_a) +
                  "/" + std::to_string(full_b) + " times");
    }

    // Protect with CP-k at the 95th percentile of observed log ratios.
    CPkSampler s;
    s.base = full;
    s.cover = cover.models;
    s.variant = CpkVariant::kHard;
    s.max_len = max_len;
    s.k = std::max(Bits(0.0),
                   log_ratio_percentile(full, cover.models, no_prompt, max_len,
                                        cfg.memorization_draws, 95.0,
                                        derive_seed(cfg.seed, "memorization-k")));

    std::uint64_t pk_a = 0;
    std::uint64_t pk_b = 0;
    std::uint64_t attempts = 0;
    for (std::uint64_t t = 0; t < cfg.memorization_draws; ++t) {
        const CpkDraw draw = cpk_sample(s, no_prompt, rng);
        attempts += draw.attempts;
        const std::string y = join_tokens(draw.tokens);
        pk_a += event_a.matches(y) ? 1 : 0;
        pk_b += event_b.matches(y) ? 1 : 0;
    }
    if (pk_a != 0 || pk_b != 0) {
        fail.note("protected model emitted injected sentences " + std::to_string(pk_a) +
                  "/" + std::to_string(pk_b) + " times");
    }

    // Exact nu by enumeration, the reported k-tilde, and the event bound
    // p_k(E) <= 2^k-tilde * safe(E), all in one streamed pass.
    NeumaierSum nu_sum;
    NeumaierSum pk_mass_a;
    NeumaierSum pk_mass_b;
    NeumaierSum safe_mass_a;
    NeumaierSum safe_mass_b;
    const ConditionalModel& safe_a = cover.safe_model(demo::kTagA);
    const ConditionalModel& safe_b = cover.safe_model(demo::kTagB);
    for_each_sequence(*full, no_prompt, max_len, cfg.enum_cap,
                      [&](std::span<const std::string> y, double /*prob*/) {
                          const Bits lp = score_sequence(*full, no_prompt, y, max_len);
                          Bits lq_min = Bits::infinity();
                          for (const ModelPtr& q : cover.models) {
                              lq_min = std::min(lq_min,
                                                score_sequence(*q, no_prompt, y, max_len));
                          }
                          const bool accepted = lp - lq_min <= s.k;
                          const double py = std::exp2(lp.value());
                          if (accepted) {
                              nu_sum.add(py);
                          }
                          const std::string joined = join_tokens(y);
                          if (event_a.matches(joined)) {
                              if (accepted) {
                                  pk_mass_a.add(py);
                              }
                              safe_mass_a.add(std::exp2(
                                  score_sequence(safe_a, no_prompt, y, max_len).value()));
                          }
                          if (event_b.matches(joined)) {
                              if (accepted) {
                                  pk_mass_b.add(py);
                              }
                              safe_mass_b.add(std::exp2(
                                  score_sequence(safe_b, no_prompt, y, max_len).value()));
                          }
                      });
    const double nu = nu_sum.value();
    if (nu <= 0.0) {
        fail.note("exact nu is 0");
        r.details = fail.str();
        return r;
    }
    const Bits ktilde = k_tilde(s.k, nu);
    const double factor = std::exp2(ktilde.value());
    if (pk_mass_a.value() / nu > factor * safe_mass_a.value() + cfg.tol.mass) {
        fail.note("event bound violated for sentence A");
    }
    if (pk_mass_b.value() / nu > factor * safe_mass_b.value() + cfg.tol.mass) {
        fail.note("event bound violated for sentence B");
    }

    r.pass = fail.ok();
    std::ostringstream details;
    details << "full model: " << full_a << "/" << full_b << " hits in "
            << cfg.memorization_draws << " draws; protected: " << pk_a << "/" << pk_b
            << "; k = " << fmt(s.k.value()) << ", exact nu = " << fmt(nu)
            << ", k~ = " << fmt(ktilde.value()) << ", mean attempts = "
            << fmt(static_cast<double>(attempts) / static_cast<double>(cfg.memorization_draws));
    r.details = fail.ok() ? details.str() : fail.str() + " [" + details.str() + "]";
    return r;
}

CheckResult check_k_tilde(const SuiteConfig& cfg) {
    CheckResult r{"k-tilde-arithmetic", false, 0.0, ""};
    Failure fail;
    const Bits paper = k_tilde(Bits(500.0), 0.965);
    if (!(paper < Bits(501.0))) {
        fail.note("k_tilde(500, .965) is not < 501");
    }
    if (std::abs(paper.value() - (500.0 + std::log2(1.0 / 0.965))) > cfg.tol.exact) {
        fail.note("k_tilde(500, .965) mismatch");
    }
    if (k_tilde(Bits(7.0), 1.0) != Bits(7.0)) {
        fail.note("k_tilde(k, 1) != k");
    }
    if (std::abs(k_tilde(Bits(0.0), 0.5).value() - 1.0) > cfg.tol.exact) {
        fail.note("k_tilde(0, 0.5) != 1");
    }
    r.pass = fail.ok();
    r.details = fail.ok() ? "k~ = " + fmt(paper.value()) + " < 501" : fail.str();
    return r;
}

CheckResult check_kl_event_bound(const SuiteConfig& cfg) {
    CheckResult r{"kl-event-bound", false, 0.0, ""};
    Failure fail;
    std::mt19937_64 rng(derive_seed(cfg.seed, "kl-event"));
    const std::vector<std::string> no_prompt;

    auto random_events = [&](const ModelPtr& model, int count) {
        const Categorical dist = sequence_distribution(*model, no_prompt, 1, cfg.enum_cap);
        std::vector<EventSpec> events;
        for (int e = 0; e < count; ++e) {
            std::set<std::string> labels;
            for (const std::string& label : dist.labels()) {
                if (rng() % 2 == 0) {
                    labels.insert(label);
                }
            }
            events.push_back(EventSpec::label_set(std::move(labels)));
        }
        return events;
    };

    // The worked fixture: Y is identically 1 on the support, so the combined
    // model is (0,0)-concentrated and the bound is exactly a factor of 2.
    {
        const ExampleFixture f = example_fixture();
        const Categorical fixture_dists[] = {f.q1->next_token_dist({}),
                                             f.q2->next_token_dist({})};
        const CombineResult c = combine_next(fixture_dists, Divergence::kKl);
        const ModelPtr combined = wrap_single_step(c.dist);
        const ConcentrationFrontier frontier =
            concentration_frontier(*combined, *f.q1, no_prompt, 1, 1e-3, cfg.enum_cap);
        if (std::abs(frontier.mean.value() - 1.0) > cfg.tol.exact) {
            fail.note("fixture: E[Y] != 1");
        }
        if (frontier.delta.empty() || frontier.delta.front() != 0.0) {
            fail.note("fixture: not (0,0)-concentrated");
        }
        const std::vector<EventSpec> events = random_events(combined,
                                                            cfg.kl_events_per_instance);
        const KlEventResult res = verify_event_bound_kl(
            *combined, *f.q1, no_prompt, 1, events, cfg.tol.mass, cfg.enum_cap);
        if (!res.pass) {
            fail.note("fixture: KL event bound violated");
        }
    }

    for (int i = 0; i < cfg.kl_event_instances; ++i) {
        const std::size_t alphabet = 4 + rng() % 13;
        const Categorical q = random_categorical(rng, alphabet, 0.0);
        const Categorical p = random_categorical(rng, alphabet, 0.3);
        const ModelPtr pm = wrap_single_step(p);
        const ModelPtr qm = wrap_single_step(q);
        const std::vector<EventSpec> events = random_events(pm, cfg.kl_events_per_instance);
        const KlEventResult res = verify_event_bound_kl(*pm, *qm, no_prompt, 1, events,
                                                        cfg.tol.mass, cfg.enum_cap);
        if (!res.pass) {
            fail.note("instance " + std::to_string(i) + ": bound violated on frontier of " +
                      std::to_string(res.frontier_points) + " points");
        }
    }
    r.pass = fail.ok();
    r.details = fail.ok()
                    ? std::to_string(cfg.kl_event_instances) + " instances x " +
                          std::to_string(cfg.kl_events_per_instance) + " events"
                    : fail.str();
    return r;
}

// Corrupted fixtures. Each returns true when its verifier correctly FAILS.
std::vector<std::pair<std::string, bool>> run_negative_controls(const SuiteConfig& cfg) {
    std::vector<std::pair<std::string, bool>> outcomes;
    const std::vector<std::string> no_prompt;
    const ExampleFixture f = example_fixture();
    const Categorical q1 = f.q1->next_token_dist({});
    const Categorical q2 = f.q2->next_token_dist({});
    const Categorical dists[] = {q1, q2};

    // Partition identity with a corrupted Z.
    {
        const CombineResult c = combine_next(dists, Divergence::kMax);
        const double corrupt_z = c.z * 0.8;
        const bool verifier_passed =
            std::abs(corrupt_z - (1.0 - tv(q1, q2))) <= cfg.tol.exact;
        outcomes.emplace_back("partition-identity", !verifier_passed);
    }
    // NAF with an understated claimed bound.
    {
        const CombineResult c = combine_next(dists, Divergence::kMax);
        const NafEntry e =
            verify_naf(*std::make_shared<TableModel>(TableModel::single_step(c.dist)),
                       f.cover.models, no_prompt, 1, Bits(0.5), Divergence::kMax,
                       cfg.tol.bits, cfg.enum_cap);
        outcomes.emplace_back("naf-inequalities", !e.pass);
    }
    // Event bound on the unprotected model at k = 0.
    {
        const std::vector<ModelPtr> safe_only = {f.q2};
        const EventBoundResult e =
            verify_event_bound(*f.q1, safe_only, no_prompt, 1,
                               EventSpec::label_set({"C1"}), Bits(0.0), cfg.tol.mass,
                               cfg.enum_cap);
        outcomes.emplace_back("event-bound", !e.pass);
    }
    // Concentrated-KL inequality with a fabricated (0,0) concentration claim.
    {
        const Categorical p({"a", "b"}, {0.9, 0.1});
        const Categorical q({"a", "b"}, {0.5, 0.5});
        const bool holds =
            kl_event_inequality_holds(0.9, 0.5, kl(p, q), 0.0, 0.0, cfg.tol.mass);
        outcomes.emplace_back("kl-event-bound", !holds);
    }
    // Degradation claim for a combiner that was never renormalized there.
    {
        const Categorical fake({"a", "b"}, {0.9, 0.1});
        const Categorical src({"a", "b"}, {0.5, 0.5});
        const bool verifier_passed = tv(fake, src) <= tv(src, src) + cfg.tol.mass;
        outcomes.emplace_back("degradation-bounds", !verifier_passed);
    }
    // Efficiency bound with an understated d.
    {
        CPkSampler s;
        s.base = f.q1;
        s.cover = f.cover.models;
        s.variant = CpkVariant::kSmooth;
        s.k = Bits(0.0);
        s.max_len = 1;
        const double nu = exact_nu(s, no_prompt, cfg.enum_cap);  // truly 0.5
        const double claimed_lower = 1.0 - 0.1;                  // pretends d = 0.1
        outcomes.emplace_back("efficiency-bounds", nu < claimed_lower - cfg.tol.mass);
    }
    // CP-k NAF with a fabricated nu = 1.
    {
        CPkSampler s;
        s.base = f.q1;
        s.cover = f.cover.models;
        s.variant = CpkVariant::kSmooth;
        s.k = Bits(0.0);
        s.max_len = 1;
        const AnalyticPk pk = analytic_pk(s, no_prompt, cfg.enum_cap);
        const NafEntry e =
            verify_naf(*std::make_shared<TableModel>(TableModel::single_step(pk.dist)),
                       f.cover.models, no_prompt, 1, k_tilde(s.k, 1.0), Divergence::kMax,
                       cfg.tol.bits, cfg.enum_cap);
        outcomes.emplace_back("cpk-naf", !e.pass);
    }
    // Sampler law against the wrong analytic distribution.
    {
        CPkSampler s;
        s.base = f.q1;
        s.cover = f.cover.models;
        s.variant = CpkVariant::kHard;
        s.k = Bits(0.0);
        s.max_len = 1;
        std::mt19937_64 rng(derive_seed(cfg.seed, "negative-sampler"));
        std::map<std::string, std::uint64_t> counts;
        const std::uint64_t draws = 20000;
        for (std::uint64_t t = 0; t < draws; ++t) {
            counts[join_tokens(sample_sequence(*f.q1, no_prompt, rng, 1))] += 1;
        }
        // Claim the unprotected draws follow p_k.
        const AnalyticPk pk = analytic_pk(s, no_prompt, cfg.enum_cap);
        const GofResult gof = chi_squared_gof(pk.dist, counts, draws);
        outcomes.emplace_back("sampler-law", gof.p_value <= 0.001);
    }
    return outcomes;
}

CheckResult check_negative_controls(const SuiteConfig& cfg) {
    CheckResult r{"negative-controls", false, 0.0, ""};
    Failure fail;
    for (const auto& [name, detected] : run_negative_controls(cfg)) {
        if (!detected) {
            fail.note("corrupted fixture for " + name + " was NOT rejected");
        }
    }
    r.pass = fail.ok();
    r.details = fail.ok() ? "every corrupted fixture was rejected" : fail.str();
    return r;
}

}  // namespace

const std::vector<std::string>& suite_check_names() {
    static const std::vector<std::string> names = {
        "example-3.2",      "partition-identity",    "naf-inequalities",
        "degradation-bounds", "efficiency-bounds",   "corollary-equivalence",
        "sampler-law",      "memorization-analog",   "k-tilde-arithmetic",
        "negative-controls", "kl-event-bound",
    };
    return names;
}

bool SuiteReport::all_pass() const {
    for (const CheckResult& c : checks) {
        if (!c.pass) {
            return false;
        }
    }
    return true;
}

json SuiteReport::to_json() const {
    json checks_json = json::array();
    for (const CheckResult& c : checks) {
        checks_json.push_back(json{{"name", c.name},
                                   {"pass", c.pass},
                                   {"seconds", c.seconds},
                                   {"details", c.details}});
    }
    return json{{"checks", std::move(checks_json)}, {"all_pass", all_pass()}};
}

SuiteConfig suite_config_from_json(const json& j) {
    SuiteConfig cfg;
    try {
        if (j.contains("seeds")) {
            cfg.seed = j.at("seeds").value("master", cfg.seed);
        }
        if (j.contains("instances")) {
            const json& inst = j.at("instances");
            cfg.partition_pairs = inst.value("partition_pairs", cfg.partition_pairs);
            cfg.naf_instances = inst.value("naf_instances", cfg.naf_instances);
            cfg.efficiency_instances =
                inst.value("efficiency_instances", cfg.efficiency_instances);
            cfg.corollary_pairs = inst.value("corollary_pairs", cfg.corollary_pairs);
            cfg.sampler_instances = inst.value("sampler_instances", cfg.sampler_instances);
            cfg.sampler_draws = inst.value("sampler_draws", cfg.sampler_draws);
            cfg.kl_event_instances =
                inst.value("kl_event_instances", cfg.kl_event_instances);
            cfg.kl_events_per_instance =
                inst.value("kl_events_per_instance", cfg.kl_events_per_instance);
            cfg.memorization_draws =
                inst.value("memorization_draws", cfg.memorization_draws);
        }
        if (j.contains("tolerances")) {
            const json& tol = j.at("tolerances");
            cfg.tol.exact = tol.value("exact", cfg.tol.exact);
            cfg.tol.mass = tol.value("mass", cfg.tol.mass);
            cfg.tol.bits = tol.value("bits", cfg.tol.bits);
        }
        cfg.enum_cap = j.value("enum_cap", cfg.enum_cap);
        if (j.contains("only")) {
            cfg.only = j.at("only").get<std::vector<std::string>>();
        }
        cfg.corrupt = j.value("corrupt", false);
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("suite config: malformed JSON: ") + e.what());
    }
    return cfg;
}

SuiteReport verify_suite(const SuiteConfig& config) {
    SuiteReport report;
    if (config.corrupt) {
        // Run the corrupted fixtures as the primary checks: every one of
        // them is expected to fail, driving a nonzero exit status.
        for (const auto& [name, detected] : run_negative_controls(config)) {
            report.checks.push_back(
                {name + " (corrupted fixture)", !detected, 0.0,
                 detected ? "verifier rejected the corrupted fixture"
                          : "verifier accepted the corrupted fixture"});
        }
        return report;
    }

    using CheckFn = CheckResult (*)(const SuiteConfig&);
    const std::vector<std::pair<std::string, CheckFn>> table = {
        {"example-3.2", &check_example},
        {"partition-identity", &check_partition_identity},
        {"naf-inequalities", &check_naf_inequalities},
        {"degradation-bounds", &check_degradation},
        {"efficiency-bounds", &check_efficiency},
        {"corollary-equivalence", &check_corollary},
        {"sampler-law", &check_sampler_law},
        {"memorization-analog", &check_memorization},
        {"k-tilde-arithmetic", &check_k_tilde},
        {"negative-controls", &check_negative_controls},
        {"kl-event-bound", &check_kl_event_bound},
    };
    for (const auto& [name, fn] : table) {
        if (!config.only.empty() &&
            std::find(config.only.begin(), config.only.end(), name) == config.only.end()) {
            continue;
        }
        const auto start = Clock::now();
        CheckResult result;
        try {
            result = fn(config);
        } catch (const std::exception& e) {
            result.name = name;
            result.pass = false;
            result.details = std::string("exception: ") + e.what();
        }
        result.seconds = std::chrono::duration<double>(Clock::now() - start).count();
        report.checks.push_back(std::move(result));
    }
    if (report.checks.empty()) {
        throw InvalidInput("verify_suite: no checks matched the requested names");
    }
    return report;
}

}  // namespace naf::oracle
