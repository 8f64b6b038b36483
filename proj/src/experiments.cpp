// SPDX-License-Identifier: Apache-2.0
#include "qlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "qlab/digest.hpp"
#include "qlab/markov_rep.hpp"
#include "qlab/model_io.hpp"
#include "qlab/projections.hpp"
#include "qlab/quenched.hpp"
#include "qlab/stats.hpp"

namespace qlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Stream domains: the first path element of every stream an experiment uses.
constexpr std::uint64_t kFixtureDomain = 0;
constexpr std::uint64_t kReplicationDomain = 1;
constexpr std::uint64_t kReferenceDomain = 2;
constexpr std::uint64_t kStationaryDomain = 3;
constexpr std::uint64_t kTestFunctionDomain = 4;
constexpr std::uint64_t kProjectionDomain = 5;

class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvWriter {
  public:
    CsvWriter(const fs::path& path, const std::string& header) : path_(path), out_(path) {
        if (!out_) throw IoError("cannot write " + path.string());
        out_ << header << '\n';
    }
    template <class... Cols>
    void row(const Cols&... cols) {
        bool first = true;
        ((out_ << (first ? "" : ",") << cell(cols), first = false), ...);
        out_ << '\n';
    }
    ~CsvWriter() = default;
    void close() {
        out_.close();
        if (!out_) throw IoError("failed writing " + path_.string());
    }

  private:
    static std::string cell(double v) { return fmt(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(long v) { return std::to_string(v); }
    static std::string cell(std::size_t v) { return std::to_string(v); }
    static std::string cell(const std::string& v) { return v; }
    fs::path path_;
    std::ofstream out_;
};

void write_json(const fs::path& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
    out.close();
    if (!out) throw IoError("failed writing " + path.string());
}

struct Session {
    const RunConfig& config;
    const Model& model;
    std::string model_digest;
    std::uint64_t seed = 0;
    json reports = json::array();
    json extra = json::object();

    [[nodiscard]] ReportContext context(const std::string& seed_path) const {
        return ReportContext{model_digest, seed, seed_path};
    }
    [[nodiscard]] RunOptions options() const { return RunOptions{config.workers, config.alpha}; }
    [[nodiscard]] fs::path out(const std::string& file) const { return config.out_dir / file; }
};

using Handler = std::function<bool(Session&)>;

std::vector<PastFixture> draw_fixtures(const Model& model, std::uint64_t seed, int count) {
    std::vector<PastFixture> out;
    for (int f = 0; f < count; ++f) {
        RandomStream stream = derive_stream(seed, {kFixtureDomain, static_cast<std::uint64_t>(f)});
        out.push_back(sample_fixture(model, stream));
    }
    return out;
}

const MarkovModel& require_markov(const Model& model, const std::string& experiment) {
    const auto* chain = std::get_if<MarkovModel>(&model);
    if (chain == nullptr) throw InvalidModel(experiment + " requires a markov model");
    return *chain;
}

std::string fixture_suffix(int f) { return f == 0 ? "" : "_fixture" + std::to_string(f); }

bool pass_fraction_verdict(Session& s, int passes, int total) {
    const double fraction = total > 0 ? static_cast<double>(passes) / total : 0.0;
    s.extra["fixtures_passed"] = passes;
    s.extra["fixtures_total"] = total;
    s.extra["pass_fraction"] = fraction;
    s.extra["required_pass_fraction"] = s.config.pass_fraction;
    return fraction >= s.config.pass_fraction;
}

void write_norms_csv(const fs::path& path, const ProjectionSeries& series) {
    CsvWriter csv(path, "k,norm,bias");
    for (int k = 0; k <= series.horizon(); ++k) csv.row(k, series.norms[k], series.bias[k]);
    csv.close();
}

json summability_json(const SummabilityResult& r) {
    return json{{"partial_sum", r.total()},
                {"tail_fit", to_string(r.tail_fit)},
                {"fitted_rate", r.fitted_rate},
                {"tail_estimate", std::isfinite(r.tail_estimate) ? json(r.tail_estimate) : json("infinity")},
                {"finite_support", r.finite_support},
                {"verdict", to_string(r.verdict)}};
}

ExperimentReport exact_report(const Session& s, const std::string& name, const std::string& statistic,
                              double estimate, bool pass) {
    ExperimentReport rep;
    rep.experiment = name;
    rep.model_digest = s.model_digest;
    rep.fixture_digest = "none";
    rep.seed = s.seed;
    rep.seed_path = "none (exact computation)";
    rep.statistic = statistic;
    rep.estimate = estimate;
    rep.verdict = pass ? "pass" : "fail";
    return rep;
}

// --- projections -----------------------------------------------------------

bool run_project_norms(Session& s) {
    const int K = s.config.horizon.value_or(default_projection_horizon(s.model));
    const ProjectionSeries series = projection_norms(s.model, K);
    write_norms_csv(s.out("norms.csv"), series);
    const SummabilityResult sum = hannan_sum(series);
    ExperimentReport rep = exact_report(s, "project-norms", "sum_k ||P_0(U^k f)||_2", sum.total(), true);
    rep.n = K;
    rep.details = summability_json(sum);
    s.reports.push_back(to_json(rep));
    return true;
}

bool run_hannan(Session& s) {
    const int K = s.config.horizon.value_or(default_projection_horizon(s.model));
    const ProjectionSeries series = projection_norms(s.model, K);
    write_norms_csv(s.out("norms.csv"), series);
    const SummabilityResult sum = hannan_sum(series);
    {
        CsvWriter csv(s.out("partial_sums.csv"), "k,partial_sum");
        for (std::size_t k = 0; k < sum.partial_sums.size(); ++k) csv.row(k, sum.partial_sums[k]);
        csv.close();
    }
    ExperimentReport rep = exact_report(s, "hannan", "sum_k ||P_0(U^k f)||_2", sum.total(),
                                        sum.verdict == Summability::summable);
    rep.n = K;
    rep.details = summability_json(sum);
    s.reports.push_back(to_json(rep));
    return sum.verdict == Summability::summable;
}

bool run_mw(Session& s) {
    const int N = s.config.horizon.value_or(1000);
    const MwResult mw = mw_criterion(s.model, N);
    {
        CsvWriter csv(s.out("norms.csv"), "k,norm,bias");
        for (int n = 1; n <= N; ++n) csv.row(n, mw.terms[n - 1], mw.bias[n - 1]);
        csv.close();
    }
    ExperimentReport rep = exact_report(s, "mw", "sum_n ||E_0(U^n f)||_2 / sqrt(n)", mw.summary.total(),
                                        mw.summary.verdict == Summability::summable);
    rep.n = N;
    rep.details = summability_json(mw.summary);
    s.reports.push_back(to_json(rep));
    return mw.summary.verdict == Summability::summable;
}

bool run_sigma2(Session& s) {
    const int K = s.config.horizon.value_or(default_projection_horizon(s.model));
    write_norms_csv(s.out("norms.csv"), projection_norms(s.model, K));
    const double s2 = sigma_squared(s.model);
    ExperimentReport rep = exact_report(s, "sigma2", "sigma^2 = ||m||_2^2", s2, true);
    const MartingaleApprox m = martingale_increment(s.model, std::nullopt);
    if (const auto* lin = std::get_if<LinearModel>(&s.model)) {
        const double c = std::abs(m.coefficient);
        const double t = lin->tail_bound;
        rep.details["coefficient_sum"] = m.coefficient;
        rep.details["bias_interval"] = {std::pow(std::max(0.0, c - t), 2) * lin->innovation.variance(),
                                        std::pow(c + t, 2) * lin->innovation.variance()};
    } else {
        rep.details["g_hat"] = std::vector<double>(m.g_hat.data(), m.g_hat.data() + m.g_hat.size());
    }
    s.reports.push_back(to_json(rep));
    return true;
}

bool run_sigma2_mc(Session& s) {
    const double exact = sigma_squared(s.model);
    const RandomStream root = derive_stream(s.seed, {kStationaryDomain});
    const VarianceRatioEstimate est =
        estimate_variance_ratio(s.model, s.config.n, s.config.reps, root, s.config.workers);
    const double rel = exact > 0.0 ? std::abs(est.ratio - exact) / exact : std::abs(est.ratio);
    ExperimentReport rep;
    rep.experiment = "sigma2-mc";
    rep.model_digest = s.model_digest;
    rep.fixture_digest = "stationary";
    rep.n = s.config.n;
    rep.M = s.config.reps;
    rep.seed = s.seed;
    rep.seed_path = root.describe() + "/<replication>";
    rep.statistic = "E(S_n^2) / n";
    rep.estimate = est.ratio;
    rep.standard_error = est.standard_error;
    rep.test_statistic = rel;
    rep.verdict = rel <= 0.05 ? "pass" : "fail";
    rep.details["sigma2_exact"] = exact;
    rep.details["relative_tolerance"] = 0.05;
    s.reports.push_back(to_json(rep));
    return rel <= 0.05;
}

bool run_project_norms_mc(Session& s) {
    const int K = s.config.horizon.value_or(10);
    bool all = true;
    CsvWriter csv(s.out("projection_mc.csv"), "k,exact_norm,norm_estimate,squared_estimate,squared_standard_error,z");
    for (int k = 0; k <= K; ++k) {
        const RandomStream root = derive_stream(s.seed, {kProjectionDomain, static_cast<std::uint64_t>(k)});
        const ProjectionNormEstimate est =
            estimate_projection_norm(s.model, k, s.config.reps, s.config.inner, root, s.config.workers);
        const double z = est.z_score();
        const bool ok = std::abs(z) <= 3.0;
        all = all && ok;
        csv.row(k, est.exact_norm, est.norm_estimate, est.squared_estimate, est.squared_standard_error, z);
        ExperimentReport rep;
        rep.experiment = "project-norms-mc";
        rep.model_digest = s.model_digest;
        rep.fixture_digest = "stationary";
        rep.n = k;
        rep.M = s.config.reps;
        rep.seed = s.seed;
        rep.seed_path = root.describe() + "/<replication>";
        rep.statistic = "||P_0(U^k f)||_2^2 (nested conditional Monte Carlo)";
        rep.estimate = est.squared_estimate;
        rep.standard_error = est.squared_standard_error;
        rep.test_statistic = z;
        rep.verdict = ok ? "pass" : "fail";
        rep.details["k"] = k;
        rep.details["exact_norm"] = est.exact_norm;
        rep.details["norm_estimate"] = est.norm_estimate;
        rep.details["inner"] = s.config.inner;
        s.reports.push_back(to_json(rep));
    }
    csv.close();
    return all;
}

// --- quenched simulation ---------------------------------------------------

void write_distribution_csvs(const Session& s, const DistributionOutcome& outcome, int f) {
    {
        CsvWriter csv(s.out("sample" + fixture_suffix(f) + ".csv"), "replication,value");
        for (std::size_t r = 0; r < outcome.sample.size(); ++r) csv.row(r, outcome.sample[r]);
        csv.close();
    }
    if (!outcome.reference && outcome.reference_sample.empty()) return;
    const EmpiricalSample empirical(outcome.sample);
    EmpiricalSample ref_sample;
    if (!outcome.reference) ref_sample = EmpiricalSample(outcome.reference_sample);
    CsvWriter csv(s.out("cdf" + fixture_suffix(f) + ".csv"), "x,ecdf,ref_cdf");
    const auto& xs = empirical.values();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i + 1 < xs.size() && xs[i + 1] == xs[i]) continue;
        const double ref = outcome.reference ? (*outcome.reference)(xs[i]) : ref_sample.cdf(xs[i]);
        csv.row(xs[i], empirical.cdf(xs[i]), ref);
    }
    csv.close();
}

bool run_distribution(Session& s, PathFunctional functional) {
    const auto fixtures = draw_fixtures(s.model, s.seed, s.config.fixtures);
    int passes = 0;
    for (int f = 0; f < s.config.fixtures; ++f) {
        const auto fi = static_cast<std::uint64_t>(f);
        const RandomStream root = derive_stream(s.seed, {kReplicationDomain, fi});
        const RandomStream ref_root = derive_stream(s.seed, {kReferenceDomain, fi});
        const std::string path = "fixture=" + derive_stream(s.seed, {kFixtureDomain, fi}).describe() +
                                 " replications=" + root.describe() + "/<replication>";
        DistributionOutcome outcome =
            quenched_wip_experiment(s.model, fixtures[f], functional, s.config.n, s.config.reps, root,
                                    ref_root, s.config.reference_reps, s.context(path), s.options());
        if (functional == PathFunctional::endpoint) outcome.report.experiment = s.config.experiment;
        outcome.report.details["fixture_index"] = f;
        if (s.config.ks_max_statistic && outcome.report.verdict != "degenerate") {
            const double d = outcome.report.test_statistic.value_or(INFINITY);
            outcome.report.verdict = d < *s.config.ks_max_statistic ? "pass" : "fail";
            outcome.report.details["verdict_rule"] = "D < " + fmt(*s.config.ks_max_statistic);
        } else {
            outcome.report.details["verdict_rule"] = "p >= alpha";
        }
        if (outcome.report.passed()) ++passes;
        write_distribution_csvs(s, outcome, f);
        s.reports.push_back(to_json(outcome.report));
    }
    return pass_fraction_verdict(s, passes, s.config.fixtures);
}

bool run_quenched_clt(Session& s) { return run_distribution(s, PathFunctional::endpoint); }

bool run_quenched_wip(Session& s) {
    return run_distribution(s, parse_functional(s.config.functional));
}

bool run_strest(Session& s) {
    const auto fixtures = draw_fixtures(s.model, s.seed, s.config.fixtures);
    int passes = 0;
    CsvWriter csv(s.out("strest.csv"), "fixture,N,R_N,standard_error");
    for (int f = 0; f < s.config.fixtures; ++f) {
        const RandomStream root = derive_stream(s.seed, {kReplicationDomain, static_cast<std::uint64_t>(f)});
        const StrestOutcome outcome =
            strest_experiment(s.model, fixtures[f], s.config.order, s.config.Ns, s.config.reps, root,
                              s.context(root.describe() + "/<replication>"), s.options());
        for (const auto& p : outcome.points) csv.row(f, p.N, p.ratio, p.standard_error);
        if (outcome.report.passed()) ++passes;
        s.reports.push_back(to_json(outcome.report));
    }
    csv.close();
    return pass_fraction_verdict(s, passes, s.config.fixtures);
}

bool run_drift(Session& s) {
    const auto fixtures = draw_fixtures(s.model, s.seed, s.config.fixtures);
    const DriftOutcome outcome = uncentered_drift_check(
        s.model, fixtures, s.config.Ns,
        s.context(derive_stream(s.seed, {kFixtureDomain}).describe() + "/<fixture>"));
    CsvWriter csv(s.out("drift.csv"), "fixture,N,ratio");
    for (std::size_t f = 0; f < outcome.rows.size(); ++f) {
        for (std::size_t i = 0; i < outcome.Ns.size(); ++i) {
            csv.row(f, outcome.Ns[i], outcome.rows[f].ratios[i]);
        }
    }
    csv.close();
    s.reports.push_back(to_json(outcome.report));
    return outcome.report.passed();
}

bool run_doob(Session& s) {
    require_markov(s.model, "doob");
    const auto fixtures = draw_fixtures(s.model, s.seed, s.config.fixtures);
    int passes = 0;
    for (int f = 0; f < s.config.fixtures; ++f) {
        const RandomStream root = derive_stream(s.seed, {kReplicationDomain, static_cast<std::uint64_t>(f)});
        const DoobOutcome outcome =
            doob_bound_check(s.model, fixtures[f], s.config.n, s.config.reps, root,
                             s.context(root.describe() + "/<replication>"), s.options(), s.config.truncation);
        if (outcome.holds) ++passes;
        s.reports.push_back(to_json(outcome.report));
    }
    return pass_fraction_verdict(s, passes, s.config.fixtures);
}

bool run_identity(Session& s) {
    const auto fixtures = draw_fixtures(s.model, s.seed, s.config.fixtures);
    bool all = true;
    for (int f = 0; f < s.config.fixtures; ++f) {
        RandomStream stream = derive_stream(s.seed, {kReplicationDomain, static_cast<std::uint64_t>(f)});
        const DecompositionOutcome outcome =
            decomposition_identity_check(s.model, fixtures[f], s.config.n, stream, s.context(stream.describe()));
        all = all && outcome.holds;
        s.reports.push_back(to_json(outcome.report));
    }
    return all;
}

// --- markov representation -------------------------------------------------

std::vector<Eigen::VectorXd> random_functions(std::uint64_t seed, int count, int states) {
    std::vector<Eigen::VectorXd> out;
    for (int i = 0; i < count; ++i) {
        RandomStream stream = derive_stream(seed, {kTestFunctionDomain, static_cast<std::uint64_t>(i)});
        Eigen::VectorXd h(states);
        for (int x = 0; x < states; ++x) h(x) = 2.0 * stream.next_uniform() - 1.0;
        out.push_back(std::move(h));
    }
    return out;
}

bool run_markov_check(Session& s) {
    const MarkovModel& chain = require_markov(s.model, "markov-check");
    const MarkovPropertyCheck check = verify_markov_property(chain, s.config.n_max);
    const TransitionOperator q = q_operator_from_model(chain);
    const bool ok = check.max_discrepancy <= 1e-12;
    ExperimentReport rep = exact_report(s, "markov-check", "max |E(phi_0..phi_n) - E(phi_0..Q phi_n)| over indicator tuples",
                                        check.max_discrepancy, ok);
    rep.n = s.config.n_max;
    rep.details["discrepancy_by_n"] = check.max_discrepancy_by_n;
    rep.details["tuples_checked"] = check.tuples_checked;
    rep.details["tolerance"] = 1e-12;
    rep.details["row_sum_error"] = (q.matrix.rowwise().sum().array() - 1.0).abs().maxCoeff();
    rep.details["invariance_error"] =
        (q.reference.transpose() * q.matrix - q.reference.transpose()).cwiseAbs().maxCoeff();
    s.reports.push_back(to_json(rep));
    return ok;
}

bool run_hopf(Session& s) {
    const MarkovModel& chain = require_markov(s.model, "hopf");
    const TransitionOperator q = q_operator_from_model(chain);
    std::vector<Eigen::VectorXd> functions{chain.observable().cwiseAbs()};
    for (auto& h : random_functions(s.seed, s.config.random_functions, chain.states())) {
        functions.push_back(std::move(h));
    }
    bool all = true;
    json checks = json::array();
    double worst = 0.0;
    for (std::size_t i = 0; i < functions.size(); ++i) {
        const MaximalFunction mf = maximal_function(q, functions[i], s.config.truncation);
        const HopfCheck hc = hopf_check(q, mf);
        all = all && hc.holds;
        if (hc.l1_norm > 0.0) worst = std::max(worst, hc.sup_product / hc.l1_norm);
        checks.push_back({{"function", i == 0 ? "|g|" : "random_" + std::to_string(i - 1)},
                          {"l1_norm", hc.l1_norm},
                          {"sup_level_times_mass", hc.sup_product},
                          {"levels", hc.levels.size()},
                          {"holds", hc.holds}});
    }
    ExperimentReport rep = exact_report(s, "hopf", "max over h of sup_x x pi(h* > x) / ||h||_1", worst, all);
    rep.n = s.config.truncation;
    rep.seed_path = derive_stream(s.seed, {kTestFunctionDomain}).describe() + "/<function>";
    rep.details["checks"] = checks;
    s.reports.push_back(to_json(rep));
    return all;
}

bool run_dunford_schwartz(Session& s) {
    const MarkovModel& chain = require_markov(s.model, "dunford-schwartz");
    const TransitionOperator q = q_operator_from_model(chain);
    const int count = s.config.random_functions;
    const auto functions = random_functions(s.seed, count, chain.states());
    const DunfordSchwartzReport ds = verify_dunford_schwartz(q, functions);
    double worst = -INFINITY;
    for (const auto& c : ds.checks) {
        worst = std::max({worst, c.l1_after - c.l1_before, c.sup_after - c.sup_before});
    }
    ExperimentReport rep = exact_report(s, "dunford-schwartz",
                                        "max norm increase under Q (L1 and Linf)", worst, ds.all_pass());
    rep.M = count;
    rep.seed_path = derive_stream(s.seed, {kTestFunctionDomain}).describe() + "/<function>";
    rep.details["violations"] = ds.violations;
    s.reports.push_back(to_json(rep));
    return ds.all_pass();
}

bool run_weak_l2(Session& s) {
    json values = json::object();
    if (const auto* chain = std::get_if<MarkovModel>(&s.model)) {
        const TransitionOperator q = q_operator_from_model(*chain);
        const Eigen::VectorXd g = chain->observable();
        const MaximalFunction mf = maximal_function(q, g.cwiseAbs2(), s.config.truncation);
        const Eigen::VectorXd root_star = mf.values.cwiseSqrt();
        values["g"] = weak_l2_tail(g, chain->stationary());
        values["sqrt_maximal_g2"] = weak_l2_tail(root_star, chain->stationary());
        values["l2_norm_squared_g"] = chain->stationary().dot(g.cwiseAbs2());
    } else {
        RandomStream stream = derive_stream(s.seed, {kStationaryDomain});
        std::vector<double> sample_values(static_cast<std::size_t>(s.config.reps));
        for (auto& v : sample_values) v = sample_stationary_path(s.model, stream, 1).front();
        values["f_empirical"] = weak_l2_tail(sample_values);
        values["l2_norm_squared_f"] = observable_variance(s.model);
    }
    const double headline = values.contains("g") ? values["g"].get<double>() : values["f_empirical"].get<double>();
    ExperimentReport rep = exact_report(s, "weak-l2", "sup_lambda lambda^2 mu(|h| >= lambda)", headline, true);
    rep.details = values;
    s.reports.push_back(to_json(rep));
    return true;
}

struct Entry {
    ExperimentInfo info;
    Handler handler;
};

const std::vector<Entry>& registry() {
    static const std::vector<Entry> entries = {
        {{"project-norms", "exact ||P_0(U^k f)||_2 table (k,norm,bias)"}, run_project_norms},
        {{"hannan", "Hannan partial sums with tail-extrapolation verdict"}, run_hannan},
        {{"mw", "Maxwell-Woodroofe series sum_n ||E_0(U^n f)||_2 / sqrt(n)"}, run_mw},
        {{"sigma2", "exact sigma^2 = ||m||_2^2 from the martingale increment"}, run_sigma2},
        {{"sigma2-mc", "Monte Carlo E(S_n^2)/n against the exact sigma^2 (5% band)"}, run_sigma2_mc},
        {{"project-norms-mc", "nested conditional Monte Carlo projection norms vs closed form"},
         run_project_norms_mc},
        {{"quenched-clt", "KS test of S_bar_n/sqrt(n) under mu_x against Normal(0, sigma^2)"},
         run_quenched_clt},
        {{"quenched-wip", "KS test of a path functional of S_bar_n(.)/sqrt(n) against sigma W"},
         run_quenched_wip},
        {{"strest", "R_N = E_0 max (S_bar_n - M_n)^2 / N over a range of N"}, run_strest},
        {{"drift", "exact |E_0(S_N)|/sqrt(N) table for the uncentered process"}, run_drift},
        {{"doob", "maximal inequality for E_0 max S_bar_n^2 (chain models)"}, run_doob},
        {{"identity", "projection decomposition of S_bar_n on one realization"}, run_identity},
        {{"markov-check", "Markov property of W_n under Q, exact path enumeration"}, run_markov_check},
        {{"hopf", "Hopf maximal inequality at every attained level"}, run_hopf},
        {{"dunford-schwartz", "L1 and Linf contraction of Q on random functions"}, run_dunford_schwartz},
        {{"weak-l2", "weak-L2 pseudo-norm of g and of the root maximal function"}, run_weak_l2},
    };
    return entries;
}

template <class T>
T get_or(const json& doc, const char* key, T fallback) {
    return doc.contains(key) ? doc.at(key).get<T>() : fallback;
}

}  // namespace

json RunConfig::to_json() const {
    json out = json::object();
    out["experiment"] = experiment;
    out["model"] = model_path.filename().string();
    out["n"] = n;
    out["reps"] = reps;
    out["fixtures"] = fixtures;
    out["seed"] = seed ? json(*seed) : json();
    out["functional"] = functional;
    out["Ns"] = Ns;
    out["order"] = order ? json(*order) : json("infinity");
    out["horizon"] = horizon ? json(*horizon) : json();
    out["reference_reps"] = reference_reps;
    out["alpha"] = alpha;
    out["ks_max_statistic"] = ks_max_statistic ? json(*ks_max_statistic) : json();
    out["pass_fraction"] = pass_fraction;
    out["truncation"] = truncation;
    out["n_max"] = n_max;
    out["inner"] = inner;
    out["random_functions"] = random_functions;
    return out;
}

RunConfig run_config_from_json(const json& doc, const fs::path& base_dir) {
    static const std::set<std::string> known = {
        "name", "experiment", "model", "n", "reps", "fixtures", "seed", "functional", "Ns", "order",
        "horizon", "reference_reps", "alpha", "ks_max_statistic", "pass_fraction", "truncation", "n_max", "inner",
        "random_functions"};
    if (!doc.is_object()) throw std::invalid_argument("run entry must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
        if (!known.count(key)) throw std::invalid_argument("unknown run key '" + key + "'");
    }
    try {
        RunConfig c;
        c.experiment = doc.at("experiment").get<std::string>();
        c.model_path = base_dir / doc.at("model").get<std::string>();
        c.n = get_or(doc, "n", c.n);
        c.reps = get_or(doc, "reps", c.reps);
        c.fixtures = get_or(doc, "fixtures", c.fixtures);
        if (doc.contains("seed")) c.seed = doc.at("seed").get<std::uint64_t>();
        c.functional = get_or(doc, "functional", c.functional);
        c.Ns = get_or(doc, "Ns", c.Ns);
        if (doc.contains("order")) {
            const auto& o = doc.at("order");
            if (o.is_string()) {
                if (o.get<std::string>() != "infinity" && o.get<std::string>() != "inf") {
                    throw std::invalid_argument("order must be an integer or \"infinity\"");
                }
            } else {
                c.order = o.get<int>();
            }
        }
        if (doc.contains("horizon")) c.horizon = doc.at("horizon").get<int>();
        c.reference_reps = get_or(doc, "reference_reps", c.reference_reps);
        c.alpha = get_or(doc, "alpha", c.alpha);
        c.pass_fraction = get_or(doc, "pass_fraction", c.pass_fraction);
        if (doc.contains("ks_max_statistic")) c.ks_max_statistic = doc.at("ks_max_statistic").get<double>();
        c.truncation = get_or(doc, "truncation", c.truncation);
        c.n_max = get_or(doc, "n_max", c.n_max);
        c.inner = get_or(doc, "inner", c.inner);
        c.random_functions = get_or(doc, "random_functions", c.random_functions);
        return c;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("run entry: ") + e.what());
    }
}

const std::vector<ExperimentInfo>& list_experiments() {
    static const std::vector<ExperimentInfo> infos = [] {
        std::vector<ExperimentInfo> out;
        for (const auto& e : registry()) out.push_back(e.info);
        return out;
    }();
    return infos;
}

namespace {

void validate(const RunConfig& c) {
    if (!c.seed) throw std::invalid_argument("a seed is required (--seed); there is no clock default");
    if (c.n < 1 || c.reps < 1 || c.fixtures < 1) {
        throw std::invalid_argument("n, reps and fixtures must all be >= 1");
    }
    if (c.Ns.empty() || std::any_of(c.Ns.begin(), c.Ns.end(), [](int v) { return v < 1; })) {
        throw std::invalid_argument("Ns must be a nonempty list of positive integers");
    }
    if (c.reference_reps < 1 || c.truncation < 1 || c.inner < 1 || c.random_functions < 1) {
        throw std::invalid_argument("reference_reps, truncation, inner and random_functions must be >= 1");
    }
    if (c.horizon && *c.horizon < 0) throw std::invalid_argument("horizon must be >= 0");
    if (c.order && *c.order < 0) throw std::invalid_argument("order must be >= 0");
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw std::invalid_argument("alpha must be in (0, 1)");
    if (c.ks_max_statistic && !(*c.ks_max_statistic > 0.0 && *c.ks_max_statistic <= 1.0)) {
        throw std::invalid_argument("ks_max_statistic must be in (0, 1]");
    }
    if (!(c.pass_fraction > 0.0 && c.pass_fraction <= 1.0)) {
        throw std::invalid_argument("pass_fraction must be in (0, 1]");
    }
}

}  // namespace

RunResult run(const RunConfig& config) {
    RunResult result;
    const auto& entries = registry();
    const auto entry = std::find_if(entries.begin(), entries.end(),
                                    [&](const Entry& e) { return e.info.name == config.experiment; });
    if (entry == entries.end()) {
        result.exit_code = kExitInvalidInput;
        result.message = "unknown experiment '" + config.experiment + "' (see `qlab list`)";
        return result;
    }
    try {
        validate(config);
        const Model model = load_model(config.model_path);
        std::error_code ec;
        fs::create_directories(config.out_dir, ec);
        if (ec) throw IoError("cannot create output directory " + config.out_dir.string() + ": " + ec.message());

        Session session{config, model, model_digest(model), *config.seed};
        const bool pass = entry->handler(session);

        const json config_json = config.to_json();
        json report = json::object();
        report["experiment"] = config.experiment;
        report["config"] = config_json;
        report["config_digest"] = digest_of(config_json.dump());
        report["seed"] = *config.seed;
        report["model"] = model_to_json(model);
        report["model_digest"] = session.model_digest;
        report["stream_domains"] = {{"fixtures", "[0, fixture]"},
                                    {"replications", "[1, fixture, replication]"},
                                    {"brownian_reference", "[2, fixture, replication]"},
                                    {"stationary", "[3, replication]"},
                                    {"test_functions", "[4, function]"},
                                    {"projection_mc", "[5, k, replication]"}};
        report["summary"] = session.extra;
        report["reports"] = session.reports;
        report["verdict"] = pass ? "pass" : "fail";
        write_json(config.out_dir / "report.json", report);

        result.report = std::move(report);
        result.exit_code = pass ? kExitPass : kExitStatisticalFailure;
        result.message = config.experiment + (pass ? ": pass" : ": FAIL");
    } catch (const InvalidModel& e) {
        result.exit_code = kExitInvalidInput;
        result.message = std::string("invalid model: ") + e.what();
    } catch (const IoError& e) {
        result.exit_code = kExitInvalidInput;
        result.message = std::string("I/O failure: ") + e.what();
    } catch (const HannanRefusal& e) {
        result.exit_code = kExitInvalidInput;
        result.message = std::string("refused: ") + e.what();
    } catch (const std::invalid_argument& e) {
        result.exit_code = kExitInvalidInput;
        result.message = std::string("invalid input: ") + e.what();
    } catch (const std::domain_error& e) {
        result.exit_code = kExitInvalidInput;
        result.message = std::string("invalid input: ") + e.what();
    } catch (const std::exception& e) {
        result.exit_code = kExitInvalidInput;
        result.message = std::string("error: ") + e.what();
    }
    return result;
}

RunResult run_suite(const fs::path& suite_path, const fs::path& out_dir, unsigned workers,
                    std::optional<std::uint64_t> seed_override) {
    RunResult result;
    json suite;
    {
        std::ifstream in(suite_path);
        if (!in) {
            result.exit_code = kExitInvalidInput;
            result.message = "cannot open suite file " + suite_path.string();
            return result;
        }
        try {
            in >> suite;
        } catch (const json::parse_error& e) {
            result.exit_code = kExitInvalidInput;
            result.message = std::string("malformed suite JSON: ") + e.what();
            return result;
        }
    }
    if (!suite.is_object() || !suite.contains("runs") || !suite["runs"].is_array()) {
        result.exit_code = kExitInvalidInput;
        result.message = "suite file must be an object with a \"runs\" array";
        return result;
    }
    std::optional<std::uint64_t> suite_seed = seed_override;
    if (!suite_seed && suite.contains("seed")) suite_seed = suite["seed"].get<std::uint64_t>();

    const fs::path base = suite_path.parent_path();
    json summary = json::array();
    int worst = kExitPass;
    std::set<std::string> names;
    for (std::size_t i = 0; i < suite["runs"].size(); ++i) {
        const json& entry = suite["runs"][i];
        std::string name = entry.value("name", std::string());
        if (name.empty()) name = std::to_string(i) + "_" + entry.value("experiment", std::string("run"));
        RunResult r;
        if (!names.insert(name).second) {
            r.exit_code = kExitInvalidInput;
            r.message = "duplicate run name '" + name + "'";
        } else {
            try {
                RunConfig config = run_config_from_json(entry, base);
                if (seed_override || !config.seed) config.seed = suite_seed;
                config.out_dir = out_dir / name;
                config.workers = workers;
                r = run(config);
            } catch (const std::exception& e) {
                r.exit_code = kExitInvalidInput;
                r.message = e.what();
            }
        }
        worst = std::max(worst, r.exit_code);
        summary.push_back({{"name", name}, {"exit_code", r.exit_code}, {"message", r.message}});
    }
    json doc = {{"suite", suite_path.filename().string()},
                {"seed", suite_seed ? json(*suite_seed) : json()},
                {"runs", summary}};
    try {
        fs::create_directories(out_dir);
        write_json(out_dir / "summary.json", doc);
    } catch (const std::exception& e) {
        result.exit_code = kExitInvalidInput;
        result.message = std::string("I/O failure: ") + e.what();
        return result;
    }
    result.exit_code = worst;
    result.report = doc;
    result.message = worst == kExitPass ? "all runs passed" : "some runs failed";
    return result;
}

}  // namespace qlab
