#include "twospin/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "twospin/dynamics.hpp"
#include "twospin/independence.hpp"
#include "twospin/lifting.hpp"
#include "twospin/saw.hpp"
#include "twospin/uniqueness.hpp"

namespace twospin::cli {

namespace {

Json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

Json ext(const ExtReal& e) { return e.is_finite() ? Json(e.value()) : Json(e.to_string()); }

Json num_array(const std::vector<double>& xs) {
    Json a = Json::array();
    for (double x : xs) a.push_back(num(x));
    return a;
}

Json pinning_json(const Pinning& p) {
    Json a = Json::array();
    for (auto [v, s] : p.values()) a.push_back(Json::array({v, s}));
    return a;
}

Verdict worst(Verdict a, Verdict b) {
    auto rank = [](Verdict v) { return v == Verdict::Violation ? 2 : v == Verdict::BudgetExhausted ? 1 : 0; };
    return rank(a) >= rank(b) ? a : b;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    return out;
}

int parse_int(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(what + ": expected an integer, got '" + s + "'");
    }
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(what + ": expected a number, got '" + s + "'");
    }
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string scalar_text(const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

// FNV-1a over the grid-point label; stable across toolchains.
std::uint64_t label_hash(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

// ---------------------------------------------------------------- parsing

Graph parse_graph(const std::string& text, const std::string& source) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        Json j;
        try {
            j = Json::parse(text);
        } catch (const Json::parse_error& e) {
            throw ParseError(source + ": invalid JSON: " + e.what());
        }
        if (!j.contains("n") || !j["n"].is_number_integer()) throw ParseError(source + ": field 'n': expected an integer");
        const int n = j["n"].get<int>();
        if (n < 0) throw ParseError(source + ": field 'n': must be nonnegative");
        Graph g(n);
        if (j.contains("edges")) {
            if (!j["edges"].is_array()) throw ParseError(source + ": field 'edges': expected an array");
            for (std::size_t e = 0; e < j["edges"].size(); ++e) {
                const auto& pair = j["edges"][e];
                const std::string where = source + ": field 'edges[" + std::to_string(e) + "]'";
                if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() ||
                    !pair[1].is_number_integer())
                    throw ParseError(where + ": expected [u, v]");
                try {
                    g.add_edge(pair[0].get<int>(), pair[1].get<int>());
                } catch (const DomainError& err) {
                    throw ParseError(where + ": " + err.what());
                }
            }
        }
        return g;
    }

    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    auto next_line = [&](std::string& out) {
        while (std::getline(is, out)) {
            ++lineno;
            const auto hash = out.find('#');
            if (hash != std::string::npos) out.erase(hash);
            if (out.find_first_not_of(" \t\r") != std::string::npos) return true;
        }
        return false;
    };
    auto fail = [&](const std::string& msg) { return ParseError(source + ":" + std::to_string(lineno) + ": " + msg); };

    if (!next_line(line)) throw ParseError(source + ": empty graph file");
    int n = 0, m = 0;
    {
        std::istringstream ls(line);
        std::string extra;
        if (!(ls >> n >> m) || (ls >> extra)) throw fail("expected header 'n m'");
        if (n < 0 || m < 0) throw fail("header values must be nonnegative");
    }
    Graph g(n);
    for (int e = 0; e < m; ++e) {
        if (!next_line(line)) throw ParseError(source + ": expected " + std::to_string(m) + " edges, found " +
                                               std::to_string(e));
        std::istringstream ls(line);
        int u = 0, v = 0;
        std::string extra;
        if (!(ls >> u >> v) || (ls >> extra)) throw fail("expected edge 'u v'");
        try {
            g.add_edge(u, v);
        } catch (const DomainError& err) {
            throw fail(err.what());
        }
    }
    if (next_line(line)) throw fail("unexpected content after " + std::to_string(m) + " edges");
    return g;
}

TwoSpinSystem parse_system(const std::string& text, Graph graph, const std::string& source) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ParseError(source + ": invalid JSON: " + e.what());
    }
    if (!j.is_object()) throw ParseError(source + ": expected a JSON object");
    auto number = [&](const char* key, double fallback) {
        if (!j.contains(key)) return fallback;
        if (!j[key].is_number()) throw ParseError(source + ": field '" + key + "': expected a number");
        return j[key].get<double>();
    };
    const double beta = number("beta", 0.0);
    const double gamma = number("gamma", 1.0);
    try {
        if (j.contains("fields")) {
            if (j.contains("lambda")) throw ParseError(source + ": give either 'lambda' or 'fields', not both");
            if (!j["fields"].is_array()) throw ParseError(source + ": field 'fields': expected an array");
            std::vector<double> f;
            for (std::size_t k = 0; k < j["fields"].size(); ++k) {
                if (!j["fields"][k].is_number())
                    throw ParseError(source + ": field 'fields[" + std::to_string(k) + "]': expected a number");
                f.push_back(j["fields"][k].get<double>());
            }
            return TwoSpinSystem(std::move(graph), beta, gamma, std::move(f));
        }
        return TwoSpinSystem(std::move(graph), beta, gamma, number("lambda", 1.0));
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(source + ": " + e.what());
    }
}

Graph family_graph(const std::string& family, std::uint64_t seed) {
    const auto colon = family.find(':');
    const std::string name = family.substr(0, colon);
    const std::vector<std::string> args = colon == std::string::npos ? std::vector<std::string>{}
                                                                      : split(family.substr(colon + 1), ',');
    auto arg = [&](std::size_t k) {
        if (k >= args.size()) throw ParseError("family '" + family + "': missing argument " + std::to_string(k + 1));
        return parse_int(args[k], "family '" + family + "'");
    };
    if (name == "edge") return Graph::path(2);
    if (name == "path") return Graph::path(arg(0));
    if (name == "cycle") return Graph::cycle(arg(0));
    if (name == "complete") return Graph::complete(arg(0));
    if (name == "kab" || name == "complete_bipartite") return Graph::complete_bipartite(arg(0), arg(1));
    if (name == "star") return Graph::star(arg(0));
    if (name == "empty") return Graph::empty(arg(0));
    if (name == "random") {
        if (args.size() != 2) throw ParseError("family '" + family + "': expected random:n,p");
        Rng rng(seed);
        return Graph::random(arg(0), parse_double(args[1], "family '" + family + "'"), rng);
    }
    throw ParseError("unknown graph family '" + name + "'");
}

Pinning parse_pinning(const std::string& text) {
    Pinning p;
    if (text.empty()) return p;
    for (const auto& item : split(text, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ParseError("pinning item '" + item + "': expected v:s");
        const int v = parse_int(item.substr(0, colon), "pinning item '" + item + "'");
        const std::string s = item.substr(colon + 1);
        int spin = 0;
        if (s == "+" || s == "1" || s == "+1") spin = +1;
        else if (s == "-" || s == "-1") spin = -1;
        else throw ParseError("pinning item '" + item + "': spin must be + or -");
        if (v < 0) throw ParseError("pinning item '" + item + "': negative vertex");
        p.set(v, spin);
    }
    return p;
}

// ---------------------------------------------------------------- records

Json to_json(const Record& r, bool with_wall_time) {
    Json j;
    j["schema"] = kSchema;
    j["version"] = kVersion;
    j["command"] = r.command;
    j["input"] = r.input;
    j["verdict"] = to_string(r.verdict);
    j["metrics"] = r.metrics;
    j["witnesses"] = r.witnesses;
    if (with_wall_time) j["wall_ms"] = r.wall_ms;
    return j;
}

std::vector<std::pair<std::string, std::string>> csv_columns(const Record& r, bool with_wall_time) {
    std::vector<std::pair<std::string, std::string>> cols;
    cols.emplace_back("command", r.command);
    cols.emplace_back("verdict", to_string(r.verdict));
    for (const auto& [prefix, obj] : {std::pair<std::string, const Json*>{"input.", &r.input}, {"", &r.metrics}})
        for (auto it = obj->begin(); it != obj->end(); ++it)
            if (it->is_primitive() && !it->is_null()) cols.emplace_back(prefix + it.key(), scalar_text(*it));
    if (with_wall_time) cols.emplace_back("wall_ms", Json(r.wall_ms).dump());
    return cols;
}

int exit_code(Verdict v) {
    switch (v) {
        case Verdict::Pass: return 0;
        case Verdict::Violation: return 1;
        case Verdict::BudgetExhausted: return 3;
    }
    return 2;
}

namespace {

class Writer {
public:
    Writer(std::ostream& out, bool csv, bool wall) : out_(out), csv_(csv), wall_(wall) {}

    void write(const Record& r) {
        if (!csv_) {
            out_ << to_json(r, wall_).dump() << '\n';
        } else {
            const auto cols = csv_columns(r, wall_);
            std::vector<std::string> keys;
            for (const auto& c : cols) keys.push_back(c.first);
            if (keys != header_) {
                header_ = keys;
                for (std::size_t k = 0; k < keys.size(); ++k) out_ << (k ? "," : "") << csv_escape(keys[k]);
                out_ << '\n';
            }
            for (std::size_t k = 0; k < cols.size(); ++k) out_ << (k ? "," : "") << csv_escape(cols[k].second);
            out_ << '\n';
        }
        out_.flush();
        verdict_ = worst(verdict_, r.verdict);
    }
    Verdict verdict() const { return verdict_; }

private:
    std::ostream& out_;
    bool csv_, wall_;
    std::vector<std::string> header_;
    Verdict verdict_ = Verdict::Pass;
};

// ---------------------------------------------------------------- options

struct Options {
    std::string graph_file, family, system_file, format = "json", pin;
    double beta = 0.0, gamma = 1.0, lambda = 1.0;
    std::vector<double> fields;
    int d = 2;
    double delta = 0.0;
    std::uint64_t seed = 1;
    std::uint64_t budget = 0;  // 0: module default
    double eps = 0.25;
    double theta = 1.0 / 2985984.0;  // 12^-6
    std::uint64_t steps = 10000, burn_in = 0;
    int restarts = 32, cap = 1 << 20;
    double eta = 2.0, epsilon = 0.5, zeta = 3.0, alpha = 0.5;
    double lower = std::exp(-3.0), upper = std::exp(3.0);
    int random_points = 2000, kl_trials = 200, ell = 0, trials = 100, k = 0, root = 0;
    double C = 0.0;
    std::vector<int> k_list{2, 3};
    int field_samples = 0, pinning_samples = 0;
    std::string task = "mix", n_range = "4:10";
    std::vector<double> lambda_list;
    bool no_wall = false, complete = false, exact = false;
    bool was_set(const std::string& name, const CLI::App* app) const {
        const auto* o = app->get_option_no_throw(name);
        return o != nullptr && o->count() > 0;
    }
};

struct Context {
    const Options& o;
    const CLI::App* sub;
    bool has(const std::string& flag) const { return o.was_set(flag, sub); }
};

Graph load_graph(const Options& o, bool required = true) {
    if (!o.graph_file.empty()) return parse_graph(read_file(o.graph_file), o.graph_file);
    if (!o.family.empty()) return family_graph(o.family, o.seed);
    if (required) throw ParseError("a graph is required: pass --graph FILE or --family NAME:ARGS");
    return Graph(0);
}

TwoSpinSystem load_system(const Options& o, Graph g) {
    if (!o.system_file.empty()) return parse_system(read_file(o.system_file), std::move(g), o.system_file);
    try {
        if (!o.fields.empty()) return TwoSpinSystem(std::move(g), o.beta, o.gamma, o.fields);
        return TwoSpinSystem(std::move(g), o.beta, o.gamma, o.lambda);
    } catch (const Error& e) {
        throw ParseError(std::string("system parameters: ") + e.what());
    }
}

Json system_echo(const TwoSpinSystem& sys) {
    Json j;
    j["n"] = sys.n();
    j["edges"] = static_cast<int>(sys.graph.edges().size());
    j["beta"] = sys.beta;
    j["gamma"] = sys.gamma;
    if (sys.uniform_fields()) j["lambda"] = sys.n() ? sys.fields[0] : 1.0;
    else j["fields"] = num_array(sys.fields);
    return j;
}

Record base_record(const std::string& cmd, const TwoSpinSystem& sys, const Options& o) {
    Record r;
    r.command = cmd;
    r.input = system_echo(sys);
    r.input["seed"] = o.seed;
    return r;
}

SiOptions si_options(const Options& o, int fields_default, int pinnings_default, std::uint64_t seed) {
    SiOptions s;
    s.field_samples = o.field_samples > 0 ? o.field_samples : fields_default;
    s.pinning_samples = o.pinning_samples > 0 ? o.pinning_samples : pinnings_default;
    if (o.budget) s.budget = o.budget;
    s.seed = seed;
    return s;
}

MsOptions ms_options(const Options& o, int fields_default, int pinnings_default, std::uint64_t seed) {
    MsOptions s;
    s.field_samples = o.field_samples > 0 ? o.field_samples : fields_default;
    s.pinning_samples = o.pinning_samples > 0 ? o.pinning_samples : pinnings_default;
    if (o.budget) s.budget = o.budget;
    s.seed = seed;
    return s;
}

ZSearchOptions z_options(const Options& o, std::uint64_t seed) {
    ZSearchOptions z;
    z.lower = o.lower;
    z.upper = o.upper;
    z.random_points = o.random_points;
    if (o.budget) z.budget = o.budget;
    z.seed = seed;
    return z;
}

void put_si(Record& r, const SiReport& rep, const std::string& prefix = "") {
    r.metrics[prefix + "max_spectral_radius"] = num(rep.max_spectral_radius);
    r.metrics[prefix + "samples_checked"] = rep.samples_checked;
    r.metrics[prefix + "exhaustive_pinnings"] = rep.exhaustive_pinnings;
    r.witnesses[prefix + "worst_pinning"] = pinning_json(rep.worst_pinning);
    r.witnesses[prefix + "worst_fields"] = num_array(rep.worst_fields);
    r.verdict = worst(r.verdict, rep.verdict);
}

void put_ms(Record& r, const MsReport& rep, const std::string& prefix = "") {
    r.metrics[prefix + "worst_ratio"] = num(rep.worst_ratio);
    r.metrics[prefix + "worst_growth"] = num(rep.worst_growth);
    r.metrics[prefix + "checked"] = rep.checked;
    r.metrics[prefix + "infeasible_skipped"] = rep.infeasible_skipped;
    r.metrics[prefix + "exhaustive"] = rep.exhaustive;
    r.witnesses[prefix + "worst_pinning"] = pinning_json(rep.worst_pinning);
    r.witnesses[prefix + "worst_sub_pinning"] = pinning_json(rep.worst_sub_pinning);
    r.witnesses[prefix + "worst_vertex"] = rep.worst_vertex;
    r.witnesses[prefix + "worst_fields"] = num_array(rep.worst_fields);
    r.verdict = worst(r.verdict, rep.verdict);
}

void put_pd(Record& r, const PdReport& rep, const std::string& prefix = "") {
    r.metrics[prefix + "max_F"] = num(rep.max_F);
    r.metrics[prefix + "evaluations"] = rep.evaluations;
    r.metrics[prefix + "gate"] = num(rep.gate);
    r.metrics[prefix + "gate_points"] = rep.gate_points;
    r.metrics[prefix + "gate_violations"] = rep.gate_violations;
    r.witnesses[prefix + "worst_z"] = num_array(rep.worst_z);
    r.verdict = worst(r.verdict, rep.verdict);
}

// ---------------------------------------------------------------- handlers

Record cmd_uniqueness(const Context& c) {
    const auto& o = c.o;
    Record r;
    r.command = "uniqueness";
    r.input = {{"beta", o.beta}, {"gamma", o.gamma}, {"lambda", o.lambda}, {"d", o.d}, {"delta", o.delta}};
    const auto rep = fixed_point(o.beta, o.gamma, o.lambda, o.d);
    r.metrics["x_hat"] = num(rep.fixed_point);
    r.metrics["derivative"] = num(rep.derivative_magnitude);
    r.metrics["gap"] = num(rep.gap);
    // Without --delta, d_unique means the derivative at the fixed point is below 1.
    r.metrics["d_unique"] = c.has("--delta") ? is_d_unique(o.beta, o.gamma, o.lambda, o.d, o.delta)
                                             : rep.derivative_magnitude < 1.0;
    r.metrics["iterations"] = rep.iterations;
    return r;
}

Record cmd_thresholds(const Context& c) {
    const auto& o = c.o;
    Record r;
    r.command = "thresholds";
    r.input = {{"beta", o.beta}, {"gamma", o.gamma}, {"d", o.d}, {"delta", o.delta}};
    const auto t = thresholds(o.beta, o.gamma, o.delta, o.d);
    r.metrics["kind"] = to_string(t.kind);
    r.metrics["lambda_c"] = num(t.lambda_c);
    r.metrics["lambda_1"] = num(t.lambda_1);
    r.metrics["lambda_2"] = num(t.lambda_2);
    r.metrics["x_1"] = num(t.x_1);
    r.metrics["x_2"] = num(t.x_2);
    r.metrics["zeta"] = num(t.zeta);
    if (c.has("--lambda")) {
        r.input["lambda"] = o.lambda;
        r.metrics["predicts_unique"] = t.predicts_unique(o.lambda);
    }
    return r;
}

Record cmd_sample(const Context& c) {
    const auto& o = c.o;
    const auto sys = load_system(o, load_graph(o));
    Record r = base_record("sample", sys, o);
    r.input["steps"] = o.steps;
    r.input["burn_in"] = o.burn_in;
    const Pinning pin = parse_pinning(o.pin);
    std::vector<int> start(static_cast<std::size_t>(sys.n()), -1);
    for (auto [v, s] : pin.values())
        if (v < sys.n()) start[v] = s;
    if (!(gibbs_weight(sys, start) > 0.0)) {
        std::fill(start.begin(), start.end(), +1);
        for (auto [v, s] : pin.values())
            if (v < sys.n()) start[v] = s;
    }
    const auto tr = glauber_run(sys, o.steps, o.seed, start, o.burn_in, pin);
    std::vector<double> freq;
    double mean = 0.0;
    for (auto cnt : tr.plus_counts) {
        const double f = tr.recorded ? static_cast<double>(cnt) / tr.recorded : 0.0;
        freq.push_back(f);
        mean += f;
    }
    r.metrics["recorded"] = tr.recorded;
    r.metrics["flips"] = tr.flips;
    r.metrics["mean_plus_frequency"] = sys.n() ? mean / sys.n() : 0.0;
    r.metrics["plus_frequency"] = num_array(freq);
    r.witnesses["final_state"] = tr.final_state;
    return r;
}

Record cmd_mix(const Context& c) {
    const auto& o = c.o;
    const auto sys = load_system(o, load_graph(o));
    Record r = base_record("mix", sys, o);
    r.input["eps"] = o.eps;
    const auto dist = gibbs_distribution(sys);
    const auto t = glauber_matrix(dist);
    const auto mt = exact_mixing_time(t, o.eps, o.cap);
    r.metrics["states"] = t.size();
    r.metrics["t_mix"] = mt.t;
    r.metrics["distance"] = num(mt.distance);
    r.metrics["mu_min"] = num(min_probability(dist));
    r.metrics["spectral_gap"] = num(spectrum_check(t).spectral_gap);
    return r;
}

Record cmd_mls(const Context& c) {
    const auto& o = c.o;
    const auto sys = load_system(o, load_graph(o));
    Record r = base_record("mls", sys, o);
    r.input["eps"] = o.eps;
    r.input["restarts"] = o.restarts;
    const auto dist = gibbs_distribution(sys);
    const auto t = glauber_matrix(dist);
    MlsOptions m;
    m.restarts = o.restarts;
    m.seed = o.seed;
    const auto est = mls_estimate(t, m);
    const double mu_min = min_probability(dist);
    r.metrics["rho_hat"] = num(est.value);
    r.metrics["n_rho_hat"] = num(est.value * sys.n());
    r.metrics["restarts_used"] = est.restarts_used;
    r.metrics["gradient_check_error"] = num(est.gradient_check_error);
    r.metrics["mu_min"] = num(mu_min);
    r.metrics["mixing_bound"] = num(mixing_bound(est.value, mu_min, o.eps));
    r.metrics["spectral_gap"] = num(spectrum_check(t).spectral_gap);
    if (o.exact) {
        const auto mt = exact_mixing_time(t, o.eps, o.cap);
        r.metrics["t_mix"] = mt.t;
        // Consistency with the MLS bound, using a 10% inflated estimate.
        const double bound = mixing_bound(1.1 * est.value, mu_min, o.eps);
        r.metrics["inflated_bound"] = num(bound);
        if (mt.t > bound) r.verdict = Verdict::Violation;
    }
    return r;
}

Record cmd_kappa(const Context& c) {
    const auto& o = c.o;
    const auto sys = load_system(o, load_graph(o));
    Record r = base_record("kappa", sys, o);
    r.input["theta"] = o.theta;
    const auto dist = gibbs_distribution(sys);
    const auto q = tuned_rates(dist, sys, o.theta);
    const auto kp = kappa_pair(q);
    r.metrics["kappa1"] = num(kp.kappa1);
    r.metrics["kappa2"] = num(kp.kappa2);
    r.metrics["kappa_sum"] = num(kp.kappa1 + kp.kappa2);
    r.metrics["terms"] = kp.terms;
    r.metrics["free_coordinates"] = q.free_count();
    r.metrics["rate_balance_error"] = num(max_rate_balance_error(q));
    return r;
}

Record cmd_verify_si(const Context& c) {
    const auto& o = c.o;
    const auto sys = load_system(o, load_graph(o));
    Record r = base_record("verify-si", sys, o);
    r.input["eta"] = o.eta;
    const auto dist = gibbs_distribution(sys);
    const auto opts = si_options(o, 512, 256, o.seed);
    if (c.has("--epsilon")) {
        r.input["epsilon"] = o.epsilon;
        put_si(r, complete_si_falsify(dist, o.eta, o.epsilon, opts));
    } else {
        put_si(r, si_check(dist, o.eta, opts));
    }
    return r;
}

Record cmd_verify_ms(const Context& c) {
    const auto& o = c.o;
    const auto sys = load_system(o, load_graph(o));
    Record r = base_record("verify-ms", sys, o);
    r.input["zeta"] = o.zeta;
    r.input["complete"] = o.complete;
    const auto dist = gibbs_distribution(sys);
    const auto opts = ms_options(o, 64, 256, o.seed);
    put_ms(r, o.complete ? complete_ms_falsify(dist, o.zeta, opts) : marginal_stability_check(dist, o.zeta, opts));
    return r;
}

Record cmd_verify_pd(const Context& c) {
    const auto& o = c.o;
    const auto sys = load_system(o, load_graph(o));
    Record r = base_record("verify-pd", sys, o);
    r.input["alpha"] = o.alpha;
    const double zeta = c.has("--zeta") ? o.zeta : 0.0;
    if (zeta > 0.0) r.input["zeta"] = zeta;
    const auto dist = gibbs_distribution(sys);
    put_pd(r, product_domination_check(dist, o.alpha, z_options(o, o.seed), zeta));
    return r;
}

Record cmd_verify_ei(const Context& c) {
    const auto& o = c.o;
    const auto sys = load_system(o, load_graph(o));
    Record r = base_record("verify-ei", sys, o);
    r.input["alpha"] = o.alpha;
    const auto dist = gibbs_distribution(sys);
    EiOptions e;
    e.z = z_options(o, o.seed);
    e.kl_trials = o.kl_trials;
    const auto h = homogenize(dist);
    const auto rep = entropic_independence_check(h, o.alpha, e);
    r.metrics["max_algebraic_ratio"] = num(rep.max_algebraic_ratio);
    r.metrics["max_kl_ratio"] = num(rep.max_kl_ratio);
    r.metrics["evaluations"] = rep.evaluations;
    r.metrics["kl_trials"] = rep.kl_trials;
    r.witnesses["worst_z"] = num_array(rep.worst_z);
    r.verdict = rep.verdict;
    const auto eq = ei_pd_equivalence_check(dist, o.alpha, z_options(o, mix_seed(o.seed, 1)));
    r.metrics["pd_verdict"] = to_string(eq.pd_verdict);
    r.metrics["equivalence_ei_verdict"] = to_string(eq.ei_verdict);
    r.metrics["pd_ei_agree"] = eq.agree;
    r.metrics["pd_max_F"] = num(eq.pd_max_F);
    r.metrics["lifted_max_ratio"] = num(eq.ei_max_ratio);
    if (!eq.agree) r.verdict = Verdict::Violation;
    return r;
}

Record cmd_verify_ubf(const Context& c) {
    const auto& o = c.o;
    const auto sys = load_system(o, load_graph(o));
    Record r = base_record("verify-ubf", sys, o);
    const int n = sys.n();
    const int ell = o.ell > 0 ? o.ell : std::max(1, (n + 1) / 2);
    const double C = o.C > 0.0 ? o.C : std::pow(std::exp(1.0) * n / ell, 1.0 / o.alpha + 1.0);
    r.input["ell"] = ell;
    r.input["C"] = num(C);
    r.input["trials"] = o.trials;
    const auto dist = gibbs_distribution(sys);
    const auto rep = ubf_check(dist, ell, C, o.trials, o.seed);
    r.metrics["worst_ratio"] = num(rep.worst_ratio);
    r.metrics["trials"] = rep.trials;
    r.verdict = rep.verdict;
    return r;
}

int default_k(double epsilon, double zeta) { return static_cast<int>(std::ceil(10.0 * (1.0 + epsilon) * (1.0 + zeta))); }

Record cmd_lift(const Context& c) {
    const auto& o = c.o;
    const auto sys = load_system(o, load_graph(o));
    Record r = base_record("lift", sys, o);
    const int k = o.k > 0 ? o.k : default_k(o.epsilon, o.zeta);
    r.input["k"] = k;
    r.input["eta"] = o.eta;
    r.input["epsilon"] = o.epsilon;
    r.input["zeta"] = o.zeta;
    r.metrics["k0"] = default_k(o.epsilon, o.zeta);
    const auto dist = gibbs_distribution(sys);
    const auto lifted = k_transform(dist, k);
    const auto back = aggregate(lifted, dist.n(), k);
    double err = 0.0;
    for (const auto& e : dist.support()) err = std::max(err, std::abs(e.mass - back.mass(e.config)));
    r.metrics["lifted_dimension"] = lifted.n();
    r.metrics["lifted_support"] = lifted.support_size();
    r.metrics["roundtrip_error"] = num(err);
    put_si(r, complete_si_falsify(lifted, 2.0 * o.eta + 5.0, o.epsilon, si_options(o, 16, 32, o.seed)), "si.");
    put_ms(r, complete_ms_falsify(lifted, 2.0 * o.zeta, ms_options(o, 8, 256, o.seed)), "ms.");
    if (err > 1e-12) r.verdict = Verdict::Violation;
    return r;
}

Record cmd_saw(const Context& c) {
    const auto& o = c.o;
    const auto sys = load_system(o, load_graph(o));
    Record r = base_record("saw", sys, o);
    const Pinning pin = parse_pinning(o.pin);
    r.input["root"] = o.root;
    r.input["pin"] = o.pin;
    const auto tree = build_saw_tree(sys.graph, pin, sys.fields, o.root);
    const auto eq = saw_equivalence_check(sys, pin, o.root);
    r.metrics["tree_size"] = tree.size();
    r.metrics["max_depth"] = tree.max_depth;
    r.metrics["pinned_leaves"] = tree.pinned_count();
    r.metrics["tree_ratio"] = ext(eq.tree_ratio);
    r.metrics["brute_ratio"] = ext(eq.brute_ratio);
    r.metrics["equal"] = eq.equal;
    if (!eq.equal) r.verdict = Verdict::Violation;
    return r;
}

// ---------------------------------------------------------------- sweep and pipeline

std::pair<int, int> parse_range(const std::string& s) {
    const auto parts = split(s, ':');
    if (parts.size() == 1) {
        const int v = parse_int(parts[0], "--n");
        return {v, v};
    }
    if (parts.size() != 2) throw ParseError("--n: expected lo:hi, got '" + s + "'");
    const int lo = parse_int(parts[0], "--n"), hi = parse_int(parts[1], "--n");
    if (lo > hi) throw ParseError("--n: empty range '" + s + "'");
    return {lo, hi};
}

void run_sweep(const Context& c, Writer& w) {
    const auto& o = c.o;
    const auto [lo, hi] = parse_range(o.n_range);
    const std::vector<double> lambdas = o.lambda_list.empty() ? std::vector<double>{o.lambda} : o.lambda_list;
    const std::string family = o.family.empty() ? "cycle" : o.family.substr(0, o.family.find(':'));
    static const std::vector<std::string> tasks{"mix", "mls", "kappa", "uniqueness"};
    if (std::find(tasks.begin(), tasks.end(), o.task) == tasks.end())
        throw ParseError("--task: expected one of mix, mls, kappa, uniqueness");

    std::vector<double> xs, ys, band;
    for (double lam : lambdas) {
        for (int n = lo; n <= hi; ++n) {
            const std::string label = o.task + ":" + family + ":" + std::to_string(n) + ":" + Json(lam).dump();
            Options p = o;
            p.seed = o.seed ^ label_hash(label);
            p.lambda = lam;
            p.graph_file.clear();
            p.fields.clear();
            p.system_file.clear();
            p.family = family + ":" + std::to_string(n);
            p.d = n;
            const Context pc{p, c.sub};
            const auto t0 = std::chrono::steady_clock::now();
            Record r = o.task == "mix"     ? cmd_mix(pc)
                       : o.task == "mls"   ? cmd_mls(pc)
                       : o.task == "kappa" ? cmd_kappa(pc)
                                           : cmd_uniqueness(pc);
            r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            r.command = "sweep";
            r.input["task"] = o.task;
            r.input["point"] = label;
            if (o.task == "mix" && n >= 2) {
                const double nlogn = n * std::log(static_cast<double>(n));
                const double t = r.metrics["t_mix"].get<double>();
                r.metrics["t_over_nlogn"] = t / nlogn;
                if (lambdas.size() == 1) {
                    xs.push_back(std::log(nlogn));
                    ys.push_back(std::log(t));
                    band.push_back(t / nlogn);
                }
            } else if (o.task == "mls" && lambdas.size() == 1) {
                band.push_back(r.metrics["n_rho_hat"].get<double>());
            }
            w.write(r);
        }
    }
    if (band.size() >= 2) {
        Record s;
        s.command = "sweep-summary";
        s.input = {{"task", o.task}, {"family", family}, {"n", o.n_range}, {"lambda", lambdas[0]}};
        const auto [mn, mx] = std::minmax_element(band.begin(), band.end());
        s.metrics["band_ratio"] = num(*mx / *mn);
        s.metrics["band_min"] = num(*mn);
        s.metrics["band_max"] = num(*mx);
        if (xs.size() >= 2) {
            const double mx_ = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
            const double my_ = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
            double sxy = 0.0, sxx = 0.0;
            for (std::size_t k = 0; k < xs.size(); ++k) {
                sxy += (xs[k] - mx_) * (ys[k] - my_);
                sxx += (xs[k] - mx_) * (xs[k] - mx_);
            }
            s.metrics["slope_log_t_vs_log_nlogn"] = num(sxx > 0 ? sxy / sxx : 0.0);
        }
        w.write(s);
    }
}

void run_pipeline(const Context& c, Writer& w) {
    const auto& o = c.o;
    const auto input_sys = load_system(o, load_graph(o));
    const double eta = o.eta, eps = o.epsilon, zeta = o.zeta;
    const int n = input_sys.n();
    int stage_no = 0;
    bool halted = false;
    std::string failed;

    auto emit = [&](const std::string& stage, const std::function<void(Record&)>& body) {
        if (halted) return;
        Record r = base_record("pipeline", input_sys, o);
        r.input["stage"] = stage;
        r.input["stage_index"] = stage_no++;
        const auto t0 = std::chrono::steady_clock::now();
        body(r);
        r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        w.write(r);
        if (r.verdict != Verdict::Pass) {
            halted = true;
            failed = stage;
        }
    };

    const int dir = flip_direction(input_sys);
    const TwoSpinSystem sys = flipped_system(input_sys);
    emit("flip", [&](Record& r) {
        r.metrics["direction"] = dir;
        r.metrics["beta"] = sys.beta;
        r.metrics["gamma"] = sys.gamma;
        r.metrics["max_field"] = num(sys.max_field());
        const int D = sys.graph.max_degree();
        const double cap = sys.beta > 0.0 ? std::pow(sys.gamma / sys.beta, D / 2.0)
                                          : std::numeric_limits<double>::infinity();
        r.metrics["regime_cap"] = num(cap);
        if (!(sys.max_field() <= cap * (1.0 + 1e-12))) r.verdict = Verdict::Violation;
    });
    emit("condition", [&](Record& r) {
        const double delta = c.has("--delta") ? o.delta : 0.1;
        r.input["delta"] = delta;
        const auto rep = check_condition(sys, delta);
        r.metrics["holds"] = rep.holds;
        r.metrics["branch"] = rep.branch;
        r.metrics["worst_derivative"] = num(rep.worst_derivative);
        if (!rep.holds) {
            r.witnesses["failure"] = rep.failure;
            r.verdict = Verdict::Violation;
        }
    });
    const auto pi = gibbs_distribution(sys);
    emit("spectral-independence", [&](Record& r) {
        r.input["eta"] = eta;
        r.input["epsilon"] = eps;
        put_si(r, complete_si_falsify(pi, eta, eps, si_options(o, 64, 64, mix_seed(o.seed, 11))));
    });
    emit("marginal-stability", [&](Record& r) {
        r.input["zeta"] = zeta;
        put_ms(r, complete_ms_falsify(pi, zeta, ms_options(o, 16, 256, mix_seed(o.seed, 12))));
    });
    const double alpha = std::min(1.0 / (4.0 * eta + 10.0),
                                  std::log1p(eps) / (std::log1p(eps) + std::log(4.0 * zeta)));
    for (int k : o.k_list) {
        emit("lift-" + std::to_string(k), [&](Record& r) {
            r.input["k"] = k;
            r.input["eta"] = 2.0 * eta + 5.0;
            r.input["zeta"] = 2.0 * zeta;
            r.metrics["k0"] = default_k(eps, zeta);
            const auto lifted = k_transform(pi, k);
            const auto back = aggregate(lifted, n, k);
            double err = 0.0;
            for (const auto& e : pi.support()) err = std::max(err, std::abs(e.mass - back.mass(e.config)));
            r.metrics["roundtrip_error"] = num(err);
            const auto seed = mix_seed(o.seed, 100 + static_cast<std::uint64_t>(k));
            put_si(r, complete_si_falsify(lifted, 2.0 * eta + 5.0, eps, si_options(o, 16, 32, seed)), "si.");
            put_ms(r, complete_ms_falsify(lifted, 2.0 * zeta, ms_options(o, 8, 256, seed)), "ms.");
            if (err > 1e-12) r.verdict = Verdict::Violation;
        });
        emit("product-domination-" + std::to_string(k), [&](Record& r) {
            r.input["k"] = k;
            r.input["alpha"] = num(alpha);
            auto z = z_options(o, mix_seed(o.seed, 200 + static_cast<std::uint64_t>(k)));
            z.random_points = std::min(z.random_points, 500);
            put_pd(r, product_domination_check(k_transform(pi, k), alpha, z));
        });
    }
    emit("block-factorization", [&](Record& r) {
        const int ell = std::max(1, static_cast<int>(std::ceil(o.theta * n)));
        const double C = std::pow(std::exp(1.0) * n / ell, 1.0 / alpha + 1.0);
        r.input["ell"] = ell;
        r.input["C"] = num(C);
        r.input["alpha"] = num(alpha);
        const auto rep = ubf_check(pi, ell, C, std::min(o.trials, 50), mix_seed(o.seed, 13));
        r.metrics["worst_ratio"] = num(rep.worst_ratio);
        r.metrics["trials"] = rep.trials;
        r.verdict = rep.verdict;
    });
    emit("subcritical-mls", [&](Record& r) {
        r.input["theta"] = o.theta;
        const auto t = glauber_matrix(magnetize(pi, o.theta));
        MlsOptions m;
        m.restarts = o.restarts;
        m.seed = mix_seed(o.seed, 14);
        const auto est = mls_estimate(t, m);
        const double target = 1.0 / (4.0 * n);
        r.metrics["rho_hat"] = num(est.value);
        r.metrics["target"] = num(target);
        r.metrics["inflated_rho_hat"] = num(1.1 * est.value);
        if (1.1 * est.value < target) r.verdict = Verdict::Violation;
    });

    Record s = base_record("pipeline-summary", input_sys, o);
    s.metrics["stages_run"] = stage_no;
    s.metrics["failed_stage"] = failed;
    s.verdict = w.verdict();
    w.write(s);
}

}  // namespace

// ---------------------------------------------------------------- entry point

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Two-spin system toolkit: uniqueness, dynamics, independence and lifting checks"};
    app.require_subcommand(1);
    Options o;

    auto add_system = [&](CLI::App* s) {
        s->add_option("--graph", o.graph_file, "graph file (text 'n m' + edges, or JSON)");
        s->add_option("--family", o.family, "graph family, e.g. cycle:6, kab:3,3, complete:4");
        s->add_option("--system", o.system_file, "system JSON {beta, gamma, lambda | fields}");
        s->add_option("--beta", o.beta, "edge activity on (+,+) edges");
        s->add_option("--gamma", o.gamma, "edge activity on (-,-) edges");
        s->add_option("--lambda", o.lambda, "uniform vertex activity");
        s->add_option("--fields", o.fields, "per-vertex activities")->delimiter(',');
    };
    auto add_common = [&](CLI::App* s) {
        s->add_option("--seed", o.seed, "random seed");
        s->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
        s->add_flag("--no-wall-time", o.no_wall, "omit the wall-time field");
    };

    std::map<std::string, std::function<Record(const Context&)>> single;
    std::map<std::string, std::function<void(const Context&, Writer&)>> stream;

    auto* u = app.add_subcommand("uniqueness", "fixed point, derivative and gap of the tree recursion");
    u->add_option("--beta", o.beta);
    u->add_option("--gamma", o.gamma);
    u->add_option("--lambda", o.lambda);
    u->add_option("--d", o.d)->check(CLI::PositiveNumber);
    u->add_option("--delta", o.delta);
    add_common(u);
    single["uniqueness"] = cmd_uniqueness;

    auto* t = app.add_subcommand("thresholds", "closed-form uniqueness thresholds in lambda");
    t->add_option("--beta", o.beta);
    t->add_option("--gamma", o.gamma);
    t->add_option("--lambda", o.lambda, "also report whether this lambda is predicted unique");
    t->add_option("--d", o.d)->check(CLI::PositiveNumber);
    t->add_option("--delta", o.delta);
    add_common(t);
    single["thresholds"] = cmd_thresholds;

    auto* sa = app.add_subcommand("sample", "run single-site Glauber dynamics and report statistics");
    add_system(sa);
    add_common(sa);
    sa->add_option("--steps", o.steps);
    sa->add_option("--burn-in", o.burn_in);
    sa->add_option("--pin", o.pin, "pinning, e.g. 0:+,3:-");
    single["sample"] = cmd_sample;

    auto* mx = app.add_subcommand("mix", "exact mixing time of Glauber dynamics");
    add_system(mx);
    add_common(mx);
    mx->add_option("--eps", o.eps);
    mx->add_option("--cap", o.cap, "largest step count considered");
    single["mix"] = cmd_mix;

    auto* ml = app.add_subcommand("mls", "estimate the modified log-Sobolev constant");
    add_system(ml);
    add_common(ml);
    ml->add_option("--eps", o.eps);
    ml->add_option("--restarts", o.restarts);
    ml->add_flag("--exact", o.exact, "also compute the exact mixing time and compare");
    ml->add_option("--cap", o.cap);
    single["mls"] = cmd_mls;

    auto* kp = app.add_subcommand("kappa", "kappa constants of the tuned chain");
    add_system(kp);
    add_common(kp);
    kp->add_option("--theta", o.theta);
    single["kappa"] = cmd_kappa;

    auto* vs = app.add_subcommand("verify-si", "falsify spectral independence");
    add_system(vs);
    add_common(vs);
    vs->add_option("--eta", o.eta);
    vs->add_option("--epsilon", o.epsilon, "also scan fields in (0, 1+epsilon]");
    vs->add_option("--budget", o.budget);
    vs->add_option("--field-samples", o.field_samples);
    vs->add_option("--pinning-samples", o.pinning_samples);
    single["verify-si"] = cmd_verify_si;

    auto* vm = app.add_subcommand("verify-ms", "falsify marginal stability");
    add_system(vm);
    add_common(vm);
    vm->add_option("--zeta", o.zeta);
    vm->add_flag("--complete", o.complete, "also scan fields in (0, 1]");
    vm->add_option("--budget", o.budget);
    vm->add_option("--field-samples", o.field_samples);
    vm->add_option("--pinning-samples", o.pinning_samples);
    single["verify-ms"] = cmd_verify_ms;

    auto* vp = app.add_subcommand("verify-pd", "falsify product domination");
    add_system(vp);
    add_common(vp);
    vp->add_option("--alpha", o.alpha);
    vp->add_option("--zeta", o.zeta, "run the monotonicity gate for this zeta");
    vp->add_option("--lower", o.lower);
    vp->add_option("--upper", o.upper);
    vp->add_option("--points", o.random_points);
    vp->add_option("--budget", o.budget);
    single["verify-pd"] = cmd_verify_pd;

    auto* ve = app.add_subcommand("verify-ei", "falsify entropic independence of the homogenization");
    add_system(ve);
    add_common(ve);
    ve->add_option("--alpha", o.alpha);
    ve->add_option("--lower", o.lower);
    ve->add_option("--upper", o.upper);
    ve->add_option("--points", o.random_points);
    ve->add_option("--kl-trials", o.kl_trials);
    ve->add_option("--budget", o.budget);
    single["verify-ei"] = cmd_verify_ei;

    auto* vu = app.add_subcommand("verify-ubf", "sample functions against uniform block factorization");
    add_system(vu);
    add_common(vu);
    vu->add_option("--ell", o.ell, "block size (default ceil(n/2))");
    vu->add_option("--C", o.C, "constant (default (e n / ell)^(1/alpha + 1))");
    vu->add_option("--alpha", o.alpha);
    vu->add_option("--trials", o.trials);
    single["verify-ubf"] = cmd_verify_ubf;

    auto* li = app.add_subcommand("lift", "k-transform and re-falsify with lifted parameters");
    add_system(li);
    add_common(li);
    li->add_option("--k", o.k, "copies per coordinate (default ceil(10 (1+epsilon)(1+zeta)))");
    li->add_option("--eta", o.eta);
    li->add_option("--epsilon", o.epsilon);
    li->add_option("--zeta", o.zeta);
    li->add_option("--budget", o.budget);
    li->add_option("--field-samples", o.field_samples);
    li->add_option("--pinning-samples", o.pinning_samples);
    single["lift"] = cmd_lift;

    auto* sw = app.add_subcommand("saw", "self-avoiding walk tree ratio against brute force");
    add_system(sw);
    add_common(sw);
    sw->add_option("--root", o.root);
    sw->add_option("--pin", o.pin, "pinning, e.g. 0:+,3:-");
    single["saw"] = cmd_saw;

    auto* sp = app.add_subcommand("sweep", "run a task over a family and parameter grid");
    sp->add_option("--task", o.task, "mix, mls, kappa or uniqueness");
    sp->add_option("--family", o.family, "graph family name (default cycle); n comes from --n");
    sp->add_option("--n", o.n_range, "size range lo:hi (degree range for uniqueness)");
    sp->add_option("--lambda", o.lambda_list, "activities")->delimiter(',');
    sp->add_option("--beta", o.beta);
    sp->add_option("--gamma", o.gamma);
    sp->add_option("--eps", o.eps);
    sp->add_option("--theta", o.theta);
    sp->add_option("--restarts", o.restarts);
    sp->add_option("--delta", o.delta);
    add_common(sp);
    stream["sweep"] = run_sweep;

    auto* pl = app.add_subcommand("pipeline", "stage-by-stage checks from flipping to the MLS estimate");
    add_system(pl);
    add_common(pl);
    pl->add_option("--delta", o.delta, "uniqueness gap (default 0.1)");
    pl->add_option("--theta", o.theta);
    pl->add_option("--k-list", o.k_list)->delimiter(',');
    pl->add_option("--eta", o.eta);
    pl->add_option("--epsilon", o.epsilon);
    pl->add_option("--zeta", o.zeta);
    pl->add_option("--restarts", o.restarts);
    pl->add_option("--trials", o.trials);
    pl->add_option("--budget", o.budget);
    pl->add_option("--field-samples", o.field_samples);
    pl->add_option("--pinning-samples", o.pinning_samples);
    stream["pipeline"] = run_pipeline;

    std::vector<std::string> reversed(argv.rbegin(), argv.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    CLI::App* chosen = app.get_subcommands().front();
    const std::string name = chosen->get_name();
    const Context ctx{o, chosen};
    Writer w(out, o.format == "csv", !o.no_wall);
    try {
        if (auto it = single.find(name); it != single.end()) {
            const auto t0 = std::chrono::steady_clock::now();
            Record r = it->second(ctx);
            r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            w.write(r);
        } else {
            stream.at(name)(ctx, w);
        }
    } catch (const BudgetExhausted& e) {
        err << "twospin " << name << ": budget exhausted: " << e.what() << '\n';
        return 3;
    } catch (const ParseError& e) {
        err << "twospin " << name << ": " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << "twospin " << name << ": " << e.what() << '\n';
        return 2;
    }
    return exit_code(w.verdict());
}

}  // namespace twospin::cli
