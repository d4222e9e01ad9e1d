#include "rcbo/cli.hpp"

#include "rcbo/experiment.hpp"
#include "rcbo/merton.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace rcbo::cli {

namespace {

enum Sub : unsigned {
    Optimize = 1u << 0,
    Bench = 1u << 1,
    Chaos = 1u << 2,
    Decay = 1u << 3,
    Langevin = 1u << 4,
    Invert = 1u << 5,
    All = 0x3f,
};

struct FlagDef {
    const char* names; // CLI11 name string
    const char* key;   // dotted settings key
    const char* help;
    unsigned subs;
    bool is_switch = false;
};

const std::vector<FlagDef>& flag_table()
{
    static const std::vector<FlagDef> table{
        {"--objective", "objective.name", "ackley | rastrigin | rosenbrock | townsend | merton", Optimize},
        {"--dim", "objective.dim", "problem dimension (rastrigin)", Optimize},
        {"--domain", "domain.kind", "ball | box | heart", Optimize},
        {"--radius", "domain.radius", "ball radius", Optimize | Decay},
        {"--center", "domain.center", "ball center, comma separated", Optimize | Decay},
        {"--lower", "domain.lower", "box lower corner, comma separated or scalar", Optimize},
        {"--upper", "domain.upper", "box upper corner, comma separated or scalar", Optimize},
        {"--scheme", "solver.scheme", "projection | penalty", Optimize},
        {"-N,--particles", "solver.N", "particle count", Optimize | Decay | Invert},
        {"--alpha", "solver.alpha", "consensus weight exponent", Optimize | Decay | Invert},
        {"--beta", "solver.beta", "drift schedule, e.g. const:1 or linear:0:10", Optimize | Decay},
        {"--sigma", "solver.sigma", "noise schedule, e.g. const:4 or expdecay:10:2.302585", Optimize | Decay},
        {"--repelling", "solver.repelling", "repelling schedule, e.g. invsq:1", Optimize},
        {"--h", "solver.h", "time step", Optimize | Decay | Invert},
        {"--steps", "solver.steps", "number of steps K", Optimize | Invert},
        {"--epsilon", "solver.epsilon", "penalty parameter (defaults to h)", Optimize},
        {"--seed", "run.seed", "master seed (fallback: RCBO_SEED, then 1)", All},
        {"--trace", "run.trace", "write trace.csv with the consensus path", Optimize, true},
        {"--table", "bench.table", "ackley | heart | rastrigin | rosenbrock", Bench},
        {"--runs", "run.runs", "replicas per cell", Bench | Invert},
        {"--long", "bench.long", "include the Rastrigin d = 500 column", Bench, true},
        {"--lambda0", "bench.lambda0", "repelling strength lambda0 in lambda0 / (1 + t^2)", Bench},
        {"--replicas", "run.replicas", "independent replicas", Chaos | Decay},
        {"--n-list", "chaos.n_list", "particle counts, comma separated", Chaos},
        {"--n-ref", "chaos.n_ref", "reference particle count", Chaos},
        {"--case", "langevin.case", "quadratic | flat | double-well", Langevin},
        {"--burn-in", "langevin.burn_in", "burn-in steps", Langevin},
        {"--samples", "langevin.samples", "post burn-in particle positions to histogram", Langevin},
        {"--zero-noise", "invert.zero_noise", "noise-free observations", Invert, true},
        {"--eps", "run.eps", "success radius", Invert},
        {"--out", "run.out", "output directory", All},
        {"--workers", "run.workers", "replica worker threads", All},
    };
    return table;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool known_key(const std::string& key)
{
    for (const auto& f : flag_table())
        if (key == f.key) return true;
    return false;
}

const std::string* find(const std::map<std::string, std::string>& m, const std::string& key)
{
    auto it = m.find(key);
    return it == m.end() ? nullptr : &it->second;
}

double to_double(const std::string& key, const std::string& v)
{
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos == v.size()) return x;
    } catch (const std::exception&) {
    }
    throw UsageError(key + ": expected a number, got '" + v + "'");
}

long long to_int(const std::string& key, const std::string& v)
{
    const double x = to_double(key, v);
    if (x != std::floor(x) || std::abs(x) > 9e15) throw UsageError(key + ": expected an integer, got '" + v + "'");
    return static_cast<long long>(x);
}

bool to_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw UsageError(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v)
{
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
    if (out.empty()) throw UsageError(key + ": expected a comma separated list");
    return out;
}

// Typed view over resolved settings.
class Settings {
public:
    explicit Settings(const std::map<std::string, std::string>& m) : m_(m) {}

    bool has(const std::string& key) const { return find(m_, key) != nullptr; }
    std::string str(const std::string& key, const std::string& fallback) const
    {
        const auto* v = find(m_, key);
        return v ? *v : fallback;
    }
    std::string required(const std::string& key, const std::string& flag) const
    {
        const auto* v = find(m_, key);
        if (!v) throw MissingRequired("missing required option " + flag + " (or '" + key + "' in the config file)");
        return *v;
    }
    double num(const std::string& key, double fallback) const
    {
        const auto* v = find(m_, key);
        return v ? to_double(key, *v) : fallback;
    }
    long long integer(const std::string& key, long long fallback) const
    {
        const auto* v = find(m_, key);
        return v ? to_int(key, *v) : fallback;
    }
    bool flag(const std::string& key) const
    {
        const auto* v = find(m_, key);
        return v && to_bool(key, *v);
    }
    Schedule<double> schedule(const std::string& key, const Schedule<double>& fallback) const
    {
        const auto* v = find(m_, key);
        return v ? parse_schedule(*v) : fallback;
    }
    VectorXd vector(const std::string& key, Index d) const
    {
        const auto values = to_list(key, *find(m_, key));
        if (values.size() == 1) return VectorXd::Constant(d, values[0]);
        if (Index(values.size()) != d)
            throw UsageError(key + " has " + std::to_string(values.size()) + " entries, problem dimension is " +
                                    std::to_string(d));
        return Eigen::Map<const VectorXd>(values.data(), d);
    }

private:
    const std::map<std::string, std::string>& m_;
};

std::uint64_t resolve_seed(const Settings& s)
{
    if (s.has("run.seed")) return std::uint64_t(s.integer("run.seed", 1));
    if (const char* env = std::getenv("RCBO_SEED"); env && *env) return std::uint64_t(to_int("RCBO_SEED", env));
    return 1;
}

void log_config(std::ostream& log, const std::string& sub, const ConfigSnapshot& snap)
{
    log << "[rcbo] " << sub << " configuration\n";
    for (const auto& [k, v] : snap) log << "[rcbo]   " << k << " = " << v << '\n';
    log.flush();
}

std::string out_path(const RunSpec& spec, const std::string& name)
{
    return (std::filesystem::path(spec.out_dir) / name).string();
}

void write_table(const RunSpec& spec, const std::string& name, const CsvTable& t, std::ostream& log)
{
    const std::string path = out_path(spec, name);
    write_csv_file(path, t);
    if (spec.verbosity > 0) log << "[rcbo] wrote " << path << '\n';
}

struct Problem {
    Objective<double> objective;
    Domain domain;
    ConfigSnapshot description;
};

Problem build_problem(const Settings& s, std::uint64_t seed)
{
    const std::string name = s.required("objective.name", "--objective");
    Objective<double> obj;
    std::string default_domain = "ball";
    double default_radius = 3;
    VectorXd default_lower, default_upper;
    if (name == "ackley") {
        obj = make_ackley();
    } else if (name == "rastrigin") {
        obj = make_rastrigin(Index(s.integer("objective.dim", 2)));
        default_radius = 5;
    } else if (name == "rosenbrock") {
        obj = make_rosenbrock();
        default_radius = std::sqrt(2.0);
    } else if (name == "townsend") {
        obj = make_townsend();
        default_domain = "heart";
    } else if (name == "merton") {
        const auto obs = merton::generate_observations(merton::true_params, stream_key(seed, 0x6f6273ULL));
        obj = merton::make_objective(obs);
        obj.known_minimizer = merton::true_params.as_vector();
        default_domain = "box";
        default_lower = VectorXd(3);
        default_lower << 0, -1, 0;
        default_upper = VectorXd(3);
        default_upper << 1, 1, 1;
    } else {
        throw UsageError("--objective: unknown objective '" + name +
                         "' (expected ackley, rastrigin, rosenbrock, townsend or merton)");
    }
    if (s.has("objective.dim"))
        require_dimension(obj.dimension, Index(s.integer("objective.dim", obj.dimension)));
    const Index d = obj.dimension;

    const std::string kind = s.str("domain.kind", default_domain);
    const bool ball_opts = s.has("domain.radius") || s.has("domain.center");
    const bool box_opts = s.has("domain.lower") || s.has("domain.upper");
    Domain dom = Domain::heart();
    if (kind == "ball") {
        if (box_opts) throw ConflictingOptions("--lower/--upper apply to box domains, not --domain ball");
        const VectorXd c = s.has("domain.center") ? s.vector("domain.center", d) : VectorXd(VectorXd::Zero(d));
        const double r = s.num("domain.radius", default_radius);
        if (!(r > 0)) throw UsageError("--radius must be positive");
        dom = Domain::ball(c, r);
    } else if (kind == "box") {
        if (ball_opts) throw ConflictingOptions("--radius/--center apply to ball domains, not --domain box");
        VectorXd lo = s.has("domain.lower") ? s.vector("domain.lower", d) : default_lower;
        VectorXd hi = s.has("domain.upper") ? s.vector("domain.upper", d) : default_upper;
        if (lo.size() == 0 || hi.size() == 0)
            throw MissingRequired("box domain needs --lower and --upper for objective " + name);
        if (!(hi.array() > lo.array()).all()) throw UsageError("box domain needs upper > lower in every coordinate");
        dom = Domain::box(lo, hi);
    } else if (kind == "heart") {
        if (ball_opts || box_opts)
            throw ConflictingOptions("--domain heart takes no --radius, --center, --lower or --upper");
    } else {
        throw UsageError("--domain: unknown domain '" + kind + "' (expected ball, box or heart)");
    }
    require_dimension(dom.dimension(), d);
    return {std::move(obj), std::move(dom), {{"objective", name}, {"d", std::to_string(d)}, {"domain", dom.kind()}}};
}

int run_optimize(const RunSpec& spec, const Settings& s, std::ostream& out, std::ostream& log)
{
    Config cfg;
    cfg.seed = resolve_seed(s);
    Problem p = build_problem(s, cfg.seed);
    cfg.scheme = parse_scheme(s.str("solver.scheme", to_string(cfg.scheme)));
    cfg.particles = Index(s.integer("solver.N", cfg.particles));
    cfg.alpha = s.num("solver.alpha", cfg.alpha);
    cfg.beta = s.schedule("solver.beta", cfg.beta);
    cfg.sigma = s.schedule("solver.sigma", cfg.sigma);
    if (s.has("solver.repelling")) cfg.repelling = s.schedule("solver.repelling", Schedule<double>::constant(0));
    cfg.h = s.num("solver.h", cfg.h);
    cfg.steps = Index(s.integer("solver.steps", cfg.steps));
    if (s.has("solver.epsilon")) cfg.penalty_epsilon = s.num("solver.epsilon", 0);
    cfg.validate();

    ConfigSnapshot snap = p.description;
    for (auto& kv : cfg.describe()) snap.push_back(kv);
    log_config(log, "optimize", snap);

    const bool trace = s.flag("run.trace");
    const auto result = run_cbo(cfg, p.objective, p.domain, trace);
    const VectorXd& c = result.final_consensus;
    const double fc = p.objective(c);

    out << "consensus =";
    for (Index k = 0; k < c.size(); ++k) out << (k ? ", " : " ") << format_double(c[k]);
    out << "\nobjective = " << format_double(fc) << '\n';

    CsvTable report;
    report.comments = snap;
    for (Index k = 0; k < c.size(); ++k) report.header.push_back("x" + std::to_string(k));
    report.header.push_back("f");
    std::vector<std::string> row;
    for (Index k = 0; k < c.size(); ++k) row.push_back(format_double(c[k]));
    row.push_back(format_double(fc));
    if (p.objective.known_minimizer) {
        const double dist = (c - *p.objective.known_minimizer).norm();
        out << "distance_to_minimizer = " << format_double(dist) << '\n';
        report.header.push_back("distance_to_minimizer");
        row.push_back(format_double(dist));
    }
    report.rows.push_back(std::move(row));
    write_table(spec, "report.csv", report, log);

    if (trace) {
        CsvTable t;
        t.comments = snap;
        t.header = {"step", "t"};
        for (Index k = 0; k < c.size(); ++k) t.header.push_back("c" + std::to_string(k));
        for (std::size_t step = 0; step < result.trace.size(); ++step) {
            std::vector<std::string> r{std::to_string(step), format_double(cfg.h * double(step))};
            for (Index k = 0; k < c.size(); ++k) r.push_back(format_double(result.trace[step][k]));
            t.rows.push_back(std::move(r));
        }
        write_table(spec, "trace.csv", t, log);
    }
    return exit_ok;
}

int run_bench(const RunSpec& spec, const Settings& s, std::ostream& out, std::ostream& log)
{
    const TableId id = parse_table(s.required("bench.table", "--table"));
    TableOptions opt;
    opt.runs = Index(s.integer("run.runs", opt.runs));
    if (opt.runs < 1) throw UsageError("--runs must be >= 1");
    opt.workers = spec.workers;
    opt.master_seed = resolve_seed(s);
    opt.long_run = s.flag("bench.long");
    opt.repelling_lambda0 = s.num("bench.lambda0", opt.repelling_lambda0);
    if (opt.long_run && id != TableId::Rastrigin) log << "[rcbo] --long only affects the rastrigin table\n";

    log_config(log, "bench", {{"table", to_string(id)},
                              {"runs", std::to_string(opt.runs)},
                              {"master_seed", std::to_string(opt.master_seed)},
                              {"long", opt.long_run ? "true" : "false"},
                              {"lambda0", format_double(opt.repelling_lambda0)},
                              {"workers", std::to_string(opt.workers)}});
    const auto cells = reproduce_table(id, opt, [&](const TableCell& c) {
        out << to_string(c.spec.table) << ' ' << c.spec.variant << " d=" << c.spec.dimension
            << " N=" << c.spec.particles << (id == TableId::Ackley ? " 1/h=" : " K=") << c.spec.steps_or_inv_h
            << " rate=" << format_double(c.report.rate) << " ci=[" << format_double(c.report.wilson_ci_95.lo) << ", "
            << format_double(c.report.wilson_ci_95.hi) << "]\n";
        out.flush();
        if (spec.verbosity > 0) log << "[rcbo]   cell time " << c.report.wall_time << " s\n";
    });
    write_table(spec, "report.csv", table_csv(cells, opt), log);
    return exit_ok;
}

int run_chaos(const RunSpec& spec, const Settings& s, std::ostream& out, std::ostream& log)
{
    ChaosSetup setup = default_chaos_setup(resolve_seed(s));
    std::vector<Index> n_list;
    for (double v : to_list("chaos.n_list", s.str("chaos.n_list", "32,64,128,256,512"))) {
        if (v != std::floor(v) || v < 1) throw UsageError("--n-list entries must be positive integers");
        n_list.push_back(Index(v));
    }
    const Index n_ref = Index(s.integer("chaos.n_ref", 4096));
    const Index replicas = Index(s.integer("run.replicas", 100));
    ConfigSnapshot snap = setup.config.describe();
    snap.push_back({"n_list", s.str("chaos.n_list", "32,64,128,256,512")});
    snap.push_back({"n_ref", std::to_string(n_ref)});
    snap.push_back({"replicas", std::to_string(replicas)});
    log_config(log, "chaos", snap);

    const auto rep = chaos_rate_study(setup.config, setup.objective, setup.domain, n_list, n_ref, replicas, spec.workers);
    for (std::size_t k = 0; k < rep.n_values.size(); ++k)
        out << "N=" << rep.n_values[k] << " error=" << format_double(rep.mean_error[k])
            << " se=" << format_double(rep.error_se[k]) << '\n';
    out << "slope = " << format_double(rep.slope) << " +- " << format_double(rep.slope_se) << '\n';
    write_table(spec, "report.csv", rate_study_csv(rep), log);
    return exit_ok;
}

int run_decay(const RunSpec& spec, const Settings& s, std::ostream& out, std::ostream& log)
{
    DecayOptions opt;
    opt.seed = resolve_seed(s);
    opt.workers = spec.workers;
    opt.particles = Index(s.integer("solver.N", opt.particles));
    opt.h = s.num("solver.h", opt.h);
    const double beta = s.num("solver.beta", 2);
    const double sigma = s.num("solver.sigma", 1);
    const double alpha = s.num("solver.alpha", 1);
    const Index replicas = Index(s.integer("run.replicas", 200));
    if (s.has("domain.center")) opt.dimension = Index(to_list("domain.center", s.str("domain.center", "")).size());
    const VectorXd center = s.has("domain.center") ? s.vector("domain.center", opt.dimension)
                                                   : VectorXd(VectorXd::Zero(opt.dimension));
    const double radius = s.num("domain.radius", 1);
    if (!(radius > 0)) throw UsageError("--radius must be positive");
    const Domain ball = Domain::ball(center, radius);

    log_config(log, "decay", {{"beta", format_double(beta)},
                              {"sigma", format_double(sigma)},
                              {"alpha", format_double(alpha)},
                              {"radius", format_double(radius)},
                              {"N", std::to_string(opt.particles)},
                              {"h", format_double(opt.h)},
                              {"replicas", std::to_string(replicas)},
                              {"seed", std::to_string(opt.seed)}});
    const DecayResult res = variance_decay_check(beta, sigma, alpha, ball, replicas, opt);
    write_table(spec, "decay_curve.csv", decay_curve_csv(res), log);
    out << "eta0 = " << format_double(res.eta0) << '\n';
    if (!res.pass) {
        out << "FAIL " << res.failure << '\n';
        return exit_numerical;
    }
    out << "PASS variance within bound at all check times\n";
    return exit_ok;
}

int run_langevin(const RunSpec& spec, const Settings& s, std::ostream& out, std::ostream& log)
{
    LangevinCase c = langevin_case(s.str("langevin.case", "quadratic"), resolve_seed(s));
    c.burn_in = Index(s.integer("langevin.burn_in", c.burn_in));
    c.samples = Index(s.integer("langevin.samples", c.samples));
    log_config(log, "langevin", {{"case", c.name},
                                 {"sigma_noise", format_double(c.config.sigma_noise)},
                                 {"h", format_double(c.config.h)},
                                 {"N", std::to_string(c.config.particles)},
                                 {"burn_in", std::to_string(c.burn_in)},
                                 {"samples", std::to_string(c.samples)},
                                 {"seed", std::to_string(c.config.seed)}});
    const auto res = langevin_invariant_check(c.config, c.domain, c.burn_in, c.samples);
    write_table(spec, "langevin_histogram.csv", langevin_histogram_csv(res), log);
    write_table(spec, "langevin_w1.csv", langevin_w1_csv(res), log);
    out << "l1 = " << format_double(res.l1) << " (tolerance " << format_double(langevin_l1_tolerance) << ")\n";
    out << (res.pass ? "PASS" : "FAIL") << '\n';
    return res.pass ? exit_ok : exit_numerical;
}

int run_invert(const RunSpec& spec, const Settings& s, std::ostream& out, std::ostream& log)
{
    InvertOptions opt;
    opt.runs = Index(s.integer("run.runs", opt.runs));
    opt.alpha = s.num("solver.alpha", opt.alpha);
    opt.particles = Index(s.integer("solver.N", opt.particles));
    opt.steps = Index(s.integer("solver.steps", opt.steps));
    opt.h = s.num("solver.h", opt.h);
    opt.eps = s.num("run.eps", opt.eps);
    if (s.flag("invert.zero_noise")) opt.noise_scale = 0;
    opt.seed = resolve_seed(s);
    opt.workers = spec.workers;
    if (opt.runs < 1) throw UsageError("--runs must be >= 1");

    const InvertResult res = invert_merton(opt);
    log_config(log, "invert", res.report.config);
    out << "rate = " << format_double(res.report.rate) << " ci=[" << format_double(res.report.wilson_ci_95.lo) << ", "
        << format_double(res.report.wilson_ci_95.hi) << "] runs=" << res.report.runs << '\n';
    write_table(spec, "report.csv", success_report_table(res.report), log);
    write_table(spec, "histogram_sigma.csv", parameter_histogram_csv(res.estimates, 0, 0, 1, 100, res.report.config), log);
    write_table(spec, "histogram_m.csv", parameter_histogram_csv(res.estimates, 1, -1, 1, 100, res.report.config), log);
    write_table(spec, "histogram_gamma.csv", parameter_histogram_csv(res.estimates, 2, 0, 1, 100, res.report.config), log);
    return exit_ok;
}

} // namespace

std::map<std::string, std::string> parse_config(std::istream& is, const std::string& origin)
{
    std::map<std::string, std::string> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line.resize(i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = origin + ":" + std::to_string(lineno);
        if (eq == std::string::npos) throw UsageError(where + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        if (!known_key(key)) throw UnknownFlag(where + ": unknown key '" + key + "'");
        out[key] = value;
    }
    return out;
}

RunSpec parse_args(const std::vector<std::string>& argv, std::ostream* help_out)
{
    CLI::App app{"Constrained consensus-based optimization experiments", "rcbo"};
    app.set_help_flag("--help", "print help and exit");
    app.require_subcommand(1, 1);
    app.fallthrough(false);

    struct Sub {
        const char* name;
        unsigned bit;
        const char* help;
    };
    const Sub subs[] = {
        {"optimize", Optimize, "run one CBO solve and print the final consensus"},
        {"bench", Bench, "reproduce a success-rate table"},
        {"chaos", Chaos, "propagation-of-chaos rate study"},
        {"decay", Decay, "variance-decay check on a ball"},
        {"langevin", Langevin, "Langevin invariant-measure check"},
        {"invert", Invert, "Merton parameter recovery study"},
    };

    std::map<std::string, std::string> values;
    std::map<std::string, bool> switches;
    std::string config_path;
    int verbosity = 0;
    std::vector<std::pair<CLI::App*, std::vector<std::pair<CLI::Option*, const FlagDef*>>>> registered;
    for (const auto& sub : subs) {
        CLI::App* sc = app.add_subcommand(sub.name, sub.help);
        sc->set_help_flag("--help", "print help and exit");
        std::vector<std::pair<CLI::Option*, const FlagDef*>> opts;
        for (const auto& f : flag_table()) {
            if (!(f.subs & sub.bit)) continue;
            CLI::Option* o = f.is_switch ? sc->add_flag(f.names, switches[f.key], f.help)
                                         : sc->add_option(f.names, values[f.key], f.help);
            opts.emplace_back(o, &f);
        }
        sc->add_option("--config", config_path, "flat key = value config file");
        sc->add_flag("-v,--verbose", verbosity, "more log output");
        registered.emplace_back(sc, std::move(opts));
    }

    std::vector<std::string> args(argv.size() > 1 ? argv.begin() + 1 : argv.end(), argv.end());
    std::reverse(args.begin(), args.end()); // CLI11 consumes a reversed vector
    RunSpec spec;
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        const auto parsed = app.get_subcommands();
        if (help_out) *help_out << (parsed.empty() ? app.help() : parsed.front()->help());
        spec.help = true;
        return spec;
    } catch (const CLI::ExtrasError& e) {
        throw UnknownFlag(std::string(e.what()) + "; see rcbo <subcommand> --help");
    } catch (const CLI::RequiredError& e) {
        if (app.get_subcommands().empty())
            throw MissingRequired("a subcommand is required: optimize, bench, chaos, decay, langevin or invert");
        throw MissingRequired(e.what());
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    for (auto& [sc, opts] : registered) {
        if (!sc->parsed()) continue;
        spec.subcommand = sc->get_name();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw UsageError("--config: cannot read '" + config_path + "'");
            spec.config_path = config_path;
            spec.settings = parse_config(in, config_path);
            for (const auto& [k, v] : spec.settings) {
                bool allowed = false;
                for (const auto& [o, f] : opts) allowed = allowed || k == f->key;
                if (!allowed) throw UnknownFlag(config_path + ": key '" + k + "' does not apply to " + spec.subcommand);
            }
        }
        for (const auto& [o, f] : opts) {
            if (o->count() == 0) continue;
            spec.settings[f->key] = f->is_switch ? "true" : values[f->key];
        }
    }
    spec.verbosity = verbosity;

    const Settings s(spec.settings);
    spec.out_dir = s.str("run.out", ".");
    const long long workers = s.integer("run.workers", default_workers());
    if (workers < 1) throw UsageError("--workers must be >= 1");
    spec.workers = unsigned(workers);
    if (spec.subcommand == "optimize") s.required("objective.name", "--objective");
    if (spec.subcommand == "bench") s.required("bench.table", "--table");
    return spec;
}

int execute(const RunSpec& spec, std::ostream& out, std::ostream& log)
{
    if (spec.help) return exit_ok;
    std::error_code ec;
    std::filesystem::create_directories(spec.out_dir, ec);
    if (ec || !std::filesystem::is_directory(spec.out_dir))
        throw UsageError("--out: cannot create directory '" + spec.out_dir + "'");
    {
        const auto probe = std::filesystem::path(spec.out_dir) / ".rcbo_write_probe";
        std::ofstream f(probe);
        if (!f) throw UsageError("--out: directory '" + spec.out_dir + "' is not writable");
        f.close();
        std::filesystem::remove(probe, ec);
    }
    const Settings s(spec.settings);
    if (spec.subcommand == "optimize") return run_optimize(spec, s, out, log);
    if (spec.subcommand == "bench") return run_bench(spec, s, out, log);
    if (spec.subcommand == "chaos") return run_chaos(spec, s, out, log);
    if (spec.subcommand == "decay") return run_decay(spec, s, out, log);
    if (spec.subcommand == "langevin") return run_langevin(spec, s, out, log);
    if (spec.subcommand == "invert") return run_invert(spec, s, out, log);
    throw UsageError("unknown subcommand '" + spec.subcommand + "'");
}

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv, argv + argc);
    try {
        const RunSpec spec = parse_args(args, &std::cout);
        return execute(spec, std::cout, std::cerr);
    } catch (const ConfigError& e) {
        std::cerr << "rcbo: error: " << e.what() << '\n';
        return exit_config;
    } catch (const NumericalError& e) {
        std::cerr << "rcbo: numerical failure: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "rcbo: error: " << e.what() << '\n';
        return exit_config;
    }
}

} // namespace rcbo::cli
