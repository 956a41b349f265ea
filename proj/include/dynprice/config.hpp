#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "dynprice/detail/format.hpp"
#include "dynprice/joining_models.hpp"
#include "dynprice/service_dist.hpp"
#include "dynprice/sgd_controller.hpp"

namespace dynprice {

inline constexpr const char* kVersion = "0.1.0";

/// Invalid or unreadable experiment configuration. `field` names the offending
/// key as section.key when there is one.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

enum class ExperimentKind { PsiGrid, Sgd, Coupling, GradCheck, BiasVar, Regret, ServiceStudy };

inline const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::PsiGrid: return "psi-grid";
        case ExperimentKind::Sgd: return "sgd";
        case ExperimentKind::Coupling: return "coupling";
        case ExperimentKind::GradCheck: return "grad-check";
        case ExperimentKind::BiasVar: return "bias-var";
        case ExperimentKind::Regret: return "regret";
        case ExperimentKind::ServiceStudy: return "service-study";
    }
    return "?";
}

inline ExperimentKind parse_experiment_kind(const std::string& s) {
    for (auto k : {ExperimentKind::PsiGrid, ExperimentKind::Sgd, ExperimentKind::Coupling, ExperimentKind::GradCheck,
                   ExperimentKind::BiasVar, ExperimentKind::Regret, ExperimentKind::ServiceStudy})
        if (s == to_string(k)) return k;
    throw ConfigError("experiment.kind", "unknown experiment '" + s + "'");
}

struct ModelSpec {
    JoiningFamily family = JoiningFamily::Exponential;
    bool generic = false;  // evaluate the same H through the numeric path
    double theta1 = 0.1;
    double theta2 = 0.2;
    double lambda = 20.0;

    JoiningModel build() const {
        JoiningModel m = family == JoiningFamily::Polynomial ? JoiningModel::polynomial(theta1, theta2, lambda)
                                                             : JoiningModel::exponential(theta1, theta2, lambda);
        return generic ? m.as_generic() : m;
    }
};

struct GridSpec {
    double start = 0.0;
    double stop = 50.0;
    double step = 0.25;
    std::uint64_t n_eff = 100000;
};

struct CouplingSpec {
    double price = 20.0;
    double w1 = 0.0;
    double w2 = 30.0;
    std::uint64_t steps = 200;
    std::uint64_t replications = 500;
};

struct GradCheckSpec {
    std::uint64_t points = 200;
    double p_max = 50.0;
    double w_max = 30.0;
};

struct BiasVarSpec {
    double price = 5.0;
    std::vector<double> windows{100.0, 1000.0, 10000.0};
    std::uint64_t replications = 400;
    double burn_in = 1e4;
    double oracle_step = 0.2;
    std::uint64_t oracle_n_eff = 1000000;
    std::uint64_t oracle_pairs = 8;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::PsiGrid;
    std::string name = "experiment";
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string output = "out";

    ModelSpec model;
    ServiceDistribution service = ServiceDistribution::exponential(2.0);
    SgdConfig sgd;
    std::uint64_t replications = 10;  // independent SGD runs
    std::vector<std::uint64_t> checkpoints{25, 50, 100, 150};
    GridSpec grid;
    CouplingSpec coupling;
    GradCheckSpec grad_check;
    BiasVarSpec bias_var;
    std::vector<ServiceDistribution> study_services;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

inline double parse_plain_real(const std::string& s, const std::string& field) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || s.empty()) throw ConfigError(field, "'" + s + "' is not a number");
    return v;
}

/// Accepts a decimal number or a fraction such as 1/3.
inline double parse_real(const std::string& raw, const std::string& field) {
    const std::string s = trim(raw);
    const auto slash = s.find('/');
    if (slash == std::string::npos) return parse_plain_real(s, field);
    const double num = parse_plain_real(trim(s.substr(0, slash)), field);
    const double den = parse_plain_real(trim(s.substr(slash + 1)), field);
    if (den == 0.0) throw ConfigError(field, "division by zero in '" + s + "'");
    return num / den;
}

inline std::uint64_t parse_count(const std::string& raw, const std::string& field) {
    const std::string s = trim(raw);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size() && !s.empty()) return v;
    // Allow 1e5 style counts when the value is integral.
    const double d = parse_plain_real(s, field);
    if (!(d >= 0.0) || d != std::floor(d) || d > 1.8e19)
        throw ConfigError(field, "'" + s + "' is not a nonnegative integer");
    return static_cast<std::uint64_t>(d);
}

inline bool parse_bool(const std::string& raw, const std::string& field) {
    const std::string s = trim(raw);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError(field, "'" + s + "' is not a boolean");
}

}  // namespace detail

/// Parses exponential(rate), gamma(shape, rate) or deterministic(value).
inline ServiceDistribution parse_service(const std::string& raw, const std::string& field = "service.distribution") {
    const std::string s = detail::trim(raw);
    const auto open = s.find('(');
    if (open == std::string::npos || s.back() != ')')
        throw ConfigError(field, "expected name(args), got '" + s + "'");
    const std::string name = detail::trim(s.substr(0, open));
    std::vector<double> args;
    for (const auto& a : detail::split(s.substr(open + 1, s.size() - open - 2), ','))
        args.push_back(detail::parse_real(a, field));
    try {
        if (name == "exponential" && args.size() == 1) return ServiceDistribution::exponential(args[0]);
        if (name == "gamma" && args.size() == 2) return ServiceDistribution::gamma(args[0], args[1]);
        if (name == "deterministic" && args.size() == 1) return ServiceDistribution::deterministic(args[0]);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(field, e.what());
    }
    throw ConfigError(field, "unknown service law '" + s + "'");
}

inline void validate(const ExperimentConfig& c) {
    auto require = [](bool ok, const char* field, const char* msg) {
        if (!ok) throw ConfigError(field, msg);
    };
    require(c.threads >= 1, "run.threads", "must be at least 1");
    require(!c.output.empty(), "run.output", "must not be empty");
    require(c.model.theta1 > 0.0 && std::isfinite(c.model.theta1), "model.theta1", "must be positive");
    require(c.model.theta2 > 0.0 && std::isfinite(c.model.theta2), "model.theta2", "must be positive");
    require(c.model.lambda > 0.0 && std::isfinite(c.model.lambda), "model.lambda", "must be positive");

    const SgdConfig& s = c.sgd;
    require(s.p_lo >= 0.0, "price.p_lo", "must be >= 0");
    require(s.p_lo <= s.p_hi, "price.p_hi", "must be >= price.p_lo");
    require(s.p0 >= s.p_lo && s.p0 <= s.p_hi, "price.p0", "must lie in [p_lo, p_hi]");
    require(s.eta0 >= 0.0 && std::isfinite(s.eta0), "schedule.eta", "must be >= 0");
    require(s.alpha > 0.5 && s.alpha <= 1.0, "schedule.alpha", "must lie in (1/2, 1]");
    require(s.window.constant > 0.0, "schedule.window_constant", "must be positive");
    require(s.window.growth != WindowGrowth::Power || s.window.exponent > 0.0, "schedule.window_exponent",
            "must be positive so that the windows grow");
    require(s.max_iterations >= 1, "schedule.iterations", "must be at least 1");
    require(c.replications >= 1, "schedule.replications", "must be at least 1");
    if (c.kind == ExperimentKind::Regret) {
        require(!c.checkpoints.empty(), "regret.checkpoints", "must list at least one iteration count");
        for (auto k : c.checkpoints)
            require(k >= 1 && k <= s.max_iterations, "regret.checkpoints", "each checkpoint must lie in [1, iterations]");
    }

    require(c.grid.step > 0.0, "grid.step", "must be positive");
    require(c.grid.start >= 0.0, "grid.start", "must be >= 0");
    require(c.grid.stop >= c.grid.start, "grid.stop", "must be >= grid.start");
    require(c.grid.n_eff >= 1, "grid.n_eff", "must be at least 1");

    require(c.coupling.price >= 0.0, "coupling.price", "must be >= 0");
    require(c.coupling.w1 >= 0.0, "coupling.w1", "must be >= 0");
    require(c.coupling.w2 >= 0.0, "coupling.w2", "must be >= 0");
    require(c.coupling.steps >= 1, "coupling.steps", "must be at least 1");
    require(c.coupling.replications >= 1, "coupling.replications", "must be at least 1");

    require(c.grad_check.points >= 1, "grad_check.points", "must be at least 1");
    require(c.grad_check.p_max > 0.0, "grad_check.p_max", "must be positive");
    require(c.grad_check.w_max > 0.0, "grad_check.w_max", "must be positive");

    const BiasVarSpec& b = c.bias_var;
    require(!b.windows.empty(), "bias_var.windows", "must list at least one window");
    for (std::size_t i = 0; i < b.windows.size(); ++i) {
        require(b.windows[i] > 0.0, "bias_var.windows", "must be positive");
        if (i > 0) require(b.windows[i] > b.windows[i - 1], "bias_var.windows", "must be increasing");
    }
    require(b.replications >= 2, "bias_var.replications", "must be at least 2");
    require(b.burn_in > 0.0, "bias_var.burn_in", "must be positive");
    require(b.oracle_step > 0.0 && b.price - b.oracle_step >= 0.0, "bias_var.oracle_step",
            "must be positive and not exceed bias_var.price");
    require(b.oracle_n_eff >= 1, "bias_var.oracle_n_eff", "must be at least 1");
    require(b.oracle_pairs >= 1, "bias_var.oracle_pairs", "must be at least 1");

    if (c.kind == ExperimentKind::ServiceStudy)
        require(!c.study_services.empty(), "study.services", "must list at least one service law");
}

namespace detail {

inline const char* growth_name(WindowGrowth g) { return to_string(g); }

inline WindowGrowth parse_growth(const std::string& s) {
    if (s == "log") return WindowGrowth::Log;
    if (s == "sqrt") return WindowGrowth::Sqrt;
    if (s == "power") return WindowGrowth::Power;
    throw ConfigError("schedule.window", "expected log, sqrt or power, got '" + s + "'");
}

template <class T, class F>
std::string join(const std::vector<T>& v, F f) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += f(v[i]);
    }
    return out;
}

using Fields = std::map<std::string, std::string>;

inline Fields fields_of(const ExperimentConfig& c) {
    const auto r = [](double x) { return format_real(x); };
    const auto u = [](std::uint64_t x) { return std::to_string(x); };
    Fields f;
    f["experiment.kind"] = to_string(c.kind);
    f["experiment.name"] = c.name;
    f["run.seed"] = u(c.seed);
    f["run.threads"] = u(c.threads);
    f["run.output"] = c.output;
    f["model.family"] = to_string(c.model.family);
    f["model.evaluation"] = c.model.generic ? "generic" : "closed";
    f["model.theta1"] = r(c.model.theta1);
    f["model.theta2"] = r(c.model.theta2);
    f["model.lambda"] = r(c.model.lambda);
    f["service.distribution"] = c.service.describe();
    f["price.p_lo"] = r(c.sgd.p_lo);
    f["price.p_hi"] = r(c.sgd.p_hi);
    f["price.p0"] = r(c.sgd.p0);
    f["schedule.eta"] = r(c.sgd.eta0);
    f["schedule.alpha"] = r(c.sgd.alpha);
    f["schedule.window"] = growth_name(c.sgd.window.growth);
    f["schedule.window_constant"] = r(c.sgd.window.constant);
    f["schedule.window_exponent"] = r(c.sgd.window.exponent);
    f["schedule.iterations"] = u(c.sgd.max_iterations);
    f["schedule.replications"] = u(c.replications);
    f["regret.checkpoints"] = join(c.checkpoints, u);
    f["grid.start"] = r(c.grid.start);
    f["grid.stop"] = r(c.grid.stop);
    f["grid.step"] = r(c.grid.step);
    f["grid.n_eff"] = u(c.grid.n_eff);
    f["coupling.price"] = r(c.coupling.price);
    f["coupling.w1"] = r(c.coupling.w1);
    f["coupling.w2"] = r(c.coupling.w2);
    f["coupling.steps"] = u(c.coupling.steps);
    f["coupling.replications"] = u(c.coupling.replications);
    f["grad_check.points"] = u(c.grad_check.points);
    f["grad_check.p_max"] = r(c.grad_check.p_max);
    f["grad_check.w_max"] = r(c.grad_check.w_max);
    f["bias_var.price"] = r(c.bias_var.price);
    f["bias_var.windows"] = join(c.bias_var.windows, r);
    f["bias_var.replications"] = u(c.bias_var.replications);
    f["bias_var.burn_in"] = r(c.bias_var.burn_in);
    f["bias_var.oracle_step"] = r(c.bias_var.oracle_step);
    f["bias_var.oracle_n_eff"] = u(c.bias_var.oracle_n_eff);
    f["bias_var.oracle_pairs"] = u(c.bias_var.oracle_pairs);
    f["study.services"] = join(c.study_services, [](const ServiceDistribution& s) { return s.describe(); });
    return f;
}

inline void apply_field(ExperimentConfig& c, const std::string& key, const std::string& value) {
    const auto real = [&] { return parse_real(value, key); };
    const auto count = [&] { return parse_count(value, key); };
    const auto reals = [&] {
        std::vector<double> v;
        if (trim(value).empty()) return v;
        for (const auto& x : split(value, ',')) v.push_back(parse_real(x, key));
        return v;
    };

    if (key == "experiment.kind") c.kind = parse_experiment_kind(trim(value));
    else if (key == "experiment.name") c.name = trim(value);
    else if (key == "run.seed") c.seed = count();
    else if (key == "run.threads") {
        const auto t = count();
        if (t > 4096) throw ConfigError(key, "unreasonably many threads");
        c.threads = static_cast<unsigned>(t);
    } else if (key == "run.output") c.output = trim(value);
    else if (key == "model.family") {
        const std::string v = trim(value);
        if (v == "exponential") c.model.family = JoiningFamily::Exponential;
        else if (v == "polynomial") c.model.family = JoiningFamily::Polynomial;
        else throw ConfigError(key, "expected exponential or polynomial, got '" + v + "'");
    } else if (key == "model.evaluation") {
        const std::string v = trim(value);
        if (v == "closed") c.model.generic = false;
        else if (v == "generic") c.model.generic = true;
        else throw ConfigError(key, "expected closed or generic, got '" + v + "'");
    } else if (key == "model.theta1") c.model.theta1 = real();
    else if (key == "model.theta2") c.model.theta2 = real();
    else if (key == "model.lambda") c.model.lambda = real();
    else if (key == "service.distribution") c.service = parse_service(value, key);
    else if (key == "price.p_lo") c.sgd.p_lo = real();
    else if (key == "price.p_hi") c.sgd.p_hi = real();
    else if (key == "price.p0") c.sgd.p0 = real();
    else if (key == "schedule.eta") c.sgd.eta0 = real();
    else if (key == "schedule.alpha") c.sgd.alpha = real();
    else if (key == "schedule.window") c.sgd.window.growth = parse_growth(trim(value));
    else if (key == "schedule.window_constant") c.sgd.window.constant = real();
    else if (key == "schedule.window_exponent") c.sgd.window.exponent = real();
    else if (key == "schedule.iterations") c.sgd.max_iterations = count();
    else if (key == "schedule.replications") c.replications = count();
    else if (key == "regret.checkpoints") {
        c.checkpoints.clear();
        if (!trim(value).empty())
            for (const auto& x : split(value, ',')) c.checkpoints.push_back(parse_count(x, key));
    } else if (key == "grid.start") c.grid.start = real();
    else if (key == "grid.stop") c.grid.stop = real();
    else if (key == "grid.step") c.grid.step = real();
    else if (key == "grid.n_eff") c.grid.n_eff = count();
    else if (key == "coupling.price") c.coupling.price = real();
    else if (key == "coupling.w1") c.coupling.w1 = real();
    else if (key == "coupling.w2") c.coupling.w2 = real();
    else if (key == "coupling.steps") c.coupling.steps = count();
    else if (key == "coupling.replications") c.coupling.replications = count();
    else if (key == "grad_check.points") c.grad_check.points = count();
    else if (key == "grad_check.p_max") c.grad_check.p_max = real();
    else if (key == "grad_check.w_max") c.grad_check.w_max = real();
    else if (key == "bias_var.price") c.bias_var.price = real();
    else if (key == "bias_var.windows") c.bias_var.windows = reals();
    else if (key == "bias_var.replications") c.bias_var.replications = count();
    else if (key == "bias_var.burn_in") c.bias_var.burn_in = real();
    else if (key == "bias_var.oracle_step") c.bias_var.oracle_step = real();
    else if (key == "bias_var.oracle_n_eff") c.bias_var.oracle_n_eff = count();
    else if (key == "bias_var.oracle_pairs") c.bias_var.oracle_pairs = count();
    else if (key == "study.services") {
        c.study_services.clear();
        // Service laws contain commas, so split on the closing parenthesis.
        std::string rest = trim(value);
        while (!rest.empty()) {
            const auto close = rest.find(')');
            if (close == std::string::npos) throw ConfigError(key, "unterminated service law in '" + rest + "'");
            c.study_services.push_back(parse_service(rest.substr(0, close + 1), key));
            rest = trim(rest.substr(close + 1));
            if (!rest.empty() && rest.front() == ',') rest = trim(rest.substr(1));
        }
    } else {
        throw ConfigError(key, "unknown key");
    }
}

}  // namespace detail

/// Canonical text form: every key, fixed order, reals at 17 significant digits.
inline std::string dump(const ExperimentConfig& c) {
    std::ostringstream out;
    std::string section;
    for (const auto& [key, value] : detail::fields_of(c)) {
        const auto dot = key.find('.');
        const std::string sec = key.substr(0, dot);
        if (sec != section) {
            if (!section.empty()) out << '\n';
            out << '[' << sec << "]\n";
            section = sec;
        }
        out << key.substr(dot + 1) << " = " << value << '\n';
    }
    return out.str();
}

/// Applies `section.key=value` overrides, given in order.
inline void apply_overrides(ExperimentConfig& c, const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ConfigError("", "override '" + o + "' is not of the form section.key=value");
        detail::apply_field(c, detail::trim(o.substr(0, eq)), o.substr(eq + 1));
    }
}

inline ExperimentConfig parse_config(std::istream& in, const std::vector<std::string>& overrides = {}) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("", std::string("malformed config: ") + e.what());
    }
    ExperimentConfig c;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError(section, "keys must live inside a [section]");
        for (const auto& [key, value] : body) detail::apply_field(c, section + "." + key, value.data());
    }
    apply_overrides(c, overrides);
    validate(c);
    return c;
}

inline ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {}) {
    std::istringstream in(text);
    return parse_config(in, overrides);
}

inline ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot read config file '" + path + "'");
    return parse_config(in, overrides);
}

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) { return dump(a) == dump(b); }

}  // namespace dynprice
