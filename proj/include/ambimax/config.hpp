#ifndef AMBIMAX_CONFIG_HPP
#define AMBIMAX_CONFIG_HPP

// JSON run configuration. Needs nlohmann/json on the include path; the rest of
// the library does not.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ambimax/equilibrium.hpp"
#include "ambimax/error.hpp"
#include "ambimax/scenario.hpp"
#include "ambimax/utility.hpp"

namespace ambimax::config {

using json = nlohmann::json;

struct GridSpec {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t n = 0;

    std::vector<double> points() const {
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        }
        if (n > 1) out.back() = hi;
        return out;
    }
};

/// "lo:hi:n" with n >= 1 and lo <= hi.
inline GridSpec parse_grid(const std::string& text) {
    GridSpec g;
    const auto a = text.find(':');
    const auto b = a == std::string::npos ? a : text.find(':', a + 1);
    if (b == std::string::npos || text.find(':', b + 1) != std::string::npos) {
        throw SchemaError("grid '" + text + "' must look like lo:hi:n");
    }
    try {
        std::size_t used = 0;
        const std::string lo = text.substr(0, a), hi = text.substr(a + 1, b - a - 1), n = text.substr(b + 1);
        g.lo = std::stod(lo, &used);
        if (used != lo.size()) throw std::invalid_argument(lo);
        g.hi = std::stod(hi, &used);
        if (used != hi.size()) throw std::invalid_argument(hi);
        const long long count = std::stoll(n, &used);
        if (used != n.size() || count < 1) throw std::invalid_argument(n);
        g.n = static_cast<std::size_t>(count);
    } catch (const std::logic_error&) {
        throw SchemaError("grid '" + text + "' must look like lo:hi:n with numeric bounds and a positive count");
    }
    if (!(g.lo <= g.hi)) throw SchemaError("grid '" + text + "' has lo > hi");
    return g;
}

enum class SweepParam { p0, alpha, c, gamma, w0, delta, supply };

struct SweepSpec {
    SweepParam param = SweepParam::p0;
    std::string label;      ///< as written, e.g. "p0:2"
    std::size_t agent = 0;  ///< 0-based; unused for supply
    GridSpec grid;
};

/// "name" or "name:k" with k a 1-based agent number (default 1).
inline SweepSpec parse_sweep(const std::string& param, const GridSpec& grid) {
    SweepSpec s;
    s.label = param;
    s.grid = grid;
    std::string name = param;
    const auto colon = param.find(':');
    if (colon != std::string::npos) {
        name = param.substr(0, colon);
        const std::string k = param.substr(colon + 1);
        std::size_t used = 0;
        long long idx = 0;
        try {
            idx = std::stoll(k, &used);
        } catch (const std::logic_error&) {
            used = 0;
        }
        if (used != k.size() || idx < 1) throw SchemaError("sweep agent number in '" + param + "' must be a positive integer");
        s.agent = static_cast<std::size_t>(idx - 1);
    }
    if (name == "p0") s.param = SweepParam::p0;
    else if (name == "alpha") s.param = SweepParam::alpha;
    else if (name == "c") s.param = SweepParam::c;
    else if (name == "gamma") s.param = SweepParam::gamma;
    else if (name == "w0") s.param = SweepParam::w0;
    else if (name == "delta") s.param = SweepParam::delta;
    else if (name == "supply") s.param = SweepParam::supply;
    else throw SchemaError("unknown sweep parameter '" + name + "' (expected p0, alpha, c, gamma, w0, delta or supply)");
    return s;
}

struct EquilibriumBlock {
    std::string mode = "first";
    bool allow_seekers = false;
    std::optional<double> restriction;  ///< local mode: half-width r of [-r, r]
    std::optional<double> price;        ///< local mode: build the restriction at this price
};

struct RiskShareBlock {
    double theta1 = 1.0;
    double theta2 = 0.0;
    std::vector<double> delta_sweep;
};

struct Config {
    std::string source;
    Scenario scenario;
    std::vector<Agent> agents;
    std::vector<std::string> names;
    double supply = 0.0;
    std::optional<GridSpec> price_grid;
    std::optional<GridSpec> theta_grid;
    std::optional<SweepSpec> sweep;
    EquilibriumBlock equilibrium;
    std::optional<RiskShareBlock> riskshare;

    Market market() const {
        Market m;
        m.scenario = scenario;
        m.agents = agents;
        m.supply = supply;
        return m;
    }
};

namespace detail {

struct Position {
    int line = 1;
    int column = 1;
};

inline Position position_at(const std::string& text, std::size_t offset) {
    Position p;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++p.line;
            p.column = 1;
        } else {
            ++p.column;
        }
    }
    return p;
}

// Minimal scanner that walks the raw text along a JSON pointer, so validation
// errors can name a line and column. The text is already known to parse.
class Locator {
public:
    explicit Locator(const std::string& text) : t_(text) {}

    std::size_t find(const json::json_pointer& ptr) {
        i_ = 0;
        ws();
        std::vector<std::string> tokens;
        for (json::json_pointer p = ptr; !p.empty(); p = p.parent_pointer()) tokens.insert(tokens.begin(), p.back());
        for (const auto& tok : tokens) {
            if (!step(tok)) break;
        }
        return i_;
    }

private:
    void ws() {
        while (i_ < t_.size() && (t_[i_] == ' ' || t_[i_] == '\t' || t_[i_] == '\n' || t_[i_] == '\r')) ++i_;
    }
    std::string string_token() {
        std::string out;
        ++i_;  // opening quote
        while (i_ < t_.size() && t_[i_] != '"') {
            if (t_[i_] == '\\' && i_ + 1 < t_.size()) ++i_;
            out += t_[i_++];
        }
        ++i_;
        return out;
    }
    void skip_value() {
        ws();
        if (i_ >= t_.size()) return;
        if (t_[i_] == '"') {
            string_token();
            return;
        }
        if (t_[i_] == '{' || t_[i_] == '[') {
            int depth = 0;
            while (i_ < t_.size()) {
                const char ch = t_[i_];
                if (ch == '"') {
                    string_token();
                    continue;
                }
                if (ch == '{' || ch == '[') ++depth;
                if (ch == '}' || ch == ']') --depth;
                ++i_;
                if (depth == 0) return;
            }
            return;
        }
        while (i_ < t_.size() && t_[i_] != ',' && t_[i_] != '}' && t_[i_] != ']' && t_[i_] != ' ' && t_[i_] != '\n') ++i_;
    }
    bool step(const std::string& tok) {
        ws();
        if (i_ >= t_.size()) return false;
        if (t_[i_] == '{') {
            ++i_;
            while (true) {
                ws();
                if (i_ >= t_.size() || t_[i_] != '"') return false;
                const std::size_t key_at = i_;
                const std::string key = string_token();
                ws();
                ++i_;  // colon
                ws();
                if (key == tok) {
                    (void)key_at;
                    return true;
                }
                skip_value();
                ws();
                if (i_ < t_.size() && t_[i_] == ',') ++i_;
                else return false;
            }
        }
        if (t_[i_] == '[') {
            ++i_;
            std::size_t want = 0;
            try {
                want = std::stoul(tok);
            } catch (const std::logic_error&) {
                return false;
            }
            for (std::size_t k = 0; k < want; ++k) {
                skip_value();
                ws();
                if (i_ < t_.size() && t_[i_] == ',') ++i_;
                else return false;
            }
            ws();
            return true;
        }
        return false;
    }

    const std::string& t_;
    std::size_t i_ = 0;
};

class Reader {
public:
    Reader(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

    [[noreturn]] void fail(const json::json_pointer& at, const std::string& msg, bool domain = false) const {
        Locator loc(text_);
        const Position p = position_at(text_, loc.find(at));
        const std::string where = source_ + ":" + std::to_string(p.line) + ":" + std::to_string(p.column) + ": " +
                                  (at.empty() ? std::string("/") : at.to_string()) + ": ";
        if (domain) throw DomainError(where + msg);
        throw SchemaError(where + msg);
    }

    void only_keys(const json& obj, const json::json_pointer& at, std::initializer_list<const char*> keys) const {
        if (!obj.is_object()) fail(at, "expected an object");
        std::set<std::string> allowed;
        for (const char* k : keys) allowed.insert(k);
        for (const auto& [k, v] : obj.items()) {
            if (!allowed.count(k)) {
                std::string list;
                for (const char* a : keys) list += (list.empty() ? "" : ", ") + std::string(a);
                fail(at / k, "unknown key '" + k + "' (allowed: " + list + ")");
            }
        }
    }
    const json& need(const json& obj, const json::json_pointer& at, const char* key) const {
        if (!obj.contains(key)) fail(at, std::string("missing required key '") + key + "'");
        return obj.at(key);
    }
    double number(const json& v, const json::json_pointer& at) const {
        if (!v.is_number()) fail(at, "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) fail(at, "expected a finite number");
        return x;
    }
    std::vector<double> numbers(const json& v, const json::json_pointer& at) const {
        if (!v.is_array() || v.empty()) fail(at, "expected a nonempty array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], at / i));
        return out;
    }
    std::size_t count(const json& v, const json::json_pointer& at) const {
        if (!v.is_number_integer() || v.get<long long>() < 1) fail(at, "expected a positive integer");
        return static_cast<std::size_t>(v.get<long long>());
    }
    GridSpec grid(const json& v, const json::json_pointer& at) const {
        if (v.is_string()) {
            try {
                return parse_grid(v.get<std::string>());
            } catch (const SchemaError& e) {
                fail(at, e.what());
            }
        }
        only_keys(v, at, {"lo", "hi", "n"});
        GridSpec g{number(need(v, at, "lo"), at / "lo"), number(need(v, at, "hi"), at / "hi"), count(need(v, at, "n"), at / "n")};
        if (!(g.lo <= g.hi)) fail(at, "lo must not exceed hi");
        return g;
    }

    // Runs a library constructor and re-reports its DomainError at `at`.
    template <class F>
    auto guarded(const json::json_pointer& at, F&& f) const {
        try {
            return f();
        } catch (const DomainError& e) {
            fail(at, e.what(), true);
        }
    }

private:
    const std::string& text_;
    std::string source_;
};

inline Utility read_utility(const Reader& r, const json& v, const json::json_pointer& at) {
    r.only_keys(v, at, {"kind", "gamma"});
    const json& kind = r.need(v, at, "kind");
    if (!kind.is_string()) r.fail(at / "kind", "expected a string");
    const std::string k = kind.get<std::string>();
    if (k == "log") {
        if (v.contains("gamma") && r.number(v["gamma"], at / "gamma") != 1.0) r.fail(at / "gamma", "log utility has gamma = 1");
        return Utility::log();
    }
    const double g = r.number(r.need(v, at, "gamma"), at / "gamma");
    if (k == "power") return r.guarded(at / "gamma", [&] { return Utility::power(g); });
    if (k == "exponential") return r.guarded(at / "gamma", [&] { return Utility::exponential(g); });
    if (k == "quadratic") return r.guarded(at / "gamma", [&] { return Utility::quadratic_quasilinear(g); });
    r.fail(at / "kind", "unknown utility kind '" + k + "' (expected power, log, exponential or quadratic)");
}

inline Scenario read_scenario(const Reader& r, const json& v, const json::json_pointer& at) {
    r.only_keys(v, at, {"states", "payoffs", "prices", "price"});
    const json& pay = r.need(v, at, "payoffs");
    std::vector<std::vector<double>> rows;
    if (pay.is_array() && !pay.empty() && pay[0].is_array()) {
        for (std::size_t k = 0; k < pay.size(); ++k) rows.push_back(r.numbers(pay[k], at / "payoffs" / k));
    } else {
        rows.push_back(r.numbers(pay, at / "payoffs"));
    }
    std::vector<double> prices;
    if (v.contains("prices") && v.contains("price")) r.fail(at / "price", "give either 'price' or 'prices', not both");
    if (v.contains("prices")) {
        prices = r.numbers(v["prices"], at / "prices");
    } else if (v.contains("price")) {
        prices = {r.number(v["price"], at / "price")};
    } else {
        // Midpoint of the payoff range; commands that sweep prices overwrite it.
        for (const auto& row : rows) prices.push_back(0.5 * (*std::min_element(row.begin(), row.end()) + *std::max_element(row.begin(), row.end())));
    }
    std::vector<std::string> labels;
    if (v.contains("states")) {
        const json& st = v["states"];
        if (!st.is_array()) r.fail(at / "states", "expected an array of labels");
        for (std::size_t s = 0; s < st.size(); ++s) {
            if (!st[s].is_string()) r.fail(at / "states" / s, "expected a string label");
            labels.push_back(st[s].get<std::string>());
        }
        if (labels.size() != rows[0].size()) r.fail(at / "states", "label count must equal the payoff length");
    } else {
        for (std::size_t s = 0; s < rows[0].size(); ++s) labels.push_back("s" + std::to_string(s + 1));
    }
    return r.guarded(at, [&] { return Scenario(labels, rows, prices); });
}

inline Agent read_agent(const Reader& r, const json& v, const json::json_pointer& at, std::size_t states,
                        std::string& name) {
    r.only_keys(v, at, {"name", "utility", "w0", "prior", "c", "alpha", "endowment"});
    if (v.contains("name")) {
        if (!v["name"].is_string()) r.fail(at / "name", "expected a string");
        name = v["name"].get<std::string>();
    }
    const Utility u = read_utility(r, r.need(v, at, "utility"), at / "utility");
    const double w0 = r.number(r.need(v, at, "w0"), at / "w0");
    const std::vector<double> prior = r.numbers(r.need(v, at, "prior"), at / "prior");
    if (prior.size() != states) r.fail(at / "prior", "prior has " + std::to_string(prior.size()) + " entries, scenario has " + std::to_string(states) + " states");
    const ReferencePrior p0 = r.guarded(at / "prior", [&] { return ReferencePrior(prior); });
    const double c = r.number(r.need(v, at, "c"), at / "c");
    const double alpha = r.number(r.need(v, at, "alpha"), at / "alpha");
    const AmbiguitySpec amb = r.guarded(at, [&] { return AmbiguitySpec(c, alpha); });
    std::vector<double> endow;
    if (v.contains("endowment")) {
        endow = r.numbers(v["endowment"], at / "endowment");
        if (endow.size() != states) r.fail(at / "endowment", "endowment length must equal the state count");
    }
    return r.guarded(at, [&] { return Agent(u, w0, p0, amb, endow); });
}

}  // namespace detail

/// Parses and validates a configuration document. Malformed JSON and schema
/// violations raise SchemaError, out-of-range model values DomainError; both
/// carry "source:line:col: /json/pointer:" prefixes.
inline Config parse(const std::string& text, const std::string& source = "<config>") {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto p = detail::position_at(text, e.byte == 0 ? 0 : e.byte - 1);
        std::string msg = e.what();
        // Drop nlohmann's "[json.exception...] parse error at line L, column C: " prefix.
        const auto col = msg.find("column ");
        const auto cut = col == std::string::npos ? col : msg.find(": ", col);
        if (cut != std::string::npos) msg = msg.substr(cut + 2);
        throw SchemaError(source + ":" + std::to_string(p.line) + ":" + std::to_string(p.column) + ": invalid JSON: " + msg);
    }
    const detail::Reader r(text, source);
    const json::json_pointer root;
    r.only_keys(doc, root, {"scenario", "agents", "supply", "price_grid", "theta_grid", "sweep", "equilibrium", "riskshare"});

    Config cfg;
    cfg.source = source;
    cfg.scenario = detail::read_scenario(r, r.need(doc, root, "scenario"), root / "scenario");
    const json& agents = r.need(doc, root, "agents");
    if (!agents.is_array() || agents.empty()) r.fail(root / "agents", "expected a nonempty array of agents");
    for (std::size_t i = 0; i < agents.size(); ++i) {
        std::string name = "agent" + std::to_string(i + 1);
        cfg.agents.push_back(detail::read_agent(r, agents[i], root / "agents" / i, cfg.scenario.num_states(), name));
        cfg.names.push_back(name);
    }
    if (doc.contains("supply")) cfg.supply = r.number(doc["supply"], root / "supply");
    if (doc.contains("price_grid")) cfg.price_grid = r.grid(doc["price_grid"], root / "price_grid");
    if (doc.contains("theta_grid")) cfg.theta_grid = r.grid(doc["theta_grid"], root / "theta_grid");
    if (doc.contains("sweep")) {
        const json& s = doc["sweep"];
        const auto at = root / "sweep";
        r.only_keys(s, at, {"param", "agent", "lo", "hi", "n"});
        const json& param = r.need(s, at, "param");
        if (!param.is_string()) r.fail(at / "param", "expected a string such as \"p0\" or \"p0:2\"");
        std::string label = param.get<std::string>();
        if (s.contains("agent")) {
            if (label.find(':') != std::string::npos) r.fail(at / "agent", "agent given twice");
            label += ":" + std::to_string(r.count(s["agent"], at / "agent"));
        }
        const GridSpec g{r.number(r.need(s, at, "lo"), at / "lo"), r.number(r.need(s, at, "hi"), at / "hi"),
                         r.count(r.need(s, at, "n"), at / "n")};
        try {
            cfg.sweep = parse_sweep(label, g);
        } catch (const SchemaError& e) {
            r.fail(at / "param", e.what());
        }
        if (cfg.sweep->param != SweepParam::supply && cfg.sweep->agent >= cfg.agents.size()) {
            r.fail(at / "param", "sweep names agent " + std::to_string(cfg.sweep->agent + 1) + " but only " +
                                     std::to_string(cfg.agents.size()) + " are defined");
        }
    }
    if (doc.contains("equilibrium")) {
        const json& e = doc["equilibrium"];
        const auto at = root / "equilibrium";
        r.only_keys(e, at, {"mode", "allow_seekers", "restriction", "price"});
        if (e.contains("mode")) {
            if (!e["mode"].is_string()) r.fail(at / "mode", "expected a string");
            cfg.equilibrium.mode = e["mode"].get<std::string>();
            if (cfg.equilibrium.mode != "first" && cfg.equilibrium.mode != "second" && cfg.equilibrium.mode != "local") {
                r.fail(at / "mode", "mode must be first, second or local");
            }
        }
        if (e.contains("allow_seekers")) {
            if (!e["allow_seekers"].is_boolean()) r.fail(at / "allow_seekers", "expected true or false");
            cfg.equilibrium.allow_seekers = e["allow_seekers"].get<bool>();
        }
        if (e.contains("restriction")) {
            cfg.equilibrium.restriction = r.number(e["restriction"], at / "restriction");
            if (*cfg.equilibrium.restriction < 0.0) r.fail(at / "restriction", "restriction half-width must be >= 0", true);
        }
        if (e.contains("price")) cfg.equilibrium.price = r.number(e["price"], at / "price");
    }
    if (doc.contains("riskshare")) {
        const json& s = doc["riskshare"];
        const auto at = root / "riskshare";
        r.only_keys(s, at, {"theta1", "theta2", "delta_sweep"});
        RiskShareBlock b;
        if (s.contains("theta1")) b.theta1 = r.number(s["theta1"], at / "theta1");
        if (s.contains("theta2")) b.theta2 = r.number(s["theta2"], at / "theta2");
        if (s.contains("delta_sweep")) b.delta_sweep = r.numbers(s["delta_sweep"], at / "delta_sweep");
        cfg.riskshare = b;
    }
    return cfg;
}

inline Config load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError(path + ": cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

/// alpha giving the signed ambiguity index delta at divergence radius d.
inline double alpha_for_delta(double delta, double d) {
    ambimax::detail::require(d > 0.0, "a delta sweep needs c > 1");
    return 0.5 * (1.0 + delta / std::sqrt(d));
}

/// Copy of the configuration with one sweep parameter set to `value`.
inline Config with_parameter(const Config& cfg, const SweepSpec& s, double value) {
    Config out = cfg;
    if (s.param == SweepParam::supply) {
        out.supply = value;
        return out;
    }
    Agent& a = out.agents.at(s.agent);
    switch (s.param) {
        case SweepParam::p0:
            ambimax::detail::require(a.prior.size() == 2, "p0 sweeps need a two-state scenario");
            a.prior = ReferencePrior::binomial(value);
            break;
        case SweepParam::alpha: a.ambiguity = AmbiguitySpec(a.ambiguity.c(), value); break;
        case SweepParam::c: a.ambiguity = AmbiguitySpec(value, a.alpha()); break;
        case SweepParam::delta: a.ambiguity = AmbiguitySpec(a.ambiguity.c(), alpha_for_delta(value, a.ambiguity.d())); break;
        case SweepParam::gamma:
            switch (a.utility.kind()) {
                case UtilityKind::power:
                case UtilityKind::log: a.utility = Utility::power(value); break;
                case UtilityKind::exponential: a.utility = Utility::exponential(value); break;
                case UtilityKind::quadratic_quasilinear: a.utility = Utility::quadratic_quasilinear(value); break;
            }
            break;
        case SweepParam::w0: a.w0 = value; break;
        case SweepParam::supply: break;
    }
    return out;
}

}  // namespace ambimax::config

#endif
