#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include "ambimax/ambimax.hpp"
#include "ambimax/config.hpp"

using namespace ambimax;
namespace cfg = ambimax::config;

namespace {

enum ExitCode { kOk = 0, kDomain = 1, kSchema = 2, kNumerical = 3 };

struct Options {
    std::string config;
    std::string out;
    std::string grid;
    std::string theta_grid;
    std::string sweep;
    std::string mode;
    std::optional<double> restriction;
    std::optional<double> price;
    std::size_t agent = 0;  // 1-based; 0 = every agent
};

std::string fmt(double x) { return csv::number(x); }

void emit(const Options& opt, const std::string& text) {
    if (opt.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(opt.out, std::ios::binary | std::ios::trunc);
    if (!f) throw DomainError("cannot write output file " + opt.out);
    f << text;
}

std::vector<std::size_t> selected_agents(const cfg::Config& c, const Options& opt) {
    if (opt.agent == 0) {
        std::vector<std::size_t> all(c.agents.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        return all;
    }
    if (opt.agent > c.agents.size()) {
        throw SchemaError("--agent " + std::to_string(opt.agent) + " but the config defines " +
                          std::to_string(c.agents.size()) + " agents");
    }
    return {opt.agent - 1};
}

void require_interior_condition(const cfg::Config& c, std::size_t i) {
    const auto r = check_assumption1(c.agents[i].prior, c.agents[i].ambiguity);
    if (!r.holds) {
        throw DomainError("agent '" + c.names[i] + "': c = " + fmt(c.agents[i].ambiguity.c()) +
                          " is not below 1/(1 - p0) = " + fmt(r.bound) + " at state '" +
                          c.scenario.states()[r.binding_state] + "'");
    }
}

void require_interior_prices(const Scenario& sc, const std::vector<double>& prices) {
    for (double p : prices) sc.with_price(p).require_interior_price();
}

int cmd_check(const cfg::Config& c, const Options& opt) {
    std::ostringstream os;
    csv::write_row(os, {"agent", "interior", "margin", "binding_state", "delta", "d_tilde", "eta_low", "eta_high",
                        "theta_lower", "theta_upper"});
    std::vector<std::string> failures;
    const bool single = c.scenario.num_assets() == 1;
    for (std::size_t i = 0; i < c.agents.size(); ++i) {
        const Agent& a = c.agents[i];
        const auto r = check_assumption1(a.prior, a.ambiguity);
        std::string lo = "", hi = "", tlo = "", thi = "";
        if (single) {
            const auto rb = reservation_interval(a, c.scenario);
            lo = fmt(rb.eta_low);
            hi = fmt(rb.eta_high);
            try {
                const PositionBounds b = a.has_endowment() ? admissible_interval(a, c.scenario) : admissible_bounds(a, c.scenario);
                tlo = fmt(b.lower);
                thi = fmt(b.upper);
            } catch (const DomainError&) {
                tlo = thi = "nan";
            }
        }
        csv::write_row(os, {c.names[i], r.holds ? "pass" : "fail", fmt(r.margin), c.scenario.states()[r.binding_state],
                            fmt(a.delta()), fmt(a.ambiguity.reduced_d()), lo, hi, tlo, thi});
        if (!r.holds) {
            failures.push_back("agent '" + c.names[i] + "': c = " + fmt(a.ambiguity.c()) + " is not below 1/(1 - p0) = " +
                               fmt(r.bound) + " at state '" + c.scenario.states()[r.binding_state] + "'");
        }
    }
    emit(opt, os.str());
    for (const auto& f : failures) std::cerr << "ambimax: " << f << '\n';
    return failures.empty() ? kOk : kDomain;
}

int cmd_demand(const cfg::Config& c, const Options& opt) {
    c.scenario.require_single_asset();
    std::optional<cfg::GridSpec> grid = c.price_grid;
    if (!opt.grid.empty()) grid = cfg::parse_grid(opt.grid);
    if (!grid) throw SchemaError("demand needs --grid lo:hi:n or a price_grid block");
    const auto prices = grid->points();
    const auto which = selected_agents(c, opt);
    require_interior_prices(c.scenario, prices);
    for (std::size_t i : which) require_interior_condition(c, i);

    std::ostringstream os;
    std::vector<std::string> header{"agent", "price", "branch", "theta", "side", "value", "foc_residual"};
    for (std::size_t s = 0; s < c.scenario.num_states(); ++s) header.push_back("q_" + std::to_string(s + 1));
    csv::write_row(os, header);
    for (std::size_t i : which) {
        for (const auto& r : curve_rows(c.agents[i], c.scenario, prices)) {
            std::vector<std::string> line{c.names[i], fmt(r.price), r.branch, fmt(r.theta), to_string(r.side),
                                          fmt(r.value), fmt(r.foc_residual)};
            for (double q : r.q) line.push_back(fmt(q));
            csv::write_row(os, line);
        }
    }
    emit(opt, os.str());
    return kOk;
}

struct EquilibriumRun {
    std::string mode;
    bool allow_seekers = false;
    std::optional<double> restriction;
    std::optional<double> price;
};

std::vector<EquilibriumResult> run_equilibrium(const Market& m, const EquilibriumRun& run) {
    if (run.mode == "first") return {first_best_equilibrium(m, FirstBestOptions{run.allow_seekers})};
    if (run.mode == "second") return second_best_equilibrium(m).equilibria;
    if (run.price) return {local_second_best_at(m, *run.price)};
    return local_second_best(m, *run.restriction).equilibria;
}

int cmd_equilibrium(const cfg::Config& c, const Options& opt) {
    EquilibriumRun run{c.equilibrium.mode, c.equilibrium.allow_seekers, c.equilibrium.restriction, c.equilibrium.price};
    if (!opt.mode.empty()) run.mode = opt.mode;
    if (opt.restriction) run.restriction = opt.restriction;
    if (opt.price) run.price = opt.price;
    if (run.mode != "first" && run.mode != "second" && run.mode != "local") {
        throw SchemaError("--mode must be first, second or local");
    }
    if (run.mode == "local" && !run.restriction && !run.price) {
        throw SchemaError("local mode needs a restriction half-width or a price");
    }
    std::optional<cfg::SweepSpec> sweep = c.sweep;
    if (!opt.sweep.empty()) {
        const auto sp = opt.sweep.find(' ');
        if (sp == std::string::npos) throw SchemaError("--sweep expects 'param lo:hi:n'");
        sweep = cfg::parse_sweep(opt.sweep.substr(0, sp), cfg::parse_grid(opt.sweep.substr(sp + 1)));
        if (sweep->param != cfg::SweepParam::supply && sweep->agent >= c.agents.size()) {
            throw SchemaError("sweep names agent " + std::to_string(sweep->agent + 1) + " but only " +
                              std::to_string(c.agents.size()) + " are defined");
        }
    }

    // Build and check every market before solving any of them.
    std::vector<std::pair<std::string, Market>> markets;
    const std::vector<double> values = sweep ? sweep->grid.points() : std::vector<double>{};
    if (sweep) {
        for (double v : values) markets.emplace_back(fmt(v), cfg::with_parameter(c, *sweep, v).market());
    } else {
        markets.emplace_back("", c.market());
    }
    for (const auto& [label, m] : markets) {
        m.validate();
        for (const Agent& a : m.agents) require_assumption1(a.prior, a.ambiguity);
    }

    std::ostringstream os;
    std::vector<std::string> header{"sweep_param", "sweep_value", "price"};
    for (std::size_t i = 0; i < c.agents.size(); ++i) header.push_back("theta_" + std::to_string(i + 1));
    for (const char* h : {"kind", "residual", "cleared", "predicted_lo", "predicted_hi", "note"}) header.push_back(h);
    csv::write_row(os, header);
    const std::string param = sweep ? sweep->label : "";
    for (const auto& [label, m] : markets) {
        for (const auto& e : run_equilibrium(m, run)) {
            std::vector<std::string> line{param, label, fmt(e.price)};
            for (std::size_t i = 0; i < m.size(); ++i) line.push_back(i < e.allocations.size() ? fmt(e.allocations[i]) : "nan");
            line.push_back(to_string(e.kind));
            line.push_back(fmt(e.residual));
            line.push_back(e.cleared ? "true" : "false");
            line.push_back(e.predicted ? fmt(e.predicted->lo) : "");
            line.push_back(e.predicted ? fmt(e.predicted->hi) : "");
            line.push_back(e.note);
            csv::write_row(os, line);
        }
    }
    emit(opt, os.str());
    return kOk;
}

int cmd_premium(const cfg::Config& c, const Options& opt) {
    c.scenario.require_single_asset();
    std::optional<cfg::GridSpec> grid = c.theta_grid;
    if (!opt.theta_grid.empty()) grid = cfg::parse_grid(opt.theta_grid);
    if (!grid) throw SchemaError("premium needs --theta-grid lo:hi:n or a theta_grid block");
    const auto thetas = grid->points();
    const auto which = selected_agents(c, opt);
    for (std::size_t i : which) require_interior_condition(c, i);

    std::ostringstream os;
    csv::write_row(os, {"agent", "theta", "rho", "epsilon", "delta_comp", "closed_form", "status"});
    std::size_t failed = 0;
    for (std::size_t i : which) {
        const Agent& a = c.agents[i];
        const bool exponential = a.utility.kind() == UtilityKind::exponential;
        for (double th : thetas) {
            try {
                const PremiumDecomposition d = decompose_premium(a, c.scenario, th);
                const std::string cf = exponential ? fmt(exponential_ambiguity_premium(a, c.scenario, th)) : "";
                csv::write_row(os, {c.names[i], fmt(th), fmt(d.rho), fmt(d.epsilon), fmt(d.delta_comp), cf, "ok"});
            } catch (const Error& e) {
                ++failed;
                csv::write_row(os, {c.names[i], fmt(th), "nan", "nan", "nan", "", std::string("error: ") + e.what()});
            }
        }
    }
    emit(opt, os.str());
    if (failed) std::cerr << "ambimax: " << failed << " grid point(s) flagged as errors\n";
    return kOk;
}

int cmd_riskshare(const cfg::Config& c, const Options& opt) {
    if (c.agents.size() != 2) throw SchemaError("riskshare needs exactly two agents");
    for (const Agent& a : c.agents) {
        if (a.utility.kind() != UtilityKind::exponential) {
            throw DomainError("riskshare needs exponential utility for both agents; got " + a.utility.describe());
        }
    }
    for (std::size_t i = 0; i < 2; ++i) require_interior_condition(c, i);
    const cfg::RiskShareBlock block = c.riskshare.value_or(cfg::RiskShareBlock{});

    // One row for the configured agents, then one per swept delta applied to both.
    std::vector<std::pair<Agent, Agent>> cases{{c.agents[0], c.agents[1]}};
    for (double delta : block.delta_sweep) {
        Agent a1 = c.agents[0];
        Agent a2 = c.agents[1];
        a1.ambiguity = AmbiguitySpec(a1.ambiguity.c(), cfg::alpha_for_delta(delta, a1.ambiguity.d()));
        a2.ambiguity = AmbiguitySpec(a2.ambiguity.c(), cfg::alpha_for_delta(delta, a2.ambiguity.d()));
        require_assumption1(a1.prior, a1.ambiguity);
        require_assumption1(a2.prior, a2.ambiguity);
        cases.emplace_back(a1, a2);
    }

    std::ostringstream os;
    csv::write_row(os, {"delta_1", "delta_2", "theta1", "theta2", "transfer", "exposure_1", "exposure_2",
                        "total_compensation", "closed_form_exposure_1"});
    double lo = kInf, hi = -kInf;
    for (const auto& [a1, a2] : cases) {
        const RiskSharingResult r = exponential_risk_sharing(a1, a2, c.scenario, block.theta1, block.theta2);
        csv::write_row(os, {fmt(a1.delta()), fmt(a2.delta()), fmt(block.theta1), fmt(block.theta2), fmt(r.transfer),
                            fmt(r.exposure1), fmt(r.exposure2), fmt(r.total_compensation),
                            r.closed_form_exposure1 ? fmt(*r.closed_form_exposure1) : ""});
        lo = std::min(lo, r.exposure1);
        hi = std::max(hi, r.exposure1);
    }
    emit(opt, os.str());
    if (cases.size() > 1) {
        std::cerr << "ambimax: exposure_1 spread across the delta sweep = " << fmt(hi - lo) << '\n';
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Portfolio choice and equilibrium under alpha-maxmin ambiguity"};
    app.require_subcommand(1);
    Options opt;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "JSON configuration file")->required();
        sub->add_option("--out", opt.out, "write CSV here instead of stdout");
    };
    CLI::App* check = app.add_subcommand("check", "validate a config and print per-agent bounds");
    common(check);
    CLI::App* demand = app.add_subcommand("demand", "demand curve over a price grid");
    common(demand);
    demand->add_option("--grid", opt.grid, "price grid lo:hi:n");
    demand->add_option("--agent", opt.agent, "only this agent (1-based)")->check(CLI::PositiveNumber);
    CLI::App* equilibrium = app.add_subcommand("equilibrium", "market-clearing prices and allocations");
    common(equilibrium);
    equilibrium->add_option("--mode", opt.mode, "first, second or local")->check(CLI::IsMember({"first", "second", "local"}));
    equilibrium->add_option("--sweep", opt.sweep, "'param lo:hi:n', param one of p0, alpha, c, gamma, w0, delta (suffix :k for agent k) or supply");
    equilibrium->add_option("--restriction", opt.restriction, "local mode: positions limited to [-r, r]");
    equilibrium->add_option("--price", opt.price, "local mode: construct the restriction at this price");
    CLI::App* premium = app.add_subcommand("premium", "risk and ambiguity compensation over a position grid");
    common(premium);
    premium->add_option("--theta-grid", opt.theta_grid, "position grid lo:hi:n");
    premium->add_option("--agent", opt.agent, "only this agent (1-based)")->check(CLI::PositiveNumber);
    CLI::App* riskshare = app.add_subcommand("riskshare", "risk sharing between two exponential agents");
    common(riskshare);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kSchema;
    }

    try {
        const cfg::Config c = cfg::load(opt.config);
        if (check->parsed()) return cmd_check(c, opt);
        if (demand->parsed()) return cmd_demand(c, opt);
        if (equilibrium->parsed()) return cmd_equilibrium(c, opt);
        if (premium->parsed()) return cmd_premium(c, opt);
        return cmd_riskshare(c, opt);
    } catch (const SchemaError& e) {
        std::cerr << "ambimax: schema error: " << e.what() << '\n';
        return kSchema;
    } catch (const DomainError& e) {
        std::cerr << "ambimax: " << e.what() << '\n';
        return kDomain;
    } catch (const NumericalError& e) {
        std::cerr << "ambimax: numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "ambimax: " << e.what() << '\n';
        return kNumerical;
    }
}
