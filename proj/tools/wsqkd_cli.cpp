// wsqkd: planning and analysis of wavelength-routed QKD networks.
//
//   wsqkd plan 2
//   wsqkd reproduce wuhu --tolerance factor2
//   wsqkd xtalk scenario.json E2R2A --best --json

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include <wsqkd/wsqkd.hpp>

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

wsqkd::Scenario load_scenario(const std::string& source) {
    if (source == "wuhu") {
        return wsqkd::wuhu_dataset();
    }
    std::string text;
    if (source == "-") {
        text.assign(std::istreambuf_iterator<char>(std::cin), {});
    } else {
        std::ifstream in(source);
        if (!in) {
            throw UsageError("cannot read scenario '" + source + "'");
        }
        text.assign(std::istreambuf_iterator<char>(in), {});
    }
    return wsqkd::parse_scenario(text);
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv("WSQKD_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw UsageError(std::string("WSQKD_SEED is not an unsigned integer: ") + env);
        }
    }
    return 1;
}

void emit(const wsqkd::CommandOutput& out, bool json, const std::string& out_path) {
    const std::string doc = out.document.dump(2) + "\n";
    if (!out_path.empty()) {
        std::ofstream f(out_path);
        if (!f) {
            throw UsageError("cannot write '" + out_path + "'");
        }
        f << doc;
    }
    if (json) {
        std::cout << doc;
    } else {
        std::cout << out.table;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Planning and analysis of wavelength-routed QKD networks"};
    app.require_subcommand(1);
    bool json = false;
    std::string out_path;
    app.add_flag("--json", json, "Print the machine-readable document instead of the table");
    app.add_option("--out", out_path, "Also write the machine-readable document to this path");

    std::size_t n_wavelengths = 2;
    std::vector<std::string> labels;
    bool dot = false;
    bool tsv = false;
    auto* plan = app.add_subcommand("plan", "Routing plan for 2N+1 nodes on N wavelengths");
    plan->add_option("N", n_wavelengths, "Number of wavelengths")->required()->check(CLI::PositiveNumber);
    plan->add_option("--labels", labels, "Node labels in plan order, comma separated")->delimiter(',');
    plan->add_flag("--dot", dot, "Print a Graphviz graph");
    plan->add_flag("--tsv", tsv, "Print a tab-separated link table");

    std::string scenario;
    std::string link;
    auto add_scenario = [&](CLI::App* sub, bool with_link) {
        sub->add_option("scenario", scenario, "Scenario file, '-' for stdin, or 'wuhu'")->required();
        if (with_link) {
            sub->add_option("link", link, "Link name, e.g. A2R2B")->required();
        }
    };

    auto* budget = app.add_subcommand("budget", "Link loss budget");
    add_scenario(budget, true);

    bool worst = false;
    bool best = false;
    bool interband = false;
    auto* xtalk = app.add_subcommand("xtalk", "Crosstalk paths, ratios and QBER impact");
    add_scenario(xtalk, true);
    auto* worst_flag = xtalk->add_flag("--worst", worst, "Every point term inside the gate (default)");
    xtalk->add_flag("--best", best, "Only terms whose arrival falls in the gate")->excludes(worst_flag);
    xtalk->add_flag("--include-interband", interband, "Count interband leakage too");

    auto* keyrate = app.add_subcommand("keyrate", "Decoy-state key rate");
    add_scenario(keyrate, true);

    std::uint64_t pulses = 10'000'000;
    std::optional<std::uint64_t> seed;
    unsigned workers = 0;
    std::string trace_path;
    auto* simulate = app.add_subcommand("simulate", "Pulse-level Monte Carlo of one link");
    add_scenario(simulate, true);
    simulate->add_option("--pulses", pulses, "Number of pulses")->check(CLI::PositiveNumber);
    simulate->add_option("--seed", seed, "Seed (default: WSQKD_SEED or 1)");
    simulate->add_option("--workers", workers, "Worker threads (0: all cores)");
    simulate->add_option("--trace", trace_path, "Write sifted detections as CSV");

    std::string tolerance = "factor2";
    std::uint64_t mc_pulses = 1'000'000;
    auto* reproduce = app.add_subcommand("reproduce", "Compare the model with every measured link");
    add_scenario(reproduce, false);
    reproduce->add_option("--tolerance", tolerance, "factor2 or pct25")
        ->check(CLI::IsMember({"factor2", "pct25"}));
    reproduce->add_option("--mc-pulses", mc_pulses, "Monte Carlo pulses per link (0 to skip)");
    reproduce->add_option("--seed", seed, "Seed (default: WSQKD_SEED or 1)");
    reproduce->add_option("--workers", workers, "Worker threads (0: all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? wsqkd::kExitOk : wsqkd::kExitUsage;
    }

    try {
        wsqkd::CommandOutput out;
        if (*plan) {
            out = wsqkd::cmd_plan(n_wavelengths, labels);
            if (dot || tsv) {
                auto p = wsqkd::build_plan(n_wavelengths);
                if (!labels.empty()) {
                    p.labels = labels;
                }
                out.table = dot ? wsqkd::export_dot(p) : wsqkd::export_links_text(p);
            }
        } else if (*budget) {
            out = wsqkd::cmd_budget(load_scenario(scenario), link);
        } else if (*xtalk) {
            out = wsqkd::cmd_xtalk(load_scenario(scenario), link, best ? wsqkd::GateCase::best : wsqkd::GateCase::worst,
                                   interband);
        } else if (*keyrate) {
            out = wsqkd::cmd_keyrate(load_scenario(scenario), link);
        } else if (*simulate) {
            const auto sc = load_scenario(scenario);
            std::ofstream trace;
            if (!trace_path.empty()) {
                trace.open(trace_path);
                if (!trace) {
                    throw UsageError("cannot write '" + trace_path + "'");
                }
            }
            out = wsqkd::cmd_simulate(sc, link, pulses, seed.value_or(default_seed()), workers,
                                      trace_path.empty() ? nullptr : &trace);
        } else if (*reproduce) {
            out = wsqkd::cmd_reproduce(load_scenario(scenario), *wsqkd::parse_tolerance(tolerance), mc_pulses,
                                       seed.value_or(default_seed()), workers);
        }
        emit(out, json, out_path);
        return out.exit_code;
    } catch (const wsqkd::ScenarioError& e) {
        std::cerr << "scenario error: " << e.what() << "\n";
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
    }
    return wsqkd::kExitUsage;
}
