#include "scenarios.hpp"

#include <CLI11.hpp>

#include <Eigen/Core>
#include <gsl/gsl_version.h>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace qembed;
using namespace qembed::cli;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

// Scenario parameters arrive as CLI11 extras: [name] --key value | --key=value | --flag.
void parse_extras(const std::vector<std::string>& extras, Request& req, bool& help) {
    std::size_t i = 0;
    if (!extras.empty() && extras[0].rfind("-", 0) != 0) {
        if (!req.scenario.empty() && req.scenario != extras[0]) throw config_error("scenario given twice: " + req.scenario + ", " + extras[0]);
        req.scenario = extras[0];
        i = 1;
    }
    const Scenario* sc = find_scenario(req.scenario);
    for (; i < extras.size(); ++i) {
        const std::string& tok = extras[i];
        if (tok == "--help" || tok == "-h") {
            help = true;
            continue;
        }
        if (tok.rfind("--", 0) != 0 || tok.size() < 3) throw config_error("unexpected argument: " + tok);
        std::string key = tok.substr(2), val;
        if (auto eq = key.find('='); eq != std::string::npos) {
            val = key.substr(eq + 1);
            key = key.substr(0, eq);
        } else {
            bool is_flag = false;
            if (sc)
                for (const auto& p : sc->params) is_flag = is_flag || (p.key == key && p.flag);
            if (is_flag || i + 1 == extras.size() || extras[i + 1].rfind("--", 0) == 0) val = "true";
            else val = extras[++i];
        }
        req.params[key] = val;
    }
}

json versions() {
    return json{{"qembed", kVersion},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." + std::to_string(EIGEN_MINOR_VERSION)},
                {"gsl", GSL_VERSION},
                {"compiler", __VERSION__}};
}

int run(Request req, const std::string& config_path, const std::vector<std::string>& extras, std::optional<std::uint64_t> cli_seed,
        const std::string& cli_out, const std::string& cli_format) {
    Request merged;
    if (!config_path.empty()) {
        std::ifstream f(config_path);
        if (!f) throw config_error("cannot read config file " + config_path);
        json j;
        try {
            j = json::parse(f);
        } catch (const json::exception& e) {
            throw config_error(std::string("config file is not valid JSON: ") + e.what());
        }
        merged = request_from_json(j);
    }
    bool help = false;
    parse_extras(extras, req, help);
    if (!req.scenario.empty()) merged.scenario = req.scenario;
    for (auto& [k, v] : req.params) merged.params[k] = v;
    if (cli_seed) merged.seed = cli_seed;
    if (!cli_out.empty()) merged.out = cli_out;
    if (!cli_format.empty()) merged.format = cli_format;

    if (help) {
        const Scenario* sc = find_scenario(merged.scenario);
        if (!sc) throw config_error("unknown scenario: '" + merged.scenario + "'");
        std::cout << scenario_help(*sc);
        return 0;
    }
    Resolved rs = resolve(merged);
    Output o = rs.scenario->run(rs.params, rs.seed.value_or(0));
    json env = envelope(rs, o);
    std::string text = render(env, o, merged.format);
    if (merged.out.empty()) {
        std::cout << text;
        return 0;
    }
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(merged.out, ec);
    if (ec) throw io_error("cannot create output directory " + merged.out + ": " + ec.message());
    const std::string fname = "result." + merged.format;
    write_text((fs::path(merged.out) / fname).string(), text);
    json config{{"scenario", rs.scenario->name}, {"params", rs.params.values}, {"format", merged.format}};
    config["seed"] = rs.seed ? json(*rs.seed) : json(nullptr);
    json manifest{{"config", config},
                  {"versions", versions()},
                  {"files", {{fname, {{"bytes", text.size()}, {"fnv1a64", hex64(fnv1a64(text))}}}}}};
    write_text((fs::path(merged.out) / "manifest.json").string(), dump_json(manifest));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    // Shorthand: qembed <scenario> ... is qembed run <scenario> ...
    std::vector<std::string> args(argv, argv + argc);
    if (args.size() > 1 && find_scenario(args[1])) args.insert(args.begin() + 1, "run");

    CLI::App app{"qembed: quantum systems embedded in classical probabilistic automata"};
    app.require_subcommand(1);
    auto* list = app.add_subcommand("list", "List scenarios");
    auto* runc = app.add_subcommand("run", "Run one scenario (qembed run <scenario> --help for its parameters)");
    runc->allow_extras();
    runc->set_help_flag();
    Request req;
    std::string config_path, out, format;
    std::optional<std::uint64_t> seed;
    runc->add_option("--scenario", req.scenario, "Scenario name");
    runc->add_option("--config", config_path, "JSON config file; flags override its values");
    runc->add_option("--seed", seed, "Seed for stochastic scenarios");
    runc->add_option("--out", out, "Output directory (result + manifest); stdout when absent");
    runc->add_option("--format", format, "json or csv");

    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }
    if (*list) {
        for (const auto& s : scenarios()) std::cout << s.name << std::string(s.name.size() < 16 ? 16 - s.name.size() : 1, ' ') << s.doc << '\n';
        return 0;
    }
    try {
        auto extras = runc->remaining();
        if (extras.empty() && req.scenario.empty() && config_path.empty()) {
            std::cout << runc->help() << "\nScenarios:\n";
            for (const auto& s : scenarios()) std::cout << "  " << s.name << '\n';
            return 0;
        }
        return run(req, config_path, extras, seed, out, format);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const io_error& e) {
        std::cerr << "output error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::domain_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
}
