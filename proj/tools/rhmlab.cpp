// Sweep driver: parses one subcommand, runs it, and writes the result table.
// Exit codes: 0 success, 1 partial cell failures, 2 usage error.

#include <fstream>
#include <iostream>

#include "rhm/cli.hpp"

int main(int argc, char** argv) {
    std::optional<rhm::ExperimentConfig> cfg;
    try {
        cfg = rhm::parse_cli(argc, argv);
    } catch (const rhm::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }
    if (!cfg) return 0;  // help printed

    rhm::ResultEnvelope env;
    try {
        env = rhm::run(*cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    const std::string text =
        cfg->format == rhm::OutputFormat::Json ? rhm::to_json(env) : rhm::to_csv(env);
    if (cfg->out.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(cfg->out, std::ios::binary);
        if (!f) {
            std::cerr << "error: cannot open output file " << cfg->out << "\n";
            return 1;
        }
        f << text;
    }

    std::cerr << rhm::kind_name(cfg->kind) << ": " << env.rows.size() << " rows in "
              << rhm::format_real(env.wall_seconds) << " s";
    if (env.argmax_ties > 0) std::cerr << ", argmax ties: " << env.argmax_ties;
    if (!env.failed_cells.empty()) {
        std::cerr << ", failed cells: " << env.failed_cells.size() << "\n";
        for (const auto& f : env.failed_cells) std::cerr << "  " << f << "\n";
        return 1;
    }
    std::cerr << "\n";
    return 0;
}
