#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
    using namespace kg::cli;
    const ParseResult parsed = parse_args(argc, argv);
    if (!parsed.help.empty()) {
        std::cout << parsed.help;
        return kOk;
    }
    if (!parsed.ok()) {
        nlohmann::json err = {{"error", {{"kind", "validation"}, {"messages", parsed.violations}}}};
        std::cerr << err.dump(2) << '\n';
        return kValidation;
    }
    return run(parsed.config);
}
