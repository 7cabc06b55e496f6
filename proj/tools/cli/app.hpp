#pragma once

#include <iosfwd>
#include <memory>
#include <string>

namespace CLI {
class App;
}

namespace nidsgen::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitInternal = 3;

/// Option values filled in by the parser; one instance per invocation.
struct Options;

class Cli {
public:
    Cli();
    ~Cli();

    CLI::App& app();
    /// Parses and runs one invocation. Never throws.
    int run(int argc, const char* const* argv);
    /// Markdown page listing every subcommand, flag and config key.
    std::string markdown_reference() const;

private:
    std::unique_ptr<Options> opts_;
    std::unique_ptr<CLI::App> app_;
};

}  // namespace nidsgen::cli
