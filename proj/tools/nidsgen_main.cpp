#include "cli/app.hpp"

int main(int argc, char** argv) {
    nidsgen::cli::Cli cli;
    return cli.run(argc, argv);
}
