#include "cli.hpp"

int main(int argc, char** argv) { return mkhawkes::cli::run(argc, argv); }
