#include "fui/harness/cli.hpp"

int main(int argc, char** argv) { return fui::harness::run_cli(argc, argv); }
