#include "routesignal/cli.hpp"

int main(int argc, char** argv) { return routesignal::run_cli(argc, argv); }
