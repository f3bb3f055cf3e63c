#include <asymdynkin/cli.hpp>

int main(int argc, char** argv) { return asymdynkin::run_cli(argc, argv); }
