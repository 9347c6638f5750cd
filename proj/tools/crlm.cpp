#include "cli/app.hpp"

int main(int argc, char** argv) { return crlm::cli::run(argc, argv); }
