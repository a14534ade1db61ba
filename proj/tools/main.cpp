// SPDX-License-Identifier: Apache-2.0
#include "dagwgan/cli.hpp"

int main(int argc, char** argv) { return dagwgan::cli_main(argc, argv); }
