// SPDX-License-Identifier: Apache-2.0
#include "poselift/cli.hpp"

int main(int argc, char** argv) { return poselift::run_cli(argc, argv); }
