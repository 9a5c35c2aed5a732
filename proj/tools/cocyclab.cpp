// SPDX-License-Identifier: Apache-2.0
#include "cocyclab/cli.hpp"

int main(int argc, char** argv) { return cocyclab::cli::main_entry(argc, argv); }
