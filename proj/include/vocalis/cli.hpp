// Copyright 2026 Vocalis Authors
// Command-line entry points, callable in-process for testing.
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <string>
#include <vector>

namespace vocalis::cli {

// Runs one subcommand; args exclude the program name. Returns the process
// exit code and reports errors on stderr.
int run(const std::vector<std::string>& args);

int run(int argc, char** argv);

}  // namespace vocalis::cli
