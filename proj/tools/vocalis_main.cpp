// Copyright 2026 Vocalis Authors
//
// Licensed under the Apache License, Version 2.0

#include "vocalis/cli.hpp"

int main(int argc, char** argv) { return vocalis::cli::run(argc, argv); }
