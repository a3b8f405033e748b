// Copyright 2026 the Frontier Authors
// SPDX-License-Identifier: Apache-2.0

fn main() {
    std::process::exit(frontier::run(std::env::args_os()));
}
