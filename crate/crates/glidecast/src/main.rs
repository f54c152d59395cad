use std::process::exit;

fn main() {
    exit(glidecast::cli::run());
}
