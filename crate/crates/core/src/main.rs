use std::io::{stderr, stdout};

fn main() {
    let code = dfo_bounds::cli::run(std::env::args_os(), &mut stdout().lock(), &mut stderr());
    std::process::exit(code);
}
