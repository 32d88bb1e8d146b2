use jacobi_ode::cli;

/// Expression rewriting recurses on tree depth; large inputs need room.
const STACK_BYTES: usize = 256 << 20;

fn main() {
    let code = std::thread::Builder::new()
        .stack_size(STACK_BYTES)
        .spawn(|| cli::run(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr()))
        .map_or(cli::EXIT_OTHER, |h| h.join().unwrap_or(cli::EXIT_OTHER));
    std::process::exit(code);
}
