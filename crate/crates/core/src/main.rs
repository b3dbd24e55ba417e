fn main() { std::process::exit(entropics::cli::run(std::env::args_os())); }
