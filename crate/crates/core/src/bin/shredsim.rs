fn main() {
    std::process::exit(shredsim::cli::main_with_args(std::env::args_os()));
}
