fn main() {
    std::process::exit(acm_sim::cli::main_with_args(std::env::args_os()));
}
