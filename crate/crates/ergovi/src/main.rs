fn main() {
    std::process::exit(ergovi::cli::main_with_args(std::env::args_os()));
}
