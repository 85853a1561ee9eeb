fn main() {
    std::process::exit(mlde::cli::main_from_args(std::env::args_os()));
}
