fn main() {
    std::process::exit(fracdual_cli::main_with_args(std::env::args_os()));
}
