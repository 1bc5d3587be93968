fn main() {
    std::process::exit(oscimax_cli::main_with_args(std::env::args_os()));
}
