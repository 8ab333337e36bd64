fn main() {
    std::process::exit(femtoq::cli::main_with_args(std::env::args_os()));
}
