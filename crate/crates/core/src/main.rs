fn main() {
    std::process::exit(agrotrack::cli::main_with_args(std::env::args_os()));
}
