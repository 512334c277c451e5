fn main() {
    std::process::exit(procdep::cli::main_with_args(std::env::args_os()));
}
