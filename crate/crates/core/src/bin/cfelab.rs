fn main() {
    std::process::exit(cfelab::cli::main_with_args(std::env::args_os()));
}
