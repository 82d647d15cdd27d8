fn main() {
    std::process::exit(ncvariety::cli::main_with_args(std::env::args_os()));
}
