fn main() {
    std::process::exit(ckvlab::cli::main_with_args(std::env::args_os()));
}
