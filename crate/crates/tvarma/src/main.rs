fn main() {
    std::process::exit(tvarma::cli::main_with_args(std::env::args_os()));
}
