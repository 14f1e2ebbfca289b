fn main() {
    std::process::exit(phasepredict::cli::main_with_args(std::env::args_os()));
}
