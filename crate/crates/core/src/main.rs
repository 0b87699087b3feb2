fn main() {
    std::process::exit(locpred::cli::run(std::env::args_os()));
}
