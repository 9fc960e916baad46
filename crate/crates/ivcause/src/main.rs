fn main() {
    std::process::exit(ivcause::cli::run(std::env::args_os()));
}
