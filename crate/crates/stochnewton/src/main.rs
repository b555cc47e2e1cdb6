fn main() {
    std::process::exit(stochnewton::cli::run_main(std::env::args_os()));
}
