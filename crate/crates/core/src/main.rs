fn main() {
    std::process::exit(healkit::cli::cli_main(std::env::args_os()));
}
