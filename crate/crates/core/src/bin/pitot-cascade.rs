fn main() {
    std::process::exit(pitot_cascade::cli::cli_main(std::env::args_os()));
}
