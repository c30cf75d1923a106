fn main() {
    std::process::exit(timesplit::cli::cli_main(std::env::args_os()));
}
