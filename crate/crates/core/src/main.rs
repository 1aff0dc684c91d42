fn main() {
    std::process::exit(memchaos::cli::run_cli(std::env::args_os()));
}
