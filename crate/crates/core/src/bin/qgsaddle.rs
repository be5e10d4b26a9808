fn main() {
    std::process::exit(qgsaddle::cli::run_command(std::env::args_os()));
}
