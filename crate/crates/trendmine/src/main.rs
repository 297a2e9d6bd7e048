fn main() {
    std::process::exit(trendmine::cli::run_subcommand(std::env::args_os()));
}
