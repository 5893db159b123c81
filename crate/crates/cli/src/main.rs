fn main() {
    std::process::exit(morphokit_cli::run_subcommand(std::env::args_os()));
}
