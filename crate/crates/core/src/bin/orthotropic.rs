fn main() {
    std::process::exit(orthotropic::cli::run_cli(std::env::args_os()));
}
