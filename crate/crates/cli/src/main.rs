fn main() {
    std::process::exit(csdmd_cli::run(std::env::args_os()));
}
