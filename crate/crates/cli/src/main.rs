fn main() {
    std::process::exit(siren2_cli::run(std::env::args_os()));
}
