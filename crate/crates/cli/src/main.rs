fn main() {
    std::process::exit(enrob_cli::run(std::env::args_os()));
}
