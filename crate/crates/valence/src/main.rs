fn main() {
    std::process::exit(valence::cli::run(std::env::args_os()));
}
