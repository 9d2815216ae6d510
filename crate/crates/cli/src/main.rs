fn main() {
    std::process::exit(polarsym_cli::run(std::env::args().skip(1)));
}
