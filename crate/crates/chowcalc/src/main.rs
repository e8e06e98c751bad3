fn main() {
    std::process::exit(chowcalc::cli::run(std::env::args()));
}
