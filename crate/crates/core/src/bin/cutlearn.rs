fn main() {
    std::process::exit(cutlearn::cli::run());
}
