fn main() {
    std::process::exit(soficlab::cli::run());
}
