fn main() {
    std::process::exit(nilflow::cli::run());
}
