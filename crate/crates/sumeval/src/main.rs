fn main() {
    std::process::exit(sumeval::cli::run());
}
