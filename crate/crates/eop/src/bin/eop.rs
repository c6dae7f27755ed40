fn main() {
    std::process::exit(eop::cli::run());
}
