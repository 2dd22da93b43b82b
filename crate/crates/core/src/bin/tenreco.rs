fn main() {
    std::process::exit(tenreco::cli::main());
}
