fn main() {
    std::process::exit(cesar::cli::main());
}
