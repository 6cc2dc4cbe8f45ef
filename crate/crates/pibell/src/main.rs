fn main() {
    std::process::exit(pibell::cli::main());
}
