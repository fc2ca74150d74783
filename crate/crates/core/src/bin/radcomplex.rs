fn main() {
    std::process::exit(radcomplex::cli::main());
}
