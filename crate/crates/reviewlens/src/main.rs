fn main() {
    std::process::exit(reviewlens::cli::main_exit());
}
