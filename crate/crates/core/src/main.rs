fn main() {
    std::process::exit(lagsem::cli::main_entry());
}
