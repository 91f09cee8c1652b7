fn main() {
    std::process::exit(infoineq::cli::main_entry());
}
