fn main() {
    std::process::exit(oscloc::cli::main_exit_code());
}
