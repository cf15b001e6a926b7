fn main() {
    std::process::exit(dickesim::cli::main_with(std::env::args_os()));
}
