fn main() {
    std::process::exit(graphmine::cli::main_with(std::env::args_os()));
}
