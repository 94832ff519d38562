fn main() {
    std::process::exit(anokat::cli::main_with(std::env::args_os()));
}
