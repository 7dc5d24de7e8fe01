fn main() {
    std::process::exit(namefly::cli::main_with_args(std::env::args_os()));
}
