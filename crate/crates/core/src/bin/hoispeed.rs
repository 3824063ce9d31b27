fn main() {
    std::process::exit(hoispeed::cli::main_with_args(std::env::args_os()));
}
