fn main() {
    std::process::exit(gdsense::cli::main_with_args(std::env::args_os()));
}
