fn main() {
    std::process::exit(infocrit::cli::main_with_args(std::env::args_os()));
}
