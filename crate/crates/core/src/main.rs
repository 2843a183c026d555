fn main() {
    std::process::exit(zsg_core::cli::main_with_args(std::env::args_os()));
}
