fn main() {
    std::process::exit(pfl_core::cli::main_with_args(std::env::args_os()));
}
