fn main() {
    std::process::exit(mucilage::cli::main_with_args(std::env::args_os()));
}
