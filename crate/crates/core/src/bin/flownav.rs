fn main() {
    std::process::exit(flownav::cli::main_with_args(std::env::args_os()));
}
