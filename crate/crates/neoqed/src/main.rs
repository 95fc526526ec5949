fn main() {
    std::process::exit(neoqed::cli::main_from_args(std::env::args_os()));
}
